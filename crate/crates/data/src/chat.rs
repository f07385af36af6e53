//! Chat text corpus: style-keyed response templates plus the few
//! instruction-following text tasks the frozen LM must handle zero-shot
//! (verbatim copying, scenario description, style naming).
//!
//! Responses are deterministic functions of (transcript, style): two
//! template variants per style, selected by a stable hash of the
//! transcript, each splicing in the transcript's keyword so the reply
//! lexically overlaps the prompt.

use paralign_tensor::seed;
use serde::{Deserialize, Serialize};

use crate::grammar::keyword;
use crate::styles::{StyleLabel, ALL_STYLES, N_STYLES};

/// Instruction strings shared between text pretraining and the speech-side
/// task prompts, so the frozen LM recognizes them at alignment time.
pub const ASR_INSTRUCTION: &str = "transcribe exactly:";
pub const CAPTION_INSTRUCTION: &str = "describe the scenario:";
pub const SER_INSTRUCTION: &str = "what is the emotion or style:";

/// Two response template variants per style; `{}` is the keyword slot.
fn style_templates(style: StyleLabel) -> [&'static str; 2] {
    match style {
        StyleLabel::Neutral => [
            "okay, the {} sounds fine to me.",
            "noted, tell me more about the {}.",
        ],
        StyleLabel::Angry => [
            "whoa, calm down about the {}, take a breath.",
            "there is no need to shout about the {}.",
        ],
        StyleLabel::Disgusted => [
            "ew, that {} sounds gross, let us move on.",
            "yuck, i would keep away from that {}.",
        ],
        StyleLabel::Afraid => [
            "do not be scared, the {} will be fine.",
            "stay calm, we can handle the {} together.",
        ],
        StyleLabel::Happy => [
            "that is wonderful news about the {}!",
            "so glad to hear it, the {} sounds great!",
        ],
        StyleLabel::Sad => [
            "i am sorry about the {}, that is heartbreaking.",
            "that {} news sounds really tough, hang in there.",
        ],
        StyleLabel::Surprised => [
            "wow, i did not expect that about the {}!",
            "no way, the {} really caught me off guard!",
        ],
        StyleLabel::Bored => [
            "the {} again? maybe try something new.",
            "sounds dull, perhaps the {} needs a twist.",
        ],
        StyleLabel::Confused => [
            "hmm, i am not sure i follow the {} part.",
            "wait, can you explain the {} again?",
        ],
        StyleLabel::Interested => [
            "oh, tell me more about the {}!",
            "fascinating, how did the {} come about?",
        ],
        StyleLabel::Sarcastic => [
            "oh sure, because the {} always works out.",
            "right, the {} must be thrilling indeed.",
        ],
        StyleLabel::Laughing => [
            "haha, the {} story cracks me up!",
            "that {} bit is hilarious, i cannot stop giggling!",
        ],
        StyleLabel::Projected => [
            "loud and clear, the {} gets full attention!",
            "everyone heard that, the {} takes the stage!",
        ],
        StyleLabel::Sleepy => [
            "yawn, the {} can wait until morning.",
            "so drowsy, let us deal with the {} tomorrow.",
        ],
        StyleLabel::Whisper => [
            "quietly now, the {} stays between us.",
            "hush, keep the {} a secret.",
        ],
    }
}

const PLAIN_TEMPLATES: [&str; 2] = [
    "you mentioned the {}, tell me more.",
    "about the {}, i hear you.",
];

/// Which of the two template variants a transcript selects (stable hash).
pub fn template_variant(transcript: &str) -> usize {
    (seed::text_hash(transcript) % 2) as usize
}

/// The canonical styled (or plain, when `style` is None) response to a
/// transcript.
pub fn response_text(style: Option<StyleLabel>, transcript: &str) -> String {
    let variant = template_variant(transcript);
    let template = match style {
        Some(s) => style_templates(s)[variant],
        None => PLAIN_TEMPLATES[variant],
    };
    template.replace("{}", keyword(transcript))
}

/// Canonical scenario description ("caption") for a styled utterance.
pub fn caption_text(style: StyleLabel, transcript: &str) -> String {
    format!("a speaker says '{transcript}' in a {} voice.", style.name())
}

/// Canonical answer to the style-naming instruction.
pub fn ser_answer(style: StyleLabel) -> &'static str {
    style.name()
}

/// Tagged prompt form: `<style> transcript`.
pub fn tagged_prompt(style: StyleLabel, transcript: &str) -> String {
    format!("{} {transcript}", style.tag())
}

/// One text pretraining pair. `user` is the full user-turn text; `system`
/// is an optional system preamble; `response` is the assistant turn.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatPair {
    pub system: Option<String>,
    pub user: String,
    pub response: String,
}

/// The chat core: for each transcript, one plain pair plus all 15 tagged
/// pairs. `n_pairs` caps the output length.
pub fn gen_chat_pretraining_corpus(n_pairs: usize, master_seed: u64) -> Vec<ChatPair> {
    let per_transcript = N_STYLES + 1;
    let n_transcripts = n_pairs.div_ceil(per_transcript);
    let mut out = Vec::with_capacity(n_transcripts * per_transcript);
    for i in 0..n_transcripts {
        let transcript = crate::grammar::gen_transcript(seed::derive(master_seed, "chat-transcript", i as u64));
        out.push(ChatPair {
            system: None,
            user: transcript.clone(),
            response: response_text(None, &transcript),
        });
        for style in ALL_STYLES {
            out.push(ChatPair {
                system: None,
                user: tagged_prompt(style, &transcript),
                response: response_text(Some(style), &transcript),
            });
        }
    }
    out.truncate(n_pairs);
    out
}

/// Text-only instruction pairs teaching the copy / describe / name-the-style
/// behaviors used by the speech-side tasks.
pub fn gen_instruction_pairs(n_pairs: usize, master_seed: u64) -> Vec<ChatPair> {
    let mut out = Vec::with_capacity(n_pairs);
    let mut i = 0u64;
    while out.len() < n_pairs {
        let transcript = crate::grammar::gen_transcript(seed::derive(master_seed, "instr-transcript", i));
        let style = ALL_STYLES[(seed::derive(master_seed, "instr-style", i) % N_STYLES as u64) as usize];
        match i % 3 {
            0 => {
                // Copying: tagged half the time so the tag is learned to be stripped.
                let tagged = i % 2 == 0;
                let content = if tagged {
                    tagged_prompt(style, &transcript)
                } else {
                    transcript.clone()
                };
                out.push(ChatPair {
                    system: None,
                    user: format!("{ASR_INSTRUCTION} {content}"),
                    response: transcript.clone(),
                });
            }
            1 => {
                out.push(ChatPair {
                    system: None,
                    user: format!("{CAPTION_INSTRUCTION} {}", tagged_prompt(style, &transcript)),
                    response: caption_text(style, &transcript),
                });
            }
            _ => {
                out.push(ChatPair {
                    system: None,
                    user: format!("{SER_INSTRUCTION} {}", tagged_prompt(style, &transcript)),
                    response: ser_answer(style).to_string(),
                });
            }
        }
        i += 1;
    }
    out
}
