//! Transcript grammar: a small template set over a ≤64-word vocabulary,
//! producing lowercase, user-style utterances of 3–10 words.

use paralign_tensor::seed;
use rand::Rng;

/// Characters the synthesizer can voice: letters get tone indices 0–25,
/// the space gets 26.
pub const SYNTH_ALPHABET: &str = "abcdefghijklmnopqrstuvwxyz ";

/// Tone index of a synthesizable character.
pub fn char_tone_index(c: char) -> Option<usize> {
    match c {
        'a'..='z' => Some(c as usize - 'a' as usize),
        ' ' => Some(26),
        _ => None,
    }
}

const NOUNS: [&str; 16] = [
    "cat", "dog", "kid", "car", "song", "game", "book", "road", "rain", "cake", "door", "boat",
    "tree", "fish", "wall", "shoe",
];

const ADJS: [&str; 8] = ["big", "old", "red", "new", "blue", "cold", "warm", "tiny"];

// Slot markers: N = noun, M = second distinct noun, A = adjective.
const TEMPLATES: [&str; 12] = [
    "i lost my N",
    "why is the N so A",
    "my N fell off the M",
    "can you find my A N",
    "the N and the M are A",
    "we took the N to the M",
    "did you see my A N",
    "your N is on my M now",
    "i made a A N for you",
    "the A N was not in the M",
    "do we need the N or the M",
    "it is so A at the N",
];

/// Deterministic transcript for a seed: pick a template and fill its slots.
pub fn gen_transcript(rng_seed: u64) -> String {
    let mut rng = seed::rng(rng_seed);
    let template = TEMPLATES[rng.gen_range(0..TEMPLATES.len())];
    let noun = NOUNS[rng.gen_range(0..NOUNS.len())];
    let second = loop {
        let cand = NOUNS[rng.gen_range(0..NOUNS.len())];
        if cand != noun {
            break cand;
        }
    };
    let adj = ADJS[rng.gen_range(0..ADJS.len())];
    template
        .split(' ')
        .map(|w| match w {
            "N" => noun,
            "M" => second,
            "A" => adj,
            other => other,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// The most content-bearing word of a transcript: longest word, first on
/// ties. Response templates splice it in so replies lexically overlap their
/// prompt.
pub fn keyword(transcript: &str) -> &str {
    let mut best = "that";
    let mut best_len = 0;
    for w in transcript.split_whitespace() {
        if w.len() > best_len {
            best = w;
            best_len = w.len();
        }
    }
    best
}
