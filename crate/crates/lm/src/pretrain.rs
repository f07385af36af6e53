//! One-time pretraining of the chat model on the synthetic text corpus.
//!
//! The training mix interleaves three streams: the tagged/plain chat core,
//! the copy/describe/name-the-style instruction pairs, and a smaller slice of
//! system-framed pairs that rehearse the exact framing later used to generate
//! ground-truth responses.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use paralign_data::chat::{
    gen_chat_pretraining_corpus, gen_instruction_pairs, response_text, tagged_prompt, ChatPair,
};
use paralign_data::grammar::gen_transcript;
use paralign_data::styles::{ALL_STYLES, N_STYLES};
use paralign_tensor::optim::{clip_global_norm, warmup_cosine, Adam};
use paralign_tensor::{backward, seed, Real, Tensor};

use crate::chat_seq::{apply_chat_template, ChatSequence, Segment};
use crate::model::{ChatLM, LMConfig};
use crate::template::{SYSTEM_PROMPT_EMOTION, SYSTEM_PROMPT_PLAIN};

#[derive(Clone, Debug)]
pub struct PretrainConfig {
    /// Total pairs to assemble (train + held-out validation).
    pub n_pairs: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr_peak: Real,
    pub warmup: usize,
    /// Pairs held out from the tail of the shuffled mix for validation.
    pub val_pairs: usize,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            n_pairs: 12_000,
            steps: 2_500,
            batch: 4,
            lr_peak: 1e-3,
            warmup: 200,
            val_pairs: 512,
            seed: 0,
        }
    }
}

/// The assembled mix plus every transcript it mentions (used to construct
/// genuinely held-out transcripts later).
pub struct PretrainMix {
    pub pairs: Vec<ChatPair>,
    pub transcripts: HashSet<String>,
}

/// Deterministic pretraining mix: one half chat core, three eighths
/// instruction pairs, the remainder system-framed pairs (alternating the
/// emotion and plain framings used for ground-truth response generation).
pub fn assemble_pretrain_pairs(n: usize, master_seed: u64) -> PretrainMix {
    let n_core = n / 2;
    let n_instr = n * 3 / 8;
    let n_sys = n - n_core - n_instr;

    let mut transcripts = HashSet::new();
    let mut pairs = Vec::with_capacity(n);

    let core = gen_chat_pretraining_corpus(n_core, seed::derive(master_seed, "lm-mix-chat", 0));
    for p in &core {
        let t = p.user.strip_prefix('<').map(|r| r.split_once("> ").unwrap().1).unwrap_or(&p.user);
        transcripts.insert(t.to_string());
    }
    pairs.extend(core);

    let instr = gen_instruction_pairs(n_instr, seed::derive(master_seed, "lm-mix-instr", 0));
    for p in &instr {
        let content = p.user.split_once(": ").map(|(_, c)| c).unwrap_or(&p.user);
        let t = content.strip_prefix('<').map(|r| r.split_once("> ").unwrap().1).unwrap_or(content);
        transcripts.insert(t.to_string());
    }
    pairs.extend(instr);

    for i in 0..n_sys {
        let t = gen_transcript(seed::derive(master_seed, "lm-mix-sys", i as u64));
        transcripts.insert(t.clone());
        if i % 2 == 0 {
            let style = ALL_STYLES
                [(seed::derive(master_seed, "lm-mix-sys-style", i as u64) % N_STYLES as u64) as usize];
            pairs.push(ChatPair {
                system: Some(SYSTEM_PROMPT_EMOTION.to_string()),
                user: tagged_prompt(style, &t),
                response: response_text(Some(style), &t),
            });
        } else {
            pairs.push(ChatPair {
                system: Some(SYSTEM_PROMPT_PLAIN.to_string()),
                user: t.clone(),
                response: response_text(None, &t),
            });
        }
    }

    let mut rng = seed::rng(seed::derive(master_seed, "lm-mix-shuffle", 0));
    pairs.shuffle(&mut rng);
    PretrainMix { pairs, transcripts }
}

/// Lay out one text pair as a training sequence.
pub fn encode_pair(pair: &ChatPair) -> ChatSequence {
    apply_chat_template(
        pair.system.as_deref(),
        &[Segment::Text(pair.user.clone())],
        Some(&pair.response),
    )
    .expect("corpus text is encodable")
}

/// One metrics row per optimization step.
#[derive(Clone, Debug)]
pub struct StepLog {
    pub step: usize,
    pub loss_sum: Real,
    pub loss_mean: Real,
    pub n_masked: usize,
    pub lr: Real,
}

#[derive(Clone, Debug)]
pub struct PretrainReport {
    pub n_train_pairs: usize,
    pub n_val_pairs: usize,
    pub final_loss_mean: Real,
    pub val_next_token_accuracy: Real,
}

#[derive(Debug)]
pub struct DivergenceError {
    pub step: usize,
    pub loss_mean: Real,
}

impl std::fmt::Display for DivergenceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "training diverged at step {}: mean loss {}", self.step, self.loss_mean)
    }
}

impl std::error::Error for DivergenceError {}

/// Teacher-forced next-token accuracy over the response spans.
pub fn next_token_accuracy(lm: &ChatLM, seqs: &[ChatSequence]) -> Real {
    let mut correct = 0usize;
    let mut total = 0usize;
    for seq in seqs {
        let logits = lm.forward_logits(seq);
        let (targets, mask) = seq.ce_targets();
        let v = logits.cols();
        let data = logits.data();
        for (r, (&t, &m)) in targets.iter().zip(mask.iter()).enumerate() {
            if !m {
                continue;
            }
            let row = &data[r * v..(r + 1) * v];
            let mut best = 0;
            for (j, val) in row.iter().enumerate() {
                if *val > row[best] {
                    best = j;
                }
            }
            total += 1;
            if best == t {
                correct += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        correct as Real / total as Real
    }
}

/// Epoch-shuffled Adam loop over pre-encoded sequences. Returns the mean
/// masked loss of the final step. `on_log` receives one row per step.
pub fn train_on_seqs(
    lm: &mut ChatLM,
    seqs: &[ChatSequence],
    steps: usize,
    batch: usize,
    lr_peak: Real,
    warmup: usize,
    shuffle_seed: u64,
    on_log: &mut dyn FnMut(&StepLog),
) -> Result<Real, DivergenceError> {
    assert!(!seqs.is_empty(), "training set is empty");
    assert!(batch > 0, "batch size must be positive");
    let mut adam = Adam::default_config();
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    let mut epoch_rng = seed::rng(shuffle_seed);
    order.shuffle(&mut epoch_rng);
    let mut cursor = 0usize;
    let mut last_mean = 0.0;

    for step in 0..steps {
        let mut total_loss: Option<Tensor> = None;
        let mut n_masked = 0usize;
        for _ in 0..batch {
            if cursor >= order.len() {
                order.shuffle(&mut epoch_rng);
                cursor = 0;
            }
            let seq = &seqs[order[cursor]];
            cursor += 1;
            let (loss, n) = lm.forward_loss(seq);
            n_masked += n;
            total_loss = Some(match total_loss {
                Some(acc) => acc.add(&loss),
                None => loss,
            });
        }
        let total_loss = total_loss.expect("batch is non-empty");
        let loss_sum = total_loss.data()[0];
        let loss_mean = loss_sum / n_masked as Real;
        last_mean = loss_mean;
        if !loss_mean.is_finite() || loss_mean > 1e6 {
            return Err(DivergenceError { step, loss_mean });
        }

        let mut grads = backward(total_loss);
        grads.scale_all(1.0 / n_masked as Real);
        clip_global_norm(&mut grads, 1.0);
        let lr = warmup_cosine(step, steps, warmup, lr_peak, 0.1);
        adam.step(lm.params_mut(), &grads, lr);
        on_log(&StepLog { step, loss_sum, loss_mean, n_masked, lr });
    }
    Ok(last_mean)
}

/// Train a fresh chat model on the assembled mix. `on_log` receives one row
/// per step.
pub fn pretrain_toy_lm(
    config: LMConfig,
    pcfg: &PretrainConfig,
    on_log: &mut dyn FnMut(&StepLog),
) -> Result<(ChatLM, PretrainReport), DivergenceError> {
    assert!(pcfg.val_pairs < pcfg.n_pairs, "validation slice must leave training pairs");
    let mix = assemble_pretrain_pairs(pcfg.n_pairs, pcfg.seed);
    let n_train = mix.pairs.len() - pcfg.val_pairs;
    let train_seqs: Vec<ChatSequence> = mix.pairs[..n_train].iter().map(encode_pair).collect();
    let val_seqs: Vec<ChatSequence> = mix.pairs[n_train..].iter().map(encode_pair).collect();

    let mut lm = ChatLM::new(config, seed::derive(pcfg.seed, "lm-weights", 0));
    let final_loss_mean = train_on_seqs(
        &mut lm,
        &train_seqs,
        pcfg.steps,
        pcfg.batch,
        pcfg.lr_peak,
        pcfg.warmup,
        seed::derive(pcfg.seed, "lm-epochs", 0),
        on_log,
    )?;

    let val_next_token_accuracy = next_token_accuracy(&lm, &val_seqs);
    let report = PretrainReport {
        n_train_pairs: train_seqs.len(),
        n_val_pairs: val_seqs.len(),
        final_loss_mean,
        val_next_token_accuracy,
    };
    Ok((lm, report))
}

/// Pick `n` transcripts that never occur in the pretraining mix for
/// `(n_pairs, seed)` — the corpus the frozen model was trained on.
pub fn held_out_transcripts(n_pairs: usize, master_seed: u64, n: usize) -> Vec<String> {
    let mix = assemble_pretrain_pairs(n_pairs, master_seed);
    let mut rng = seed::rng(seed::derive(master_seed, "held-out-transcripts", 0));
    let mut out = Vec::with_capacity(n);
    let mut seen = HashSet::new();
    let mut guard = 0usize;
    while out.len() < n {
        let t = gen_transcript(rng.gen::<u64>());
        guard += 1;
        assert!(
            guard < 500_000,
            "exhausted the grammar while sampling held-out transcripts"
        );
        if !mix.transcripts.contains(&t) && seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out
}
