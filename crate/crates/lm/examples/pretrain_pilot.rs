//! Measurement run for the full-size chat model: trains with the default
//! configuration, then reports validation accuracy, tag-dependence of greedy
//! responses on held-out transcripts, and wall-clock budget numbers.

use std::time::Instant;

use paralign_data::chat::tagged_prompt;
use paralign_data::styles::{StyleLabel, ALL_STYLES};
use paralign_io::save_checkpoint;
use paralign_lm::chat_seq::{apply_chat_template, Segment};
use paralign_lm::model::LMConfig;
use paralign_lm::pretrain::{held_out_transcripts, pretrain_toy_lm, PretrainConfig};
use paralign_lm::{ChatLM, SYSTEM_PROMPT_EMOTION, SYSTEM_PROMPT_PLAIN};

fn respond(lm: &ChatLM, system: Option<&str>, user: &str) -> String {
    let prompt = apply_chat_template(system, &[Segment::Text(user.into())], None).unwrap();
    lm.generate_greedy(&prompt, 96)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2500);
    let n_pairs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(12_000);

    let pcfg = PretrainConfig { n_pairs, steps, ..PretrainConfig::default() };
    println!("config: {:?}", pcfg);
    let t0 = Instant::now();
    let mut last_print = Instant::now();
    let (lm, report) = pretrain_toy_lm(LMConfig::default(), &pcfg, &mut |log| {
        if log.step % 50 == 0 || log.step + 1 == steps {
            println!(
                "step {:5}  loss/tok {:.4}  lr {:.2e}  elapsed {:.1}s  ({:.0} ms/step)",
                log.step,
                log.loss_mean,
                log.lr,
                t0.elapsed().as_secs_f64(),
                last_print.elapsed().as_millis() as f64 / 50.0
            );
            last_print = Instant::now();
        }
    })
    .expect("pretraining must not diverge");
    let train_time = t0.elapsed().as_secs_f64();
    println!(
        "train done in {train_time:.1}s; final loss/tok {:.4}; val acc {:.4} over {} pairs",
        report.final_loss_mean, report.val_next_token_accuracy, report.n_val_pairs
    );

    let t1 = Instant::now();
    let held = held_out_transcripts(n_pairs, pcfg.seed, 100);
    let mut diff_chat = 0;
    let mut diff_sys = 0;
    for t in &held {
        let happy = tagged_prompt(StyleLabel::Happy, t);
        let sad = tagged_prompt(StyleLabel::Sad, t);
        if respond(&lm, None, &happy) != respond(&lm, None, &sad) {
            diff_chat += 1;
        }
        if respond(&lm, Some(SYSTEM_PROMPT_EMOTION), &happy)
            != respond(&lm, Some(SYSTEM_PROMPT_EMOTION), &sad)
        {
            diff_sys += 1;
        }
    }
    println!(
        "happy/sad responses differ: chat frame {diff_chat}/100, system frame {diff_sys}/100  ({:.1}s)",
        t1.elapsed().as_secs_f64()
    );

    // Broader tag-pair sample in the chat frame.
    let mut pair_diff = 0;
    let mut pair_total = 0;
    for (i, t) in held.iter().take(20).enumerate() {
        let a = ALL_STYLES[i % 15];
        let b = ALL_STYLES[(i + 7) % 15];
        if a == b {
            continue;
        }
        pair_total += 1;
        if respond(&lm, None, &tagged_prompt(a, t)) != respond(&lm, None, &tagged_prompt(b, t)) {
            pair_diff += 1;
        }
    }
    println!("other tag pairs differ: {pair_diff}/{pair_total}");

    // Show the frames used for ground-truth response generation.
    let sample = &held[0];
    println!("transcript: {sample:?}");
    for style in [StyleLabel::Happy, StyleLabel::Sad, StyleLabel::Laughing] {
        let r = respond(&lm, Some(SYSTEM_PROMPT_EMOTION), &tagged_prompt(style, sample));
        println!("  {:>9} target: {r:?}", style.name());
    }
    println!(
        "  plain target: {:?}",
        respond(&lm, Some(SYSTEM_PROMPT_PLAIN), sample)
    );

    save_checkpoint(&lm.to_checkpoint(), std::path::Path::new("/tmp/pilot-lm.ckpt")).unwrap();
    println!("checkpoint: /tmp/pilot-lm.ckpt  fingerprint {}", lm.fingerprint());
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
