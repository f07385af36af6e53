use paralign_data::chat::gen_chat_pretraining_corpus;
use paralign_lm::chat_seq::{apply_chat_template, Segment};
use paralign_lm::model::{ChatLM, LMConfig};
use paralign_lm::pretrain::{encode_pair, next_token_accuracy, train_on_seqs};

/// Memorization check for the training loop: a small model fed ten pairs
/// over and over must reproduce every response verbatim under greedy
/// decoding.
#[test]
fn ten_pair_overfit_reproduces_every_response() {
    let pairs = gen_chat_pretraining_corpus(10, 90);
    let seqs: Vec<_> = pairs.iter().map(encode_pair).collect();

    let cfg = LMConfig {
        n_layers: 2,
        d_lm: 64,
        n_heads: 2,
        d_ff: 128,
        context_len: 256,
        rotary_base: 10_000.0,
    };
    let mut lm = ChatLM::new(cfg, 90);
    train_on_seqs(&mut lm, &seqs, 350, 10, 2e-3, 20, 90, &mut |_| {}).unwrap();

    assert_eq!(next_token_accuracy(&lm, &seqs), 1.0, "teacher-forced recall must be perfect");

    for pair in &pairs {
        let prompt =
            apply_chat_template(pair.system.as_deref(), &[Segment::Text(pair.user.clone())], None)
                .unwrap();
        let got = lm.generate_greedy(&prompt, pair.response.len() + 16);
        assert_eq!(got, pair.response, "greedy reply diverged for user turn {:?}", pair.user);
    }
}
