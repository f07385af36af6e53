use paralign_lm::chat_seq::{apply_chat_template, Segment};
use paralign_lm::model::{ChatLM, LMConfig};
use paralign_lm::vocab::{char_id, VOCAB_SIZE};
use paralign_tensor::{backward, seed, softmax_cross_entropy, Real, Tensor};
use rand::Rng;

fn small_config() -> LMConfig {
    LMConfig {
        n_layers: 2,
        d_lm: 32,
        n_heads: 2,
        d_ff: 64,
        context_len: 96,
        rotary_base: 10_000.0,
    }
}

fn embed_rows(lm: &ChatLM, text: &str) -> Tensor {
    let table = lm.p("embed");
    let d = table.cols();
    let mut data = Vec::with_capacity(text.chars().count() * d);
    for c in text.chars() {
        data.extend_from_slice(table.row(char_id(c).unwrap()));
    }
    Tensor::from_vec(text.chars().count(), d, data)
}

#[test]
fn continuous_rows_equal_to_embeddings_give_bitwise_equal_logits() {
    let lm = ChatLM::new(small_config(), 11);
    let text_seq =
        apply_chat_template(None, &[Segment::Text("abc".into())], Some("xy")).unwrap();
    let speech_seq = apply_chat_template(
        None,
        &[Segment::Speech(embed_rows(&lm, "abc"))],
        Some("xy"),
    )
    .unwrap();
    assert_eq!(text_seq.len(), speech_seq.len());

    let a = lm.forward_logits(&text_seq);
    let b = lm.forward_logits(&speech_seq);
    assert_eq!(a.rows(), b.rows());
    for (x, y) in a.data().iter().zip(b.data().iter()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }

    let (la, _) = lm.forward_loss(&text_seq);
    let (lb, _) = lm.forward_loss(&speech_seq);
    assert_eq!(la.item().to_bits(), lb.item().to_bits());
}

#[test]
fn perturbing_one_slot_only_affects_that_row_onward() {
    let lm = ChatLM::new(small_config(), 12);
    let base_rows = embed_rows(&lm, "abcdef");
    let build = |rows: Tensor| {
        apply_chat_template(None, &[Segment::Speech(rows)], Some("xy")).unwrap()
    };
    let baseline = lm.forward_logits(&build(base_rows.clone()));

    // The speech block starts after [BOS][USER]; perturb its fourth row.
    let j = 3usize;
    let pos = 2 + j;
    let mut data = base_rows.data().to_vec();
    data[j * base_rows.cols()] += 1.0;
    let perturbed = lm.forward_logits(&build(Tensor::from_vec(
        base_rows.rows(),
        base_rows.cols(),
        data,
    )));

    let v = baseline.cols();
    for r in 0..pos {
        for c in 0..v {
            assert_eq!(
                baseline.at(r, c).to_bits(),
                perturbed.at(r, c).to_bits(),
                "row {r} precedes the perturbed slot and must be untouched"
            );
        }
    }
    let changed = (0..v).any(|c| baseline.at(pos, c) != perturbed.at(pos, c));
    assert!(changed, "the perturbed slot's own row must move");
}

#[test]
fn forward_is_deterministic_and_seed_dependent() {
    let seq = apply_chat_template(None, &[Segment::Text("hello".into())], Some("ok")).unwrap();

    let lm_a = ChatLM::new(small_config(), 7);
    let lm_b = ChatLM::new(small_config(), 7);
    let la = lm_a.forward_logits(&seq);
    let lb = lm_b.forward_logits(&seq);
    let lc = lm_a.forward_logits(&seq);
    for i in 0..la.numel() {
        assert_eq!(la.data()[i].to_bits(), lb.data()[i].to_bits());
        assert_eq!(la.data()[i].to_bits(), lc.data()[i].to_bits());
    }

    let lm_d = ChatLM::new(small_config(), 8);
    let ld = lm_d.forward_logits(&seq);
    assert!(la.data().iter().zip(ld.data().iter()).any(|(a, d)| a != d));
}

#[test]
#[should_panic(expected = "exceeds the context window")]
fn overlong_sequence_is_rejected() {
    let mut cfg = small_config();
    cfg.context_len = 8;
    let lm = ChatLM::new(cfg, 3);
    let seq = apply_chat_template(None, &[Segment::Text("0123456789".into())], None).unwrap();
    let _ = lm.forward_logits(&seq);
}

#[test]
fn loss_counts_only_the_response_span() {
    let lm = ChatLM::new(small_config(), 5);
    let seq = apply_chat_template(None, &[Segment::Text("abc".into())], Some("xy")).unwrap();
    let (loss, n_masked) = lm.forward_loss(&seq);
    assert_eq!(n_masked, 3, "two target characters plus the end-of-turn");

    // Oracle: recompute -sum log softmax over exactly the masked rows.
    let logits = lm.forward_logits(&seq);
    let (targets, mask) = seq.ce_targets();
    let mut expect = 0.0;
    for (r, (&t, &m)) in targets.iter().zip(mask.iter()).enumerate() {
        if !m {
            continue;
        }
        let row = logits.row(r);
        let max = row.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
        let logsum = row.iter().map(|x| (x - max).exp()).sum::<Real>().ln() + max;
        expect += logsum - row[t];
    }
    let got = loss.item();
    assert!(
        (got - expect).abs() <= 1e-9 * expect.abs().max(1.0),
        "masked cross-entropy {got} vs oracle {expect}"
    );
}

#[test]
fn unmasked_rows_get_exactly_zero_logit_gradient() {
    let mut rng = seed::rng(99);
    for _ in 0..20 {
        let n = rng.gen_range(4..24);
        let data: Vec<Real> = (0..n * VOCAB_SIZE).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let logits = Tensor::leaf(n, VOCAB_SIZE, data, true);
        let targets: Vec<usize> = (0..n).map(|_| rng.gen_range(0..VOCAB_SIZE)).collect();
        let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        mask[n / 2] = true; // keep the loss non-empty
        let loss = softmax_cross_entropy(&logits, &targets, &mask);
        let grads = backward(loss);
        let g = grads.get(&logits).expect("logits are a leaf");
        for r in 0..n {
            let row = &g[r * VOCAB_SIZE..(r + 1) * VOCAB_SIZE];
            if mask[r] {
                assert!(row.iter().any(|&x| x != 0.0), "masked row {r} must receive gradient");
            } else {
                for (c, &x) in row.iter().enumerate() {
                    assert_eq!(x, 0.0, "unmasked row {r} col {c} leaked gradient");
                    assert_eq!(x.to_bits(), 0.0_f64.to_bits());
                }
            }
        }
    }
}
