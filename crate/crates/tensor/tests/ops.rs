//! Hand-checked values and contract panics for the forward primitives.

use paralign_tensor::{concat_cols, mask_rows, sequence_embed, softmax_cross_entropy, SeqItem, Tensor};

fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: expected {expected}, got {actual}"
    );
}

#[test]
fn matmul_identity_passthrough() {
    let x = Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
    let out = Tensor::identity(2).matmul(&x);
    assert_eq!(out.data(), x.data());
}

#[test]
fn matmul_hand_product() {
    let a = Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
    let b = Tensor::from_vec(2, 1, vec![5.0, 6.0]);
    let out = a.matmul(&b);
    assert_eq!(out.data(), &[17.0, 39.0]);
}

#[test]
#[should_panic(expected = "matmul dimension mismatch: left is 2x3, right is 2x3")]
fn matmul_shape_mismatch_panics() {
    let a = Tensor::zeros(2, 3);
    let b = Tensor::zeros(2, 3);
    let _ = a.matmul(&b);
}

#[test]
fn cross_entropy_uniform_logits() {
    let v = 96;
    let logits = Tensor::zeros(1, v);
    let loss = softmax_cross_entropy(&logits, &[17], &[true]);
    assert_close(loss.item(), (v as f64).ln(), 1e-9, "uniform cross-entropy");
    assert_close(loss.item(), 4.5643, 1e-4, "ln 96");
}

#[test]
fn cross_entropy_certain_prediction() {
    let mut data = vec![0.0; 5];
    data[3] = 1000.0;
    let logits = Tensor::from_vec(1, 5, data);
    let loss = softmax_cross_entropy(&logits, &[3], &[true]);
    assert!(loss.item().abs() < 1e-9, "certainty loss should vanish, got {}", loss.item());
}

#[test]
fn cross_entropy_hand_case() {
    let logits = Tensor::from_vec(1, 3, vec![1.0, 2.0, 3.0]);
    let loss = softmax_cross_entropy(&logits, &[2], &[true]);
    let expected = -(3.0f64.exp() / (1.0f64.exp() + 2.0f64.exp() + 3.0f64.exp())).ln();
    assert_close(loss.item(), expected, 1e-12, "hand softmax");
    assert_close(loss.item(), 0.4076, 1e-4, "hand softmax rounded");
}

#[test]
fn cross_entropy_masked_rows_add_nothing() {
    let logits = Tensor::from_vec(2, 3, vec![1.0, 2.0, 3.0, 9.0, 9.0, 9.0]);
    let masked = softmax_cross_entropy(&logits, &[2, 0], &[true, false]);
    let single = softmax_cross_entropy(&logits, &[2, 0], &[true, true]);
    assert!(masked.item() < single.item());
    let only_first = softmax_cross_entropy(
        &Tensor::from_vec(1, 3, vec![1.0, 2.0, 3.0]),
        &[2],
        &[true],
    );
    assert_close(masked.item(), only_first.item(), 1e-12, "mask removes row");
}

#[test]
#[should_panic(expected = "out of range")]
fn cross_entropy_target_out_of_range_panics() {
    let logits = Tensor::zeros(1, 4);
    let _ = softmax_cross_entropy(&logits, &[4], &[true]);
}

#[test]
fn layer_norm_constant_row_is_zero() {
    let x = Tensor::full(1, 4, 3.25);
    let gamma = Tensor::full(1, 4, 1.0);
    let beta = Tensor::zeros(1, 4);
    let out = x.layer_norm(&gamma, &beta, 1e-5);
    for v in out.data() {
        assert!(v.abs() < 1e-9, "constant row should normalize to zero, got {v}");
    }
}

#[test]
fn layer_norm_two_point_row() {
    let x = Tensor::from_vec(1, 2, vec![1.0, 3.0]);
    let gamma = Tensor::full(1, 2, 1.0);
    let beta = Tensor::zeros(1, 2);
    let out = x.layer_norm(&gamma, &beta, 1e-12);
    assert_close(out.data()[0], -1.0, 1e-5, "low element");
    assert_close(out.data()[1], 1.0, 1e-5, "high element");
}

#[test]
fn layer_norm_affine_dominates() {
    let x = Tensor::from_vec(1, 3, vec![0.5, -2.0, 7.0]);
    let gamma = Tensor::zeros(1, 3);
    let beta = Tensor::full(1, 3, 5.0);
    let out = x.layer_norm(&gamma, &beta, 1e-5);
    for v in out.data() {
        assert_close(*v, 5.0, 1e-12, "gamma=0 leaves only beta");
    }
}

#[test]
fn conv1d_identity_kernel() {
    let x = Tensor::from_vec(5, 3, (0..15).map(|i| i as f64).collect());
    let kernel = Tensor::identity(3); // K=1, c_in=3, c_out=3
    let out = x.conv1d(&kernel, None, 1, 1, 0);
    assert_eq!(out.rows(), 5);
    assert_eq!(out.data(), x.data());
}

#[test]
fn conv1d_length_formula() {
    let x = Tensor::zeros(24, 2);
    let kernel = Tensor::zeros(3 * 2, 4);
    let out = x.conv1d(&kernel, None, 3, 2, 1);
    assert_eq!(out.rows(), 12, "floor((24 + 2 - 3)/2) + 1");
    assert_eq!(out.cols(), 4);
}

#[test]
fn conv1d_hand_convolution() {
    let x = Tensor::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]);
    let kernel = Tensor::from_vec(2, 1, vec![1.0, 1.0]);
    let out = x.conv1d(&kernel, None, 2, 1, 0);
    assert_eq!(out.data(), &[3.0, 5.0, 7.0]);
}

#[test]
#[should_panic(expected = "input too short")]
fn conv1d_short_input_panics() {
    let x = Tensor::zeros(2, 1);
    let kernel = Tensor::zeros(5, 1);
    let _ = x.conv1d(&kernel, None, 5, 1, 0);
}

#[test]
fn depthwise_conv1d_hand_case() {
    // Two channels, K=2, kernel [1,1] per channel: sliding pairwise sums.
    let x = Tensor::from_vec(3, 2, vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0]);
    let kernel = Tensor::from_vec(2, 2, vec![1.0, 1.0, 1.0, 1.0]);
    let out = x.depthwise_conv1d(&kernel, None, 0);
    assert_eq!(out.data(), &[3.0, 30.0, 5.0, 50.0]);
}

#[test]
fn rotary_position_zero_is_identity() {
    let x = Tensor::from_vec(2, 4, vec![1.0, 2.0, 3.0, 4.0, -1.0, 0.5, 2.0, -3.0]);
    let out = x.rotary_apply(&[0, 0], 10000.0);
    for (a, b) in out.data().iter().zip(x.data().iter()) {
        assert_close(*a, *b, 1e-12, "zero angle");
    }
}

#[test]
fn rotary_preserves_pair_norms() {
    let x = Tensor::from_vec(3, 6, (0..18).map(|i| (i as f64) * 0.37 - 2.0).collect());
    let out = x.rotary_apply(&[5, 11, 2], 10000.0);
    for r in 0..3 {
        for p in 0..3 {
            let before = x.at(r, 2 * p).hypot(x.at(r, 2 * p + 1));
            let after = out.at(r, 2 * p).hypot(out.at(r, 2 * p + 1));
            assert!(
                (before - after).abs() < 1e-12,
                "pair norm changed: {before} -> {after}"
            );
        }
    }
}

#[test]
fn rotary_dot_depends_on_position_difference() {
    let d = 8;
    let q: Vec<f64> = (0..d).map(|i| (i as f64 * 0.7).sin() + 0.3).collect();
    let k: Vec<f64> = (0..d).map(|i| (i as f64 * 1.3).cos() - 0.2).collect();
    let dot_at = |i: usize, j: usize| -> f64 {
        let qr = Tensor::from_vec(1, d, q.clone()).rotary_apply(&[i], 10000.0);
        let kr = Tensor::from_vec(1, d, k.clone()).rotary_apply(&[j], 10000.0);
        qr.data().iter().zip(kr.data().iter()).map(|(a, b)| a * b).sum()
    };
    for i in 0..8 {
        for j in 0..8 {
            for s in 1..3 {
                if i + s < 8 && j + s < 8 {
                    assert_close(
                        dot_at(i, j),
                        dot_at(i + s, j + s),
                        1e-9,
                        "relative position property",
                    );
                }
            }
        }
    }
}

#[test]
#[should_panic(expected = "even dimension")]
fn rotary_odd_dimension_panics() {
    let x = Tensor::zeros(1, 3);
    let _ = x.rotary_apply(&[0], 10000.0);
}

#[test]
fn softmax_rows_sum_to_one() {
    let x = Tensor::from_vec(2, 4, vec![0.1, 3.0, -2.0, 0.5, 100.0, 100.0, 100.0, 100.0]);
    let out = x.softmax_rows();
    for r in 0..2 {
        let s: f64 = out.row(r).iter().sum();
        assert_close(s, 1.0, 1e-12, "row sum");
    }
    for v in out.row(1) {
        assert_close(*v, 0.25, 1e-12, "uniform large logits");
    }
}

#[test]
fn col_slice_and_concat_roundtrip() {
    let x = Tensor::from_vec(2, 5, (0..10).map(|i| i as f64).collect());
    let left = x.col_slice(0, 2);
    let right = x.col_slice(2, 3);
    let back = concat_cols(&[left, right]);
    assert_eq!(back.data(), x.data());
}

#[test]
fn mask_rows_replaces_only_masked() {
    let base = Tensor::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let repl = Tensor::from_vec(1, 2, vec![-7.0, -8.0]);
    let out = mask_rows(&base, &repl, &[false, true, false]);
    assert_eq!(out.data(), &[1.0, 2.0, -7.0, -8.0, 5.0, 6.0]);
}

#[test]
fn sequence_embed_interleaves_table_and_speech() {
    let table = Tensor::from_vec(3, 2, vec![0.0, 0.1, 1.0, 1.1, 2.0, 2.1]);
    let speech = Tensor::from_vec(2, 2, vec![10.0, 10.1, 20.0, 20.1]);
    let out = sequence_embed(
        &table,
        &[SeqItem::Tok(2), SeqItem::Speech(0), SeqItem::Speech(1), SeqItem::Tok(0)],
        Some(&speech),
    );
    assert_eq!(out.data(), &[2.0, 2.1, 10.0, 10.1, 20.0, 20.1, 0.0, 0.1]);
}

#[test]
#[should_panic(expected = "non-finite")]
fn non_finite_output_panics() {
    let x = Tensor::from_vec(1, 1, vec![1e308]);
    let _ = x.scale(1e10);
}

#[test]
fn transpose_hand_case() {
    let x = Tensor::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let t = x.transpose();
    assert_eq!((t.rows(), t.cols()), (3, 2));
    assert_eq!(t.data(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
}

#[test]
fn silu_matches_definition() {
    let x = Tensor::from_vec(1, 3, vec![-1.0, 0.0, 2.0]);
    let out = x.silu();
    for (o, v) in out.data().iter().zip(x.data().iter()) {
        let expect = v / (1.0 + (-v).exp());
        assert_close(*o, expect, 1e-12, "silu");
    }
}
