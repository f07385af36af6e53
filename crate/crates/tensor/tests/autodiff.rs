//! Gradient correctness: finite-difference oracle over every primitive,
//! plus reachability / freezing / masking contracts.

use paralign_tensor::{backward, check, seed, softmax_cross_entropy, Tensor};

#[test]
fn finite_difference_suite_all_primitives() {
    let reports = check::run_fd_suite(6, 0xFD);
    let total_cases: usize = reports.iter().map(|r| r.cases).sum();
    assert!(
        total_cases >= 100,
        "need at least 100 randomized cases, ran {total_cases}"
    );
    assert_eq!(reports.len(), check::OP_COUNT);
    for r in &reports {
        assert!(
            r.max_rel_err < 1e-4,
            "{}: max relative error {} over {} checks exceeds 1e-4",
            r.op,
            r.max_rel_err,
            r.checks
        );
    }
}

#[test]
fn sum_gradient_is_ones() {
    let x = Tensor::param(1, 3, vec![4.0, -2.0, 0.5]);
    let loss = x.sum_all();
    let grads = backward(loss);
    assert_eq!(grads.get(&x).unwrap(), &[1.0, 1.0, 1.0]);
}

#[test]
fn frozen_leaves_receive_no_gradient() {
    let frozen = Tensor::leaf(2, 2, vec![1.0, 2.0, 3.0, 4.0], false);
    let trainable = Tensor::param(2, 2, vec![0.5, 0.5, 0.5, 0.5]);
    let loss = frozen.matmul(&trainable).sum_all();
    let grads = backward(loss);
    assert!(grads.get(&frozen).is_none(), "frozen leaf must stay untouched");
    assert!(grads.get(&trainable).is_some());
}

#[test]
fn unreachable_tensors_receive_no_gradient() {
    let used = Tensor::param(1, 2, vec![1.0, 2.0]);
    let unused = Tensor::param(1, 2, vec![3.0, 4.0]);
    let grads = backward(used.sum_all());
    assert!(grads.get(&unused).is_none());
}

#[test]
fn masked_cross_entropy_gradient_exactly_zero_off_mask() {
    let mut rng = seed::rng(42);
    for _ in 0..20 {
        let m = 6;
        let v = 9;
        let logits = Tensor::param(m, v, seed::normal_vec(&mut rng, m * v, 1.0));
        let targets: Vec<usize> = (0..m).map(|i| (i * 3 + 1) % v).collect();
        let mask = [true, false, true, false, false, true];
        let loss = softmax_cross_entropy(&logits, &targets, &mask);
        let grads = backward(loss);
        let g = grads.get(&logits).unwrap();
        for (r, &keep) in mask.iter().enumerate() {
            for j in 0..v {
                let gv = g[r * v + j];
                if keep {
                    continue;
                }
                assert!(
                    gv == 0.0,
                    "row {r} is off-mask but has gradient {gv} at column {j}"
                );
            }
        }
    }
}

#[test]
#[should_panic(expected = "backward requires a scalar loss")]
fn backward_rejects_non_scalar() {
    let x = Tensor::param(2, 2, vec![1.0; 4]);
    let y = x.scale(2.0);
    let _ = backward(y);
}

#[test]
fn gradient_accumulates_when_tensor_used_twice() {
    // loss = sum(x) + sum(x∘x) → grad = 1 + 2x
    let x = Tensor::param(1, 3, vec![1.0, 2.0, 3.0]);
    let loss = x.sum_all().add(&x.mul_elem(&x).sum_all());
    let grads = backward(loss);
    let g = grads.get(&x).unwrap();
    assert_eq!(g, &[3.0, 5.0, 7.0]);
}
