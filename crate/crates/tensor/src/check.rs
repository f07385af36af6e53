//! Finite-difference verification harness.
//!
//! Each primitive is exercised on randomized small shapes: a scalar loss is
//! built from the op's output, analytic gradients come from [`backward`],
//! and every input element is perturbed by `±h` (h = 1e-5, central
//! differences, 64-bit) to produce the oracle value. The oracle touches only
//! forward evaluations, never the gradient rules it is checking.
//!
//! Error metric: `|analytic − fd| / max(|analytic|, |fd|)` when either value
//! is at least 1e-6 in magnitude; below that, central differences at h = 1e-5
//! cannot resolve a relative error, so the check becomes absolute with bound
//! 1e-8.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{
    backward, concat_cols, mask_rows, seed, sequence_embed, softmax_cross_entropy, Real, SeqItem,
    Tensor,
};

pub struct OpReport {
    pub op: &'static str,
    pub cases: usize,
    pub checks: usize,
    pub max_rel_err: Real,
}

struct Case {
    inputs: Vec<Tensor>,
    f: Box<dyn Fn(&[Tensor]) -> Tensor>,
}

const H: Real = 1e-5;

fn leaf(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::param(rows, cols, seed::normal_vec(rng, rows * cols, 1.0))
}

/// Random fixed weights turning a tensor-valued output into a scalar loss;
/// a plain sum would hide sign asymmetries.
fn wsum(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_vec(rows, cols, seed::normal_vec(rng, rows * cols, 1.0))
}

fn perturbed(t: &Tensor, flat: usize, delta: Real) -> Tensor {
    let mut data = t.data().to_vec();
    data[flat] += delta;
    Tensor::param(t.rows(), t.cols(), data)
}

/// Check one case; returns (max error, number of element checks).
fn fd_case(case: &Case) -> (Real, usize) {
    let loss = (case.f)(&case.inputs);
    let grads = backward(loss);
    let mut max_err: Real = 0.0;
    let mut checks = 0;
    for (i, inp) in case.inputs.iter().enumerate() {
        let analytic = grads.get(inp);
        for e in 0..inp.numel() {
            let a = analytic.map(|g| g[e]).unwrap_or(0.0);
            let mut plus = case.inputs.clone();
            plus[i] = perturbed(inp, e, H);
            let mut minus = case.inputs.clone();
            minus[i] = perturbed(inp, e, -H);
            let fd = ((case.f)(&plus).item() - (case.f)(&minus).item()) / (2.0 * H);
            let scale = a.abs().max(fd.abs());
            let err = if scale >= 1e-6 {
                (a - fd).abs() / scale
            } else if (a - fd).abs() < 1e-8 {
                0.0
            } else {
                1.0
            };
            max_err = max_err.max(err);
            checks += 1;
        }
    }
    (max_err, checks)
}

fn build_case(op_idx: usize, rng: &mut ChaCha8Rng) -> (&'static str, Case) {
    match op_idx {
        0 => {
            let (m, k, n) = (rng.gen_range(1..5), rng.gen_range(1..5), rng.gen_range(1..5));
            let inputs = vec![leaf(rng, m, k), leaf(rng, k, n)];
            let w = wsum(rng, m, n);
            ("matmul", Case {
                inputs,
                f: Box::new(move |x| x[0].matmul(&x[1]).mul_elem(&w).sum_all()),
            })
        }
        1 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let inputs = vec![leaf(rng, m, n)];
            let w = wsum(rng, n, m);
            ("transpose", Case {
                inputs,
                f: Box::new(move |x| x[0].transpose().mul_elem(&w).sum_all()),
            })
        }
        2 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let inputs = vec![leaf(rng, m, n), leaf(rng, m, n)];
            let w = wsum(rng, m, n);
            ("add", Case {
                inputs,
                f: Box::new(move |x| x[0].add(&x[1]).mul_elem(&w).sum_all()),
            })
        }
        3 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..6));
            let inputs = vec![leaf(rng, m, n), leaf(rng, 1, n)];
            let w = wsum(rng, m, n);
            ("add_bias", Case {
                inputs,
                f: Box::new(move |x| x[0].add_bias(&x[1]).mul_elem(&w).sum_all()),
            })
        }
        4 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let c: Real = seed::normal(rng);
            let inputs = vec![leaf(rng, m, n)];
            let w = wsum(rng, m, n);
            ("add_const", Case {
                inputs,
                f: Box::new(move |x| x[0].add_const(c).mul_elem(&w).sum_all()),
            })
        }
        5 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let inputs = vec![leaf(rng, m, n), leaf(rng, m, n)];
            let w = wsum(rng, m, n);
            ("mul_elem", Case {
                inputs,
                f: Box::new(move |x| x[0].mul_elem(&x[1]).mul_elem(&w).sum_all()),
            })
        }
        6 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let c: Real = seed::normal(rng) * 2.0;
            let inputs = vec![leaf(rng, m, n)];
            let w = wsum(rng, m, n);
            ("scale", Case {
                inputs,
                f: Box::new(move |x| x[0].scale(c).mul_elem(&w).sum_all()),
            })
        }
        7 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let inputs = vec![leaf(rng, m, n)];
            let w = wsum(rng, m, n);
            ("sigmoid", Case {
                inputs,
                f: Box::new(move |x| x[0].sigmoid().mul_elem(&w).sum_all()),
            })
        }
        8 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let inputs = vec![leaf(rng, m, n)];
            let w = wsum(rng, m, n);
            ("silu", Case {
                inputs,
                f: Box::new(move |x| x[0].silu().mul_elem(&w).sum_all()),
            })
        }
        9 => {
            let (m, d) = (rng.gen_range(1..4), rng.gen_range(2..7));
            let x = leaf(rng, m, d);
            let gamma = Tensor::param(1, d, (0..d).map(|_| 1.0 + 0.3 * seed::normal(rng)).collect());
            let beta = leaf(rng, 1, d);
            let w = wsum(rng, m, d);
            ("layer_norm", Case {
                inputs: vec![x, gamma, beta],
                f: Box::new(move |x| x[0].layer_norm(&x[1], &x[2], 1e-5).mul_elem(&w).sum_all()),
            })
        }
        10 => {
            let (c_in, c_out) = (rng.gen_range(1..4), rng.gen_range(1..4));
            let k = rng.gen_range(1..4);
            let stride = rng.gen_range(1..3);
            let padding = rng.gen_range(0..2);
            let l = rng.gen_range(k.max(3)..k.max(3) + 5);
            let l_out = (l + 2 * padding - k) / stride + 1;
            let inputs = vec![leaf(rng, l, c_in), leaf(rng, k * c_in, c_out), leaf(rng, 1, c_out)];
            let w = wsum(rng, l_out, c_out);
            ("conv1d", Case {
                inputs,
                f: Box::new(move |x| {
                    x[0].conv1d(&x[1], Some(&x[2]), k, stride, padding)
                        .mul_elem(&w)
                        .sum_all()
                }),
            })
        }
        11 => {
            let c = rng.gen_range(1..4);
            let k = rng.gen_range(1..4);
            let padding = rng.gen_range(0..2);
            let l = rng.gen_range(k.max(3)..k.max(3) + 5);
            let l_out = l + 2 * padding - k + 1;
            let inputs = vec![leaf(rng, l, c), leaf(rng, k, c), leaf(rng, 1, c)];
            let w = wsum(rng, l_out, c);
            ("depthwise_conv1d", Case {
                inputs,
                f: Box::new(move |x| {
                    x[0].depthwise_conv1d(&x[1], Some(&x[2]), padding)
                        .mul_elem(&w)
                        .sum_all()
                }),
            })
        }
        12 => {
            let l = rng.gen_range(1..5);
            let d = 2 * rng.gen_range(1..5usize);
            let positions: Vec<usize> = (0..l).map(|_| rng.gen_range(0..12)).collect();
            let inputs = vec![leaf(rng, l, d)];
            let w = wsum(rng, l, d);
            ("rotary_apply", Case {
                inputs,
                f: Box::new(move |x| x[0].rotary_apply(&positions, 10000.0).mul_elem(&w).sum_all()),
            })
        }
        13 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(2..6));
            let inputs = vec![leaf(rng, m, n)];
            let w = wsum(rng, m, n);
            ("softmax_rows", Case {
                inputs,
                f: Box::new(move |x| x[0].softmax_rows().mul_elem(&w).sum_all()),
            })
        }
        14 => {
            let (m, v) = (rng.gen_range(1..5), rng.gen_range(3..9));
            let targets: Vec<usize> = (0..m).map(|_| rng.gen_range(0..v)).collect();
            let mut mask: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.6)).collect();
            mask[rng.gen_range(0..m)] = true;
            let inputs = vec![leaf(rng, m, v)];
            ("softmax_cross_entropy", Case {
                inputs,
                f: Box::new(move |x| softmax_cross_entropy(&x[0], &targets, &mask)),
            })
        }
        15 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let inputs = vec![leaf(rng, m, n)];
            ("sum_all", Case {
                inputs,
                f: Box::new(move |x| x[0].sum_all()),
            })
        }
        16 => {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(2..7));
            let start = rng.gen_range(0..n - 1);
            let len = rng.gen_range(1..=n - start);
            let inputs = vec![leaf(rng, m, n)];
            let w = wsum(rng, m, len);
            ("col_slice", Case {
                inputs,
                f: Box::new(move |x| x[0].col_slice(start, len).mul_elem(&w).sum_all()),
            })
        }
        17 => {
            let m = rng.gen_range(1..4);
            let (n1, n2, n3) = (rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(1..4));
            let inputs = vec![leaf(rng, m, n1), leaf(rng, m, n2), leaf(rng, m, n3)];
            let w = wsum(rng, m, n1 + n2 + n3);
            ("concat_cols", Case {
                inputs,
                f: Box::new(move |x| concat_cols(&[x[0].clone(), x[1].clone(), x[2].clone()]).mul_elem(&w).sum_all()),
            })
        }
        18 => {
            let (m, d) = (rng.gen_range(2..6), rng.gen_range(1..5));
            let mut mask: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.5)).collect();
            mask[0] = true;
            let inputs = vec![leaf(rng, m, d), leaf(rng, 1, d)];
            let w = wsum(rng, m, d);
            ("mask_rows", Case {
                inputs,
                f: Box::new(move |x| mask_rows(&x[0], &x[1], &mask).mul_elem(&w).sum_all()),
            })
        }
        19 => {
            let (v, d, t) = (rng.gen_range(3..7), rng.gen_range(1..5), rng.gen_range(1..4));
            let len = rng.gen_range(2..7);
            let items: Vec<SeqItem> = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        SeqItem::Tok(rng.gen_range(0..v))
                    } else {
                        SeqItem::Speech(rng.gen_range(0..t))
                    }
                })
                .collect();
            let inputs = vec![leaf(rng, v, d), leaf(rng, t, d)];
            let w = wsum(rng, len, d);
            ("sequence_embed", Case {
                inputs,
                f: Box::new(move |x| sequence_embed(&x[0], &items, Some(&x[1])).mul_elem(&w).sum_all()),
            })
        }
        _ => unreachable!("unknown op index {op_idx}"),
    }
}

pub const OP_COUNT: usize = 20;

/// Run the full finite-difference suite: `cases_per_op` randomized cases for
/// each primitive. Returns one report per primitive.
pub fn run_fd_suite(cases_per_op: usize, seed_value: u64) -> Vec<OpReport> {
    let mut reports: Vec<OpReport> = Vec::with_capacity(OP_COUNT);
    for op_idx in 0..OP_COUNT {
        let mut name = "";
        let mut max_err: Real = 0.0;
        let mut checks = 0;
        for case_idx in 0..cases_per_op {
            let mut rng = seed::rng(seed::derive(seed_value, "fd-case", (op_idx * 10007 + case_idx) as u64));
            let (n, case) = build_case(op_idx, &mut rng);
            name = n;
            let (err, c) = fd_case(&case);
            max_err = max_err.max(err);
            checks += c;
        }
        reports.push(OpReport {
            op: name,
            cases: cases_per_op,
            checks,
            max_rel_err: max_err,
        });
    }
    reports
}
