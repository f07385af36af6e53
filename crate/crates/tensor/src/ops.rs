use crate::tensor::{Op, Tensor};
use crate::Real;

/// One slot of an embedded sequence: either a vocabulary id looked up in the
/// embedding table, or a row taken from a continuous feature tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeqItem {
    Tok(usize),
    Speech(usize),
}

// ---------------------------------------------------------------------------
// Raw kernels (also used by the backward pass).
// ---------------------------------------------------------------------------

/// out[m x n] = a[m x k] · b[k x n]
pub(crate) fn matmul_nn(a: &[Real], b: &[Real], m: usize, k: usize, n: usize, out: &mut [Real]) {
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &a_ip) in a_row.iter().enumerate() {
            if a_ip == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &b_pj) in out_row.iter_mut().zip(b_row.iter()) {
                *o += a_ip * b_pj;
            }
        }
    }
}

/// out[m x k] = a[m x n] · b[k x n]ᵀ
pub(crate) fn matmul_nt(a: &[Real], b: &[Real], m: usize, n: usize, k: usize, out: &mut [Real]) {
    debug_assert_eq!(out.len(), m * k);
    for i in 0..m {
        let a_row = &a[i * n..(i + 1) * n];
        for p in 0..k {
            let b_row = &b[p * n..(p + 1) * n];
            let mut acc = 0.0;
            for (x, y) in a_row.iter().zip(b_row.iter()) {
                acc += x * y;
            }
            out[i * k + p] += acc;
        }
    }
}

/// out[k x n] = a[m x k]ᵀ · c[m x n]
pub(crate) fn matmul_tn(a: &[Real], c: &[Real], m: usize, k: usize, n: usize, out: &mut [Real]) {
    debug_assert_eq!(out.len(), k * n);
    for i in 0..m {
        let c_row = &c[i * n..(i + 1) * n];
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &a_ip) in a_row.iter().enumerate() {
            if a_ip == 0.0 {
                continue;
            }
            let out_row = &mut out[p * n..(p + 1) * n];
            for (o, &c_ij) in out_row.iter_mut().zip(c_row.iter()) {
                *o += a_ip * c_ij;
            }
        }
    }
}

/// Rotation angle of column pair `pair` (of `half` pairs) at `pos`. Public
/// so incremental inference paths can reproduce rotary output bitwise.
pub fn rotary_angle(pos: usize, pair: usize, half: usize, base: Real) -> Real {
    pos as Real * base.powf(-((pair as Real) / (half as Real)))
}

/// out[1 x n] += a[1 x k] · b[k x n], with the same accumulation order as
/// [`Tensor::matmul`]. Public so incremental inference paths can reproduce
/// matmul rows bitwise.
pub fn matvec(a: &[Real], b: &[Real], n: usize, out: &mut [Real]) {
    matmul_nn(a, b, 1, a.len(), n, out);
}

fn grad_of(inputs: &[&Tensor]) -> bool {
    inputs.iter().any(|t| t.requires_grad())
}

// ---------------------------------------------------------------------------
// Public operations.
// ---------------------------------------------------------------------------

impl Tensor {
    pub fn matmul(&self, other: &Tensor) -> Tensor {
        let (m, k) = (self.rows(), self.cols());
        let (k2, n) = (other.rows(), other.cols());
        assert_eq!(
            k, k2,
            "matmul dimension mismatch: left is {m}x{k}, right is {k2}x{n}"
        );
        let mut out = vec![0.0; m * n];
        matmul_nn(self.data(), other.data(), m, k, n, &mut out);
        Tensor::new_node(
            m,
            n,
            out,
            grad_of(&[self, other]),
            Op::Matmul(self.clone(), other.clone()),
            "matmul",
        )
    }

    pub fn transpose(&self) -> Tensor {
        let (m, n) = (self.rows(), self.cols());
        let src = self.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = src[i * n + j];
            }
        }
        Tensor::new_node(n, m, out, self.requires_grad(), Op::Transpose(self.clone()), "transpose")
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        assert_eq!(
            (self.rows(), self.cols()),
            (other.rows(), other.cols()),
            "add shape mismatch: {}x{} vs {}x{}",
            self.rows(),
            self.cols(),
            other.rows(),
            other.cols()
        );
        let out = self
            .data()
            .iter()
            .zip(other.data().iter())
            .map(|(a, b)| a + b)
            .collect();
        Tensor::new_node(
            self.rows(),
            self.cols(),
            out,
            grad_of(&[self, other]),
            Op::Add(self.clone(), other.clone()),
            "add",
        )
    }

    /// Add a `1 x n` bias row to every row of an `m x n` tensor.
    pub fn add_bias(&self, bias: &Tensor) -> Tensor {
        assert_eq!(
            (bias.rows(), bias.cols()),
            (1, self.cols()),
            "add_bias expects bias 1x{}, got {}x{}",
            self.cols(),
            bias.rows(),
            bias.cols()
        );
        let n = self.cols();
        let b = bias.data();
        let out = self
            .data()
            .iter()
            .enumerate()
            .map(|(idx, v)| v + b[idx % n])
            .collect();
        Tensor::new_node(
            self.rows(),
            self.cols(),
            out,
            grad_of(&[self, bias]),
            Op::AddBias(self.clone(), bias.clone()),
            "add_bias",
        )
    }

    pub fn add_const(&self, c: Real) -> Tensor {
        let out = self.data().iter().map(|v| v + c).collect();
        Tensor::new_node(
            self.rows(),
            self.cols(),
            out,
            self.requires_grad(),
            Op::AddConst(self.clone()),
            "add_const",
        )
    }

    pub fn mul_elem(&self, other: &Tensor) -> Tensor {
        assert_eq!(
            (self.rows(), self.cols()),
            (other.rows(), other.cols()),
            "mul_elem shape mismatch: {}x{} vs {}x{}",
            self.rows(),
            self.cols(),
            other.rows(),
            other.cols()
        );
        let out = self
            .data()
            .iter()
            .zip(other.data().iter())
            .map(|(a, b)| a * b)
            .collect();
        Tensor::new_node(
            self.rows(),
            self.cols(),
            out,
            grad_of(&[self, other]),
            Op::MulElem(self.clone(), other.clone()),
            "mul_elem",
        )
    }

    pub fn scale(&self, c: Real) -> Tensor {
        let out = self.data().iter().map(|v| v * c).collect();
        Tensor::new_node(
            self.rows(),
            self.cols(),
            out,
            self.requires_grad(),
            Op::Scale(self.clone(), c),
            "scale",
        )
    }

    pub fn sigmoid(&self) -> Tensor {
        let out = self.data().iter().map(|v| sigmoid_scalar(*v)).collect();
        Tensor::new_node(
            self.rows(),
            self.cols(),
            out,
            self.requires_grad(),
            Op::Sigmoid(self.clone()),
            "sigmoid",
        )
    }

    /// x * sigmoid(x) (the swish activation).
    pub fn silu(&self) -> Tensor {
        let out = self
            .data()
            .iter()
            .map(|v| v * sigmoid_scalar(*v))
            .collect();
        Tensor::new_node(
            self.rows(),
            self.cols(),
            out,
            self.requires_grad(),
            Op::Silu(self.clone()),
            "silu",
        )
    }

    /// Per-row normalization to zero mean / unit variance (biased variance),
    /// then elementwise affine with `gamma`/`beta` (each `1 x d`).
    pub fn layer_norm(&self, gamma: &Tensor, beta: &Tensor, eps: Real) -> Tensor {
        let d = self.cols();
        assert!(d >= 1, "layer_norm requires at least one column");
        assert_eq!(
            (gamma.rows(), gamma.cols()),
            (1, d),
            "layer_norm gamma must be 1x{d}, got {}x{}",
            gamma.rows(),
            gamma.cols()
        );
        assert_eq!(
            (beta.rows(), beta.cols()),
            (1, d),
            "layer_norm beta must be 1x{d}, got {}x{}",
            beta.rows(),
            beta.cols()
        );
        let g = gamma.data();
        let b = beta.data();
        let mut out = vec![0.0; self.numel()];
        for r in 0..self.rows() {
            let row = &self.data()[r * d..(r + 1) * d];
            let mean = row.iter().sum::<Real>() / d as Real;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<Real>() / d as Real;
            let inv = 1.0 / (var + eps).sqrt();
            let out_row = &mut out[r * d..(r + 1) * d];
            for j in 0..d {
                out_row[j] = (row[j] - mean) * inv * g[j] + b[j];
            }
        }
        Tensor::new_node(
            self.rows(),
            self.cols(),
            out,
            grad_of(&[self, gamma, beta]),
            Op::LayerNorm {
                x: self.clone(),
                gamma: gamma.clone(),
                beta: beta.clone(),
                eps,
            },
            "layer_norm",
        )
    }

    /// 1-D convolution over the row (time) axis. The input is `L x c_in`;
    /// the kernel is stored as `(K*c_in) x c_out` with the tap index major
    /// (row `k*c_in + ci` holds tap `k`, input channel `ci`). Bias is
    /// `1 x c_out` when present. Output length is
    /// `floor((L + 2*padding - K)/stride) + 1`.
    pub fn conv1d(
        &self,
        kernel: &Tensor,
        bias: Option<&Tensor>,
        k: usize,
        stride: usize,
        padding: usize,
    ) -> Tensor {
        let (l, c_in) = (self.rows(), self.cols());
        assert!(k >= 1 && stride >= 1, "conv1d requires k >= 1 and stride >= 1");
        assert_eq!(
            kernel.rows(),
            k * c_in,
            "conv1d kernel rows {} do not match K*c_in = {}*{}",
            kernel.rows(),
            k,
            c_in
        );
        let c_out = kernel.cols();
        assert!(
            l + 2 * padding >= k,
            "conv1d input too short: L={l} with padding {padding} is shorter than kernel K={k}"
        );
        if let Some(b) = bias {
            assert_eq!(
                (b.rows(), b.cols()),
                (1, c_out),
                "conv1d bias must be 1x{c_out}, got {}x{}",
                b.rows(),
                b.cols()
            );
        }
        let l_out = (l + 2 * padding - k) / stride + 1;
        let x = self.data();
        let w = kernel.data();
        let mut out = vec![0.0; l_out * c_out];
        for t in 0..l_out {
            let out_row = &mut out[t * c_out..(t + 1) * c_out];
            if let Some(b) = bias {
                out_row.copy_from_slice(b.data());
            }
            for tap in 0..k {
                let src = (t * stride + tap) as isize - padding as isize;
                if src < 0 || src as usize >= l {
                    continue;
                }
                let x_row = &x[src as usize * c_in..(src as usize + 1) * c_in];
                for (ci, &xv) in x_row.iter().enumerate() {
                    if xv == 0.0 {
                        continue;
                    }
                    let w_row = &w[(tap * c_in + ci) * c_out..(tap * c_in + ci + 1) * c_out];
                    for (o, &wv) in out_row.iter_mut().zip(w_row.iter()) {
                        *o += xv * wv;
                    }
                }
            }
        }
        let mut inputs: Vec<&Tensor> = vec![self, kernel];
        if let Some(b) = bias {
            inputs.push(b);
        }
        Tensor::new_node(
            l_out,
            c_out,
            out,
            grad_of(&inputs),
            Op::Conv1d {
                x: self.clone(),
                kernel: kernel.clone(),
                bias: bias.cloned(),
                k,
                stride,
                padding,
            },
            "conv1d",
        )
    }

    /// Depthwise 1-D convolution (stride 1): each of the `c` channels is
    /// filtered independently with its own `K`-tap kernel (`kernel` is
    /// `K x c`).
    pub fn depthwise_conv1d(&self, kernel: &Tensor, bias: Option<&Tensor>, padding: usize) -> Tensor {
        let (l, c) = (self.rows(), self.cols());
        let k = kernel.rows();
        assert_eq!(
            kernel.cols(),
            c,
            "depthwise_conv1d kernel has {} channels, input has {c}",
            kernel.cols()
        );
        assert!(
            l + 2 * padding >= k,
            "depthwise_conv1d input too short: L={l} with padding {padding} is shorter than kernel K={k}"
        );
        if let Some(b) = bias {
            assert_eq!(
                (b.rows(), b.cols()),
                (1, c),
                "depthwise_conv1d bias must be 1x{c}, got {}x{}",
                b.rows(),
                b.cols()
            );
        }
        let l_out = l + 2 * padding - k + 1;
        let x = self.data();
        let w = kernel.data();
        let mut out = vec![0.0; l_out * c];
        for t in 0..l_out {
            let out_row = &mut out[t * c..(t + 1) * c];
            if let Some(b) = bias {
                out_row.copy_from_slice(b.data());
            }
            for tap in 0..k {
                let src = (t + tap) as isize - padding as isize;
                if src < 0 || src as usize >= l {
                    continue;
                }
                let x_row = &x[src as usize * c..(src as usize + 1) * c];
                let w_row = &w[tap * c..(tap + 1) * c];
                for ((o, &xv), &wv) in out_row.iter_mut().zip(x_row.iter()).zip(w_row.iter()) {
                    *o += xv * wv;
                }
            }
        }
        let mut inputs: Vec<&Tensor> = vec![self, kernel];
        if let Some(b) = bias {
            inputs.push(b);
        }
        Tensor::new_node(
            l_out,
            c,
            out,
            grad_of(&inputs),
            Op::DepthwiseConv1d {
                x: self.clone(),
                kernel: kernel.clone(),
                bias: bias.cloned(),
                padding,
            },
            "depthwise_conv1d",
        )
    }

    /// Rotary position encoding: adjacent column pairs `(2i, 2i+1)` of row
    /// `t` are rotated by `positions[t] * base^(-i/(d/2))`. Pair norms are
    /// preserved, and dot products between rotated rows depend on their
    /// position difference only.
    pub fn rotary_apply(&self, positions: &[usize], base: Real) -> Tensor {
        let (l, d) = (self.rows(), self.cols());
        assert!(d % 2 == 0, "rotary_apply requires an even dimension, got {d}");
        assert_eq!(
            positions.len(),
            l,
            "rotary_apply expects one position per row: {} positions for {l} rows",
            positions.len()
        );
        let half = d / 2;
        let x = self.data();
        let mut out = vec![0.0; l * d];
        for t in 0..l {
            for i in 0..half {
                let theta = rotary_angle(positions[t], i, half, base);
                let (sin, cos) = theta.sin_cos();
                let a = x[t * d + 2 * i];
                let b = x[t * d + 2 * i + 1];
                out[t * d + 2 * i] = a * cos - b * sin;
                out[t * d + 2 * i + 1] = a * sin + b * cos;
            }
        }
        Tensor::new_node(
            l,
            d,
            out,
            self.requires_grad(),
            Op::Rotary {
                x: self.clone(),
                positions: positions.to_vec(),
                base,
            },
            "rotary_apply",
        )
    }

    pub fn softmax_rows(&self) -> Tensor {
        let (m, n) = (self.rows(), self.cols());
        let x = self.data();
        let mut out = vec![0.0; m * n];
        for r in 0..m {
            let row = &x[r * n..(r + 1) * n];
            let max = row.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
            let out_row = &mut out[r * n..(r + 1) * n];
            let mut sum = 0.0;
            for (o, &v) in out_row.iter_mut().zip(row.iter()) {
                *o = (v - max).exp();
                sum += *o;
            }
            let inv = 1.0 / sum;
            for o in out_row.iter_mut() {
                *o *= inv;
            }
        }
        Tensor::new_node(m, n, out, self.requires_grad(), Op::SoftmaxRows(self.clone()), "softmax_rows")
    }

    pub fn sum_all(&self) -> Tensor {
        let s = self.data().iter().sum();
        Tensor::new_node(1, 1, vec![s], self.requires_grad(), Op::SumAll(self.clone()), "sum_all")
    }

    /// Columns `[start, start+len)` as a new tensor.
    pub fn col_slice(&self, start: usize, len: usize) -> Tensor {
        let (m, n) = (self.rows(), self.cols());
        assert!(
            start + len <= n,
            "col_slice [{start}, {}) out of bounds for {n} columns",
            start + len
        );
        let x = self.data();
        let mut out = vec![0.0; m * len];
        for r in 0..m {
            out[r * len..(r + 1) * len].copy_from_slice(&x[r * n + start..r * n + start + len]);
        }
        Tensor::new_node(
            m,
            len,
            out,
            self.requires_grad(),
            Op::ColSlice {
                x: self.clone(),
                start,
                len,
            },
            "col_slice",
        )
    }
}

/// Numerically-stable logistic function. Public so incremental inference
/// paths can reproduce sigmoid/silu output bitwise.
pub fn sigmoid_scalar(v: Real) -> Real {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Concatenate tensors with equal row counts along the column axis.
pub fn concat_cols(parts: &[Tensor]) -> Tensor {
    assert!(!parts.is_empty(), "concat_cols requires at least one input");
    let m = parts[0].rows();
    for p in parts {
        assert_eq!(
            p.rows(),
            m,
            "concat_cols row mismatch: {} vs {m}",
            p.rows()
        );
    }
    let n: usize = parts.iter().map(|p| p.cols()).sum();
    let mut out = vec![0.0; m * n];
    let mut col = 0;
    for p in parts {
        let pc = p.cols();
        for r in 0..m {
            out[r * n + col..r * n + col + pc].copy_from_slice(&p.data()[r * pc..(r + 1) * pc]);
        }
        col += pc;
    }
    let grad = parts.iter().any(|p| p.requires_grad());
    Tensor::new_node(m, n, out, grad, Op::ConcatCols(parts.to_vec()), "concat_cols")
}

/// Sum over masked rows of `-log softmax(logits[row])[target[row]]`.
/// Rows where `mask` is false contribute nothing and receive an exactly-zero
/// gradient.
pub fn softmax_cross_entropy(logits: &Tensor, targets: &[usize], mask: &[bool]) -> Tensor {
    let (m, v) = (logits.rows(), logits.cols());
    assert_eq!(targets.len(), m, "softmax_cross_entropy: {} targets for {m} rows", targets.len());
    assert_eq!(mask.len(), m, "softmax_cross_entropy: {} mask entries for {m} rows", mask.len());
    let x = logits.data();
    let mut masked_targets = Vec::with_capacity(m);
    let mut loss = 0.0;
    for r in 0..m {
        if !mask[r] {
            masked_targets.push(None);
            continue;
        }
        let t = targets[r];
        assert!(
            t < v,
            "softmax_cross_entropy target {t} out of range for {v} classes at row {r}"
        );
        masked_targets.push(Some(t));
        let row = &x[r * v..(r + 1) * v];
        let max = row.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
        let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<Real>().ln();
        loss += lse - row[t];
    }
    Tensor::new_node(
        1,
        1,
        vec![loss],
        logits.requires_grad(),
        Op::SoftmaxXent {
            logits: logits.clone(),
            targets: masked_targets,
        },
        "softmax_cross_entropy",
    )
}

/// Rows of `base` where `mask` is true are replaced by the single
/// `replacement` row (a learned embedding); other rows pass through.
pub fn mask_rows(base: &Tensor, replacement: &Tensor, mask: &[bool]) -> Tensor {
    let (m, d) = (base.rows(), base.cols());
    assert_eq!(
        (replacement.rows(), replacement.cols()),
        (1, d),
        "mask_rows replacement must be 1x{d}, got {}x{}",
        replacement.rows(),
        replacement.cols()
    );
    assert_eq!(mask.len(), m, "mask_rows: {} mask entries for {m} rows", mask.len());
    let mut out = base.data().to_vec();
    for (r, &masked) in mask.iter().enumerate() {
        if masked {
            out[r * d..(r + 1) * d].copy_from_slice(replacement.data());
        }
    }
    Tensor::new_node(
        m,
        d,
        out,
        base.requires_grad() || replacement.requires_grad(),
        Op::MaskRows {
            base: base.clone(),
            replacement: replacement.clone(),
            mask: mask.to_vec(),
        },
        "mask_rows",
    )
}

/// Build a sequence of embeddings: `Tok(id)` items gather row `id` of
/// `table` (`V x d`), `Speech(j)` items splice in row `j` of the continuous
/// `speech` tensor (`T x d`). Gradients flow into both the table rows and
/// the speech rows.
pub fn sequence_embed(table: &Tensor, items: &[SeqItem], speech: Option<&Tensor>) -> Tensor {
    let d = table.cols();
    let v = table.rows();
    if let Some(s) = speech {
        assert_eq!(
            s.cols(),
            d,
            "sequence_embed: speech dimension {} does not match table dimension {d}",
            s.cols()
        );
    }
    let mut out = vec![0.0; items.len() * d];
    for (i, item) in items.iter().enumerate() {
        let src = match *item {
            SeqItem::Tok(t) => {
                assert!(t < v, "sequence_embed token id {t} out of range for table with {v} rows");
                &table.data()[t * d..(t + 1) * d]
            }
            SeqItem::Speech(j) => {
                let s = speech.expect("sequence_embed: speech item present but no speech tensor given");
                assert!(
                    j < s.rows(),
                    "sequence_embed speech index {j} out of range for {} speech rows",
                    s.rows()
                );
                &s.data()[j * d..(j + 1) * d]
            }
        };
        out[i * d..(i + 1) * d].copy_from_slice(src);
    }
    let grad = table.requires_grad() || speech.map(|s| s.requires_grad()).unwrap_or(false);
    Tensor::new_node(
        items.len(),
        d,
        out,
        grad,
        Op::SequenceEmbed {
            table: table.clone(),
            speech: speech.cloned(),
            items: items.to_vec(),
        },
        "sequence_embed",
    )
}
