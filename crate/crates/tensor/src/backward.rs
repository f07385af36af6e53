use std::collections::{HashMap, HashSet};

use crate::ops::{matmul_nt, matmul_tn, rotary_angle};
use crate::tensor::{Op, Tensor};
use crate::{Real, SeqItem};

/// Gradient buffers keyed by tensor id, as produced by [`backward`]. After
/// the walk finishes only leaf tensors remain; interior buffers are dropped
/// as soon as they have been propagated.
pub struct Gradients {
    map: HashMap<u64, Vec<Real>>,
}

impl Gradients {
    pub fn get(&self, t: &Tensor) -> Option<&[Real]> {
        self.map.get(&t.id()).map(|v| v.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    /// Euclidean norm over every stored gradient buffer.
    pub fn global_norm(&self) -> Real {
        self.map
            .values()
            .flat_map(|v| v.iter())
            .map(|g| g * g)
            .sum::<Real>()
            .sqrt()
    }

    /// Scale every stored gradient buffer in place (used for norm clipping).
    pub fn scale_all(&mut self, factor: Real) {
        for buf in self.map.values_mut() {
            for g in buf.iter_mut() {
                *g *= factor;
            }
        }
    }
}

fn children(op: &Op) -> Vec<Tensor> {
    match op {
        Op::Leaf => vec![],
        Op::Matmul(a, b) | Op::Add(a, b) | Op::AddBias(a, b) | Op::MulElem(a, b) => {
            vec![a.clone(), b.clone()]
        }
        Op::Transpose(x)
        | Op::AddConst(x)
        | Op::Scale(x, _)
        | Op::Sigmoid(x)
        | Op::Silu(x)
        | Op::SoftmaxRows(x)
        | Op::SumAll(x) => vec![x.clone()],
        Op::LayerNorm { x, gamma, beta, .. } => vec![x.clone(), gamma.clone(), beta.clone()],
        Op::Conv1d { x, kernel, bias, .. } | Op::DepthwiseConv1d { x, kernel, bias, .. } => {
            let mut v = vec![x.clone(), kernel.clone()];
            if let Some(b) = bias {
                v.push(b.clone());
            }
            v
        }
        Op::Rotary { x, .. } => vec![x.clone()],
        Op::SoftmaxXent { logits, .. } => vec![logits.clone()],
        Op::ColSlice { x, .. } => vec![x.clone()],
        Op::ConcatCols(parts) => parts.clone(),
        Op::MaskRows { base, replacement, .. } => vec![base.clone(), replacement.clone()],
        Op::SequenceEmbed { table, speech, .. } => {
            let mut v = vec![table.clone()];
            if let Some(s) = speech {
                v.push(s.clone());
            }
            v
        }
    }
}

/// Reverse-mode differentiation of a scalar loss. Returns gradients for every
/// reachable leaf with `requires_grad = true`; frozen subgraphs are neither
/// traversed nor populated. Consumes the loss so the recorded graph is freed
/// when the walk completes.
pub fn backward(loss: Tensor) -> Gradients {
    assert!(
        loss.numel() == 1,
        "backward requires a scalar loss, got {}x{}",
        loss.rows(),
        loss.cols()
    );
    let mut grads = Gradients { map: HashMap::new() };
    if !loss.requires_grad() {
        return grads;
    }

    // Iterative DFS post-order; reversed it is a topological order, so every
    // node is processed only after all of its consumers contributed.
    let mut order: Vec<Tensor> = Vec::new();
    let mut visited: HashSet<u64> = HashSet::new();
    let mut stack: Vec<(Tensor, bool)> = vec![(loss.clone(), false)];
    visited.insert(loss.id());
    while let Some((t, expanded)) = stack.pop() {
        if expanded {
            order.push(t);
            continue;
        }
        stack.push((t.clone(), true));
        for child in children(t.op()) {
            if child.requires_grad() && visited.insert(child.id()) {
                stack.push((child, false));
            }
        }
    }

    grads.map.insert(loss.id(), vec![1.0]);
    for t in order.iter().rev() {
        let is_leaf = matches!(t.op(), Op::Leaf);
        let g = if is_leaf {
            continue;
        } else {
            match grads.map.remove(&t.id()) {
                Some(g) => g,
                None => continue,
            }
        };
        propagate(t, &g, &mut grads);
    }
    grads
}

fn accum<'a>(grads: &'a mut Gradients, t: &Tensor) -> &'a mut [Real] {
    grads
        .map
        .entry(t.id())
        .or_insert_with(|| vec![0.0; t.numel()])
        .as_mut_slice()
}

fn sigmoid_scalar(v: Real) -> Real {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn propagate(node: &Tensor, g: &[Real], grads: &mut Gradients) {
    match node.op() {
        Op::Leaf => {}
        Op::Matmul(a, b) => {
            let (m, k) = (a.rows(), a.cols());
            let n = b.cols();
            if a.requires_grad() {
                matmul_nt(g, b.data(), m, n, k, accum(grads, a));
            }
            if b.requires_grad() {
                matmul_tn(a.data(), g, m, k, n, accum(grads, b));
            }
        }
        Op::Transpose(x) => {
            if x.requires_grad() {
                let (m, n) = (x.rows(), x.cols());
                let gx = accum(grads, x);
                for i in 0..m {
                    for j in 0..n {
                        gx[i * n + j] += g[j * m + i];
                    }
                }
            }
        }
        Op::Add(a, b) => {
            for t in [a, b] {
                if t.requires_grad() {
                    let gt = accum(grads, t);
                    for (o, &gv) in gt.iter_mut().zip(g.iter()) {
                        *o += gv;
                    }
                }
            }
        }
        Op::AddBias(x, bias) => {
            if x.requires_grad() {
                let gx = accum(grads, x);
                for (o, &gv) in gx.iter_mut().zip(g.iter()) {
                    *o += gv;
                }
            }
            if bias.requires_grad() {
                let n = bias.cols();
                let gb = accum(grads, bias);
                for (idx, &gv) in g.iter().enumerate() {
                    gb[idx % n] += gv;
                }
            }
        }
        Op::AddConst(x) => {
            if x.requires_grad() {
                let gx = accum(grads, x);
                for (o, &gv) in gx.iter_mut().zip(g.iter()) {
                    *o += gv;
                }
            }
        }
        Op::MulElem(a, b) => {
            if a.requires_grad() {
                let ga = accum(grads, a);
                for ((o, &gv), &bv) in ga.iter_mut().zip(g.iter()).zip(b.data().iter()) {
                    *o += gv * bv;
                }
            }
            if b.requires_grad() {
                let gb = accum(grads, b);
                for ((o, &gv), &av) in gb.iter_mut().zip(g.iter()).zip(a.data().iter()) {
                    *o += gv * av;
                }
            }
        }
        Op::Scale(x, c) => {
            if x.requires_grad() {
                let c = *c;
                let gx = accum(grads, x);
                for (o, &gv) in gx.iter_mut().zip(g.iter()) {
                    *o += c * gv;
                }
            }
        }
        Op::Sigmoid(x) => {
            if x.requires_grad() {
                let y = node.data();
                let gx = accum(grads, x);
                for ((o, &gv), &yv) in gx.iter_mut().zip(g.iter()).zip(y.iter()) {
                    *o += gv * yv * (1.0 - yv);
                }
            }
        }
        Op::Silu(x) => {
            if x.requires_grad() {
                let gx = accum(grads, x);
                for ((o, &gv), &xv) in gx.iter_mut().zip(g.iter()).zip(x.data().iter()) {
                    let s = sigmoid_scalar(xv);
                    *o += gv * s * (1.0 + xv * (1.0 - s));
                }
            }
        }
        Op::LayerNorm { x, gamma, beta, eps } => {
            let (m, d) = (x.rows(), x.cols());
            let gam = gamma.data();
            let mut gx_buf = if x.requires_grad() { vec![0.0; m * d] } else { vec![] };
            let mut gg_buf = if gamma.requires_grad() { vec![0.0; d] } else { vec![] };
            let mut gb_buf = if beta.requires_grad() { vec![0.0; d] } else { vec![] };
            for r in 0..m {
                let row = &x.data()[r * d..(r + 1) * d];
                let gy = &g[r * d..(r + 1) * d];
                let mean = row.iter().sum::<Real>() / d as Real;
                let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<Real>() / d as Real;
                let inv = 1.0 / (var + eps).sqrt();
                if gamma.requires_grad() || beta.requires_grad() || x.requires_grad() {
                    let mut mean_h = 0.0;
                    let mut mean_hx = 0.0;
                    for j in 0..d {
                        let xhat = (row[j] - mean) * inv;
                        let h = gy[j] * gam[j];
                        mean_h += h;
                        mean_hx += h * xhat;
                        if gamma.requires_grad() {
                            gg_buf[j] += gy[j] * xhat;
                        }
                        if beta.requires_grad() {
                            gb_buf[j] += gy[j];
                        }
                    }
                    mean_h /= d as Real;
                    mean_hx /= d as Real;
                    if x.requires_grad() {
                        for j in 0..d {
                            let xhat = (row[j] - mean) * inv;
                            gx_buf[r * d + j] += inv * (gy[j] * gam[j] - mean_h - xhat * mean_hx);
                        }
                    }
                }
            }
            if x.requires_grad() {
                let gx = accum(grads, x);
                for (o, v) in gx.iter_mut().zip(gx_buf.iter()) {
                    *o += v;
                }
            }
            if gamma.requires_grad() {
                let gg = accum(grads, gamma);
                for (o, v) in gg.iter_mut().zip(gg_buf.iter()) {
                    *o += v;
                }
            }
            if beta.requires_grad() {
                let gb = accum(grads, beta);
                for (o, v) in gb.iter_mut().zip(gb_buf.iter()) {
                    *o += v;
                }
            }
        }
        Op::Conv1d { x, kernel, bias, k, stride, padding } => {
            let (l, c_in) = (x.rows(), x.cols());
            let c_out = kernel.cols();
            let l_out = node.rows();
            let mut gx_buf = if x.requires_grad() { vec![0.0; l * c_in] } else { vec![] };
            let mut gw_buf = if kernel.requires_grad() { vec![0.0; kernel.numel()] } else { vec![] };
            for t in 0..l_out {
                let g_row = &g[t * c_out..(t + 1) * c_out];
                for tap in 0..*k {
                    let src = (t * stride + tap) as isize - *padding as isize;
                    if src < 0 || src as usize >= l {
                        continue;
                    }
                    let s = src as usize;
                    for ci in 0..c_in {
                        let w_row = &kernel.data()[(tap * c_in + ci) * c_out..(tap * c_in + ci + 1) * c_out];
                        if x.requires_grad() {
                            let mut acc = 0.0;
                            for (gv, wv) in g_row.iter().zip(w_row.iter()) {
                                acc += gv * wv;
                            }
                            gx_buf[s * c_in + ci] += acc;
                        }
                        if kernel.requires_grad() {
                            let xv = x.data()[s * c_in + ci];
                            if xv != 0.0 {
                                let gw_row = &mut gw_buf
                                    [(tap * c_in + ci) * c_out..(tap * c_in + ci + 1) * c_out];
                                for (o, gv) in gw_row.iter_mut().zip(g_row.iter()) {
                                    *o += xv * gv;
                                }
                            }
                        }
                    }
                }
            }
            if x.requires_grad() {
                let gx = accum(grads, x);
                for (o, v) in gx.iter_mut().zip(gx_buf.iter()) {
                    *o += v;
                }
            }
            if kernel.requires_grad() {
                let gw = accum(grads, kernel);
                for (o, v) in gw.iter_mut().zip(gw_buf.iter()) {
                    *o += v;
                }
            }
            if let Some(b) = bias {
                if b.requires_grad() {
                    let gb = accum(grads, b);
                    for (idx, &gv) in g.iter().enumerate() {
                        gb[idx % c_out] += gv;
                    }
                }
            }
        }
        Op::DepthwiseConv1d { x, kernel, bias, padding } => {
            let (l, c) = (x.rows(), x.cols());
            let k = kernel.rows();
            let l_out = node.rows();
            let mut gx_buf = if x.requires_grad() { vec![0.0; l * c] } else { vec![] };
            let mut gw_buf = if kernel.requires_grad() { vec![0.0; k * c] } else { vec![] };
            for t in 0..l_out {
                let g_row = &g[t * c..(t + 1) * c];
                for tap in 0..k {
                    let src = (t + tap) as isize - *padding as isize;
                    if src < 0 || src as usize >= l {
                        continue;
                    }
                    let s = src as usize;
                    let w_row = &kernel.data()[tap * c..(tap + 1) * c];
                    if x.requires_grad() {
                        let gx_row = &mut gx_buf[s * c..(s + 1) * c];
                        for ((o, gv), wv) in gx_row.iter_mut().zip(g_row.iter()).zip(w_row.iter()) {
                            *o += gv * wv;
                        }
                    }
                    if kernel.requires_grad() {
                        let x_row = &x.data()[s * c..(s + 1) * c];
                        let gw_row = &mut gw_buf[tap * c..(tap + 1) * c];
                        for ((o, gv), xv) in gw_row.iter_mut().zip(g_row.iter()).zip(x_row.iter()) {
                            *o += gv * xv;
                        }
                    }
                }
            }
            if x.requires_grad() {
                let gx = accum(grads, x);
                for (o, v) in gx.iter_mut().zip(gx_buf.iter()) {
                    *o += v;
                }
            }
            if kernel.requires_grad() {
                let gw = accum(grads, kernel);
                for (o, v) in gw.iter_mut().zip(gw_buf.iter()) {
                    *o += v;
                }
            }
            if let Some(b) = bias {
                if b.requires_grad() {
                    let gb = accum(grads, b);
                    for (idx, &gv) in g.iter().enumerate() {
                        gb[idx % c] += gv;
                    }
                }
            }
        }
        Op::Rotary { x, positions, base } => {
            if x.requires_grad() {
                let d = x.cols();
                let half = d / 2;
                let gx = accum(grads, x);
                for (t, &pos) in positions.iter().enumerate() {
                    for i in 0..half {
                        let theta = rotary_angle(pos, i, half, *base);
                        let (sin, cos) = theta.sin_cos();
                        let ga = g[t * d + 2 * i];
                        let gb = g[t * d + 2 * i + 1];
                        gx[t * d + 2 * i] += ga * cos + gb * sin;
                        gx[t * d + 2 * i + 1] += -ga * sin + gb * cos;
                    }
                }
            }
        }
        Op::SoftmaxRows(x) => {
            if x.requires_grad() {
                let (m, n) = (node.rows(), node.cols());
                let y = node.data();
                let gx = accum(grads, x);
                for r in 0..m {
                    let y_row = &y[r * n..(r + 1) * n];
                    let g_row = &g[r * n..(r + 1) * n];
                    let dot: Real = y_row.iter().zip(g_row.iter()).map(|(yv, gv)| yv * gv).sum();
                    let gx_row = &mut gx[r * n..(r + 1) * n];
                    for ((o, &yv), &gv) in gx_row.iter_mut().zip(y_row.iter()).zip(g_row.iter()) {
                        *o += yv * (gv - dot);
                    }
                }
            }
        }
        Op::SoftmaxXent { logits, targets } => {
            if logits.requires_grad() {
                let v = logits.cols();
                let g0 = g[0];
                let x = logits.data();
                let gx = accum(grads, logits);
                for (r, target) in targets.iter().enumerate() {
                    let Some(t) = target else { continue };
                    let row = &x[r * v..(r + 1) * v];
                    let max = row.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
                    let sum: Real = row.iter().map(|&z| (z - max).exp()).sum();
                    let gx_row = &mut gx[r * v..(r + 1) * v];
                    for (j, (o, &z)) in gx_row.iter_mut().zip(row.iter()).enumerate() {
                        let p = (z - max).exp() / sum;
                        *o += g0 * (p - if j == *t { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        Op::SumAll(x) => {
            if x.requires_grad() {
                let g0 = g[0];
                let gx = accum(grads, x);
                for o in gx.iter_mut() {
                    *o += g0;
                }
            }
        }
        Op::ColSlice { x, start, len } => {
            if x.requires_grad() {
                let n = x.cols();
                let gx = accum(grads, x);
                for r in 0..node.rows() {
                    for j in 0..*len {
                        gx[r * n + start + j] += g[r * len + j];
                    }
                }
            }
        }
        Op::ConcatCols(parts) => {
            let n = node.cols();
            let m = node.rows();
            let mut col = 0;
            for p in parts {
                let pc = p.cols();
                if p.requires_grad() {
                    let gp = accum(grads, p);
                    for r in 0..m {
                        for j in 0..pc {
                            gp[r * pc + j] += g[r * n + col + j];
                        }
                    }
                }
                col += pc;
            }
        }
        Op::MaskRows { base, replacement, mask } => {
            let d = base.cols();
            if base.requires_grad() {
                let gb = accum(grads, base);
                for (r, &masked) in mask.iter().enumerate() {
                    if !masked {
                        for j in 0..d {
                            gb[r * d + j] += g[r * d + j];
                        }
                    }
                }
            }
            if replacement.requires_grad() {
                let gr = accum(grads, replacement);
                for (r, &masked) in mask.iter().enumerate() {
                    if masked {
                        for j in 0..d {
                            gr[j] += g[r * d + j];
                        }
                    }
                }
            }
        }
        Op::SequenceEmbed { table, speech, items } => {
            let d = table.cols();
            if table.requires_grad() {
                let gt = accum(grads, table);
                for (i, item) in items.iter().enumerate() {
                    if let SeqItem::Tok(t) = item {
                        for j in 0..d {
                            gt[t * d + j] += g[i * d + j];
                        }
                    }
                }
            }
            if let Some(s) = speech {
                if s.requires_grad() {
                    let gs = accum(grads, s);
                    for (i, item) in items.iter().enumerate() {
                        if let SeqItem::Speech(idx) = item {
                            for j in 0..d {
                                gs[idx * d + j] += g[i * d + j];
                            }
                        }
                    }
                }
            }
        }
    }
}
