//! Incremental (KV-cached) inference over frozen parameters, plus greedy
//! generation. The step computation mirrors the graph-building forward pass
//! operation for operation — same kernels, same accumulation order — so its
//! logits are bitwise identical to [`ChatLM::forward_logits`]; a test pins
//! that equivalence.

use paralign_tensor::{matvec, rotary_angle, sigmoid_scalar, Real, SeqItem, Tensor};

use crate::chat_seq::ChatSequence;
use crate::model::{ChatLM, LAYER_NORM_EPS};
use crate::vocab;

struct LayerCache {
    /// Rotated keys, one row per processed position.
    k: Vec<Real>,
    v: Vec<Real>,
}

/// Streaming forward state over a frozen model.
pub struct Decoder<'a> {
    lm: &'a ChatLM,
    caches: Vec<LayerCache>,
    pos: usize,
}

fn ln_row(x: &[Real], gamma: &[Real], beta: &[Real], out: &mut [Real]) {
    let d = x.len();
    let mean = x.iter().sum::<Real>() / d as Real;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<Real>() / d as Real;
    let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    for j in 0..d {
        out[j] = (x[j] - mean) * inv * gamma[j] + beta[j];
    }
}

fn rotate_row(row: &mut [Real], pos: usize, n_heads: usize, base: Real) {
    let hd = row.len() / n_heads;
    let half = hd / 2;
    for h in 0..n_heads {
        let head = &mut row[h * hd..(h + 1) * hd];
        for i in 0..half {
            let theta = rotary_angle(pos, i, half, base);
            let (sin, cos) = theta.sin_cos();
            let a = head[2 * i];
            let b = head[2 * i + 1];
            head[2 * i] = a * cos - b * sin;
            head[2 * i + 1] = a * sin + b * cos;
        }
    }
}

impl<'a> Decoder<'a> {
    pub fn new(lm: &'a ChatLM) -> Decoder<'a> {
        let caches = (0..lm.config.n_layers)
            .map(|_| LayerCache { k: Vec::new(), v: Vec::new() })
            .collect();
        Decoder { lm, caches, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    /// Feed one slot's input embedding; returns the next-token logits row.
    pub fn step(&mut self, embedding: &[Real]) -> Vec<Real> {
        let cfg = &self.lm.config;
        let d = cfg.d_lm;
        assert_eq!(embedding.len(), d, "embedding width {} != d_lm {d}", embedding.len());
        assert!(
            self.pos < cfg.context_len,
            "sequence length {} exceeds the context window {}",
            self.pos + 1,
            cfg.context_len
        );
        let n_heads = cfg.n_heads;
        let hd = d / n_heads;
        let scale = 1.0 / (hd as Real).sqrt();

        let mut x = embedding.to_vec();
        let mut ln = vec![0.0; d];
        for layer in 0..cfg.n_layers {
            let pfx = format!("layer{layer}");
            ln_row(
                &x,
                self.lm.p(&format!("{pfx}.attn_ln.gamma")).data(),
                self.lm.p(&format!("{pfx}.attn_ln.beta")).data(),
                &mut ln,
            );
            let mut q = vec![0.0; d];
            let mut k = vec![0.0; d];
            let mut v = vec![0.0; d];
            matvec(&ln, self.lm.p(&format!("{pfx}.attn.wq")).data(), d, &mut q);
            matvec(&ln, self.lm.p(&format!("{pfx}.attn.wk")).data(), d, &mut k);
            matvec(&ln, self.lm.p(&format!("{pfx}.attn.wv")).data(), d, &mut v);
            rotate_row(&mut q, self.pos, n_heads, cfg.rotary_base);
            rotate_row(&mut k, self.pos, n_heads, cfg.rotary_base);

            let cache = &mut self.caches[layer];
            cache.k.extend_from_slice(&k);
            cache.v.extend_from_slice(&v);
            let n_ctx = self.pos + 1;

            // Per-head attention over the cache.
            let mut ctx = vec![0.0; d];
            for h in 0..n_heads {
                let qh = &q[h * hd..(h + 1) * hd];
                // Scores in context order, matching the masked-softmax row.
                let mut scores = Vec::with_capacity(n_ctx);
                for j in 0..n_ctx {
                    let kh = &cache.k[j * d + h * hd..j * d + h * hd + hd];
                    let mut acc = 0.0;
                    for (p, &qv) in qh.iter().enumerate() {
                        if qv == 0.0 {
                            continue;
                        }
                        acc += qv * kh[p];
                    }
                    scores.push(acc * scale);
                }
                let max = scores.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
                let mut sum = 0.0;
                for s in scores.iter_mut() {
                    *s = (*s - max).exp();
                    sum += *s;
                }
                let inv = 1.0 / sum;
                for s in scores.iter_mut() {
                    *s *= inv;
                }
                let out_h = &mut ctx[h * hd..(h + 1) * hd];
                for (j, &p) in scores.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let vh = &cache.v[j * d + h * hd..j * d + h * hd + hd];
                    for (o, &vv) in out_h.iter_mut().zip(vh.iter()) {
                        *o += p * vv;
                    }
                }
            }
            let mut attn = vec![0.0; d];
            matvec(&ctx, self.lm.p(&format!("{pfx}.attn.wo")).data(), d, &mut attn);
            for (xi, ai) in x.iter_mut().zip(attn.iter()) {
                *xi += ai;
            }

            ln_row(
                &x,
                self.lm.p(&format!("{pfx}.ffn_ln.gamma")).data(),
                self.lm.p(&format!("{pfx}.ffn_ln.beta")).data(),
                &mut ln,
            );
            let f = cfg.d_ff;
            let mut h1 = vec![0.0; f];
            matvec(&ln, self.lm.p(&format!("{pfx}.ffn.w1")).data(), f, &mut h1);
            let b1 = self.lm.p(&format!("{pfx}.ffn.b1")).data();
            for (hv, &bv) in h1.iter_mut().zip(b1.iter()) {
                *hv += bv;
                *hv *= sigmoid_scalar(*hv);
            }
            let mut h2 = vec![0.0; d];
            matvec(&h1, self.lm.p(&format!("{pfx}.ffn.w2")).data(), d, &mut h2);
            let b2 = self.lm.p(&format!("{pfx}.ffn.b2")).data();
            for ((xi, hv), &bv) in x.iter_mut().zip(h2.iter()).zip(b2.iter()) {
                *xi += hv + bv;
            }
        }

        ln_row(
            &x,
            self.lm.p("final_ln.gamma").data(),
            self.lm.p("final_ln.beta").data(),
            &mut ln,
        );
        let v_size = self.lm.p("unembed").cols();
        let mut logits = vec![0.0; v_size];
        matvec(&ln, self.lm.p("unembed").data(), v_size, &mut logits);
        self.pos += 1;
        logits
    }

    /// Feed a discrete token.
    pub fn step_token(&mut self, id: usize) -> Vec<Real> {
        let d = self.lm.config.d_lm;
        let row = self.lm.p("embed").data()[id * d..(id + 1) * d].to_vec();
        self.step(&row)
    }

    /// Feed an entire laid-out prompt; returns the logits after its last slot.
    pub fn prefill(&mut self, seq: &ChatSequence) -> Vec<Real> {
        assert!(!seq.is_empty(), "cannot prefill an empty sequence");
        let mut last = Vec::new();
        for item in &seq.items {
            last = match *item {
                SeqItem::Tok(id) => self.step_token(id),
                SeqItem::Speech(r) => {
                    let speech: &Tensor =
                        seq.speech.as_ref().expect("sequence with speech slots carries rows");
                    let d = speech.cols();
                    let row = speech.data()[r * d..(r + 1) * d].to_vec();
                    self.step(&row)
                }
            };
        }
        last
    }
}

fn argmax(row: &[Real]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

impl ChatLM {
    /// Greedy decoding from a prompt that ends at an assistant-start
    /// position: argmax continuation until EOT (or any structural token),
    /// `max_len` characters, or the context window ends.
    pub fn generate_greedy(&self, prompt: &ChatSequence, max_len: usize) -> String {
        assert!(
            matches!(prompt.items.last(), Some(SeqItem::Tok(id)) if *id == vocab::ASSISTANT),
            "generation prompt must end at an assistant-start position"
        );
        let mut decoder = Decoder::new(self);
        let mut logits = decoder.prefill(prompt);
        let mut out = String::new();
        while out.len() < max_len && decoder.position() < self.config.context_len {
            let next = argmax(&logits);
            if vocab::is_special(next) {
                break;
            }
            out.push(vocab::id_char(next));
            if out.len() >= max_len || decoder.position() >= self.config.context_len {
                break;
            }
            logits = decoder.step_token(next);
        }
        out
    }
}
