//! The decoder-only character-level chat model: a small pre-norm transformer
//! with rotary attention, trained once on the synthetic chat corpus and then
//! frozen for every alignment experiment.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use paralign_io::Checkpoint;
use paralign_tensor::optim::Parameter;
use paralign_tensor::{concat_cols, seed, sequence_embed, softmax_cross_entropy, Real, Tensor};

use crate::chat_seq::ChatSequence;
use crate::vocab::VOCAB_SIZE;

pub const LAYER_NORM_EPS: Real = 1e-5;
pub const ATTN_MASK_NEG: Real = -1e30;
pub const MODEL_KIND: &str = "chat-lm";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LMConfig {
    pub n_layers: usize,
    pub d_lm: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub context_len: usize,
    pub rotary_base: Real,
}

impl Default for LMConfig {
    fn default() -> Self {
        LMConfig { n_layers: 4, d_lm: 128, n_heads: 4, d_ff: 256, context_len: 512, rotary_base: 10_000.0 }
    }
}

pub struct ChatLM {
    pub config: LMConfig,
    params: Vec<Parameter>,
    index: HashMap<String, usize>,
}

/// Names of one attention/ffn block's parameters.
fn layer_param_shapes(cfg: &LMConfig, layer: usize) -> Vec<(String, usize, usize)> {
    let d = cfg.d_lm;
    let f = cfg.d_ff;
    vec![
        (format!("layer{layer}.attn_ln.gamma"), 1, d),
        (format!("layer{layer}.attn_ln.beta"), 1, d),
        (format!("layer{layer}.attn.wq"), d, d),
        (format!("layer{layer}.attn.wk"), d, d),
        (format!("layer{layer}.attn.wv"), d, d),
        (format!("layer{layer}.attn.wo"), d, d),
        (format!("layer{layer}.ffn_ln.gamma"), 1, d),
        (format!("layer{layer}.ffn_ln.beta"), 1, d),
        (format!("layer{layer}.ffn.w1"), d, f),
        (format!("layer{layer}.ffn.b1"), 1, f),
        (format!("layer{layer}.ffn.w2"), f, d),
        (format!("layer{layer}.ffn.b2"), 1, d),
    ]
}

fn all_param_shapes(cfg: &LMConfig) -> Vec<(String, usize, usize)> {
    let mut shapes = vec![("embed".to_string(), VOCAB_SIZE, cfg.d_lm)];
    for layer in 0..cfg.n_layers {
        shapes.extend(layer_param_shapes(cfg, layer));
    }
    shapes.push(("final_ln.gamma".to_string(), 1, cfg.d_lm));
    shapes.push(("final_ln.beta".to_string(), 1, cfg.d_lm));
    shapes.push(("unembed".to_string(), cfg.d_lm, VOCAB_SIZE));
    shapes
}

fn init_values(name: &str, rows: usize, cols: usize, master_seed: u64, idx: u64) -> Vec<Real> {
    if name.ends_with(".gamma") {
        vec![1.0; rows * cols]
    } else if name.ends_with(".beta") || name.ends_with(".b1") || name.ends_with(".b2") {
        vec![0.0; rows * cols]
    } else {
        let mut rng = seed::rng(seed::derive(master_seed, "lm-init", idx));
        seed::normal_vec(&mut rng, rows * cols, 0.02)
    }
}

impl ChatLM {
    pub fn new(config: LMConfig, master_seed: u64) -> ChatLM {
        assert_eq!(config.d_lm % config.n_heads, 0, "d_lm must divide evenly into heads");
        assert_eq!(
            (config.d_lm / config.n_heads) % 2,
            0,
            "head dimension must be even for rotary pairs"
        );
        let mut params = Vec::new();
        let mut index = HashMap::new();
        for (i, (name, rows, cols)) in all_param_shapes(&config).into_iter().enumerate() {
            let data = init_values(&name, rows, cols, master_seed, i as u64);
            index.insert(name.clone(), params.len());
            params.push(Parameter::new(name, rows, cols, data, true));
        }
        ChatLM { config, params, index }
    }

    pub fn p(&self, name: &str) -> &Tensor {
        let i = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name:?}"));
        &self.params[i].tensor
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Parameter] {
        &mut self.params
    }

    /// Freeze or unfreeze every parameter.
    pub fn set_all_trainable(&mut self, trainable: bool) {
        for p in &mut self.params {
            p.set_trainable(trainable);
        }
    }

    pub fn fingerprint(&self) -> String {
        let blobs: Vec<_> = self.params.iter().map(|p| p.to_blob()).collect();
        paralign_io::fingerprint(&blobs)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model_kind: MODEL_KIND.into(),
            config: serde_json::to_value(&self.config).expect("config serializes"),
            parents: BTreeMap::new(),
            params: self.params.iter().map(|p| p.to_blob()).collect(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> ChatLM {
        assert_eq!(ckpt.model_kind, MODEL_KIND, "checkpoint holds a {:?}, not a chat model", ckpt.model_kind);
        let config: LMConfig = serde_json::from_value(ckpt.config.clone()).expect("valid chat model config");
        let mut params = Vec::new();
        let mut index = HashMap::new();
        for (name, rows, cols) in all_param_shapes(&config) {
            let blob = ckpt
                .get(&name)
                .unwrap_or_else(|| panic!("checkpoint is missing parameter {name:?}"));
            assert_eq!((blob.rows, blob.cols), (rows, cols), "parameter {name:?} has the wrong shape");
            index.insert(name.clone(), params.len());
            params.push(Parameter::from_blob(blob));
        }
        ChatLM { config, params, index }
    }

    /// Hidden states after the final layer norm, one row per slot.
    fn hidden_states(&self, seq: &ChatSequence) -> Tensor {
        let len = seq.len();
        assert!(len > 0, "cannot run an empty sequence");
        assert!(
            len <= self.config.context_len,
            "sequence length {len} exceeds the context window {}",
            self.config.context_len
        );
        let positions: Vec<usize> = (0..len).collect();
        let mask = causal_mask(len);
        let mut x = sequence_embed(self.p("embed"), &seq.items, seq.speech.as_ref());
        for layer in 0..self.config.n_layers {
            x = self.block(&x, layer, &positions, &mask);
        }
        x.layer_norm(self.p("final_ln.gamma"), self.p("final_ln.beta"), LAYER_NORM_EPS)
    }

    /// Next-token logits, one row per slot.
    pub fn forward_logits(&self, seq: &ChatSequence) -> Tensor {
        self.hidden_states(seq).matmul(self.p("unembed"))
    }

    /// Response-masked cross-entropy: the sum over response-span predictions
    /// of -log p(target), plus how many predictions were counted.
    pub fn forward_loss(&self, seq: &ChatSequence) -> (Tensor, usize) {
        let logits = self.forward_logits(seq);
        let (targets, mask) = seq.ce_targets();
        let n_masked = mask.iter().filter(|m| **m).count();
        assert!(n_masked > 0, "sequence has no response span to train on");
        (softmax_cross_entropy(&logits, &targets, &mask), n_masked)
    }

    fn block(&self, x: &Tensor, layer: usize, positions: &[usize], mask: &Tensor) -> Tensor {
        let ln1 = x.layer_norm(
            self.p(&format!("layer{layer}.attn_ln.gamma")),
            self.p(&format!("layer{layer}.attn_ln.beta")),
            LAYER_NORM_EPS,
        );
        let attn = self.attention(&ln1, layer, positions, mask);
        let x = x.add(&attn);
        let ln2 = x.layer_norm(
            self.p(&format!("layer{layer}.ffn_ln.gamma")),
            self.p(&format!("layer{layer}.ffn_ln.beta")),
            LAYER_NORM_EPS,
        );
        let ffn = ln2
            .matmul(self.p(&format!("layer{layer}.ffn.w1")))
            .add_bias(self.p(&format!("layer{layer}.ffn.b1")))
            .silu()
            .matmul(self.p(&format!("layer{layer}.ffn.w2")))
            .add_bias(self.p(&format!("layer{layer}.ffn.b2")));
        x.add(&ffn)
    }

    /// Multi-head causal self-attention with per-head rotary positions.
    fn attention(&self, x_ln: &Tensor, layer: usize, positions: &[usize], mask: &Tensor) -> Tensor {
        let d = self.config.d_lm;
        let n_heads = self.config.n_heads;
        let hd = d / n_heads;
        let scale = 1.0 / (hd as Real).sqrt();
        let q = x_ln.matmul(self.p(&format!("layer{layer}.attn.wq")));
        let k = x_ln.matmul(self.p(&format!("layer{layer}.attn.wk")));
        let v = x_ln.matmul(self.p(&format!("layer{layer}.attn.wv")));
        let mut heads = Vec::with_capacity(n_heads);
        for h in 0..n_heads {
            let qh = q.col_slice(h * hd, hd).rotary_apply(positions, self.config.rotary_base);
            let kh = k.col_slice(h * hd, hd).rotary_apply(positions, self.config.rotary_base);
            let vh = v.col_slice(h * hd, hd);
            let scores = qh.matmul(&kh.transpose()).scale(scale).add(mask);
            heads.push(scores.softmax_rows().matmul(&vh));
        }
        concat_cols(&heads).matmul(self.p(&format!("layer{layer}.attn.wo")))
    }
}

/// Additive causal mask: row i may attend to columns 0..=i.
pub fn causal_mask(len: usize) -> Tensor {
    let mut data = vec![0.0; len * len];
    for i in 0..len {
        for j in i + 1..len {
            data[i * len + j] = ATTN_MASK_NEG;
        }
    }
    Tensor::from_vec(len, len, data)
}
