use std::collections::{BTreeMap, HashMap};

use paralign_frontend::{mel_frame_count, mel_spectrogram, stack_frames, StackedFeatures, STACK};
use paralign_io::Checkpoint;
use paralign_tensor::optim::Parameter;
use paralign_tensor::{seed, Real, Tensor};

use crate::config::EncoderConfig;

pub const LAYER_NORM_EPS: Real = 1e-5;
pub const MODEL_KIND: &str = "speech-encoder";

/// Continuous speech tokens plus the per-layer trunk activations (input
/// projection and each conformer block output) kept for layer-wise probes
/// and the cascade classifier.
pub struct SpeechTokens {
    /// `T x d_lm`, one token per 80 ms.
    pub tokens: Tensor,
    /// Frame-rate activations: input projection output, then one entry per
    /// conformer block, all `T' x d_model`.
    pub layer_activations: Vec<Tensor>,
}

/// Speech tokens produced from `n_samples` of 16 kHz audio by the default
/// feature chain: 10 ms mel hop, stack-of-4, then the adapter's
/// kernel-3 / stride-2 / padding-1 convolution over time.
pub fn token_count(n_samples: usize) -> usize {
    let frames = mel_frame_count(n_samples);
    let stacked = frames / STACK;
    if stacked == 0 {
        return 0;
    }
    (stacked + 2 - 3) / 2 + 1
}

/// Output length of a 1-D convolution over `len` steps.
pub fn conv_out_len(len: usize, kernel: usize, stride: usize, padding: usize) -> usize {
    (len + 2 * padding - kernel) / stride + 1
}

fn layer_param_shapes(cfg: &EncoderConfig, block: usize) -> Vec<(String, usize, usize)> {
    let d = cfg.d_model;
    let f = cfg.d_ff;
    let mut shapes = Vec::new();
    for ff in ["ff1", "ff2"] {
        shapes.push((format!("block{block}.{ff}_ln.gamma"), 1, d));
        shapes.push((format!("block{block}.{ff}_ln.beta"), 1, d));
        shapes.push((format!("block{block}.{ff}.w1"), d, f));
        shapes.push((format!("block{block}.{ff}.b1"), 1, f));
        shapes.push((format!("block{block}.{ff}.w2"), f, d));
        shapes.push((format!("block{block}.{ff}.b2"), 1, d));
    }
    shapes.push((format!("block{block}.attn_ln.gamma"), 1, d));
    shapes.push((format!("block{block}.attn_ln.beta"), 1, d));
    for w in ["wq", "wk", "wv", "wo"] {
        shapes.push((format!("block{block}.attn.{w}"), d, d));
    }
    shapes.push((format!("block{block}.conv_ln.gamma"), 1, d));
    shapes.push((format!("block{block}.conv_ln.beta"), 1, d));
    shapes.push((format!("block{block}.conv.w_in"), d, 2 * d));
    shapes.push((format!("block{block}.conv.b_in"), 1, 2 * d));
    shapes.push((format!("block{block}.conv.dw"), cfg.conv_kernel, d));
    shapes.push((format!("block{block}.conv.dw_b"), 1, d));
    shapes.push((format!("block{block}.conv.mid_ln.gamma"), 1, d));
    shapes.push((format!("block{block}.conv.mid_ln.beta"), 1, d));
    shapes.push((format!("block{block}.conv.w_out"), d, d));
    shapes.push((format!("block{block}.conv.b_out"), 1, d));
    shapes.push((format!("block{block}.final_ln.gamma"), 1, d));
    shapes.push((format!("block{block}.final_ln.beta"), 1, d));
    shapes
}

fn all_param_shapes(cfg: &EncoderConfig) -> Vec<(String, usize, usize)> {
    let d = cfg.d_model;
    let width = StackedFeatures::WIDTH;
    let mut shapes = vec![
        ("input_proj.w".to_string(), width, d),
        ("input_proj.b".to_string(), 1, d),
        ("mask_embed".to_string(), 1, width),
    ];
    for block in 0..cfg.n_blocks {
        shapes.extend(layer_param_shapes(cfg, block));
    }
    shapes.push(("adapter.conv.k".to_string(), cfg.adapter_kernel * d, d));
    shapes.push(("adapter.conv.b".to_string(), 1, d));
    shapes.push(("adapter.attn_ln.gamma".to_string(), 1, d));
    shapes.push(("adapter.attn_ln.beta".to_string(), 1, d));
    for w in ["wq", "wk", "wv", "wo"] {
        shapes.push((format!("adapter.attn.{w}"), d, d));
    }
    shapes.push(("adapter.ffn_ln.gamma".to_string(), 1, d));
    shapes.push(("adapter.ffn_ln.beta".to_string(), 1, d));
    shapes.push(("adapter.ffn.w1".to_string(), d, cfg.d_ff));
    shapes.push(("adapter.ffn.b1".to_string(), 1, cfg.d_ff));
    shapes.push(("adapter.ffn.w2".to_string(), cfg.d_ff, d));
    shapes.push(("adapter.ffn.b2".to_string(), 1, d));
    shapes.push(("adapter.out.w".to_string(), d, cfg.d_lm));
    shapes.push(("adapter.out.b".to_string(), 1, cfg.d_lm));
    shapes.push(("bestrq.head.w".to_string(), d, crate::quantizer::N_CODES));
    shapes.push(("bestrq.head.b".to_string(), 1, crate::quantizer::N_CODES));
    shapes
}

fn init_values(name: &str, rows: usize, cols: usize, master_seed: u64, idx: u64) -> Vec<Real> {
    if name.ends_with(".gamma") {
        vec![1.0; rows * cols]
    } else if name.ends_with(".beta")
        || name.ends_with(".b")
        || name.ends_with(".b1")
        || name.ends_with(".b2")
        || name.ends_with(".b_in")
        || name.ends_with(".b_out")
        || name.ends_with(".dw_b")
    {
        vec![0.0; rows * cols]
    } else {
        let mut rng = seed::rng(seed::derive(master_seed, "encoder-init", idx));
        seed::normal_vec(&mut rng, rows * cols, 0.02)
    }
}

pub struct SpeechEncoder {
    pub config: EncoderConfig,
    params: Vec<Parameter>,
    index: HashMap<String, usize>,
}

impl SpeechEncoder {
    pub fn new(config: EncoderConfig, master_seed: u64) -> SpeechEncoder {
        config.validate();
        let mut params = Vec::new();
        let mut index = HashMap::new();
        for (i, (name, rows, cols)) in all_param_shapes(&config).into_iter().enumerate() {
            let data = init_values(&name, rows, cols, master_seed, i as u64);
            index.insert(name.clone(), params.len());
            params.push(Parameter::new(name, rows, cols, data, true));
        }
        SpeechEncoder { config, params, index }
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

    pub fn from_checkpoint(ckpt: &Checkpoint) -> SpeechEncoder {
        assert_eq!(
            ckpt.model_kind, MODEL_KIND,
            "checkpoint holds a {:?}, not a speech encoder",
            ckpt.model_kind
        );
        let config: EncoderConfig =
            serde_json::from_value(ckpt.config.clone()).expect("valid encoder config");
        config.validate();
        let mut params = Vec::new();
        let mut index = HashMap::new();
        for (name, rows, cols) in all_param_shapes(&config) {
            let blob = ckpt
                .get(&name)
                .unwrap_or_else(|| panic!("checkpoint is missing parameter {name:?}"));
            assert_eq!(
                (blob.rows, blob.cols),
                (rows, cols),
                "parameter {name:?} has the wrong shape"
            );
            index.insert(name.clone(), params.len());
            params.push(Parameter::from_blob(blob));
        }
        SpeechEncoder { config, params, index }
    }

    fn ln(&self, x: &Tensor, prefix: &str) -> Tensor {
        x.layer_norm(
            self.p(&format!("{prefix}.gamma")),
            self.p(&format!("{prefix}.beta")),
            LAYER_NORM_EPS,
        )
    }

    fn feed_forward(&self, x: &Tensor, prefix: &str) -> Tensor {
        let h = x
            .matmul(self.p(&format!("{prefix}.w1")))
            .add_bias(self.p(&format!("{prefix}.b1")))
            .silu();
        h.matmul(self.p(&format!("{prefix}.w2"))).add_bias(self.p(&format!("{prefix}.b2")))
    }

    /// Bidirectional rotary multi-head attention over `x` (already normed).
    fn attention(&self, x: &Tensor, prefix: &str) -> Tensor {
        let d = self.config.d_model;
        let n_heads = self.config.n_heads;
        let hd = d / n_heads;
        let scale = 1.0 / (hd as Real).sqrt();
        let positions: Vec<usize> = (0..x.rows()).collect();

        let q = x.matmul(self.p(&format!("{prefix}.wq")));
        let k = x.matmul(self.p(&format!("{prefix}.wk")));
        let v = x.matmul(self.p(&format!("{prefix}.wv")));
        let mut heads = Vec::with_capacity(n_heads);
        for h in 0..n_heads {
            let qh = q.col_slice(h * hd, hd).rotary_apply(&positions, self.config.rotary_base);
            let kh = k.col_slice(h * hd, hd).rotary_apply(&positions, self.config.rotary_base);
            let vh = v.col_slice(h * hd, hd);
            let scores = qh.matmul(&kh.transpose()).scale(scale).softmax_rows();
            heads.push(scores.matmul(&vh));
        }
        paralign_tensor::concat_cols(&heads).matmul(self.p(&format!("{prefix}.wo")))
    }

    /// One conformer block: half-step feed-forward, attention, convolution
    /// module (gated pointwise, depthwise, norm, pointwise), half-step
    /// feed-forward, closing norm.
    fn conformer_block(&self, x: &Tensor, block: usize) -> Tensor {
        let d = self.config.d_model;
        let b = format!("block{block}");

        let h = self.feed_forward(&self.ln(x, &format!("{b}.ff1_ln")), &format!("{b}.ff1"));
        let x = x.add(&h.scale(0.5));

        let h = self.attention(&self.ln(&x, &format!("{b}.attn_ln")), &format!("{b}.attn"));
        let x = x.add(&h);

        let g = self
            .ln(&x, &format!("{b}.conv_ln"))
            .matmul(self.p(&format!("{b}.conv.w_in")))
            .add_bias(self.p(&format!("{b}.conv.b_in")));
        let gated = g.col_slice(0, d).mul_elem(&g.col_slice(d, d).sigmoid());
        let pad = self.config.conv_kernel / 2;
        let g = gated.depthwise_conv1d(
            self.p(&format!("{b}.conv.dw")),
            Some(self.p(&format!("{b}.conv.dw_b"))),
            pad,
        );
        let g = self
            .ln(&g, &format!("{b}.conv.mid_ln"))
            .silu()
            .matmul(self.p(&format!("{b}.conv.w_out")))
            .add_bias(self.p(&format!("{b}.conv.b_out")));
        let x = x.add(&g);

        let h = self.feed_forward(&self.ln(&x, &format!("{b}.ff2_ln")), &format!("{b}.ff2"));
        let x = x.add(&h.scale(0.5));

        self.ln(&x, &format!("{b}.final_ln"))
    }

    /// Frame-rate trunk: input projection plus the conformer blocks. Returns
    /// the final hidden states and every layer activation (input projection
    /// included).
    pub fn trunk(&self, features: &Tensor) -> (Tensor, Vec<Tensor>) {
        assert!(features.rows() >= 1, "audio too short: no stacked frames to encode");
        assert_eq!(
            features.cols(),
            StackedFeatures::WIDTH,
            "expected {}-dim stacked features, got {}",
            StackedFeatures::WIDTH,
            features.cols()
        );
        let mut x = features.matmul(self.p("input_proj.w")).add_bias(self.p("input_proj.b"));
        let mut acts = vec![x.clone()];
        for block in 0..self.config.n_blocks {
            x = self.conformer_block(&x, block);
            acts.push(x.clone());
        }
        (x, acts)
    }

    /// Adapter: stride-2 convolution over time, one rotary transformer
    /// layer, then the linear map into the chat model's embedding space.
    fn adapter(&self, x: &Tensor) -> Tensor {
        let cfg = &self.config;
        let y = x.conv1d(
            self.p("adapter.conv.k"),
            Some(self.p("adapter.conv.b")),
            cfg.adapter_kernel,
            cfg.adapter_stride,
            cfg.adapter_padding,
        );
        let h = self.attention(&self.ln(&y, "adapter.attn_ln"), "adapter.attn");
        let y = y.add(&h);
        let h = self.feed_forward(&self.ln(&y, "adapter.ffn_ln"), "adapter.ffn");
        let y = y.add(&h);
        y.matmul(self.p("adapter.out.w")).add_bias(self.p("adapter.out.b"))
    }

    /// Full encode from a stacked-feature tensor (kept differentiable, so
    /// masked inputs can flow straight through).
    pub fn encode_tensor(&self, features: &Tensor) -> SpeechTokens {
        let (x, layer_activations) = self.trunk(features);
        let tokens = self.adapter(&x);
        let expect = conv_out_len(
            features.rows(),
            self.config.adapter_kernel,
            self.config.adapter_stride,
            self.config.adapter_padding,
        );
        assert_eq!(tokens.rows(), expect, "adapter produced an unexpected token count");
        SpeechTokens { tokens, layer_activations }
    }

    pub fn encode(&self, features: &StackedFeatures) -> SpeechTokens {
        assert!(features.n_rows >= 1, "audio too short: no stacked frames to encode");
        let t = Tensor::from_vec(features.n_rows, StackedFeatures::WIDTH, features.data.clone());
        self.encode_tensor(&t)
    }

    pub fn encode_waveform(&self, waveform: &[Real]) -> SpeechTokens {
        let mel = mel_spectrogram(waveform);
        assert!(
            mel.n_frames >= STACK,
            "audio too short: {} mel frames cannot fill one stacked frame",
            mel.n_frames
        );
        self.encode(&stack_frames(&mel))
    }

    /// Logits of the masked-prediction head over the trunk output.
    pub fn bestrq_logits(&self, masked_features: &Tensor) -> Tensor {
        let (x, _) = self.trunk(masked_features);
        x.matmul(self.p("bestrq.head.w")).add_bias(self.p("bestrq.head.b"))
    }
}
