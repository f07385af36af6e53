use paralign_tensor::Real;
use serde::{Deserialize, Serialize};

/// Architecture of the trainable speech encoder: a small Conformer trunk
/// followed by an adapter (strided convolution, one rotary attention layer,
/// linear projection into the chat model's embedding space).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub n_blocks: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    /// Depthwise kernel width inside each conformer convolution module.
    pub conv_kernel: usize,
    /// Adapter convolution: kernel / stride / padding over the time axis.
    pub adapter_kernel: usize,
    pub adapter_stride: usize,
    pub adapter_padding: usize,
    /// Output width; must equal the chat model's embedding width.
    pub d_lm: usize,
    pub rotary_base: Real,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            n_blocks: 2,
            d_model: 128,
            n_heads: 4,
            d_ff: 256,
            conv_kernel: 7,
            adapter_kernel: 3,
            adapter_stride: 2,
            adapter_padding: 1,
            d_lm: 128,
            rotary_base: 10_000.0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) {
        assert!(self.n_blocks >= 1, "encoder needs at least one block");
        assert_eq!(self.d_model % self.n_heads, 0, "d_model must divide evenly into heads");
        assert_eq!(
            (self.d_model / self.n_heads) % 2,
            0,
            "head dimension must be even for rotary pairs"
        );
        assert!(self.adapter_stride >= 1 && self.adapter_kernel >= 1);
    }
}
