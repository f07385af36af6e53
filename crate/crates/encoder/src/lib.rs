//! Trainable speech encoder: a small conformer trunk over stacked log-mel
//! features, an adapter that halves the frame rate and projects into the
//! chat model's embedding space, and a masked-prediction pretraining
//! objective against a frozen random-projection quantizer.

pub mod config;
pub mod model;
pub mod quantizer;

pub use config::EncoderConfig;
pub use model::{conv_out_len, token_count, SpeechEncoder, SpeechTokens, MODEL_KIND};
pub use quantizer::{
    bestrq_loss, masked_prediction_accuracy, sample_span_mask, Quantizer, CODE_DIM, N_CODES,
};
