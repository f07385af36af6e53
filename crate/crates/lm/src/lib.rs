//! A small frozen character-level chat model.
//!
//! The model is a decoder-only transformer over a 102-entry vocabulary
//! (printable ASCII, newline, and six control tokens). Chat turns are laid
//! out by [`chat_seq::apply_chat_template`]; user turns may embed a block of
//! continuous vectors in place of characters, which is how speech reaches the
//! model. After one-time pretraining ([`pretrain::pretrain_toy_lm`]) the
//! weights are frozen and the model serves as a fixed judge: training signal
//! for other components flows through it, never into it.

pub mod chat_seq;
pub mod decode;
pub mod model;
pub mod pretrain;
pub mod template;
pub mod vocab;

pub use chat_seq::{apply_chat_template, ChatSequence, Role, Segment};
pub use decode::Decoder;
pub use model::{causal_mask, ChatLM, LMConfig, MODEL_KIND};
pub use pretrain::{
    assemble_pretrain_pairs, encode_pair, held_out_transcripts, next_token_accuracy,
    pretrain_toy_lm, train_on_seqs, PretrainConfig, PretrainMix, PretrainReport, StepLog,
};
pub use template::{SYSTEM_PROMPT_EMOTION, SYSTEM_PROMPT_PLAIN};
pub use vocab::{
    char_id, decode_text, encode_text, id_char, is_special, EncodeError, ASSISTANT, BOS, EOT, PAD,
    SYSTEM, USER, VOCAB_SIZE,
};
