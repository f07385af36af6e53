//! Synthetic expressive speech corpus and chat text corpus.
//!
//! Everything here is deterministic under a master seed: transcripts come
//! from a small template grammar, audio from a character-coded tone
//! synthesizer shaped by a fixed 15-style signature table, and chat text
//! from style-keyed response templates. Corpus materialization fans out
//! across utterances; each derives its own child seed, so parallel and
//! serial runs agree byte-for-byte.

pub mod chat;
pub mod grammar;
pub mod manifest;
pub mod oracle;
pub mod styles;
pub mod synth;
pub mod wav;

pub use chat::ChatPair;
pub use manifest::{CorpusConfig, CorpusError, Split, Utterance};
pub use styles::{StyleLabel, StyleSignature, ALL_STYLES, N_STYLES, SIGNATURES};
