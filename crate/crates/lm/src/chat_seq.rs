//! Chat-structured model inputs: ordered slots that are either discrete
//! token ids or continuous embedding rows, with role spans and the
//! response-target span the loss is restricted to.

use std::ops::Range;

use paralign_tensor::{SeqItem, Tensor};

use crate::vocab::{self, EncodeError};

/// One user-turn segment: literal text or a block of continuous embeddings
/// (one row per slot, width d_lm).
#[derive(Clone, Debug)]
pub enum Segment {
    Text(String),
    Speech(Tensor),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    System,
    User,
    Assistant,
}

/// A fully laid-out input sequence.
///
/// Layout: `[BOS] [SYSTEM sys]? [USER segments…] ([ASSISTANT target EOT] |
/// [ASSISTANT])`. Continuous slots reference rows of `speech` and occur only
/// inside the user span. When a target is present, `response_span` covers
/// exactly its characters plus the closing EOT.
#[derive(Clone, Debug)]
pub struct ChatSequence {
    pub items: Vec<SeqItem>,
    pub speech: Option<Tensor>,
    pub role_spans: Vec<(Role, Range<usize>)>,
    pub response_span: Option<Range<usize>>,
}

impl ChatSequence {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// True exactly on the response span.
    pub fn loss_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.items.len()];
        if let Some(span) = &self.response_span {
            for m in &mut mask[span.clone()] {
                *m = true;
            }
        }
        mask
    }

    /// Per-row next-token targets and mask for the cross-entropy loss: row
    /// `i` of the logits predicts the token at `i+1`, and only rows whose
    /// successor lies in the response span contribute.
    pub fn ce_targets(&self) -> (Vec<usize>, Vec<bool>) {
        let n = self.items.len();
        let loss_mask = self.loss_mask();
        let mut targets = vec![0usize; n];
        let mut mask = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if loss_mask[i + 1] {
                match self.items[i + 1] {
                    SeqItem::Tok(t) => {
                        targets[i] = t;
                        mask[i] = true;
                    }
                    SeqItem::Speech(_) => unreachable!("response spans are always discrete"),
                }
            }
        }
        (targets, mask)
    }
}

/// Lay out a chat sequence. Speech segments become continuous slots verbatim,
/// in the order given; at most one speech block may appear (its rows are the
/// `speech` tensor). Unencodable characters in any text yield an error.
pub fn apply_chat_template(
    system: Option<&str>,
    user: &[Segment],
    assistant: Option<&str>,
) -> Result<ChatSequence, EncodeError> {
    assert!(!user.is_empty(), "user segments must be non-empty");

    let mut items = vec![SeqItem::Tok(vocab::BOS)];
    let mut role_spans = Vec::new();
    let mut speech: Option<Tensor> = None;

    if let Some(sys) = system {
        let start = items.len();
        items.push(SeqItem::Tok(vocab::SYSTEM));
        for id in vocab::encode_text(sys)? {
            items.push(SeqItem::Tok(id));
        }
        role_spans.push((Role::System, start..items.len()));
    }

    let user_start = items.len();
    items.push(SeqItem::Tok(vocab::USER));
    for seg in user {
        match seg {
            Segment::Text(text) => {
                for id in vocab::encode_text(text)? {
                    items.push(SeqItem::Tok(id));
                }
            }
            Segment::Speech(rows) => {
                assert!(
                    speech.is_none(),
                    "at most one continuous speech block per sequence"
                );
                for r in 0..rows.rows() {
                    items.push(SeqItem::Speech(r));
                }
                speech = Some(rows.clone());
            }
        }
    }
    role_spans.push((Role::User, user_start..items.len()));

    let assistant_start = items.len();
    items.push(SeqItem::Tok(vocab::ASSISTANT));
    let response_span = match assistant {
        Some(target) => {
            let content_start = items.len();
            for id in vocab::encode_text(target)? {
                items.push(SeqItem::Tok(id));
            }
            items.push(SeqItem::Tok(vocab::EOT));
            Some(content_start..items.len())
        }
        None => None,
    };
    role_spans.push((Role::Assistant, assistant_start..items.len()));

    Ok(ChatSequence { items, speech, role_spans, response_span })
}
