//! Character-level vocabulary: 95 printable ASCII characters plus newline
//! (ids 0..=95), then six structural specials. Total 102 ids.

pub const VOCAB_SIZE: usize = 102;

/// First id after the text characters.
const N_TEXT: usize = 96;

pub const BOS: usize = 96;
pub const EOT: usize = 97;
pub const USER: usize = 98;
pub const ASSISTANT: usize = 99;
pub const SYSTEM: usize = 100;
pub const PAD: usize = 101;

/// Id for a text character, if it is encodable.
pub fn char_id(c: char) -> Option<usize> {
    match c {
        ' '..='~' => Some(c as usize - 32),
        '\n' => Some(95),
        _ => None,
    }
}

/// Character for a text id. Panics on special ids — those have no character
/// rendering and must be handled structurally.
pub fn id_char(id: usize) -> char {
    assert!(id < N_TEXT, "id {id} is a structural special, not a character");
    if id == 95 {
        '\n'
    } else {
        (id + 32) as u8 as char
    }
}

pub fn is_special(id: usize) -> bool {
    (N_TEXT..VOCAB_SIZE).contains(&id)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeError {
    pub character: char,
    pub position: usize,
}

impl std::fmt::Display for EncodeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "character {:?} at position {} is not encodable (printable ASCII and newline only)",
            self.character, self.position
        )
    }
}

impl std::error::Error for EncodeError {}

/// Encode text to character ids; fails on the first unencodable character.
pub fn encode_text(text: &str) -> Result<Vec<usize>, EncodeError> {
    text.chars()
        .enumerate()
        .map(|(position, character)| char_id(character).ok_or(EncodeError { character, position }))
        .collect()
}

/// Decode character ids back to text. Panics on special ids.
pub fn decode_text(ids: &[usize]) -> String {
    ids.iter().map(|&id| id_char(id)).collect()
}
