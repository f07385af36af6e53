//! Checkpoint container: a fingerprinted set of named parameter blobs plus a
//! small JSON header, written as one self-verifying binary file.
//!
//! Layout: `b"PALN"` magic, little-endian u32 header length, header JSON,
//! then the body — every parameter in ascending name order as
//! `u32 name_len | name | u32 rows | u32 cols | rows*cols f64 LE`. The
//! fingerprint is the SHA-256 of the body bytes, so it covers names, shapes,
//! and values; loading recomputes and verifies it before returning anything.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use paralign_tensor::optim::ParamBlob;
use paralign_tensor::Real;

pub const MAGIC: &[u8; 4] = b"PALN";
pub const FORMAT_VERSION: u32 = 1;

/// A complete model snapshot: what kind of model, how it was configured,
/// which parent models it depends on (by fingerprint), and its parameters.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model_kind: String,
    pub config: serde_json::Value,
    /// Upstream models this one was built against, e.g. the frozen text
    /// model an aligner was trained to target: role name → fingerprint.
    pub parents: BTreeMap<String, String>,
    pub params: Vec<ParamBlob>,
}

#[derive(Debug)]
pub enum CkptError {
    Io(std::io::Error),
    /// Structural problems: bad magic, unsupported version, header issues,
    /// duplicate names, or a body shorter than its declarations.
    Format(String),
    /// The body hash does not match the header fingerprint.
    FingerprintMismatch { expected: String, actual: String },
}

impl std::fmt::Display for CkptError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CkptError::Io(e) => write!(f, "checkpoint io error: {e}"),
            CkptError::Format(msg) => write!(f, "checkpoint format error: {msg}"),
            CkptError::FingerprintMismatch { expected, actual } => write!(
                f,
                "checkpoint fingerprint mismatch: header says {expected}, body hashes to {actual}"
            ),
        }
    }
}

impl std::error::Error for CkptError {}

impl From<std::io::Error> for CkptError {
    fn from(e: std::io::Error) -> Self {
        CkptError::Io(e)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    model_kind: String,
    config: serde_json::Value,
    fingerprint: String,
    parents: BTreeMap<String, String>,
    /// Declared body layout, in body order (ascending parameter name).
    params: Vec<ParamEntry>,
}

#[derive(Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    rows: usize,
    cols: usize,
    trainable: bool,
}

/// Canonical body serialization: parameters sorted by name, each as
/// name/shape/raw values. Panics on duplicate parameter names.
fn body_bytes(params: &[ParamBlob]) -> Vec<u8> {
    let mut sorted: Vec<&ParamBlob> = params.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    for w in sorted.windows(2) {
        assert!(
            w[0].name != w[1].name,
            "duplicate parameter name {:?} in checkpoint",
            w[0].name
        );
    }
    let mut out = Vec::new();
    for p in sorted {
        assert_eq!(
            p.data.len(),
            p.rows * p.cols,
            "parameter {:?} declares {}x{} but holds {} values",
            p.name,
            p.rows,
            p.cols,
            p.data.len()
        );
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&(p.rows as u32).to_le_bytes());
        out.extend_from_slice(&(p.cols as u32).to_le_bytes());
        for v in p.data.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// 256-bit content hash of a parameter set (names, shapes, and values).
/// Identical parameters always hash identically, independent of input order.
pub fn fingerprint(params: &[ParamBlob]) -> String {
    sha256_hex(&body_bytes(params))
}

impl Checkpoint {
    pub fn fingerprint(&self) -> String {
        fingerprint(&self.params)
    }

    pub fn get(&self, name: &str) -> Option<&ParamBlob> {
        self.params.iter().find(|p| p.name == name)
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), CkptError> {
    let body = body_bytes(&ckpt.params);
    let mut sorted: Vec<&ParamBlob> = ckpt.params.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let header = Header {
        format_version: FORMAT_VERSION,
        model_kind: ckpt.model_kind.clone(),
        config: ckpt.config.clone(),
        fingerprint: sha256_hex(&body),
        parents: ckpt.parents.clone(),
        params: sorted
            .iter()
            .map(|p| ParamEntry { name: p.name.clone(), rows: p.rows, cols: p.cols, trainable: p.trainable })
            .collect(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| CkptError::Format(format!("header serialization failed: {e}")))?;

    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    // Write to a sibling temp file and rename so readers never see a
    // half-written checkpoint.
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        f.write_all(MAGIC)?;
        f.write_all(&(header_json.len() as u32).to_le_bytes())?;
        f.write_all(&header_json)?;
        f.write_all(&body)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CkptError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 8 || &bytes[0..4] != MAGIC {
        return Err(CkptError::Format(format!(
            "{} is not a checkpoint file (bad magic)",
            path.display()
        )));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() < 8 + header_len {
        return Err(CkptError::Format("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[8..8 + header_len])
        .map_err(|e| CkptError::Format(format!("bad header JSON: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(CkptError::Format(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    let body = &bytes[8 + header_len..];
    let actual = sha256_hex(body);
    if actual != header.fingerprint {
        return Err(CkptError::FingerprintMismatch { expected: header.fingerprint, actual });
    }

    // The hash matched, so the body is exactly what was written; decode it
    // against the declared layout.
    let mut params = Vec::with_capacity(header.params.len());
    let mut pos = 0usize;
    for entry in &header.params {
        let fail = |what: &str| CkptError::Format(format!("body/header disagreement at {:?}: {what}", entry.name));
        if pos + 4 > body.len() {
            return Err(fail("missing name length"));
        }
        let name_len = u32::from_le_bytes(body[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if pos + name_len > body.len() {
            return Err(fail("missing name"));
        }
        let name = std::str::from_utf8(&body[pos..pos + name_len])
            .map_err(|_| fail("name is not UTF-8"))?
            .to_string();
        pos += name_len;
        if name != entry.name {
            return Err(fail("name order differs from header"));
        }
        if pos + 8 > body.len() {
            return Err(fail("missing shape"));
        }
        let rows = u32::from_le_bytes(body[pos..pos + 4].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(body[pos + 4..pos + 8].try_into().unwrap()) as usize;
        pos += 8;
        if rows != entry.rows || cols != entry.cols {
            return Err(fail("shape differs from header"));
        }
        let n_bytes = rows * cols * 8;
        if pos + n_bytes > body.len() {
            return Err(fail("missing values"));
        }
        let data: Vec<Real> = body[pos..pos + n_bytes]
            .chunks_exact(8)
            .map(|c| Real::from_le_bytes(c.try_into().unwrap()))
            .collect();
        pos += n_bytes;
        params.push(ParamBlob { name, rows, cols, data: Arc::new(data), trainable: entry.trainable });
    }
    if pos != body.len() {
        return Err(CkptError::Format(format!(
            "{} trailing bytes after the declared parameters",
            body.len() - pos
        )));
    }
    Ok(Checkpoint {
        model_kind: header.model_kind,
        config: header.config,
        parents: header.parents,
        params,
    })
}
