//! Minimal 16-bit PCM mono WAV writing/reading at 16 kHz. Hand-rolled so the
//! byte layout is fully deterministic.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use paralign_tensor::Real;

pub const SAMPLE_RATE: u32 = 16_000;

fn quantize(v: Real) -> i16 {
    (v.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

/// Serialize samples (in [-1, 1]) to RIFF/WAVE bytes.
pub fn wav_bytes(samples: &[Real]) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes()); // fmt chunk size
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&(SAMPLE_RATE * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&quantize(*s).to_le_bytes());
    }
    out
}

pub fn write_wav(path: &Path, samples: &[Real]) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&wav_bytes(samples))
}

/// Read a 16 kHz mono 16-bit PCM WAV produced by [`write_wav`].
pub fn read_wav(path: &Path) -> io::Result<Vec<Real>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_wav(&bytes).map_err(|msg| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {msg}", path.display())))
}

pub fn parse_wav(bytes: &[u8]) -> Result<Vec<Real>, String> {
    if bytes.len() < 44 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err("not a RIFF/WAVE file".into());
    }
    // Walk chunks to find fmt and data.
    let mut pos = 12;
    let mut data: Option<&[u8]> = None;
    let mut ok_fmt = false;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_end = pos + 8 + size;
        if body_end > bytes.len() {
            return Err(format!(
                "truncated chunk {:?}: declares {size} bytes but only {} remain",
                String::from_utf8_lossy(id),
                bytes.len() - pos - 8
            ));
        }
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err("fmt chunk too short".into());
                }
                let format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                if format != 1 || channels != 1 || rate != SAMPLE_RATE || bits != 16 {
                    return Err(format!(
                        "expected 16 kHz mono 16-bit PCM, got format={format} channels={channels} rate={rate} bits={bits}"
                    ));
                }
                ok_fmt = true;
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_end + (size & 1); // chunks are 2-byte aligned
    }
    if !ok_fmt {
        return Err("missing fmt chunk".into());
    }
    let data = data.ok_or("missing data chunk")?;
    Ok(data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as Real / 32767.0)
        .collect())
}
