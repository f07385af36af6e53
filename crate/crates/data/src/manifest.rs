//! Corpus planning and materialization: split arithmetic, held-out-speaker
//! assignment, transcript-matched multi-style groups, JSONL manifest, and
//! parallel WAV synthesis.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use paralign_tensor::{fanout, seed, Real};
use serde::{Deserialize, Serialize};

use crate::grammar::gen_transcript;
use crate::styles::{StyleLabel, ALL_STYLES, N_STYLES};
use crate::synth::{synth_audio, synth_duration_s};
use crate::wav;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// One manifest row. `audio_path` is relative to the corpus directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub transcript: String,
    pub style: StyleLabel,
    pub speaker_id: usize,
    pub split: Split,
    pub audio_path: String,
    pub duration_s: Real,
}

#[derive(Clone, Debug)]
pub struct CorpusConfig {
    pub n_utterances: usize,
    pub fractions: [Real; 3],
    pub n_speakers: usize,
    pub master_seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        // 5000 train / 500 val / 500 test.
        CorpusConfig {
            n_utterances: 6000,
            fractions: [5.0 / 6.0, 1.0 / 12.0, 1.0 / 12.0],
            n_speakers: 8,
            master_seed: 0,
        }
    }
}

#[derive(Debug)]
pub enum CorpusError {
    Config(String),
    Io(io::Error),
}

impl std::fmt::Display for CorpusError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CorpusError::Config(msg) => write!(f, "corpus configuration error: {msg}"),
            CorpusError::Io(e) => write!(f, "corpus io error: {e}"),
        }
    }
}

impl std::error::Error for CorpusError {}

impl From<io::Error> for CorpusError {
    fn from(e: io::Error) -> Self {
        CorpusError::Io(e)
    }
}

/// Split sizes: round the first two fractions, give the remainder to test.
pub fn split_counts(n: usize, fractions: [Real; 3]) -> Result<[usize; 3], CorpusError> {
    let sum: Real = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(CorpusError::Config(format!(
            "split fractions must sum to 1, got {sum}"
        )));
    }
    if fractions.iter().any(|f| *f < 0.0) {
        return Err(CorpusError::Config("split fractions must be non-negative".into()));
    }
    let n_train = (n as Real * fractions[0]).round() as usize;
    let n_val = (n as Real * fractions[1]).round() as usize;
    if n_train + n_val > n {
        return Err(CorpusError::Config(format!(
            "train+val rounding exceeded total: {n_train}+{n_val} > {n}"
        )));
    }
    Ok([n_train, n_val, n - n_train - n_val])
}

/// Speaker pools: the last quarter (at least one) of the speaker ids is
/// reserved for the test split, disjoint from train/val.
pub fn speaker_pools(n_speakers: usize) -> Result<(Vec<usize>, Vec<usize>), CorpusError> {
    if n_speakers < 4 {
        return Err(CorpusError::Config(format!(
            "insufficient speakers for a held-out test pool: need at least 4, got {n_speakers}"
        )));
    }
    let n_test = (n_speakers / 4).max(1);
    let trainval: Vec<usize> = (0..n_speakers - n_test).collect();
    let test: Vec<usize> = (n_speakers - n_test..n_speakers).collect();
    Ok((trainval, test))
}

/// Deterministic corpus plan. Utterances come in transcript-matched groups:
/// one fresh transcript voiced in all 15 styles by one speaker, plus a
/// remainder of single utterances so split sizes are met exactly.
pub fn plan_corpus(cfg: &CorpusConfig) -> Result<Vec<Utterance>, CorpusError> {
    let counts = split_counts(cfg.n_utterances, cfg.fractions)?;
    let (trainval_pool, test_pool) = speaker_pools(cfg.n_speakers)?;
    let mut seen: HashSet<String> = HashSet::new();
    let mut next_transcript_idx: u64 = 0;
    let mut fresh_transcript = |seen: &mut HashSet<String>| -> String {
        loop {
            let t = gen_transcript(seed::derive(cfg.master_seed, "corpus-transcript", next_transcript_idx));
            next_transcript_idx += 1;
            if seen.insert(t.clone()) {
                return t;
            }
        }
    };

    let mut rows = Vec::with_capacity(cfg.n_utterances);
    let mut decision_idx: u64 = 0;
    for (split, &count) in [Split::Train, Split::Val, Split::Test].iter().zip(counts.iter()) {
        let pool = if *split == Split::Test { &test_pool } else { &trainval_pool };
        let n_groups = count / N_STYLES;
        let n_singles = count % N_STYLES;
        let mut utt_idx = 0usize;
        let push = |rows: &mut Vec<Utterance>, transcript: String, style: StyleLabel, speaker_id: usize, utt_idx: &mut usize| {
            let id = format!("utt-{}-{:05}", split.name(), *utt_idx);
            *utt_idx += 1;
            rows.push(Utterance {
                audio_path: format!("audio/{id}.wav"),
                duration_s: synth_duration_s(&transcript, style),
                id,
                transcript,
                style,
                speaker_id,
                split: *split,
            });
        };
        for _ in 0..n_groups {
            let transcript = fresh_transcript(&mut seen);
            let speaker = pool[(seed::derive(cfg.master_seed, "corpus-speaker", decision_idx) % pool.len() as u64) as usize];
            decision_idx += 1;
            for style in ALL_STYLES {
                push(&mut rows, transcript.clone(), style, speaker, &mut utt_idx);
            }
        }
        for _ in 0..n_singles {
            let transcript = fresh_transcript(&mut seen);
            let speaker = pool[(seed::derive(cfg.master_seed, "corpus-speaker", decision_idx) % pool.len() as u64) as usize];
            let style = ALL_STYLES[(seed::derive(cfg.master_seed, "corpus-style", decision_idx) % N_STYLES as u64) as usize];
            decision_idx += 1;
            push(&mut rows, transcript, style, speaker, &mut utt_idx);
        }
    }
    Ok(rows)
}

/// Synthesis seed for one utterance, derived from its id so parallel and
/// serial materialization agree bitwise.
pub fn utterance_synth_seed(master_seed: u64, id: &str) -> u64 {
    seed::derive(master_seed, "synth-utt", seed::text_hash(id))
}

pub fn synthesize_utterance(cfg_seed: u64, utt: &Utterance) -> Vec<Real> {
    synth_audio(
        &utt.transcript,
        utt.style,
        utt.speaker_id,
        utterance_synth_seed(cfg_seed, &utt.id),
    )
}

/// Plan, synthesize (fanning out across utterances), and write the corpus:
/// `<out_dir>/manifest.jsonl` plus one WAV per utterance under
/// `<out_dir>/audio/`.
pub fn build_corpus(cfg: &CorpusConfig, out_dir: &Path, fanout_n: usize) -> Result<Vec<Utterance>, CorpusError> {
    let rows = plan_corpus(cfg)?;
    fs::create_dir_all(out_dir.join("audio"))?;
    let results = fanout::par_map(fanout_n, rows.len(), |i| {
        let utt = &rows[i];
        let wave = synthesize_utterance(cfg.master_seed, utt);
        wav::write_wav(&out_dir.join(&utt.audio_path), &wave).map(|_| wave.len())
    });
    for r in results {
        r?;
    }
    write_manifest(&out_dir.join("manifest.jsonl"), &rows)?;
    Ok(rows)
}

pub fn write_manifest(path: &Path, rows: &[Utterance]) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut f, row)?;
        f.write_all(b"\n")?;
    }
    f.flush()
}

pub fn load_manifest(path: &Path) -> io::Result<Vec<Utterance>> {
    let f = io::BufReader::new(fs::File::open(path)?);
    let mut rows = Vec::new();
    for line in f.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("bad manifest row: {e}"))
        })?);
    }
    Ok(rows)
}

/// Absolute audio path for a manifest row loaded from `corpus_dir`.
pub fn audio_path(corpus_dir: &Path, utt: &Utterance) -> PathBuf {
    corpus_dir.join(&utt.audio_path)
}
