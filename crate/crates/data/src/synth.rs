//! Character-coded expressive audio synthesis.
//!
//! Each character becomes a sinusoid at `500 + 30·index` Hz voiced for 60 ms
//! followed by 20 ms of rest, with both intervals scaled down by the style's
//! speaking-rate multiplier. The style signature then shapes the whole
//! utterance: pitch scale, vibrato (frequency modulation), slow amplitude
//! modulation, and a broadband noise floor. Speaker timbre is a fixed
//! per-speaker mix of the 2nd and 3rd harmonics.

use paralign_tensor::{seed, Real};
use rand::Rng;

use crate::grammar::char_tone_index;
use crate::styles::StyleLabel;

pub const SAMPLE_RATE: usize = 16_000;
/// Per-character time budget before rate scaling: 60 ms tone + 20 ms rest.
const CHAR_ON_S: Real = 0.060;
const CHAR_SLOT_S: Real = 0.080;
const BASE_AMPLITUDE: Real = 0.30;
const AM_RATE_HZ: Real = 5.3;
const VIBRATO_INDEX: Real = 4.0;
const EDGE_RAMP_S: Real = 0.002;

/// Fixed per-speaker harmonic mix (the "timbre filter").
pub fn speaker_timbre(speaker_id: usize) -> (Real, Real) {
    let h = seed::derive(0x7157, "speaker-timbre", speaker_id as u64);
    let u1 = (h & 0xFFFF) as Real / 65535.0;
    let u2 = ((h >> 16) & 0xFFFF) as Real / 65535.0;
    (0.2 + 0.3 * u1, 0.1 + 0.2 * u2)
}

/// Synthesize one utterance. Deterministic in all arguments. Empty
/// transcripts yield 0.5 s of near-silence.
pub fn synth_audio(transcript: &str, style: StyleLabel, speaker_id: usize, rng_seed: u64) -> Vec<Real> {
    let sig = style.signature();
    let mut rng = seed::rng(seed::derive(rng_seed, "synth-noise", speaker_id as u64));

    if transcript.is_empty() {
        let n = SAMPLE_RATE / 2;
        return (0..n).map(|_| rng.gen_range(-1e-4..1e-4)).collect();
    }

    let (h2, h3) = speaker_timbre(speaker_id);
    let harmonic_norm = 1.0 + h2 + h3;
    let slot = (CHAR_SLOT_S * SAMPLE_RATE as Real / sig.rate_multiplier).round() as usize;
    let on = (CHAR_ON_S * SAMPLE_RATE as Real / sig.rate_multiplier).round() as usize;
    let ramp = (EDGE_RAMP_S * SAMPLE_RATE as Real).round() as usize;
    let total = slot * transcript.chars().count();
    let mut wave = vec![0.0; total];

    for (ci, c) in transcript.chars().enumerate() {
        let tone_idx = char_tone_index(c).unwrap_or_else(|| {
            panic!("character {c:?} outside the synthesis alphabet (a-z and space)")
        });
        let freq = (500.0 + 30.0 * tone_idx as Real) * sig.f0_multiplier;
        let start = ci * slot;
        for i in 0..on {
            let t_global = (start + i) as Real / SAMPLE_RATE as Real;
            let t_tone = i as Real / SAMPLE_RATE as Real;
            let mut phase = 2.0 * std::f64::consts::PI * freq * t_tone;
            if sig.vibrato_rate > 0.0 {
                phase += VIBRATO_INDEX
                    * (2.0 * std::f64::consts::PI * sig.vibrato_rate * t_global).sin();
            }
            let carrier =
                (phase.sin() + h2 * (2.0 * phase).sin() + h3 * (3.0 * phase).sin()) / harmonic_norm;
            let am = 1.0
                - sig.amplitude_mod_depth
                    * 0.5
                    * (1.0 + (2.0 * std::f64::consts::PI * AM_RATE_HZ * t_global).sin());
            let edge = ((i + 1) as Real / ramp as Real)
                .min((on - i) as Real / ramp as Real)
                .min(1.0);
            wave[start + i] = BASE_AMPLITUDE * am * edge * carrier;
        }
    }

    // Broadband noise floor over the whole utterance (rests included).
    if sig.noise_level > 0.0 {
        for v in wave.iter_mut() {
            *v += sig.noise_level * rng.gen_range(-1.0..1.0);
        }
    }

    let peak = wave.iter().fold(0.0 as Real, |m, v| m.max(v.abs()));
    assert!(peak <= 1.0, "synthesized peak amplitude {peak} exceeds 1.0");
    wave
}

/// Duration in seconds the synthesizer will produce for a transcript.
pub fn synth_duration_s(transcript: &str, style: StyleLabel) -> Real {
    if transcript.is_empty() {
        return 0.5;
    }
    let sig = style.signature();
    let slot = (CHAR_SLOT_S * SAMPLE_RATE as Real / sig.rate_multiplier).round() as usize;
    (slot * transcript.chars().count()) as Real / SAMPLE_RATE as Real
}
