//! Waveform → log-mel features → stacked frames.
//!
//! Fixed frontend contract: 16 kHz mono input, 25 ms periodic Hann window,
//! 10 ms shift, 512-point FFT, 80 triangular mel filters spanning 0–8 kHz,
//! natural-log compression with floor 1e-10. Four consecutive mel frames are
//! concatenated into one 320-wide row (trailing remainder dropped) before
//! the encoder consumes them.
//!
//! Mel scale is the 2595·log10(1 + f/700) variant; no edge padding anywhere,
//! so frame and token counts follow pure floor arithmetic that the rest of
//! the system (and its tests) can reproduce exactly.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use paralign_tensor::Real;

pub const SAMPLE_RATE: usize = 16_000;
pub const WINDOW: usize = 400; // 25 ms
pub const HOP: usize = 160; // 10 ms
pub const N_FFT: usize = 512;
pub const N_MELS: usize = 80;
pub const FMIN: Real = 0.0;
pub const FMAX: Real = 8_000.0;
pub const LOG_FLOOR: Real = 1e-10;
pub const STACK: usize = 4;

/// Log-mel energies, row-major `n_frames x 80`.
pub struct MelFeatures {
    pub n_frames: usize,
    pub data: Vec<Real>,
}

/// Stacked features, row-major `n_rows x 320`; row i is mel frames
/// `4i..4i+3` concatenated.
pub struct StackedFeatures {
    pub n_rows: usize,
    pub data: Vec<Real>,
}

impl StackedFeatures {
    pub const WIDTH: usize = N_MELS * STACK;
}

/// Number of mel frames for a waveform length, in samples.
pub fn mel_frame_count(n_samples: usize) -> usize {
    assert!(
        n_samples >= WINDOW,
        "waveform too short for one analysis window: {n_samples} samples < {WINDOW}"
    );
    (n_samples - WINDOW) / HOP + 1
}

fn hann_window() -> Vec<Real> {
    (0..WINDOW)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as Real / WINDOW as Real).cos())
        .collect()
}

fn mel_of_hz(f: Real) -> Real {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn hz_of_mel(m: Real) -> Real {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filterbank as a dense `N_MELS x (N_FFT/2 + 1)` weight matrix.
fn filterbank() -> Vec<Real> {
    let n_bins = N_FFT / 2 + 1;
    let mel_lo = mel_of_hz(FMIN);
    let mel_hi = mel_of_hz(FMAX);
    let edges: Vec<Real> = (0..N_MELS + 2)
        .map(|i| hz_of_mel(mel_lo + (mel_hi - mel_lo) * i as Real / (N_MELS + 1) as Real))
        .collect();
    let mut weights = vec![0.0; N_MELS * n_bins];
    for m in 0..N_MELS {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..n_bins {
            let f = k as Real * SAMPLE_RATE as Real / N_FFT as Real;
            let w = if f <= lo || f >= hi {
                0.0
            } else if f <= center {
                (f - lo) / (center - lo)
            } else {
                (hi - f) / (hi - center)
            };
            weights[m * n_bins + k] = w;
        }
    }
    weights
}

/// Pre-log mel energies (linear in signal power): `n_frames x 80`.
/// Exposed so the energy-linearity property is checkable before compression.
pub fn mel_power(waveform: &[Real]) -> MelFeatures {
    let n_frames = mel_frame_count(waveform.len());
    let window = hann_window();
    let weights = filterbank();
    let n_bins = N_FFT / 2 + 1;
    let mut planner = FftPlanner::<Real>::new();
    let fft = planner.plan_fft_forward(N_FFT);
    let mut data = vec![0.0; n_frames * N_MELS];
    let mut buf = vec![Complex::new(0.0, 0.0); N_FFT];
    let mut power = vec![0.0; n_bins];
    for t in 0..n_frames {
        let frame = &waveform[t * HOP..t * HOP + WINDOW];
        for i in 0..N_FFT {
            buf[i] = if i < WINDOW {
                Complex::new(frame[i] * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (k, p) in power.iter_mut().enumerate() {
            *p = buf[k].norm_sqr();
        }
        let out_row = &mut data[t * N_MELS..(t + 1) * N_MELS];
        for m in 0..N_MELS {
            let w_row = &weights[m * n_bins..(m + 1) * n_bins];
            out_row[m] = w_row
                .iter()
                .zip(power.iter())
                .map(|(w, p)| w * p)
                .sum::<Real>();
        }
    }
    MelFeatures { n_frames, data }
}

/// Log-mel features with floor `1e-10`; every value is ≥ ln(1e-10).
pub fn mel_spectrogram(waveform: &[Real]) -> MelFeatures {
    let mut mel = mel_power(waveform);
    for v in mel.data.iter_mut() {
        *v = v.max(LOG_FLOOR).ln();
    }
    mel
}

/// Concatenate groups of four consecutive mel frames; the remainder
/// (`n_frames mod 4`) is dropped.
pub fn stack_frames(mel: &MelFeatures) -> StackedFeatures {
    assert!(
        mel.n_frames >= STACK,
        "need at least {STACK} mel frames to stack, got {}",
        mel.n_frames
    );
    let n_rows = mel.n_frames / STACK;
    let width = N_MELS * STACK;
    let mut data = vec![0.0; n_rows * width];
    for r in 0..n_rows {
        data[r * width..(r + 1) * width]
            .copy_from_slice(&mel.data[r * STACK * N_MELS..(r * STACK + STACK) * N_MELS]);
    }
    StackedFeatures { n_rows, data }
}
