//! Independent acoustic feature extraction used to sanity-check the
//! synthesizer before any model training: a classifier on these four
//! features must already separate the 15 styles, otherwise no encoder could.
//!
//! Deliberately simple measurements that do not share code with the model
//! frontend: an averaged 2048-point power spectrum (centroid + band ratio)
//! and a 5 ms RMS envelope (modulation depth + on/off transition rate).

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use paralign_tensor::Real;

const SAMPLE_RATE: Real = 16_000.0;
const FFT_N: usize = 2048;
const ENV_FRAME: usize = 80; // 5 ms

/// (f0 centroid in kHz, amplitude-modulation depth, high-band noise ratio,
/// on/off transition rate proxy)
#[derive(Clone, Copy, Debug)]
pub struct OracleFeatures {
    pub f0_centroid: Real,
    pub am_depth: Real,
    pub noise_ratio: Real,
    pub rate_proxy: Real,
}

impl OracleFeatures {
    pub fn as_vec(&self) -> Vec<Real> {
        vec![self.f0_centroid, self.am_depth, self.noise_ratio, self.rate_proxy]
    }
}

fn percentile(sorted: &[Real], p: Real) -> Real {
    if sorted.is_empty() {
        return 0.0;
    }
    let idx = ((sorted.len() - 1) as Real * p).round() as usize;
    sorted[idx]
}

pub fn extract_features(waveform: &[Real]) -> OracleFeatures {
    // --- Averaged power spectrum over half-overlapping 2048-point frames.
    let mut planner = FftPlanner::<Real>::new();
    let fft = planner.plan_fft_forward(FFT_N);
    let n_bins = FFT_N / 2 + 1;
    let mut spectrum = vec![0.0; n_bins];
    let hop = FFT_N / 2;
    let mut n_frames = 0;
    let mut buf = vec![Complex::new(0.0, 0.0); FFT_N];
    let mut start = 0;
    while start + FFT_N <= waveform.len() {
        for i in 0..FFT_N {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as Real / FFT_N as Real).cos();
            buf[i] = Complex::new(waveform[start + i] * w, 0.0);
        }
        fft.process(&mut buf);
        for k in 0..n_bins {
            spectrum[k] += buf[k].norm_sqr();
        }
        n_frames += 1;
        start += hop;
    }
    if n_frames > 0 {
        for v in spectrum.iter_mut() {
            *v /= n_frames as Real;
        }
    }
    let bin_hz = SAMPLE_RATE / FFT_N as Real;
    let band = |lo: Real, hi: Real| -> (Real, Real, usize) {
        let mut power = 0.0;
        let mut weighted = 0.0;
        let mut count = 0;
        for (k, p) in spectrum.iter().enumerate() {
            let f = k as Real * bin_hz;
            if f >= lo && f <= hi {
                power += p;
                weighted += f * p;
                count += 1;
            }
        }
        (power, weighted, count)
    };
    let (tone_power, tone_weighted, tone_bins) = band(200.0, 6_500.0);
    let (noise_power, _, noise_bins) = band(6_800.0, 7_800.0);
    let f0_centroid = if tone_power > 0.0 {
        tone_weighted / tone_power / 1_000.0
    } else {
        0.0
    };
    let noise_ratio = (noise_power / noise_bins.max(1) as Real)
        / (tone_power / tone_bins.max(1) as Real + 1e-12);

    // --- RMS envelope at 5 ms resolution.
    let n_env = waveform.len() / ENV_FRAME;
    let mut env = Vec::with_capacity(n_env);
    for t in 0..n_env {
        let frame = &waveform[t * ENV_FRAME..(t + 1) * ENV_FRAME];
        let rms = (frame.iter().map(|v| v * v).sum::<Real>() / ENV_FRAME as Real).sqrt();
        env.push(rms);
    }
    let max_env = env.iter().cloned().fold(0.0 as Real, Real::max);
    let threshold = 0.25 * max_env;
    let active_mask: Vec<bool> = env.iter().map(|e| *e > threshold).collect();
    let mut active: Vec<Real> = env
        .iter()
        .zip(active_mask.iter())
        .filter(|(_, a)| **a)
        .map(|(e, _)| *e)
        .collect();
    active.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p90 = percentile(&active, 0.9);
    let p10 = percentile(&active, 0.1);
    let am_depth = if p90 + p10 > 0.0 { (p90 - p10) / (p90 + p10) } else { 0.0 };

    let transitions = active_mask.windows(2).filter(|w| w[0] != w[1]).count();
    let duration_s = waveform.len() as Real / SAMPLE_RATE;
    // Each character contributes two transitions at 12.5 chars/s base rate.
    let rate_proxy = transitions as Real / duration_s / 25.0;

    OracleFeatures { f0_centroid, am_depth, noise_ratio, rate_proxy }
}
