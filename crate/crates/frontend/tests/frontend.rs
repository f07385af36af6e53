//! Frame arithmetic, filterbank behavior against an independent oracle, and
//! stacking semantics.

use paralign_frontend::{
    mel_frame_count, mel_power, mel_spectrogram, stack_frames, MelFeatures, LOG_FLOOR, N_MELS,
};
use proptest::prelude::*;

#[test]
fn one_second_is_98_frames() {
    assert_eq!(mel_frame_count(16_000), 98);
}

#[test]
fn frame_count_examples() {
    assert_eq!(mel_frame_count(400), 1);
    assert_eq!(mel_frame_count(8_000), 48);
    assert_eq!(mel_frame_count(32_000), 198);
}

#[test]
#[should_panic(expected = "too short")]
fn short_waveform_panics() {
    let _ = mel_frame_count(399);
}

#[test]
fn digital_silence_hits_the_floor() {
    let mel = mel_spectrogram(&vec![0.0; 4_000]);
    for v in &mel.data {
        assert_eq!(*v, LOG_FLOOR.ln(), "silence must produce exactly ln(1e-10)");
    }
}

/// Independent filterbank oracle: recompute the 80 filter center
/// frequencies straight from the mel-scale definition and locate the one
/// nearest 440 Hz; the produced spectrogram must peak in that bin.
#[test]
fn pure_tone_peaks_in_oracle_bin() {
    let freq = 440.0;
    let n = 16_000;
    let wave: Vec<f64> = (0..n)
        .map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / 16_000.0).sin())
        .collect();
    let mel = mel_spectrogram(&wave);

    let mut mean = vec![0.0f64; N_MELS];
    for t in 0..mel.n_frames {
        for m in 0..N_MELS {
            mean[m] += mel.data[t * N_MELS + m];
        }
    }
    let argmax = mean
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;

    // Oracle: centers at equally spaced mel points between 0 and 8 kHz.
    let mel_of = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let hz_of = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let hi = mel_of(8_000.0);
    let centers: Vec<f64> = (1..=N_MELS)
        .map(|i| hz_of(hi * i as f64 / (N_MELS + 1) as f64))
        .collect();
    let oracle_bin = centers
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - freq).abs().partial_cmp(&(b.1 - freq).abs()).unwrap()
        })
        .unwrap()
        .0;

    assert_eq!(argmax, oracle_bin, "tone should peak at the oracle's nearest-center bin");
}

#[test]
fn doubling_amplitude_quadruples_prelog_energy() {
    let wave: Vec<f64> = (0..3_200)
        .map(|i| 0.25 * (2.0 * std::f64::consts::PI * 553.0 * i as f64 / 16_000.0).sin())
        .collect();
    let doubled: Vec<f64> = wave.iter().map(|v| v * 2.0).collect();
    let base = mel_power(&wave);
    let big = mel_power(&doubled);
    for (a, b) in base.data.iter().zip(big.data.iter()) {
        if *a > 1e-20 {
            let ratio = b / a;
            assert!(
                (ratio - 4.0).abs() < 1e-6,
                "pre-log energy should scale by 4, got {ratio}"
            );
        }
    }
}

#[test]
fn stacking_98_frames_gives_24_rows() {
    let mel = mel_spectrogram(&vec![0.01; 16_000]);
    assert_eq!(mel.n_frames, 98);
    let stacked = stack_frames(&mel);
    assert_eq!(stacked.n_rows, 24);
    assert_eq!(stacked.data.len(), 24 * 320);
}

#[test]
fn stacking_concatenates_in_order() {
    let mut data = vec![0.0; 4 * N_MELS];
    for (i, v) in data.iter_mut().enumerate() {
        *v = i as f64;
    }
    let mel = MelFeatures { n_frames: 4, data: data.clone() };
    let stacked = stack_frames(&mel);
    assert_eq!(stacked.n_rows, 1);
    assert_eq!(stacked.data, data, "single row must be frames 0..3 concatenated");
}

#[test]
fn stacking_drops_remainder() {
    let mut data = vec![0.0; 7 * N_MELS];
    for (i, v) in data.iter_mut().enumerate() {
        *v = (i % 97) as f64;
    }
    let mel = MelFeatures { n_frames: 7, data: data.clone() };
    let stacked = stack_frames(&mel);
    assert_eq!(stacked.n_rows, 1);
    assert_eq!(&stacked.data[..], &data[..4 * N_MELS], "frames 4..6 dropped");
}

#[test]
#[should_panic(expected = "at least 4 mel frames")]
fn stacking_under_four_frames_panics() {
    let mel = MelFeatures { n_frames: 3, data: vec![0.0; 3 * N_MELS] };
    let _ = stack_frames(&mel);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn frame_count_formula_holds(s in 400usize..64_000) {
        prop_assert_eq!(mel_frame_count(s), (s - 400) / 160 + 1);
        // Actually produce the features for a few of them to tie formula to output.
        if s % 7_919 == 0 {
            let mel = mel_spectrogram(&vec![0.001; s]);
            prop_assert_eq!(mel.n_frames, (s - 400) / 160 + 1);
        }
    }
}

#[test]
fn produced_frame_count_matches_formula_on_edges() {
    for s in [400usize, 401, 559, 560, 561, 16_000, 63_999, 64_000] {
        let mel = mel_spectrogram(&vec![0.001; s]);
        assert_eq!(mel.n_frames, (s - 400) / 160 + 1, "S = {s}");
    }
}
