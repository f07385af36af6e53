use paralign_encoder::{conv_out_len, token_count, EncoderConfig, SpeechEncoder};
use paralign_tensor::seed;
use rand::Rng;

/// Independent restatement of the whole chain: 25 ms window / 10 ms hop
/// framing, stack-of-four, then a kernel-3 stride-2 padding-1 convolution.
fn oracle(n_samples: usize) -> usize {
    assert!(n_samples >= 400);
    let frames = (n_samples - 400) / 160 + 1;
    let stacked = frames / 4;
    if stacked == 0 {
        return 0;
    }
    // Count output positions of the strided window directly.
    let padded = stacked + 2;
    let mut t = 0;
    let mut start = 0;
    while start + 3 <= padded {
        t += 1;
        start += 2;
    }
    t
}

#[test]
fn hand_cases_hold() {
    assert_eq!(token_count(16_000), 12); // 1.0 s: 98 frames -> 24 stacked -> 12
    assert_eq!(token_count(8_000), 6); // 0.5 s: 48 frames -> 12 stacked -> 6
    assert_eq!(token_count(32_000), 25); // 2.0 s: 198 frames -> 49 stacked -> 25
    assert_eq!(token_count(1_040), 1); // minimal: 5 frames -> 1 stacked -> 1
    assert_eq!(token_count(1_000), 0); // 4 frames -> 1 stacked? no: 4 frames -> 1 stacked
}

#[test]
fn matches_the_oracle_over_a_sweep() {
    let mut rng = seed::rng(4);
    for _ in 0..500 {
        let n = rng.gen_range(400..80_000);
        assert_eq!(token_count(n), oracle(n), "n_samples = {n}");
    }
    for n in 400..3_000 {
        assert_eq!(token_count(n), oracle(n), "n_samples = {n}");
    }
}

#[test]
fn conv_out_len_counts_valid_windows() {
    let mut rng = seed::rng(5);
    for _ in 0..200 {
        let l = rng.gen_range(1..50usize);
        let k = rng.gen_range(1..8usize);
        let s = rng.gen_range(1..4usize);
        let p = rng.gen_range(0..k); // keep l + 2p >= k reachable
        if l + 2 * p < k {
            continue;
        }
        let mut count = 0;
        let mut start = 0;
        while start + k <= l + 2 * p {
            count += 1;
            start += s;
        }
        assert_eq!(conv_out_len(l, k, s, p), count, "L={l} K={k} S={s} P={p}");
    }
}

#[test]
fn encode_respects_token_count_for_synthetic_audio() {
    let enc = SpeechEncoder::new(EncoderConfig::default(), 6);
    for n in [8_000usize, 12_345, 16_000, 23_017, 32_000, 50_000] {
        let wav: Vec<f64> = (0..n).map(|i| (i as f64 * 0.05).sin() * 0.3).collect();
        let out = enc.encode_waveform(&wav);
        assert_eq!(out.tokens.rows(), token_count(n), "n_samples = {n}");
        assert_eq!(out.tokens.cols(), 128);
    }
}
