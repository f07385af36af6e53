//! Frozen random-projection quantizer for masked-prediction pretraining:
//! stacked features are projected to a low dimension by a fixed random
//! matrix and labeled with the nearest entry of a fixed random codebook
//! (both unit-normalized, so nearest-by-distance equals nearest-by-angle).
//! Neither the projection nor the codebook ever receives gradients.

use paralign_frontend::StackedFeatures;
use paralign_tensor::{seed, softmax_cross_entropy, Real, Tensor};
use rand::Rng;

use crate::model::SpeechEncoder;

pub const N_CODES: usize = 64;
pub const CODE_DIM: usize = 16;

pub struct Quantizer {
    pub seed: u64,
    /// `320 x 16` fixed projection.
    pub proj: Tensor,
    /// `64 x 16` fixed codebook, rows unit-normalized.
    pub codebook: Tensor,
}

fn normalize_rows(rows: usize, cols: usize, data: &mut [Real]) {
    for r in 0..rows {
        let row = &mut data[r * cols..(r + 1) * cols];
        let norm = row.iter().map(|v| v * v).sum::<Real>().sqrt();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
}

impl Quantizer {
    pub fn new(master_seed: u64) -> Quantizer {
        let width = StackedFeatures::WIDTH;
        let mut rng = seed::rng(seed::derive(master_seed, "bestrq-proj", 0));
        let proj_data = seed::normal_vec(&mut rng, width * CODE_DIM, 1.0 / (width as Real).sqrt());
        let mut rng = seed::rng(seed::derive(master_seed, "bestrq-codebook", 0));
        let mut code_data = seed::normal_vec(&mut rng, N_CODES * CODE_DIM, 1.0);
        normalize_rows(N_CODES, CODE_DIM, &mut code_data);
        Quantizer {
            seed: master_seed,
            proj: Tensor::from_vec(width, CODE_DIM, proj_data),
            codebook: Tensor::from_vec(N_CODES, CODE_DIM, code_data),
        }
    }

    /// Code index for one stacked-feature row.
    pub fn label_row(&self, row: &[Real]) -> usize {
        let width = StackedFeatures::WIDTH;
        assert_eq!(row.len(), width);
        let p = self.proj.data();
        let mut v = [0.0; CODE_DIM];
        for (i, &x) in row.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, vj) in v.iter_mut().enumerate() {
                *vj += x * p[i * CODE_DIM + j];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<Real>().sqrt();
        if norm > 0.0 {
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
        let codes = self.codebook.data();
        let mut best = 0;
        let mut best_d = Real::INFINITY;
        for c in 0..N_CODES {
            let code = &codes[c * CODE_DIM..(c + 1) * CODE_DIM];
            let d: Real = v.iter().zip(code.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }

    /// Code labels for every stacked frame of an utterance.
    pub fn labels(&self, features: &StackedFeatures) -> Vec<usize> {
        let width = StackedFeatures::WIDTH;
        (0..features.n_rows)
            .map(|r| self.label_row(&features.data[r * width..(r + 1) * width]))
            .collect()
    }
}

/// Random contiguous spans of `span` frames until at least `frac` of the
/// `n` frames are masked. Always masks at least one frame.
pub fn sample_span_mask(n: usize, span: usize, frac: Real, rng: &mut impl Rng) -> Vec<bool> {
    assert!(n >= 1, "cannot mask an empty sequence");
    assert!(span >= 1);
    assert!((0.0..=1.0).contains(&frac));
    let target = ((frac * n as Real).ceil() as usize).max(1);
    let mut mask = vec![false; n];
    let mut covered = 0usize;
    while covered < target {
        let start = rng.gen_range(0..n);
        for m in mask.iter_mut().skip(start).take(span) {
            if !*m {
                *m = true;
                covered += 1;
            }
        }
    }
    mask
}

/// Masked-prediction loss: replace masked rows with the learned mask
/// embedding, run the trunk, and score the prediction head against the
/// quantizer labels of the clean features at exactly the masked positions.
/// Returns the summed cross-entropy and the number of masked frames.
pub fn bestrq_loss(
    encoder: &SpeechEncoder,
    quantizer: &Quantizer,
    features: &StackedFeatures,
    mask: &[bool],
) -> (Tensor, usize) {
    let n_masked = mask.iter().filter(|&&m| m).count();
    assert!(n_masked > 0, "mask selects no frames");
    assert_eq!(mask.len(), features.n_rows);

    let labels = quantizer.labels(features);
    let clean = Tensor::from_vec(features.n_rows, StackedFeatures::WIDTH, features.data.clone());
    let masked = paralign_tensor::mask_rows(&clean, encoder.p("mask_embed"), mask);
    let logits = encoder.bestrq_logits(&masked);
    let loss = softmax_cross_entropy(&logits, &labels, mask);
    (loss, n_masked)
}

/// Fraction of masked frames whose head prediction matches the quantizer
/// label (diagnostic for pretraining progress).
pub fn masked_prediction_accuracy(
    encoder: &SpeechEncoder,
    quantizer: &Quantizer,
    features: &StackedFeatures,
    mask: &[bool],
) -> Real {
    let n_masked = mask.iter().filter(|&&m| m).count();
    assert!(n_masked > 0, "mask selects no frames");
    let labels = quantizer.labels(features);
    let clean = Tensor::from_vec(features.n_rows, StackedFeatures::WIDTH, features.data.clone());
    let masked = paralign_tensor::mask_rows(&clean, encoder.p("mask_embed"), mask);
    let logits = encoder.bestrq_logits(&masked);
    let mut correct = 0usize;
    for (r, (&is_masked, &label)) in mask.iter().zip(labels.iter()).enumerate() {
        if !is_masked {
            continue;
        }
        let row = logits.row(r);
        let mut best = 0;
        for (j, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = j;
            }
        }
        if best == label {
            correct += 1;
        }
    }
    correct as Real / n_masked as Real
}
