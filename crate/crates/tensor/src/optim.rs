use std::collections::HashMap;
use std::sync::Arc;

use crate::{Gradients, Real, Tensor};

/// A named model weight. `trainable = false` marks the weight as frozen: it
/// never receives gradients (its tensor does not request them) and the
/// optimizer skips it even when a gradient buffer is present.
pub struct Parameter {
    pub name: String,
    pub tensor: Tensor,
    pub trainable: bool,
}

impl Parameter {
    pub fn new(name: impl Into<String>, rows: usize, cols: usize, data: Vec<Real>, trainable: bool) -> Parameter {
        Parameter {
            name: name.into(),
            tensor: Tensor::leaf(rows, cols, data, trainable),
            trainable,
        }
    }

    /// Flip the frozen/trainable state, rebuilding the leaf so gradient
    /// tracking matches. The backing data is shared, not copied.
    pub fn set_trainable(&mut self, trainable: bool) {
        if self.trainable != trainable {
            let data = self.tensor.data().to_vec();
            self.tensor = Tensor::leaf(self.tensor.rows(), self.tensor.cols(), data, trainable);
            self.trainable = trainable;
        }
    }

    /// Replace the weight values (e.g. after an optimizer step or a
    /// checkpoint load), keeping shape and gradient tracking.
    pub fn set_data(&mut self, data: Vec<Real>) {
        assert_eq!(
            data.len(),
            self.tensor.numel(),
            "parameter {}: replacement buffer length {} does not match shape {}x{}",
            self.name,
            data.len(),
            self.tensor.rows(),
            self.tensor.cols()
        );
        self.tensor = Tensor::leaf(self.tensor.rows(), self.tensor.cols(), data, self.trainable);
    }

    pub fn to_blob(&self) -> ParamBlob {
        ParamBlob {
            name: self.name.clone(),
            rows: self.tensor.rows(),
            cols: self.tensor.cols(),
            data: Arc::new(self.tensor.data().to_vec()),
            trainable: self.trainable,
        }
    }

    pub fn from_blob(blob: &ParamBlob) -> Parameter {
        Parameter::new(
            blob.name.clone(),
            blob.rows,
            blob.cols,
            blob.data.as_ref().clone(),
            blob.trainable,
        )
    }
}

/// Serialization-friendly view of a parameter: name, shape, values, and the
/// frozen/trainable flag. This is the unit checkpoints are built from.
#[derive(Clone, Debug)]
pub struct ParamBlob {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Arc<Vec<Real>>,
    pub trainable: bool,
}

/// Adam with bias correction. One instance per training run; slots are
/// allocated lazily per parameter name.
pub struct Adam {
    pub beta1: Real,
    pub beta2: Real,
    pub eps: Real,
    t: u64,
    slots: HashMap<String, (Vec<Real>, Vec<Real>)>,
}

impl Adam {
    pub fn new(beta1: Real, beta2: Real, eps: Real) -> Adam {
        Adam {
            beta1,
            beta2,
            eps,
            t: 0,
            slots: HashMap::new(),
        }
    }

    /// Conventional speech-model betas; eps defaults documented in-code.
    pub fn default_config() -> Adam {
        Adam::new(0.9, 0.98, 1e-8)
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Apply one update to every trainable parameter that received a
    /// gradient. Frozen parameters are skipped regardless of gradients.
    pub fn step(&mut self, params: &mut [Parameter], grads: &Gradients, lr: Real) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for p in params.iter_mut() {
            if !p.trainable {
                continue;
            }
            let Some(g) = grads.get(&p.tensor) else { continue };
            let n = p.tensor.numel();
            let (m, v) = self
                .slots
                .entry(p.name.clone())
                .or_insert_with(|| (vec![0.0; n], vec![0.0; n]));
            assert_eq!(
                m.len(),
                n,
                "optimizer state shape mismatch for parameter {}: state {} vs tensor {}",
                p.name,
                m.len(),
                n
            );
            let mut data = p.tensor.data().to_vec();
            for i in 0..n {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                data[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            p.set_data(data);
        }
    }
}

/// Learning rate at `step` (0-based) of `total`: linear ramp from zero,
/// reaching `peak` exactly at `step == warmup`, then cosine decay to
/// `floor_frac * peak` at `step == total`.
pub fn warmup_cosine(step: usize, total: usize, warmup: usize, peak: Real, floor_frac: Real) -> Real {
    assert!(total > 0, "schedule needs at least one step");
    assert!(warmup >= 1, "warmup needs at least one step");
    if step <= warmup {
        return peak * step as Real / warmup as Real;
    }
    let decay_span = total.saturating_sub(warmup).max(1);
    let progress = (step - warmup) as Real / decay_span as Real;
    let floor = peak * floor_frac;
    floor + 0.5 * (peak - floor) * (1.0 + (std::f64::consts::PI * progress.min(1.0)).cos())
}

/// Clip gradients to a maximum global norm, returning the pre-clip norm.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: Real) -> Real {
    let norm = grads.global_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale_all(max_norm / norm);
    }
    norm
}
