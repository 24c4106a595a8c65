//! Maximum-likelihood training of micro models with finite-difference
//! gradients and Adam.

mod batchnorm;
mod dataset;
mod fd;

pub use dataset::{Segment, ToyDataset, ToyVariant, ENERGY_DIM, LOG_F0_DIM};
pub use fd::{fd_gradient, PARAMETER_CAP};

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use batchnorm::TrainModel;
use crate::error::{invalid, Error, Result};
use crate::likelihood::{log_likelihood, Prior};
use crate::model::{FlowConfig, ModelWeights};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub segment_len: usize,
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate once per epoch.
    pub decay_per_epoch: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Relative central-difference step.
    pub fd_step: f64,
    /// Weight kept by the running normalisation statistics per step.
    pub bn_momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            batch_size: 8,
            segment_len: 512,
            learning_rate: 1e-3,
            decay_per_epoch: (-5e-3f64).exp(),
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            fd_step: 1e-3,
            bn_momentum: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.learning_rate,
            self.decay_per_epoch,
            self.epsilon,
            self.fd_step,
        ];
        if self.batch_size == 0 || self.segment_len == 0 || positive.iter().any(|v| v.is_nan() || *v <= 0.0) {
            return Err(invalid("training sizes and rates must be positive"));
        }
        if self.fd_step >= 0.1 {
            return Err(invalid("fd step must be small"));
        }
        for b in [self.beta1, self.beta2, self.bn_momentum] {
            if !(0.0..1.0).contains(&b) {
                return Err(invalid("moment coefficients must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

/// ConvFlow-only micro model used for the training demo.
pub fn micro_fixture() -> FlowConfig {
    FlowConfig::micro()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    /// Training-mode per-dimension NLL before this step's update.
    pub nll: f64,
    pub lr: f64,
}

/// `step,nll,lr` lines.
pub fn format_trace(trace: &[TraceRecord]) -> String {
    let mut s = String::new();
    for r in trace {
        let _ = writeln!(s, "{},{},{}", r.step, r.nll, r.lr);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Inference weights with normalisation folded in.
    pub weights: ModelWeights<f64>,
    pub trace: Vec<TraceRecord>,
}

/// Mean per-dimension negative log-likelihood over `batch` under inference
/// weights. Prior normalising constants are excluded.
pub fn nll_loss(batch: &[Segment], w: &ModelWeights<f64>) -> Result<f64> {
    if batch.is_empty() {
        return Err(invalid("empty batch"));
    }
    let prior = Prior::of(w, false);
    let mut total = 0.0;
    for s in batch {
        total -= log_likelihood(&s.audio, &s.features, w, &prior)?.per_dim;
    }
    Ok(total / batch.len() as f64)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            theta[i] -= lr * mh / (vh.sqrt() + cfg.epsilon);
        }
    }
}

/// Trains `start` on `data`. Batches are drawn without replacement from a
/// per-epoch shuffle seeded by `cfg.seed`; the learning rate decays once
/// per epoch.
pub fn train(data: &ToyDataset, cfg: &TrainConfig, start: &ModelWeights<f64>) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() || data.segment_len() != cfg.segment_len {
        return Err(invalid(format!(
            "dataset segments must have {} samples",
            cfg.segment_len
        )));
    }
    if cfg.batch_size > data.len() {
        return Err(invalid("batch larger than the dataset"));
    }
    let mut model = TrainModel::new(start.clone());
    let mut theta = model.params();
    if theta.len() > PARAMETER_CAP {
        return Err(Error::TooManyParameters {
            count: theta.len(),
            cap: PARAMETER_CAP,
        });
    }
    let steps_per_epoch = data.len() / cfg.batch_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut adam = Adam::new(theta.len());
    let mut trace = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        let epoch = step / steps_per_epoch;
        let slot = step % steps_per_epoch;
        if slot == 0 {
            order.shuffle(&mut rng);
        }
        let batch: Vec<&Segment> = order[slot * cfg.batch_size..(slot + 1) * cfg.batch_size]
            .iter()
            .map(|&i| &data.segments()[i])
            .collect();
        let lr = cfg.learning_rate * cfg.decay_per_epoch.powi(epoch as i32);

        let mut stats = Vec::new();
        let nll = model.batch_nll(&batch, Some(&mut stats));
        let nll = match nll {
            Ok(v) if v.is_finite() => v,
            _ => return Err(diverged(step, &trace)),
        };
        trace.push(TraceRecord { step, nll, lr });
        model.update_running(&stats, cfg.bn_momentum);

        let probe = model.clone();
        let grad = fd_gradient(
            |p| {
                let mut m = probe.clone();
                m.set_params(p).and_then(|_| m.batch_nll(&batch, None)).unwrap_or(f64::NAN)
            },
            &theta,
            cfg.fd_step,
        )?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(diverged(step, &trace));
        }
        adam.step(&mut theta, &grad, lr, cfg);
        if model.set_params(&theta).is_err() {
            return Err(diverged(step, &trace));
        }
    }
    let weights = model.export()?;
    if !weights.all_finite() {
        return Err(diverged(cfg.steps, &trace));
    }
    Ok(TrainOutcome { weights, trace })
}

fn diverged(step: usize, trace: &[TraceRecord]) -> Error {
    Error::Diverged {
        step,
        trace: trace.iter().map(|r| r.nll).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small_cfg(steps: usize) -> TrainConfig {
        TrainConfig {
            steps,
            batch_size: 2,
            segment_len: 256,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn identity_on_silence_is_zero() {
        let w = ModelWeights::<f64>::identity(micro_fixture()).unwrap();
        let mut d = ToyDataset::sines(2, 256, 19, ToyVariant::Clean, 0).unwrap();
        let segs: Vec<Segment> = d
            .segments()
            .iter()
            .map(|s| Segment {
                audio: vec![0.0; s.audio.len()],
                features: s.features.clone(),
            })
            .collect();
        assert_eq!(nll_loss(&segs, &w).unwrap(), 0.0);
        d = ToyDataset::sines(2, 256, 19, ToyVariant::Clean, 0).unwrap();
        let expect: f64 = d
            .segments()
            .iter()
            .map(|s| s.audio.iter().map(|v| v.abs()).sum::<f64>() / 256.0)
            .sum::<f64>()
            / 2.0;
        assert!((nll_loss(d.segments(), &w).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_likelihood() {
        let w = ModelWeights::<f64>::random(micro_fixture(), 5, 0.3).unwrap();
        let d = ToyDataset::sines(3, 256, 19, ToyVariant::Clean, 1).unwrap();
        let prior = Prior::of(&w, false);
        let direct: f64 = d
            .segments()
            .iter()
            .map(|s| -log_likelihood(&s.audio, &s.features, &w, &prior).unwrap().total / 256.0)
            .sum::<f64>()
            / 3.0;
        assert!((nll_loss(d.segments(), &w).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn zero_steps_keep_weights() {
        let w = ModelWeights::<f64>::init(micro_fixture(), 3).unwrap();
        let d = ToyDataset::sines(4, 256, 19, ToyVariant::Clean, 1).unwrap();
        let out = train(&d, &small_cfg(0), &w).unwrap();
        assert_eq!(out.weights, w);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn same_seed_same_trace() {
        let w = ModelWeights::<f64>::init(micro_fixture(), 3).unwrap();
        let d = ToyDataset::sines(4, 256, 19, ToyVariant::Clean, 1).unwrap();
        let a = train(&d, &small_cfg(3), &w).unwrap();
        let b = train(&d, &small_cfg(3), &w).unwrap();
        assert_eq!(format_trace(&a.trace), format_trace(&b.trace));
        assert_eq!(a.weights, b.weights);
        assert_eq!(format_trace(&a.trace).lines().count(), 3);
    }

    #[test]
    fn gradient_is_a_descent_direction() {
        let d = ToyDataset::sines(2, 256, 19, ToyVariant::Clean, 7).unwrap();
        let batch: Vec<&Segment> = d.segments().iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10;
        let mut descended = 0;
        for _ in 0..trials {
            let w = ModelWeights::<f64>::random(micro_fixture(), rng.random(), 0.2).unwrap();
            let model = TrainModel::new(w);
            let theta = model.params();
            let loss = |p: &[f64]| {
                let mut m = model.clone();
                m.set_params(p).unwrap();
                m.batch_nll(&batch, None).unwrap()
            };
            let g = fd_gradient(loss, &theta, 1e-3).unwrap();
            let stepped: Vec<f64> = theta.iter().zip(&g).map(|(t, g)| t - 1e-3 * g).collect();
            if loss(&stepped) < loss(&theta) {
                descended += 1;
            }
        }
        assert!(descended * 10 >= trials * 9, "{descended}/{trials}");
    }

    #[test]
    fn rejects_oversized_models() {
        let w = ModelWeights::<f64>::init(FlowConfig::default(), 0).unwrap();
        let d = ToyDataset::sines(2, 256, 19, ToyVariant::Clean, 1).unwrap();
        let err = train(&d, &small_cfg(1), &w).unwrap_err();
        assert!(matches!(err, Error::TooManyParameters { .. }));
    }
}
