//! Priors over the latent and the exact log-likelihood of audio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{analyze, FeatureTrack, ModelWeights};
use crate::real::Real;

/// Synthesis temperature used when none is given.
pub const DEFAULT_TEMPERATURE: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    /// Density `exp(-|z|/sigma) / (2 sigma)`.
    #[default]
    Laplace,
    /// Density `exp(-z^2 / (2 sigma^2)) / (sigma sqrt(2 pi))`.
    Gaussian,
}

impl PriorKind {
    pub fn code(self) -> u32 {
        match self {
            PriorKind::Laplace => 0,
            PriorKind::Gaussian => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(PriorKind::Laplace),
            1 => Some(PriorKind::Gaussian),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub kind: PriorKind,
    pub sigma: f64,
    pub include_normalizer: bool,
}

impl Prior {
    pub fn new(kind: PriorKind, sigma: f64, include_normalizer: bool) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid(format!("prior sigma {sigma} must be positive")));
        }
        Ok(Self {
            kind,
            sigma,
            include_normalizer,
        })
    }

    /// Prior declared by a model's config.
    pub fn of<T: Real>(w: &ModelWeights<T>, include_normalizer: bool) -> Self {
        let c = w.config();
        Self {
            kind: c.prior,
            sigma: c.sigma,
            include_normalizer,
        }
    }

    fn log_normalizer(&self) -> f64 {
        match self.kind {
            PriorKind::Laplace => (2.0 * self.sigma).ln(),
            PriorKind::Gaussian => (self.sigma * (2.0 * std::f64::consts::PI).sqrt()).ln(),
        }
    }
}

/// `log P(z)` summed over all elements.
pub fn prior_logp<T: Real>(z: &[T], p: &Prior) -> Result<f64> {
    let mut acc = 0.0f64;
    for v in z {
        let v = v.as_f64();
        if !v.is_finite() {
            return Err(invalid("latent contains non-finite values"));
        }
        acc -= match p.kind {
            PriorKind::Laplace => v.abs() / p.sigma,
            PriorKind::Gaussian => v * v / (2.0 * p.sigma * p.sigma),
        };
    }
    if p.include_normalizer {
        acc -= z.len() as f64 * p.log_normalizer();
    }
    Ok(acc)
}

/// Deterministic i.i.d. draws from a prior with its scale multiplied by a
/// temperature. Temperature 0 yields exact zeros.
#[derive(Debug, Clone)]
pub struct LatentSampler {
    rng: ChaCha8Rng,
    kind: PriorKind,
    scale: f64,
}

impl LatentSampler {
    pub fn new(kind: PriorKind, sigma: f64, temperature: f64, seed: u64) -> Result<Self> {
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(invalid(format!("temperature {temperature} must be >= 0")));
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            kind,
            scale: sigma * temperature,
        })
    }

    pub fn next_value(&mut self) -> f64 {
        let unit = match self.kind {
            PriorKind::Gaussian => self.rng.sample::<f64, _>(StandardNormal),
            PriorKind::Laplace => {
                // Inverse CDF on u in (-1/2, 1/2).
                let u: f64 = self.rng.random::<f64>() - 0.5;
                -u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
            }
        };
        if self.scale == 0.0 {
            0.0
        } else {
            unit * self.scale
        }
    }

    pub fn fill<T: Real>(&mut self, out: &mut [T]) {
        for v in out {
            *v = T::lit(self.next_value());
        }
    }

    pub fn draw<T: Real>(&mut self, n: usize) -> Vec<T> {
        let mut v = vec![T::zero(); n];
        self.fill(&mut v);
        v
    }
}

pub fn sample_prior(n: usize, p: &Prior, seed: u64, temperature: f64) -> Result<Vec<f32>> {
    if n == 0 {
        return Err(invalid("sample count must be >= 1"));
    }
    Ok(LatentSampler::new(p.kind, p.sigma, temperature, seed)?.draw(n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    pub total: f64,
    /// `total / T`.
    pub per_dim: f64,
    pub prior_term: f64,
    pub logdet_term: f64,
}

/// `log P(x) = log P(z) + sum of log|det J|` over the inverse flows.
pub fn log_likelihood<T: Real>(x: &[T], feat: &FeatureTrack, w: &ModelWeights<T>, prior: &Prior) -> Result<LogLikelihood> {
    let a = analyze(x, feat, w)?;
    let prior_term = prior_logp(&a.z, prior)?;
    let total = prior_term + a.logdet;
    Ok(LogLikelihood {
        total,
        per_dim: total / x.len() as f64,
        prior_term,
        logdet_term: a.logdet,
    })
}
