use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::FlowConfig;
use crate::error::Result;
use crate::flows::{ConvFlowParams, GruFlowParams, IrbParams, TensorSet, Visitor, VisitorMut};
use crate::kernels::{GruParams, Matrix};
use crate::real::Real;

/// Every learnable tensor of a model, plus its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights<T = f32> {
    pub(crate) config: FlowConfig,
    pub conv_flows: Vec<ConvFlowParams<T>>,
    pub gru_flow: Option<GruFlowParams<T>>,
}

/// Random orthogonal matrix (Gram-Schmidt on Gaussian columns).
pub fn random_orthogonal<T: Real>(n: usize, rng: &mut ChaCha8Rng) -> Matrix<T> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    let mut m = Matrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            m.set(i, j, T::lit(v));
        }
    }
    m
}

impl<T: Real> ModelWeights<T> {
    /// Identity model: zero coupling heads, `K = I`. Every other tensor is
    /// zero too.
    pub fn identity(config: FlowConfig) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let conv_flows = (0..c.n_convflows)
            .map(|_| {
                let irb = IrbParams::zeros(
                    c.window / 2 + c.feature_dim,
                    c.channels,
                    c.expansion,
                    c.irb_bodies,
                    c.window / 2,
                    c.activation,
                );
                ConvFlowParams::new(irb, Matrix::identity(c.window))
            })
            .collect::<Result<Vec<_>>>()?;
        let gru_flow = if c.gruflow {
            Some(GruFlowParams::new(
                GruParams::zeros(c.gru_window, c.hidden),
                IrbParams::zeros(
                    c.hidden + c.feature_dim,
                    c.hidden,
                    c.expansion,
                    c.irb_bodies,
                    c.gru_window,
                    c.activation,
                ),
            )?)
        } else {
            None
        };
        Ok(Self {
            config,
            conv_flows,
            gru_flow,
        })
    }

    /// Training initialisation: zero coupling heads (identity flow),
    /// random orthogonal `K`, small random weights elsewhere.
    pub fn init(config: FlowConfig, seed: u64) -> Result<Self> {
        let mut w = Self::identity(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        w.visit_mut("", &mut |name, shape, data| {
            if name.ends_with(".bias") || name.contains(".head.") || name.ends_with(".kernel") {
                return;
            }
            let fan_in = if name.contains(".depthwise.") { 3 } else { shape[shape.len() - 1] };
            let bound = (1.0 / fan_in as f64).sqrt();
            data.iter_mut()
                .for_each(|v| *v = T::lit(rng.random_range(-bound..bound)));
        });
        for flow in &mut w.conv_flows {
            flow.set_kernel(random_orthogonal(flow.window(), &mut rng))?;
        }
        Ok(w)
    }

    /// Fully random model for tests and checks: every tensor uniform in
    /// `[-scale, scale]` (heads included), `K` orthogonal times a random
    /// positive diagonal.
    pub fn random(config: FlowConfig, seed: u64, scale: f64) -> Result<Self> {
        let mut w = Self::identity(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        w.visit_mut("", &mut |name, _, data| {
            if name.ends_with(".kernel") {
                return;
            }
            data.iter_mut()
                .for_each(|v| *v = T::lit(rng.random_range(-scale..scale)));
        });
        for flow in &mut w.conv_flows {
            let n = flow.window();
            let q: Matrix<f64> = random_orthogonal(n, &mut rng);
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(-0.3f64..0.3).exp()).collect();
            let mut k = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    k.set(i, j, T::lit(q.get(i, j) * d[j]));
                }
            }
            flow.set_kernel(k)?;
        }
        Ok(w)
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    /// Recomputes cached `K` inverses after in-place edits.
    pub fn refresh(&mut self) -> Result<()> {
        self.conv_flows.iter_mut().try_for_each(|f| f.refresh())
    }

    pub fn parameter_count(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, _, d| n += d.len());
        n
    }

    pub fn cast<U: Real>(&self) -> ModelWeights<U> {
        ModelWeights {
            config: self.config,
            conv_flows: self.conv_flows.iter().map(|f| f.cast()).collect(),
            gru_flow: self.gru_flow.as_ref().map(|g| g.cast()),
        }
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit("", &mut |_, _, d| ok &= d.iter().all(|v| v.is_finite()));
        ok
    }
}

impl<T: Real> TensorSet<T> for ModelWeights<T> {
    fn visit(&self, _prefix: &str, f: &mut Visitor<'_, T>) {
        for (i, c) in self.conv_flows.iter().enumerate() {
            c.visit(&format!("convflow{i}"), f);
        }
        if let Some(g) = &self.gru_flow {
            g.visit("gruflow", f);
        }
    }

    fn visit_mut(&mut self, _prefix: &str, f: &mut VisitorMut<'_, T>) {
        for (i, c) in self.conv_flows.iter_mut().enumerate() {
            c.visit_mut(&format!("convflow{i}"), f);
        }
        if let Some(g) = &mut self.gru_flow {
            g.visit_mut("gruflow", f);
        }
    }
}
