use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::Activation;
use crate::likelihood::PriorKind;
use crate::{HOP, SAMPLE_RATE};

/// Architecture hyperparameters.
///
/// `Default` is a demo configuration (k=4, W=64, W_g=16, C=128, E=2, H=128);
/// these values are a reasonable mid-size choice, not a published variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Feature values per frame.
    pub feature_dim: usize,
    /// Number of ConvFlows (`k`).
    pub n_convflows: usize,
    /// ConvFlow window `W`.
    pub window: usize,
    /// GRUFlow window `W_g`.
    pub gru_window: usize,
    /// IRB channel size `C` in the ConvFlows.
    pub channels: usize,
    /// IRB expansion ratio `E`.
    pub expansion: usize,
    /// GRU hidden size `H`, also the GRUFlow IRB channel size.
    pub hidden: usize,
    /// Residual bodies per IRB.
    pub irb_bodies: usize,
    /// Whether the GRUFlow is present.
    pub gruflow: bool,
    pub activation: Activation,
    pub prior: PriorKind,
    /// Prior scale.
    pub sigma: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            feature_dim: 19,
            n_convflows: 4,
            window: 64,
            gru_window: 16,
            channels: 128,
            expansion: 2,
            hidden: 128,
            irb_bodies: 2,
            gruflow: true,
            activation: Activation::Relu,
            prior: PriorKind::Laplace,
            sigma: 1.0,
        }
    }
}

impl FlowConfig {
    /// The ConvFlow-only training fixture: one ConvFlow with W=4, C=4, E=1.
    pub fn micro() -> Self {
        Self {
            n_convflows: 1,
            window: 4,
            gru_window: 2,
            channels: 4,
            expansion: 1,
            hidden: 4,
            gruflow: false,
            ..Self::default()
        }
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.feature_dim == 0 {
            return bad("feature_dim must be >= 1".into());
        }
        if self.n_convflows == 0 && !self.gruflow {
            return bad("model needs at least one flow".into());
        }
        if self.n_convflows > 0 {
            if self.window < 2 || !self.window.is_multiple_of(2) {
                return bad(format!("window {} must be even and >= 2", self.window));
            }
            if !HOP.is_multiple_of(self.window) {
                return bad(format!("window {} must divide the {HOP}-sample hop", self.window));
            }
            if self.channels == 0 || self.expansion == 0 {
                return bad("channels and expansion must be >= 1".into());
            }
        }
        if self.gruflow {
            if self.gru_window == 0 || self.hidden == 0 || self.expansion == 0 {
                return bad("gru_window, hidden and expansion must be >= 1".into());
            }
            if !HOP.is_multiple_of(self.gru_window) {
                return bad(format!(
                    "gru_window {} must divide the {HOP}-sample hop",
                    self.gru_window
                ));
            }
            if self.n_convflows > 0 {
                if self.gru_window >= self.window {
                    return bad(format!(
                        "gru_window {} must be smaller than window {}",
                        self.gru_window, self.window
                    ));
                }
                if !self.window.is_multiple_of(self.gru_window) {
                    return bad(format!(
                        "gru_window {} must divide window {}",
                        self.gru_window, self.window
                    ));
                }
            }
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad(format!("sigma {} must be positive", self.sigma));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        FlowConfig::default().validate().unwrap();
        FlowConfig::micro().validate().unwrap();
    }

    #[test]
    fn rejects_bad_geometry() {
        let base = FlowConfig::micro();
        for cfg in [
            FlowConfig { window: 3, ..base },
            FlowConfig { window: 12, ..base },
            FlowConfig { window: 256, ..base },
            FlowConfig { gruflow: true, gru_window: 4, ..base },
            FlowConfig { gruflow: true, window: 16, gru_window: 3, ..base },
            FlowConfig { n_convflows: 0, ..base },
            FlowConfig { sigma: 0.0, ..base },
            FlowConfig { feature_dim: 0, ..base },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn gruflow_only_ignores_window() {
        let cfg = FlowConfig {
            n_convflows: 0,
            gruflow: true,
            window: 3,
            gru_window: 4,
            ..FlowConfig::micro()
        };
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let cfg = FlowConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<FlowConfig>(&text).unwrap(), cfg);
        let partial: FlowConfig = toml::from_str("window = 32\nprior = \"gaussian\"").unwrap();
        assert_eq!(partial.window, 32);
        assert_eq!(partial.prior, PriorKind::Gaussian);
    }
}
