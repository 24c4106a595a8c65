//! Exact multiply-accumulate accounting.
//!
//! Counting convention: one MAC per multiply-add in every convolution,
//! matrix product and GRU gate, plus the three elementwise gate products of
//! each GRU unit. Biases, activations, folded normalisation, skip additions
//! and the affine coupling itself are not counted. Feature inputs to each
//! IRB's input projection are counted.

use std::fmt;

use crate::error::{Error, Result};
use crate::kernels::{macs, DW_KERNEL};
use crate::model::{synthesize, FeatureTrack, FlowConfig, ModelWeights};
use crate::{HOP, SAMPLE_RATE};

pub const CONVENTION: &str = "1 MAC = 1 multiply-add in conv/matmul/GRU gates (+3 elementwise gate products per GRU unit); biases, activations, folded norms, skip adds and coupling affine excluded; IRB input projection includes feature channels";

/// Documented baseline costs in GMACs per second of 24 kHz audio.
pub const BASELINES: [(&str, f64); 3] = [
    ("WaveRNN", 184.6),
    ("WaveRNN-sparse", 17.5),
    ("SqueezeWave", 3.8),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    ConvFlow,
    GruFlow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacEntry {
    pub name: String,
    pub kind: FlowKind,
    /// MACs per ConvFlow window or GRUFlow step.
    pub per_window: u64,
    /// Samples covered by one window/step.
    pub window: usize,
}

impl MacEntry {
    pub fn per_second(&self) -> f64 {
        self.per_window as f64 * SAMPLE_RATE as f64 / self.window as f64
    }

    pub fn for_samples(&self, samples: usize) -> u64 {
        self.per_window * (samples / self.window) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacReport {
    pub entries: Vec<MacEntry>,
}

impl MacReport {
    fn sum(&self, kind: Option<FlowKind>) -> f64 {
        self.entries
            .iter()
            .filter(|e| kind.is_none_or(|k| e.kind == k))
            .map(MacEntry::per_second)
            .sum()
    }

    pub fn convflow_total(&self) -> f64 {
        self.sum(Some(FlowKind::ConvFlow))
    }

    pub fn gruflow_total(&self) -> f64 {
        self.sum(Some(FlowKind::GruFlow))
    }

    /// MACs per second of audio.
    pub fn total(&self) -> f64 {
        self.sum(None)
    }

    pub fn total_gmacs(&self) -> f64 {
        self.total() / 1e9
    }

    /// Exact MAC count for `samples` samples (a multiple of every window).
    pub fn for_samples(&self, samples: usize) -> u64 {
        self.entries.iter().map(|e| e.for_samples(samples)).sum()
    }

    /// Machine-readable `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("layer.{}={}\n", e.name, e.per_second()));
        }
        out.push_str(&format!("convflow_total={}\n", self.convflow_total()));
        out.push_str(&format!("gruflow_total={}\n", self.gruflow_total()));
        out.push_str(&format!("total={}\n", self.total()));
        out.push_str(&format!("total_gmacs={:.6}\n", self.total_gmacs()));
        out.push_str(&format!("convention={CONVENTION}\n"));
        out
    }
}

impl fmt::Display for MacReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<32} {:>16}", "layer", "MACs/s")?;
        for e in &self.entries {
            writeln!(f, "{:<32} {:>16.0}", e.name, e.per_second())?;
        }
        writeln!(f, "{:<32} {:>16.0}", "ConvFlow total", self.convflow_total())?;
        writeln!(f, "{:<32} {:>16.0}", "GRUFlow total", self.gruflow_total())?;
        writeln!(f, "{:<32} {:>16.3}", "total GMACs", self.total_gmacs())?;
        write!(f, "convention: {CONVENTION}")
    }
}

fn irb_entries(
    out: &mut Vec<MacEntry>,
    prefix: &str,
    kind: FlowKind,
    window: usize,
    cfg: &FlowConfig,
    // (input width, channels, head outputs)
    (in_width, channels, head_out): (usize, usize, usize),
) {
    let inner = cfg.expansion * channels;
    let mut push = |name: String, per_window: usize| {
        out.push(MacEntry {
            name,
            kind,
            per_window: per_window as u64,
            window,
        })
    };
    push(format!("{prefix}.irb.input"), in_width * channels);
    for b in 0..cfg.irb_bodies {
        push(format!("{prefix}.irb.body{b}.expand"), channels * inner);
        push(format!("{prefix}.irb.body{b}.depthwise"), DW_KERNEL * inner);
        push(format!("{prefix}.irb.body{b}.project"), inner * channels);
    }
    push(format!("{prefix}.irb.head"), channels * head_out);
}

pub fn count_macs(cfg: &FlowConfig) -> Result<MacReport> {
    cfg.validate()?;
    let mut entries = Vec::new();
    let f = cfg.feature_dim;
    for i in 0..cfg.n_convflows {
        let w = cfg.window;
        let prefix = format!("convflow{i}");
        irb_entries(&mut entries, &prefix, FlowKind::ConvFlow, w, cfg, (w / 2 + f, cfg.channels, w));
        entries.push(MacEntry {
            name: format!("{prefix}.kernel"),
            kind: FlowKind::ConvFlow,
            per_window: (w * w) as u64,
            window: w,
        });
    }
    if cfg.gruflow {
        let (wg, h) = (cfg.gru_window, cfg.hidden);
        entries.push(MacEntry {
            name: "gruflow.gru".into(),
            kind: FlowKind::GruFlow,
            per_window: (3 * ((wg + h) * h + h)) as u64,
            window: wg,
        });
        irb_entries(&mut entries, "gruflow", FlowKind::GruFlow, wg, cfg, (h + f, h, 2 * wg));
    }
    Ok(MacReport { entries })
}

/// Counts the MACs the kernels actually execute while synthesizing
/// `frames` frames with `cfg`.
pub fn instrumented_macs(cfg: &FlowConfig, frames: usize) -> Result<u64> {
    let w = ModelWeights::<f32>::identity(*cfg)?;
    let feat = FeatureTrack::zeros(frames, cfg.feature_dim);
    let z = vec![0.0f32; frames * HOP];
    let (res, count) = macs::measure(|| synthesize(&z, &feat, &w));
    res?;
    Ok(count)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchBounds {
    pub n_convflows: Vec<usize>,
    pub window: Vec<usize>,
    pub gru_window: Vec<usize>,
    pub channels: Vec<usize>,
    pub expansion: Vec<usize>,
    pub hidden: Vec<usize>,
    /// Relative tolerance on the target.
    pub tolerance: f64,
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self {
            n_convflows: (1..=8).collect(),
            window: vec![16, 32, 64, 128],
            gru_window: vec![2, 4, 8, 16, 32],
            channels: (1..=16).map(|c| 16 * c).collect(),
            expansion: (1..=4).collect(),
            hidden: (1..=16).map(|h| 16 * h).collect(),
            tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub name: String,
    pub config: FlowConfig,
    pub report: MacReport,
}

/// Finds a config whose total is within tolerance of `target_gmacs`,
/// preferring larger `H`, then larger `C`, then the lexicographically
/// smallest `(k, W, W_g, E)`.
pub fn family_search(target_gmacs: f64, bounds: &SearchBounds, base: &FlowConfig) -> Result<FamilyMember> {
    if !(target_gmacs.is_finite() && target_gmacs > 0.0) {
        return Err(Error::InvalidInput(format!("target {target_gmacs} GMACs must be positive")));
    }
    let target = target_gmacs * 1e9;
    type Key = (std::cmp::Reverse<usize>, std::cmp::Reverse<usize>, usize, usize, usize, usize);
    let mut best: Option<(Key, FlowConfig)> = None;
    let mut nearest: Vec<(f64, FlowConfig)> = Vec::new();
    for &k in &bounds.n_convflows {
        for &w in &bounds.window {
            for &wg in &bounds.gru_window {
                for &e in &bounds.expansion {
                    for &c in &bounds.channels {
                        for &h in &bounds.hidden {
                            let cfg = FlowConfig {
                                n_convflows: k,
                                window: w,
                                gru_window: wg,
                                channels: c,
                                expansion: e,
                                hidden: h,
                                gruflow: true,
                                ..*base
                            };
                            let Ok(report) = count_macs(&cfg) else { continue };
                            let rel = (report.total() - target).abs() / target;
                            if rel <= bounds.tolerance {
                                let key = (std::cmp::Reverse(h), std::cmp::Reverse(c), k, w, wg, e);
                                if best.as_ref().is_none_or(|(b, _)| key < *b) {
                                    best = Some((key, cfg));
                                }
                            } else if best.is_none() {
                                nearest.push((rel, cfg));
                                if nearest.len() > 64 {
                                    nearest.sort_by(|a, b| a.0.total_cmp(&b.0));
                                    nearest.truncate(3);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    match best {
        Some((_, config)) => Ok(FamilyMember {
            name: format!("FBW-{target_gmacs:.1}G"),
            report: count_macs(&config)?,
            config,
        }),
        None => {
            nearest.sort_by(|a, b| a.0.total_cmp(&b.0));
            let listed: Vec<String> = nearest
                .iter()
                .take(3)
                .map(|(_, c)| {
                    let g = count_macs(c).map(|r| r.total_gmacs()).unwrap_or(f64::NAN);
                    format!(
                        "k={} W={} W_g={} C={} E={} H={} ({g:.4} GMACs)",
                        c.n_convflows, c.window, c.gru_window, c.channels, c.expansion, c.hidden
                    )
                })
                .collect();
            Err(Error::NotFound {
                target_gmacs,
                tolerance_pct: bounds.tolerance * 100.0,
                nearest: if listed.is_empty() { "none".into() } else { listed.join("; ") },
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRatio {
    pub name: &'static str,
    pub gmacs: f64,
    /// Baseline cost divided by the model's cost.
    pub ratio: f64,
}

pub fn compare_baselines(total_gmacs: f64) -> Vec<BaselineRatio> {
    BASELINES
        .iter()
        .map(|&(name, gmacs)| BaselineRatio {
            name,
            gmacs,
            ratio: gmacs / total_gmacs,
        })
        .collect()
}
