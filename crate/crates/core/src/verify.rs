//! Numerical checks behind `fbwave verify`: round-trip error, the
//! finite-difference Jacobian oracle for log-determinants, and the
//! window-harmonic spectral probe.
//!
//! The Jacobian oracle differentiates the inverse map numerically and takes
//! its determinant with nalgebra, so it shares no code with the analytic
//! log-determinant it checks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::Result;
use crate::kernels::Matrix;
use crate::likelihood::LatentSampler;
use crate::model::{analyze_with_hop, synthesize, synthesize_with_hop, FeatureTrack, FlowConfig, ModelWeights};
use crate::HOP;

/// Central-difference Jacobian of `f` at `x`; rows are outputs.
pub fn numerical_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], step: f64) -> Matrix<f64> {
    let n_out = f(x).len();
    let mut jac = Matrix::zeros(n_out, x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        probe[j] = x[j] + step;
        let hi = f(&probe);
        probe[j] = x[j] - step;
        let lo = f(&probe);
        probe[j] = x[j];
        for i in 0..n_out {
            jac.set(i, j, (hi[i] - lo[i]) / (2.0 * step));
        }
    }
    jac
}

/// `log|det m|` via nalgebra's LU; `None` when singular or not square.
pub fn log_abs_det_independent(m: &Matrix<f64>) -> Option<f64> {
    if !m.is_square() {
        return None;
    }
    let d = DMatrix::from_row_slice(m.rows(), m.cols(), m.data());
    let lu = d.lu();
    let u = lu.u();
    let mut acc = 0.0;
    for i in 0..m.rows() {
        let p = u[(i, i)];
        if p == 0.0 {
            return None;
        }
        acc += p.abs().ln();
    }
    Some(acc)
}

fn random_features(frames: usize, dim: usize, rng: &mut ChaCha8Rng) -> FeatureTrack {
    let values = (0..frames * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    FeatureTrack::new(frames, dim, values).expect("consistent shape")
}

/// Max `|analyze(synthesize(z)) - z|` over `frames` frames of unit-scale
/// latents, at 32-bit precision.
pub fn round_trip_error(w: &ModelWeights<f32>, frames: usize, seed: u64) -> Result<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feat = random_features(frames, w.config().feature_dim, &mut rng);
    round_trip_error_on(w, &feat, seed)
}

/// As [`round_trip_error`] with caller-supplied features, e.g. the feature
/// domain a trained model has seen.
pub fn round_trip_error_on(w: &ModelWeights<f32>, feat: &FeatureTrack, seed: u64) -> Result<f32> {
    let z: Vec<f32> = LatentSampler::new(w.config().prior, 1.0, 1.0, seed)?.draw(HOP * feat.frames());
    let x = synthesize(&z, feat, w)?;
    let back = crate::model::analyze(&x, feat, w)?.z;
    Ok(back
        .iter()
        .zip(&z)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f32::max))
}

/// Smallest hop that keeps every window whole.
pub fn minimal_hop(cfg: &FlowConfig) -> usize {
    match (cfg.n_convflows, cfg.gruflow) {
        (0, _) => cfg.gru_window,
        _ => cfg.window,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogdetCheck {
    pub analytic: f64,
    pub oracle: f64,
    pub dimension: usize,
}

impl LogdetCheck {
    pub fn error(&self) -> f64 {
        (self.analytic - self.oracle).abs()
    }
}

/// Compares the accumulated log-determinant of `analyze` with the
/// numerically differentiated Jacobian of `x -> z` in 64-bit. Uses the
/// smallest hop the config allows and enough frames for at least
/// `min_dimension` samples.
pub fn logdet_check(w: &ModelWeights<f64>, min_dimension: usize, seed: u64) -> Result<LogdetCheck> {
    let hop = minimal_hop(w.config());
    let frames = min_dimension.div_ceil(hop).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feat = random_features(frames, w.config().feature_dim, &mut rng);
    let x: Vec<f64> = (0..frames * hop).map(|_| rng.random_range(-0.8..0.8)).collect();
    let analytic = analyze_with_hop(&x, &feat, w, hop)?.logdet;
    let jac = numerical_jacobian(
        |v| analyze_with_hop(v, &feat, w, hop).map(|a| a.z).unwrap_or_default(),
        &x,
        1e-6,
    );
    let oracle = log_abs_det_independent(&jac).unwrap_or(f64::NEG_INFINITY);
    Ok(LogdetCheck {
        analytic,
        oracle,
        dimension: x.len(),
    })
}

/// Round trip at an arbitrary hop in 64-bit.
pub fn round_trip_error_f64(w: &ModelWeights<f64>, hop: usize, frames: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feat = random_features(frames, w.config().feature_dim, &mut rng);
    let z: Vec<f64> = (0..frames * hop).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = synthesize_with_hop(&z, &feat, w, hop)?;
    let back = analyze_with_hop(&x, &feat, w, hop)?.z;
    Ok(back.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Ratio of mean power at multiples of `24000 / 128 = 187.5` Hz to mean
/// power in the bins between them. Values well above 1 indicate the
/// window-periodic artifact of non-autoregressive flows.
pub fn harmonic_peak_ratio(audio: &[f32], period: usize) -> f64 {
    let n = audio.len();
    let mut buf: Vec<Complex<f64>> = audio.iter().map(|&v| Complex::new(v as f64, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let spacing = n / period;
    let nyquist = n / 2;
    let (mut peak, mut peak_n, mut floor, mut floor_n) = (0.0, 0usize, 0.0, 0usize);
    for (bin, &p) in power.iter().enumerate().take(nyquist).skip(1) {
        if bin % spacing == 0 {
            peak += p;
            peak_n += 1;
        } else {
            floor += p;
            floor_n += 1;
        }
    }
    if peak_n == 0 || floor_n == 0 || floor == 0.0 {
        return f64::NAN;
    }
    (peak / peak_n as f64) / (floor / floor_n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscontinuityProbe {
    pub convflow_only: f64,
    pub with_gruflow: f64,
}

/// Config of the spectral probe: random ConvFlows at `W = 128`.
pub fn probe_config(with_gruflow: bool) -> FlowConfig {
    FlowConfig {
        n_convflows: 2,
        window: 128,
        gru_window: 8,
        channels: 8,
        expansion: 2,
        hidden: 16,
        gruflow: with_gruflow,
        ..FlowConfig::default()
    }
}

/// Synthesizes 64 frames with constant features through a random
/// ConvFlow-only model at `W = 128`, then through the same ConvFlows plus a
/// GRUFlow, and reports the harmonic peak ratio of each.
pub fn discontinuity_probe(seed: u64) -> Result<DiscontinuityProbe> {
    const FRAMES: usize = 64;
    let conv = ModelWeights::<f32>::random(probe_config(false), seed, 0.3)?;
    let mut hybrid = ModelWeights::<f32>::random(probe_config(true), seed, 0.3)?;
    hybrid.conv_flows = conv.conv_flows.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let frame: Vec<f32> = (0..conv.config().feature_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let feat = FeatureTrack::new(FRAMES, frame.len(), frame.repeat(FRAMES))?;
    let z: Vec<f32> = LatentSampler::new(conv.config().prior, 1.0, 0.7, seed)?.draw(FRAMES * HOP);
    let a = synthesize(&z, &feat, &conv)?;
    let b = synthesize(&z, &feat, &hybrid)?;
    Ok(DiscontinuityProbe {
        convflow_only: harmonic_peak_ratio(&a, 128),
        with_gruflow: harmonic_peak_ratio(&b, 128),
    })
}
