use crate::error::{invalid, Result};
use crate::kernels::Tensor1D;
use crate::real::Real;
use crate::HOP;

/// Acoustic feature frames, one per 128 audio samples.
///
/// The default 19-value layout is 13 MFCCs, log-F0, then 5 periodicity
/// values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTrack {
    frames: usize,
    dim: usize,
    values: Vec<f32>,
}

impl FeatureTrack {
    pub fn new(frames: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != frames * dim {
            return Err(invalid(format!(
                "{} feature values for {frames} frames of dim {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("feature values must be finite"));
        }
        Ok(Self { frames, dim, values })
    }

    pub fn zeros(frames: usize, dim: usize) -> Self {
        Self {
            frames,
            dim,
            values: vec![0.0; frames * dim],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn frame_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn slice_frames(&self, start: usize, count: usize) -> FeatureTrack {
        FeatureTrack {
            frames: count,
            dim: self.dim,
            values: self.values[start * self.dim..(start + count) * self.dim].to_vec(),
        }
    }
}

/// One feature vector per group of `window` samples: the frame covering the
/// group's first sample. Returns `dim x (frames * hop / window)`.
pub fn align_with_hop<T: Real>(feat: &FeatureTrack, window: usize, hop: usize) -> Result<Tensor1D<T>> {
    if feat.frames == 0 {
        return Err(invalid("feature track is empty"));
    }
    if window == 0 || !hop.is_multiple_of(window) {
        return Err(invalid(format!("window {window} does not divide hop {hop}")));
    }
    let per_frame = hop / window;
    let steps = feat.frames * per_frame;
    let mut out = Tensor1D::zeros(feat.dim, steps);
    for s in 0..steps {
        for (c, &v) in feat.frame(s / per_frame).iter().enumerate() {
            out.set(c, s, T::lit(v as f64));
        }
    }
    Ok(out)
}

/// Per-window features for a ConvFlow of window `window`.
pub fn align_features_to_windows<T: Real>(feat: &FeatureTrack, window: usize) -> Result<Tensor1D<T>> {
    align_with_hop(feat, window, HOP)
}

/// Per-step features for a GRUFlow of window `gru_window`.
pub fn upsample_features_for_gru<T: Real>(feat: &FeatureTrack, gru_window: usize) -> Result<Tensor1D<T>> {
    align_with_hop(feat, gru_window, HOP)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(frames: usize) -> FeatureTrack {
        let values = (0..frames * 2).map(|v| v as f32).collect();
        FeatureTrack::new(frames, 2, values).unwrap()
    }

    #[test]
    fn one_window_per_frame() {
        let t: Tensor1D<f32> = align_features_to_windows(&track(1), 128).unwrap();
        assert_eq!((t.channels(), t.steps()), (2, 1));
        assert_eq!(t.data(), &[0.0, 1.0]);
    }

    #[test]
    fn repetition_for_small_windows() {
        let t: Tensor1D<f32> = align_features_to_windows(&track(1), 64).unwrap();
        assert_eq!(t.steps(), 2);
        assert_eq!(t.channel(0), &[0.0, 0.0]);
        assert_eq!(t.channel(1), &[1.0, 1.0]);
    }

    #[test]
    fn frames_in_order() {
        let t: Tensor1D<f32> = align_features_to_windows(&track(3), 128).unwrap();
        assert_eq!(t.channel(0), &[0.0, 2.0, 4.0]);
    }

    #[test]
    fn gru_upsampling() {
        let t: Tensor1D<f32> = upsample_features_for_gru(&track(1), 16).unwrap();
        assert_eq!(t.steps(), 8);
        assert!(t.channel(1).iter().all(|&v| v == 1.0));
        let t: Tensor1D<f32> = upsample_features_for_gru(&track(2), 128).unwrap();
        assert_eq!(t.steps(), 2);
        let t: Tensor1D<f32> = upsample_features_for_gru(&track(2), 32).unwrap();
        assert_eq!(t.channel(0), &[0.0, 0.0, 0.0, 0.0, 2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn rejects_empty_and_misaligned() {
        assert!(align_features_to_windows::<f32>(&FeatureTrack::zeros(0, 2), 64).is_err());
        assert!(align_features_to_windows::<f32>(&track(1), 48).is_err());
        assert!(FeatureTrack::new(2, 2, vec![0.0; 3]).is_err());
        assert!(FeatureTrack::new(1, 1, vec![f32::NAN]).is_err());
    }
}
