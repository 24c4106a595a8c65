use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};

use crate::error::{invalid, Result};
use crate::model::FeatureTrack;
use crate::{HOP, SAMPLE_RATE};

/// Feature slot holding per-frame log energy (the first cepstral slot).
pub const ENERGY_DIM: usize = 0;
/// Feature slot holding per-frame log-F0.
pub const LOG_F0_DIM: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ToyVariant {
    /// Pure harmonic tones.
    #[default]
    Clean,
    /// Tones plus small white Gaussian noise.
    Noisy,
    /// Tones plus Student-t (2 dof) noise, for prior comparisons.
    HeavyTailed,
}

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub audio: Vec<f64>,
    pub features: FeatureTrack,
}

/// Synthetic harmonic tones at random pitch with matching features.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataset {
    segments: Vec<Segment>,
}

impl ToyDataset {
    pub fn sines(
        count: usize,
        segment_len: usize,
        feature_dim: usize,
        variant: ToyVariant,
        seed: u64,
    ) -> Result<Self> {
        if count == 0 || segment_len == 0 || !segment_len.is_multiple_of(HOP) {
            return Err(invalid(format!(
                "toy segments must be a positive multiple of {HOP} samples"
            )));
        }
        if feature_dim <= LOG_F0_DIM {
            return Err(invalid(format!(
                "toy features need at least {} dims",
                LOG_F0_DIM + 1
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let heavy = StudentT::new(2.0).expect("valid dof");
        let segments = (0..count)
            .map(|_| {
                let f0: f64 = rng.random_range(80.0..400.0);
                let amp: f64 = rng.random_range(0.1..0.5);
                let harmonics = rng.random_range(1..=3usize);
                let phases: Vec<f64> = (0..harmonics)
                    .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                    .collect();
                let mut audio: Vec<f64> = (0..segment_len)
                    .map(|n| {
                        let t = n as f64 / SAMPLE_RATE as f64;
                        phases
                            .iter()
                            .enumerate()
                            .map(|(h, ph)| {
                                let k = (h + 1) as f64;
                                amp / k * (std::f64::consts::TAU * k * f0 * t + ph).sin()
                            })
                            .sum()
                    })
                    .collect();
                match variant {
                    ToyVariant::Clean => {}
                    ToyVariant::Noisy => audio
                        .iter_mut()
                        .for_each(|v| *v += 1e-3 * rng.sample::<f64, _>(rand_distr::StandardNormal)),
                    ToyVariant::HeavyTailed => audio
                        .iter_mut()
                        .for_each(|v| *v += 0.01 * heavy.sample(&mut rng)),
                }
                audio.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
                let frames = segment_len / HOP;
                let mut features = FeatureTrack::zeros(frames, feature_dim);
                for (j, chunk) in audio.chunks(HOP).enumerate() {
                    let rms = (chunk.iter().map(|v| v * v).sum::<f64>() / HOP as f64).sqrt();
                    let frame = features.frame_mut(j);
                    frame[ENERGY_DIM] = (rms + 1e-5).ln() as f32;
                    frame[LOG_F0_DIM] = f0.ln() as f32;
                }
                Segment { audio, features }
            })
            .collect();
        Ok(Self { segments })
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_len(&self) -> usize {
        self.segments[0].audio.len()
    }
}
