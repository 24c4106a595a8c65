use super::features::{align_with_hop, FeatureTrack};
use super::weights::ModelWeights;
use crate::error::{invalid, Result};
use crate::flows::{GruFlowState, IrbHistory, Windowed};
use crate::real::Real;
use crate::HOP;

/// Mutable state threaded through consecutive generate/analyze calls.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState<T> {
    pub conv: Vec<IrbHistory<T>>,
    pub gru: Option<GruFlowState<T>>,
}

/// Latent recovered from audio and the summed log-determinant of the
/// inverse map.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis<T> {
    pub z: Vec<T>,
    pub logdet: f64,
}

impl<T: Real> ModelState<T> {
    /// Number of scalars held; independent of how much audio has passed.
    pub fn len(&self) -> usize {
        let conv: usize = self
            .conv
            .iter()
            .flat_map(|h| &h.bodies)
            .map(|b| b.data().len())
            .sum();
        let gru = self.gru.as_ref().map_or(0, |g| {
            g.hidden.len()
                + g.prev_output.len()
                + g.irb.bodies.iter().map(|b| b.data().len()).sum::<usize>()
        });
        conv + gru
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<T: Real> ModelWeights<T> {
    pub fn fresh_state(&self) -> ModelState<T> {
        ModelState {
            conv: self.conv_flows.iter().map(|f| f.irb.fresh_history()).collect(),
            gru: self.gru_flow.as_ref().map(|g| g.fresh_state()),
        }
    }

    fn check_chunk(&self, samples: usize, feat: &FeatureTrack, hop: usize, state: &ModelState<T>) -> Result<()> {
        let cfg = self.config();
        if feat.dim() != cfg.feature_dim {
            return Err(invalid(format!(
                "features have dim {}, model expects {}",
                feat.dim(),
                cfg.feature_dim
            )));
        }
        if samples != hop * feat.frames() {
            return Err(invalid(format!(
                "{samples} samples for {} frames (need {} per frame)",
                feat.frames(),
                hop
            )));
        }
        if state.conv.len() != self.conv_flows.len() || state.gru.is_some() != self.gru_flow.is_some() {
            return Err(invalid("state does not match the model"));
        }
        Ok(())
    }

    /// Generates audio for whole frames, continuing from `state`.
    pub fn generate_chunk(
        &self,
        z: &[T],
        feat: &FeatureTrack,
        hop: usize,
        state: &mut ModelState<T>,
    ) -> Result<Vec<T>> {
        self.check_chunk(z.len(), feat, hop, state)?;
        if feat.frames() == 0 {
            return Ok(Vec::new());
        }
        let mut signal = z.to_vec();
        if let Some(first) = self.conv_flows.first() {
            let f = align_with_hop(feat, first.window(), hop)?;
            for (flow, hist) in self.conv_flows.iter().zip(state.conv.iter_mut()) {
                let w = Windowed::new(flow.window(), signal)?;
                signal = flow.generate(&w, &f, hist)?.into_data();
            }
        }
        if let (Some(g), Some(gs)) = (&self.gru_flow, state.gru.as_mut()) {
            let f = align_with_hop(feat, g.window(), hop)?;
            let w = Windowed::new(g.window(), signal)?;
            signal = g.generate(&w, &f, gs)?.into_data();
        }
        Ok(signal)
    }

    /// Inverse of [`ModelWeights::generate_chunk`].
    pub fn analyze_chunk(
        &self,
        x: &[T],
        feat: &FeatureTrack,
        hop: usize,
        state: &mut ModelState<T>,
    ) -> Result<Analysis<T>> {
        self.check_chunk(x.len(), feat, hop, state)?;
        if feat.frames() == 0 {
            return Ok(Analysis { z: Vec::new(), logdet: 0.0 });
        }
        let mut signal = x.to_vec();
        let mut logdet = 0.0;
        if let (Some(g), Some(gs)) = (&self.gru_flow, state.gru.as_mut()) {
            let f = align_with_hop(feat, g.window(), hop)?;
            let (z, ld) = g.invert(&Windowed::new(g.window(), signal)?, &f, gs)?;
            signal = z.into_data();
            logdet += ld;
        }
        if let Some(first) = self.conv_flows.first() {
            let f = align_with_hop(feat, first.window(), hop)?;
            for (flow, hist) in self.conv_flows.iter().zip(state.conv.iter_mut()).rev() {
                let (z, ld) = flow.invert(&Windowed::new(flow.window(), signal)?, &f, hist)?;
                signal = z.into_data();
                logdet += ld;
            }
        }
        Ok(Analysis { z: signal, logdet })
    }
}

/// Offline synthesis with an arbitrary frame hop. The public contract uses
/// 128; smaller hops keep Jacobian checks tractable.
pub fn synthesize_with_hop<T: Real>(z: &[T], feat: &FeatureTrack, w: &ModelWeights<T>, hop: usize) -> Result<Vec<T>> {
    if feat.frames() == 0 {
        return Err(invalid("feature track is empty"));
    }
    w.generate_chunk(z, feat, hop, &mut w.fresh_state())
}

pub fn analyze_with_hop<T: Real>(x: &[T], feat: &FeatureTrack, w: &ModelWeights<T>, hop: usize) -> Result<Analysis<T>> {
    if feat.frames() == 0 {
        return Err(invalid("feature track is empty"));
    }
    w.analyze_chunk(x, feat, hop, &mut w.fresh_state())
}

/// Audio from latents: ConvFlows `1..k`, then the GRUFlow. Returns
/// `128 * frames` samples.
pub fn synthesize<T: Real>(z: &[T], feat: &FeatureTrack, w: &ModelWeights<T>) -> Result<Vec<T>> {
    synthesize_with_hop(z, feat, w, HOP)
}

/// Latents from audio: GRUFlow inverse, then ConvFlows `k..1`.
pub fn analyze<T: Real>(x: &[T], feat: &FeatureTrack, w: &ModelWeights<T>) -> Result<Analysis<T>> {
    analyze_with_hop(x, feat, w, HOP)
}
