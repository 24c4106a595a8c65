//! Chunked synthesis. Feeding frames in any partition produces exactly the
//! samples offline synthesis produces for the same seed: every flow is
//! causal, and latents are drawn frame by frame, sample by sample, from one
//! generator owned by the stream.

use crate::error::{invalid, Error, Result};
use crate::likelihood::LatentSampler;
use crate::model::{FeatureTrack, FlowConfig, ModelState, ModelWeights};
use crate::HOP;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSummary {
    pub samples_emitted: u64,
    pub frames_consumed: u64,
}

/// Per-stream mutable state. Weights are passed to every call and may be
/// shared by any number of streams.
#[derive(Debug, Clone)]
pub struct StreamState {
    config: FlowConfig,
    model: ModelState<f32>,
    sampler: LatentSampler,
    frames_consumed: u64,
    samples_emitted: u64,
    closed: bool,
}

impl StreamState {
    pub fn open(w: &ModelWeights<f32>, seed: u64, temperature: f64) -> Result<Self> {
        let c = w.config();
        Ok(Self {
            config: *c,
            model: w.fresh_state(),
            sampler: LatentSampler::new(c.prior, c.sigma, temperature, seed)?,
            frames_consumed: 0,
            samples_emitted: 0,
            closed: false,
        })
    }

    pub fn frames_consumed(&self) -> u64 {
        self.frames_consumed
    }

    pub fn model_state(&self) -> &ModelState<f32> {
        &self.model
    }

    /// Emits `128 * frames` samples for the chunk.
    pub fn push(&mut self, w: &ModelWeights<f32>, chunk: &FeatureTrack) -> Result<Vec<f32>> {
        if self.closed {
            return Err(Error::StreamClosed);
        }
        if *w.config() != self.config {
            return Err(invalid("stream was opened for a different model config"));
        }
        if chunk.frames() == 0 {
            return Ok(Vec::new());
        }
        let z: Vec<f32> = self.sampler.draw(HOP * chunk.frames());
        let out = w.generate_chunk(&z, chunk, HOP, &mut self.model)?;
        self.frames_consumed += chunk.frames() as u64;
        self.samples_emitted += out.len() as u64;
        Ok(out)
    }

    /// Ends the stream; later pushes fail. Calling it again returns the same
    /// summary.
    pub fn close(&mut self) -> StreamSummary {
        self.closed = true;
        self.summary()
    }

    pub fn summary(&self) -> StreamSummary {
        StreamSummary {
            samples_emitted: self.samples_emitted,
            frames_consumed: self.frames_consumed,
        }
    }
}

/// Offline counterpart of a stream: draws all latents with the same
/// sampler, then synthesizes in one call.
pub fn synthesize_seeded(w: &ModelWeights<f32>, feat: &FeatureTrack, seed: u64, temperature: f64) -> Result<Vec<f32>> {
    let c = w.config();
    let mut sampler = LatentSampler::new(c.prior, c.sigma, temperature, seed)?;
    let z: Vec<f32> = sampler.draw(HOP * feat.frames());
    crate::model::synthesize(&z, feat, w)
}
