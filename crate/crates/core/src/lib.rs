//! FBWave: a streaming hybrid normalizing-flow vocoder.
//!
//! Audio at 24 kHz is generated from acoustic-feature frames (one frame per
//! 128 samples) by a stack of non-autoregressive ConvFlows followed by one
//! autoregressive GRUFlow. Every flow is invertible, so the same weights
//! give exact log-likelihoods of recorded audio.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`]: pointwise/depthwise convolutions, the GRU cell, LU inversion.
//! * [`flows`]: the inverted residual block, ConvFlow and GRUFlow.
//! * [`model`]: configuration, weights, feature alignment, full synthesis/analysis.
//! * [`likelihood`]: priors and the log-likelihood objective.
//! * [`streaming`]: chunked inference, bit-identical to offline synthesis.
//! * [`costmodel`]: exact multiply-accumulate accounting and the model family search.
//! * [`trainer`]: desk-scale maximum-likelihood training with finite-difference gradients.
//! * [`io`]: feature files and WAV output.
//! * [`verify`]: round-trip, Jacobian and spectral checks used by `fbwave verify`.

#![allow(clippy::needless_range_loop)]

pub mod costmodel;
pub mod error;
pub mod flows;
pub mod io;
pub mod kernels;
pub mod likelihood;
pub mod model;
pub mod real;
pub mod streaming;
pub mod trainer;
pub mod verify;

pub use error::{Error, LoadError, Result};
pub use likelihood::{Prior, PriorKind};
pub use model::{FeatureTrack, FlowConfig, ModelWeights};
pub use real::Real;
pub use streaming::{StreamState, StreamSummary};

/// Output sample rate in Hz.
pub const SAMPLE_RATE: u32 = 24_000;

/// Audio samples per acoustic-feature frame (5.333 ms at 24 kHz).
pub const HOP: usize = 128;
