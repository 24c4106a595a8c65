//! The full generator: `k` ConvFlows followed by one GRUFlow.

mod compose;
mod config;
mod features;
mod serial;
mod weights;

pub use compose::{analyze, analyze_with_hop, synthesize, synthesize_with_hop, Analysis, ModelState};
pub use config::FlowConfig;
pub use features::{align_features_to_windows, align_with_hop, upsample_features_for_gru, FeatureTrack};
pub use serial::{from_bytes, load_weights, save_weights, to_bytes, MAGIC, VERSION};
pub use weights::{random_orthogonal, ModelWeights};
