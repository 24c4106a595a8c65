//! File formats used by the command-line tool: feature files, 16-bit WAV
//! and the training loss trace.

mod features;
mod wav;

pub use features::{read_features, write_features, features_from_bytes, features_to_bytes, FEATURE_MAGIC, FEATURE_VERSION};
pub use wav::{quantize, read_wav, write_wav};

use std::path::Path;

use crate::error::Result;
use crate::trainer::{format_trace, TraceRecord};

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    std::fs::write(path, format_trace(trace))?;
    Ok(())
}
