use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{invalid, Result};
use crate::SAMPLE_RATE;

/// Clamps to `[-1, 1]`, scales by 32767 and rounds half away from zero.
pub fn quantize(v: f32) -> i16 {
    let c = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
    (c as f64 * 32767.0).round() as i16
}

/// 16-bit mono PCM at the model sample rate.
pub fn write_wav(path: &Path, samples: &[f32]) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::create(path, spec).map_err(wav_error)?;
    for &s in samples {
        w.write_sample(quantize(s)).map_err(wav_error)?;
    }
    w.finalize().map_err(wav_error)?;
    Ok(())
}

/// Reads 16-bit mono PCM at the model sample rate into `[-1, 1]` floats
/// (divided by 32767, the inverse of [`quantize`]).
pub fn read_wav(path: &Path) -> Result<Vec<f32>> {
    let mut r = WavReader::open(path).map_err(wav_error)?;
    let spec = r.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != SampleFormat::Int {
        return Err(invalid("expected 16-bit mono PCM"));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(invalid(format!(
            "expected {SAMPLE_RATE} Hz audio, got {}",
            spec.sample_rate
        )));
    }
    r.samples::<i16>()
        .map(|s| s.map(|v| v as f32 / 32767.0).map_err(wav_error))
        .collect()
}

fn wav_error(e: hound::Error) -> crate::error::Error {
    match e {
        hound::Error::IoError(io) => io.into(),
        other => invalid(format!("WAV: {other}")),
    }
}
