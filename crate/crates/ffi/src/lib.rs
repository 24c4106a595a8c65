//! C ABI over the `fbwave` crate.
//!
//! Models and streams are opaque heap handles. Every fallible function
//! returns an [`FbwStatus`]; on failure, [`fbw_last_error`] returns a
//! message for the calling thread. Output buffers are caller-allocated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use fbwave::costmodel::count_macs;
use fbwave::likelihood::log_likelihood;
use fbwave::model::{from_bytes, load_weights};
use fbwave::streaming::synthesize_seeded;
use fbwave::{Error, FeatureTrack, ModelWeights, Prior, StreamState};

/// Samples per feature frame.
pub const FBW_HOP: usize = 128;
/// Output sample rate in Hz.
pub const FBW_SAMPLE_RATE: u32 = 24000;

const _: () = assert!(FBW_HOP == fbwave::HOP && FBW_SAMPLE_RATE == fbwave::SAMPLE_RATE);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    BufferTooSmall = 3,
    Io = 4,
    Load = 5,
    Singular = 6,
    StreamClosed = 7,
    Panic = 8,
}

/// Loaded model weights.
pub struct FbwModel {
    weights: Arc<ModelWeights<f32>>,
}

/// Streaming synthesis state; keeps its model alive.
pub struct FbwStream {
    weights: Arc<ModelWeights<f32>>,
    state: StreamState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FbwStatus {
    match e {
        Error::Io(_) => FbwStatus::Io,
        Error::Load(_) => FbwStatus::Load,
        Error::Singular { .. } => FbwStatus::Singular,
        Error::StreamClosed => FbwStatus::StreamClosed,
        _ => FbwStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (FbwStatus, String)>) -> FbwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FbwStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FbwStatus::Panic
        }
    }
}

fn lift<T>(r: fbwave::Result<T>) -> Result<T, (FbwStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (FbwStatus, String) {
    (FbwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (FbwStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn features(
    model: &FbwModel,
    p: *const f32,
    frames: usize,
) -> Result<FeatureTrack, (FbwStatus, String)> {
    let dim = model.weights.config().feature_dim;
    let values = slice(p, frames * dim, "features")?;
    lift(FeatureTrack::new(frames, dim, values.to_vec()))
}

fn write_out(out: *mut f32, out_len: usize, data: &[f32]) -> Result<(), (FbwStatus, String)> {
    if out_len < data.len() {
        return Err((
            FbwStatus::BufferTooSmall,
            format!("output buffer holds {out_len} samples, need {}", data.len()),
        ));
    }
    if data.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    unsafe { ptr::copy_nonoverlapping(data.as_ptr(), out, data.len()) };
    Ok(())
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn fbw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a weight file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fbw_model_load(path: *const c_char, out: *mut *mut FbwModel) -> FbwStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (FbwStatus::InvalidInput, "path is not UTF-8".to_string()))?;
        let w = lift(load_weights(path))?;
        *out = Box::into_raw(Box::new(FbwModel { weights: Arc::new(w) }));
        Ok(())
    })
}

/// Decodes weights from memory.
///
/// # Safety
/// `bytes` must point to `len` readable bytes and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn fbw_model_from_bytes(bytes: *const u8, len: usize, out: *mut *mut FbwModel) -> FbwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let w = lift(from_bytes(slice(bytes, len, "bytes")?))?;
        *out = Box::into_raw(Box::new(FbwModel { weights: Arc::new(w) }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from a load function and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fbw_model_free(model: *mut FbwModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Feature values per frame, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbw_model_feature_dim(model: *const FbwModel) -> usize {
    model.as_ref().map_or(0, |m| m.weights.config().feature_dim)
}

/// Offline synthesis of `frames` frames (row-major, `frames * feature_dim`
/// floats) into `out`, which must hold `frames * FBW_HOP` samples.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn fbw_synthesize(
    model: *const FbwModel,
    features_ptr: *const f32,
    frames: usize,
    seed: u64,
    temperature: f64,
    out: *mut f32,
    out_len: usize,
) -> FbwStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let feat = features(m, features_ptr, frames)?;
        let audio = lift(synthesize_seeded(&m.weights, &feat, seed, temperature))?;
        write_out(out, out_len, &audio)
    })
}

/// Log-likelihood of `samples` audio samples (normalising constants
/// included).
///
/// # Safety
/// Pointers must be valid for the stated lengths; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn fbw_log_likelihood(
    model: *const FbwModel,
    audio: *const f32,
    samples: usize,
    features_ptr: *const f32,
    frames: usize,
    total: *mut f64,
    per_dim: *mut f64,
) -> FbwStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let feat = features(m, features_ptr, frames)?;
        let x = slice(audio, samples, "audio")?;
        let ll = lift(log_likelihood(x, &feat, &m.weights, &Prior::of(&m.weights, true)))?;
        if let Some(t) = total.as_mut() {
            *t = ll.total;
        }
        if let Some(p) = per_dim.as_mut() {
            *p = ll.per_dim;
        }
        Ok(())
    })
}

/// Multiply-accumulates per second of audio for the model's config.
///
/// # Safety
/// `model` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fbw_count_macs(model: *const FbwModel, out: *mut f64) -> FbwStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let r = lift(count_macs(m.weights.config()))?;
        *out.as_mut().ok_or_else(|| null("out"))? = r.total();
        Ok(())
    })
}

/// Opens a stream. The stream holds its own reference to the weights.
///
/// # Safety
/// `model` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fbw_stream_open(
    model: *const FbwModel,
    seed: u64,
    temperature: f64,
    out: *mut *mut FbwStream,
) -> FbwStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let state = lift(StreamState::open(&m.weights, seed, temperature))?;
        *out = Box::into_raw(Box::new(FbwStream {
            weights: Arc::clone(&m.weights),
            state,
        }));
        Ok(())
    })
}

/// Pushes `frames` feature frames and writes `frames * FBW_HOP` samples.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn fbw_stream_push(
    stream: *mut FbwStream,
    features_ptr: *const f32,
    frames: usize,
    out: *mut f32,
    out_len: usize,
) -> FbwStatus {
    guard(|| {
        let s = stream.as_mut().ok_or_else(|| null("stream"))?;
        let dim = s.weights.config().feature_dim;
        let values = slice(features_ptr, frames * dim, "features")?;
        let feat = lift(FeatureTrack::new(frames, dim, values.to_vec()))?;
        if out_len < frames * FBW_HOP {
            return Err((
                FbwStatus::BufferTooSmall,
                format!("output buffer holds {out_len} samples, need {}", frames * FBW_HOP),
            ));
        }
        let audio = lift(s.state.push(&s.weights, &feat))?;
        write_out(out, out_len, &audio)
    })
}

/// Closes a stream (idempotent) and reports its counters.
///
/// # Safety
/// `stream` must be live; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn fbw_stream_close(stream: *mut FbwStream, samples: *mut u64, frames: *mut u64) -> FbwStatus {
    guard(|| {
        let s = stream.as_mut().ok_or_else(|| null("stream"))?;
        let summary = s.state.close();
        if let Some(p) = samples.as_mut() {
            *p = summary.samples_emitted;
        }
        if let Some(p) = frames.as_mut() {
            *p = summary.frames_consumed;
        }
        Ok(())
    })
}

/// # Safety
/// `stream` must come from [`fbw_stream_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fbw_stream_free(stream: *mut FbwStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}
