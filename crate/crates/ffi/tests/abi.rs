use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use fbwave::model::{save_weights, to_bytes};
use fbwave::streaming::synthesize_seeded;
use fbwave::{FeatureTrack, FlowConfig, ModelWeights};
use fbwave_ffi::*;

fn micro() -> ModelWeights<f32> {
    ModelWeights::random(FlowConfig { gruflow: true, ..FlowConfig::micro() }, 3, 0.3).unwrap()
}

fn load(w: &ModelWeights<f32>) -> *mut FbwModel {
    let bytes = to_bytes(w);
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { fbw_model_from_bytes(bytes.as_ptr(), bytes.len(), &mut m) }, FbwStatus::Ok);
    assert!(!m.is_null());
    m
}

fn feature_values(frames: usize, dim: usize) -> Vec<f32> {
    (0..frames * dim).map(|i| ((i * 37) % 11) as f32 / 11.0 - 0.5).collect()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fbw_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn synthesis_matches_the_library() {
    let w = micro();
    let m = load(&w);
    let dim = unsafe { fbw_model_feature_dim(m) };
    assert_eq!(dim, 19);
    let frames = 5;
    let values = feature_values(frames, dim);
    let mut out = vec![0.0f32; frames * FBW_HOP];
    let st = unsafe { fbw_synthesize(m, values.as_ptr(), frames, 9, 0.7, out.as_mut_ptr(), out.len()) };
    assert_eq!(st, FbwStatus::Ok);
    let feat = FeatureTrack::new(frames, dim, values).unwrap();
    assert_eq!(out, synthesize_seeded(&w, &feat, 9, 0.7).unwrap());
    unsafe { fbw_model_free(m) };
}

#[test]
fn streaming_matches_offline_and_outlives_model() {
    let w = micro();
    let m = load(&w);
    let frames = 6;
    let values = feature_values(frames, 19);
    let mut offline = vec![0.0f32; frames * FBW_HOP];
    unsafe { fbw_synthesize(m, values.as_ptr(), frames, 1, 1.0, offline.as_mut_ptr(), offline.len()) };

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { fbw_stream_open(m, 1, 1.0, &mut s) }, FbwStatus::Ok);
    unsafe { fbw_model_free(m) };
    let mut streamed = Vec::new();
    for (start, len) in [(0, 2), (2, 0), (2, 3), (5, 1)] {
        let mut buf = vec![0.0f32; len * FBW_HOP];
        let st = unsafe { fbw_stream_push(s, values[start * 19..].as_ptr(), len, buf.as_mut_ptr(), buf.len()) };
        assert_eq!(st, FbwStatus::Ok);
        streamed.extend(buf);
    }
    assert_eq!(streamed, offline);
    let (mut samples, mut consumed) = (0u64, 0u64);
    assert_eq!(unsafe { fbw_stream_close(s, &mut samples, &mut consumed) }, FbwStatus::Ok);
    assert_eq!((samples, consumed), (6 * 128, 6));
    let mut buf = vec![0.0f32; FBW_HOP];
    let st = unsafe { fbw_stream_push(s, values.as_ptr(), 1, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(st, FbwStatus::StreamClosed);
    unsafe { fbw_stream_free(s) };
}

#[test]
fn likelihood_of_identity_model() {
    let w = ModelWeights::<f32>::identity(FlowConfig::micro()).unwrap();
    let m = load(&w);
    let audio = vec![0.0f32; 128];
    let values = feature_values(1, 19);
    let (mut total, mut per_dim) = (0.0, 0.0);
    let st = unsafe { fbw_log_likelihood(m, audio.as_ptr(), 128, values.as_ptr(), 1, &mut total, &mut per_dim) };
    assert_eq!(st, FbwStatus::Ok);
    assert!((total + 128.0 * 2f64.ln()).abs() < 1e-9);
    assert!((per_dim + 2f64.ln()).abs() < 1e-12);
    let mut macs = 0.0;
    assert_eq!(unsafe { fbw_count_macs(m, &mut macs) }, FbwStatus::Ok);
    assert!(macs > 0.0);
    unsafe { fbw_model_free(m) };
}

#[test]
fn error_codes() {
    let mut m = ptr::null_mut();
    let bad = [0u8; 8];
    assert_eq!(unsafe { fbw_model_from_bytes(bad.as_ptr(), bad.len(), &mut m) }, FbwStatus::Load);
    assert!(last_error().contains("magic"));

    let missing = CString::new("/nonexistent/weights.fbw").unwrap();
    assert_eq!(unsafe { fbw_model_load(missing.as_ptr(), &mut m) }, FbwStatus::Io);
    assert_eq!(unsafe { fbw_model_load(ptr::null(), &mut m) }, FbwStatus::NullPointer);

    let m = load(&micro());
    let values = feature_values(2, 19);
    let mut small = vec![0.0f32; 10];
    let st = unsafe { fbw_synthesize(m, values.as_ptr(), 2, 0, 0.7, small.as_mut_ptr(), small.len()) };
    assert_eq!(st, FbwStatus::BufferTooSmall);
    let mut nan = values.clone();
    nan[0] = f32::NAN;
    let mut out = vec![0.0f32; 256];
    let st = unsafe { fbw_synthesize(m, nan.as_ptr(), 2, 0, 0.7, out.as_mut_ptr(), out.len()) };
    assert_eq!(st, FbwStatus::InvalidInput);
    unsafe { fbw_model_free(m) };
}

#[test]
fn loads_from_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.fbw");
    save_weights(&micro(), &path).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { fbw_model_load(c.as_ptr(), &mut m) }, FbwStatus::Ok);
    unsafe { fbw_model_free(m) };
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/fbwave.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in ["fbw_model_load", "fbw_synthesize", "fbw_stream_push", "fbw_log_likelihood", "fbw_count_macs", "FBW_HOP"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(&src, format!("#include \"{header}\"\nint main(void) {{ return FBW_STATUS_OK; }}\n")).unwrap();
    match Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status() {
        Ok(status) => assert!(status.success()),
        Err(_) => eprintln!("no C compiler; header syntax not checked"),
    }
}
