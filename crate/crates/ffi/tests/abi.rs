use std::ffi::{CStr, CString};
use std::ptr;

use breathflow_ffi::*;

fn last_error() -> String {
    let p = bf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// 200x200, 10 fps, 30 s scene at 18 bpm.
fn small_scene() -> (*mut BfSequence, *mut BfKeypoints, f64) {
    let params = BfSceneParams {
        width: 200,
        height: 200,
        fps: 10.0,
        ..bf_scene_default()
    };
    let (mut seq, mut kp, mut truth) = (ptr::null_mut(), ptr::null_mut(), 0.0);
    let status = unsafe { bf_synth_render(&params, &mut seq, &mut kp, &mut truth) };
    assert_eq!(status, BfStatus::Ok);
    (seq, kp, truth)
}

#[test]
fn synthetic_scene_estimate_round_trip() {
    let (seq, kp, truth) = small_scene();
    assert_eq!(truth, 18.0);
    assert_eq!(unsafe { bf_sequence_len(seq) }, 300);
    let mut report = ptr::null_mut();
    let status = unsafe { bf_estimate(seq, kp, BfPointKind::ChestGrid as i32, ptr::null(), &mut report) };
    assert_eq!(status, BfStatus::Ok);
    let bpm = unsafe { bf_report_bpm(report) };
    assert!((bpm - truth).abs() <= 1.0, "bpm {bpm}");

    let n = unsafe { bf_report_peaks(report, ptr::null_mut(), 0) };
    let mut peaks = vec![0usize; n];
    assert_eq!(unsafe { bf_report_peaks(report, peaks.as_mut_ptr(), n) }, n);
    assert!(peaks.windows(2).all(|w| w[0] < w[1]));
    assert!((n as f64 * 2.0 - bpm).abs() < 1e-9, "30 s window: bpm is twice the peak count");

    let json = unsafe { CStr::from_ptr(bf_report_json(report)) }.to_str().unwrap();
    let value: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(value["n_peaks"].as_u64().unwrap() as usize, n);
    assert_eq!(value["kind"], "chest_grid");

    unsafe {
        bf_report_free(report);
        bf_keypoints_free(kp);
        bf_sequence_free(seq);
    }
}

#[test]
fn tracks_expose_positions() {
    let (seq, kp, _) = small_scene();
    let mut tracks = ptr::null_mut();
    let status = unsafe { bf_track(seq, kp, BfPointKind::ChestPoints as i32, ptr::null(), &mut tracks) };
    assert_eq!(status, BfStatus::Ok);
    assert_eq!(unsafe { bf_tracks_points(tracks) }, 3);
    assert_eq!(unsafe { bf_tracks_frames(tracks) }, 300);
    let (mut x, mut y, mut tracked) = (0.0, 0.0, -1);
    let status = unsafe { bf_tracks_position(tracks, 0, 299, &mut x, &mut y, &mut tracked) };
    assert_eq!(status, BfStatus::Ok);
    assert_eq!(tracked, 1);
    assert!(x.is_finite() && y.is_finite());
    let status = unsafe { bf_tracks_position(tracks, 3, 0, &mut x, &mut y, ptr::null_mut()) };
    assert_eq!(status, BfStatus::InvalidArgument);
    unsafe {
        bf_tracks_free(tracks);
        bf_keypoints_free(kp);
        bf_sequence_free(seq);
    }
}

#[test]
fn pushed_frames_and_manual_keypoints() {
    let mut seq = ptr::null_mut();
    assert_eq!(unsafe { bf_sequence_new(64, 48, 30.0, &mut seq) }, BfStatus::Ok);
    let frame: Vec<u8> = (0..64 * 48).map(|i| ((i * 37) % 251) as u8).collect();
    assert_eq!(unsafe { bf_sequence_push_gray8(seq, frame.as_ptr(), frame.len()) }, BfStatus::Ok);
    assert_eq!(unsafe { bf_sequence_push_gray8(seq, frame.as_ptr(), 10) }, BfStatus::InvalidArgument);
    assert!(last_error().contains("expected 3072 bytes"));
    assert_eq!(unsafe { bf_sequence_len(seq) }, 1);

    let mut kp = ptr::null_mut();
    assert_eq!(unsafe { bf_keypoints_new(&mut kp) }, BfStatus::Ok);
    assert_eq!(unsafe { bf_keypoints_set(kp, BfLandmark::Nose as i32, 30.0, 20.0) }, BfStatus::Ok);
    assert_eq!(unsafe { bf_keypoints_set(kp, 42, 1.0, 1.0) }, BfStatus::InvalidArgument);
    let (mut x, mut y) = (0.0, 0.0);
    assert_eq!(unsafe { bf_keypoints_get(kp, BfLandmark::Nose as i32, &mut x, &mut y) }, BfStatus::Ok);
    assert_eq!((x, y), (30.0, 20.0));
    assert_eq!(unsafe { bf_keypoints_get(kp, BfLandmark::Chin as i32, &mut x, &mut y) }, BfStatus::Format);

    // one frame cannot be tracked
    let mut report = ptr::null_mut();
    let status = unsafe { bf_estimate(seq, kp, BfPointKind::FacePoints as i32, ptr::null(), &mut report) };
    assert_ne!(status, BfStatus::Ok);
    assert!(report.is_null());
    unsafe {
        bf_keypoints_free(kp);
        bf_sequence_free(seq);
    }
}

#[test]
fn errors_map_to_codes_and_messages() {
    let (seq, kp, _) = small_scene();
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { bf_estimate(ptr::null(), kp, 0, ptr::null(), &mut report) },
        BfStatus::NullPointer
    );
    assert_eq!(unsafe { bf_estimate(seq, kp, 7, ptr::null(), &mut report) }, BfStatus::InvalidArgument);
    assert!(last_error().contains("BfPointKind"));

    let mut cfg = bf_config_default();
    cfg.signal_mode = 5;
    assert_eq!(unsafe { bf_estimate(seq, kp, 0, &cfg, &mut report) }, BfStatus::InvalidArgument);

    cfg = bf_config_default();
    cfg.window_half_width = 150;
    let status = unsafe { bf_estimate(seq, kp, BfPointKind::ChestPoints as i32, &cfg, &mut report) };
    assert_eq!(status, BfStatus::OutOfBounds);
    assert!(last_error().starts_with("[select]"), "{}", last_error());

    let missing = CString::new("/nonexistent/video.y4m").unwrap();
    let mut opened = ptr::null_mut();
    assert_eq!(unsafe { bf_sequence_open(missing.as_ptr(), ptr::null(), 0.0, &mut opened) }, BfStatus::Io);

    let bad = CString::new("{\"nose\": [1, 2], \"nose\": [3, 4]}").unwrap();
    let mut parsed = ptr::null_mut();
    assert_eq!(unsafe { bf_keypoints_parse(bad.as_ptr(), &mut parsed) }, BfStatus::Format);
    assert!(parsed.is_null());

    unsafe {
        bf_keypoints_free(kp);
        bf_sequence_free(seq);
        // freeing null is a no-op
        bf_sequence_free(ptr::null_mut());
        bf_report_free(ptr::null_mut());
    }
}

#[test]
fn open_reads_y4m_written_by_the_core_crate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = breathflow::synth::SceneSpec { duration_s: 2.0, ..breathflow::synth::SceneSpec::new(96, 64) };
    let renderer = breathflow::synth::SceneRenderer::new(spec).unwrap();
    let outputs = breathflow::synth::SceneOutputs { pgm_frames: false, y4m: true };
    let written = breathflow::synth::write_scene(&renderer, dir.path(), outputs).unwrap();
    let path = CString::new(written.y4m.unwrap().to_str().unwrap()).unwrap();
    let mut seq = ptr::null_mut();
    assert_eq!(unsafe { bf_sequence_open(path.as_ptr(), ptr::null(), 0.0, &mut seq) }, BfStatus::Ok);
    assert_eq!(unsafe { bf_sequence_len(seq) }, 60);
    let json = CString::new(std::fs::read_to_string(written.keypoints).unwrap()).unwrap();
    let mut kp = ptr::null_mut();
    assert_eq!(unsafe { bf_keypoints_parse(json.as_ptr(), &mut kp) }, BfStatus::Ok);
    unsafe {
        bf_keypoints_free(kp);
        bf_sequence_free(seq);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(bf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
