//! C ABI over the `breathflow` pipeline.
//!
//! Objects cross the boundary as opaque handles created by `bf_*_new` or
//! `bf_*_open` style constructors and released with the matching
//! `bf_*_free`. Every fallible call returns a [`BfStatus`]; on failure the
//! message is available from [`bf_last_error`] on the same thread.
//!
//! No call unwinds into C: panics are caught and reported as
//! [`BfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use breathflow::flow::{track_sequence, TrackMatrix, TrackStatus};
use breathflow::roi::{parse_keypoints_str, select_points, Bounds};
use breathflow::synth::{render_breathing_video, SceneSpec, Texture};
use breathflow::video_io::open_video;
use breathflow::{
    run_pipeline, Error, EstimateConfig, EstimateReport, FilterSpec, FlowConfig, Frame, FrameSequence,
    KeypointSet, Landmark, PeakParams, PointConfigKind, SignalMode,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    /// Malformed video, image or keypoint data.
    Format = 4,
    InsufficientInput = 5,
    /// Selected points fall outside the trackable area.
    OutOfBounds = 6,
    AllPointsLost = 7,
    /// Filtering, peak detection or rate computation failed.
    Signal = 8,
    Panic = 9,
}

impl BfStatus {
    fn of(e: &Error) -> Self {
        match e.root() {
            Error::Io { .. } => BfStatus::Io,
            Error::Format { .. }
            | Error::Truncated { .. }
            | Error::Unsupported(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidFrame(_)
            | Error::KeypointSyntax { .. }
            | Error::UnknownLandmark(_)
            | Error::DuplicateLandmark(_)
            | Error::MissingLandmark(_)
            | Error::InvalidKeypoints(_)
            | Error::Manifest(_) => BfStatus::Format,
            Error::InsufficientInput { .. } => BfStatus::InsufficientInput,
            Error::PointOutOfBounds { .. } | Error::DegenerateGrid { .. } => BfStatus::OutOfBounds,
            Error::AllPointsLost { .. } | Error::EmptySignal => BfStatus::AllPointsLost,
            Error::InvalidConfig(_) => BfStatus::InvalidArgument,
            Error::DegenerateTexture { .. }
            | Error::Numeric(_)
            | Error::FilterDesign(_)
            | Error::SignalTooShort { .. }
            | Error::ZeroDuration
            | Error::LengthMismatch { .. } => BfStatus::Signal,
            Error::Stage { .. } => unreachable!("root is never a stage wrapper"),
        }
    }
}

/// Decodes an integer passed from C into one of the enums below.
macro_rules! from_code {
    ($t:ident { $($v:ident),+ }) => {
        impl $t {
            fn decode(code: i32) -> Result<Self, BfStatus> {
                $(if code == $t::$v as i32 {
                    return Ok($t::$v);
                })+
                Err(fail(BfStatus::InvalidArgument, format!(concat!("unknown ", stringify!($t), " {}"), code)))
            }
        }
    };
}

from_code!(BfPointKind { FacePoints, ChestPoints, ChestGrid });
from_code!(BfLandmark { EyeLeft, EyeRight, Nose, Chin, ShoulderLeft, ShoulderRight, Neck });
from_code!(BfSignalMode { Displacement, Difference });
from_code!(BfTexture { Checker, Sinusoid, Noise, Flat });

/// Which points drive the breathing signal.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfPointKind {
    FacePoints = 0,
    ChestPoints = 1,
    ChestGrid = 2,
}

impl From<BfPointKind> for PointConfigKind {
    fn from(k: BfPointKind) -> Self {
        match k {
            BfPointKind::FacePoints => PointConfigKind::FacePoints,
            BfPointKind::ChestPoints => PointConfigKind::ChestPoints,
            BfPointKind::ChestGrid => PointConfigKind::ChestGrid,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfLandmark {
    EyeLeft = 0,
    EyeRight = 1,
    Nose = 2,
    Chin = 3,
    ShoulderLeft = 4,
    ShoulderRight = 5,
    Neck = 6,
}

impl From<BfLandmark> for Landmark {
    fn from(l: BfLandmark) -> Self {
        match l {
            BfLandmark::EyeLeft => Landmark::EyeLeft,
            BfLandmark::EyeRight => Landmark::EyeRight,
            BfLandmark::Nose => Landmark::Nose,
            BfLandmark::Chin => Landmark::Chin,
            BfLandmark::ShoulderLeft => Landmark::ShoulderLeft,
            BfLandmark::ShoulderRight => Landmark::ShoulderRight,
            BfLandmark::Neck => Landmark::Neck,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfSignalMode {
    Displacement = 0,
    Difference = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfTexture {
    Checker = 0,
    Sinusoid = 1,
    Noise = 2,
    Flat = 3,
}

/// Pipeline parameters. Obtain defaults from [`bf_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfConfig {
    pub window_half_width: usize,
    pub pyramid_levels: usize,
    pub max_iterations: usize,
    pub convergence_epsilon: f64,
    pub min_eigenvalue: f64,
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    pub filter_order: usize,
    pub prominence_factor: f64,
    pub min_peak_separation_s: f64,
    pub grid_rows: usize,
    pub grid_apex_scale: f64,
    /// A [`BfSignalMode`] value.
    pub signal_mode: i32,
}

impl From<&EstimateConfig> for BfConfig {
    fn from(c: &EstimateConfig) -> Self {
        Self {
            window_half_width: c.flow.window_half_width,
            pyramid_levels: c.flow.pyramid_levels,
            max_iterations: c.flow.max_iterations,
            convergence_epsilon: c.flow.convergence_epsilon,
            min_eigenvalue: c.flow.min_eigenvalue,
            low_cut_hz: c.filter.low_cut,
            high_cut_hz: c.filter.high_cut,
            filter_order: c.filter.order,
            prominence_factor: c.peaks.prominence_factor,
            min_peak_separation_s: c.peaks.min_separation_s,
            grid_rows: c.grid.rows,
            grid_apex_scale: c.grid.apex_scale,
            signal_mode: match c.signal_mode {
                SignalMode::Displacement => BfSignalMode::Displacement,
                SignalMode::Difference => BfSignalMode::Difference,
            } as i32,
        }
    }
}

impl TryFrom<&BfConfig> for EstimateConfig {
    type Error = BfStatus;

    fn try_from(c: &BfConfig) -> Result<Self, BfStatus> {
        let mut cfg = EstimateConfig {
            flow: FlowConfig {
                window_half_width: c.window_half_width,
                pyramid_levels: c.pyramid_levels,
                max_iterations: c.max_iterations,
                convergence_epsilon: c.convergence_epsilon,
                min_eigenvalue: c.min_eigenvalue,
            },
            filter: FilterSpec {
                low_cut: c.low_cut_hz,
                high_cut: c.high_cut_hz,
                order: c.filter_order,
            },
            peaks: PeakParams {
                prominence_factor: c.prominence_factor,
                min_separation_s: c.min_peak_separation_s,
            },
            ..EstimateConfig::default()
        };
        cfg.grid.rows = c.grid_rows;
        cfg.grid.apex_scale = c.grid_apex_scale;
        cfg.signal_mode = match BfSignalMode::decode(c.signal_mode)? {
            BfSignalMode::Displacement => SignalMode::Displacement,
            BfSignalMode::Difference => SignalMode::Difference,
        };
        Ok(cfg)
    }
}

/// Synthetic scene parameters. Obtain defaults from [`bf_scene_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfSceneParams {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub duration_s: f64,
    pub bpm: f64,
    /// Peak chest displacement in pixels.
    pub amplitude_px: f64,
    /// A [`BfTexture`] value.
    pub texture: i32,
    /// Texture period, or cell size for noise, in pixels.
    pub texture_period: f64,
    pub contrast: f64,
    pub head_noise_px: f64,
    pub seed: u64,
}

/// Grayscale frames at a fixed frame rate.
pub struct BfSequence {
    frames: Vec<Frame>,
    dims: (usize, usize),
    fps: f64,
}

/// Named body landmarks in pixel coordinates.
pub struct BfKeypoints(KeypointSet);

/// Outcome of one estimate.
pub struct BfReport {
    report: EstimateReport,
    json: CString,
}

/// Per-point trajectories.
pub struct BfTracks(TrackMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: BfStatus, message: impl Into<String>) -> BfStatus {
    set_error(message.into());
    status
}

fn from_error(e: Error) -> BfStatus {
    let status = BfStatus::of(&e);
    fail(status, e.to_string())
}

/// Runs `body`, converting panics into [`BfStatus::Panic`].
fn guard(body: impl FnOnce() -> BfStatus) -> BfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(BfStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn boxed<T>(out: *mut *mut T, value: T) -> BfStatus {
    // SAFETY: callers have checked `out` for null.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    BfStatus::Ok
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, BfStatus> {
    if s.is_null() {
        return Err(fail(BfStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(BfStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(BfStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

unsafe fn decode_request(kind: i32, config: *const BfConfig) -> Result<(BfPointKind, EstimateConfig), BfStatus> {
    let kind = BfPointKind::decode(kind)?;
    let cfg = match config.as_ref() {
        Some(c) => EstimateConfig::try_from(c)?,
        None => EstimateConfig::default(),
    };
    Ok((kind, cfg))
}

/// Message of the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn bf_config_default() -> BfConfig {
    BfConfig::from(&EstimateConfig::default())
}

#[no_mangle]
pub extern "C" fn bf_scene_default() -> BfSceneParams {
    let spec = SceneSpec::new(640, 480);
    let (texture, texture_period) = match spec.texture {
        Texture::Checker { period } => (BfTexture::Checker, period),
        Texture::Sinusoid2d { period } => (BfTexture::Sinusoid, period),
        Texture::Noise { scale } => (BfTexture::Noise, scale),
        Texture::Flat => (BfTexture::Flat, 0.0),
    };
    BfSceneParams {
        width: spec.width,
        height: spec.height,
        fps: spec.fps,
        duration_s: spec.duration_s,
        bpm: spec.breathing_freq * 60.0,
        amplitude_px: spec.breathing_amp,
        texture: texture as i32,
        texture_period,
        contrast: spec.contrast,
        head_noise_px: spec.head_noise_amp,
        seed: spec.seed,
    }
}

/// Creates an empty sequence of `width` x `height` frames at `fps`.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn bf_sequence_new(width: usize, height: usize, fps: f64, out: *mut *mut BfSequence) -> BfStatus {
    non_null!(out);
    guard(|| {
        if width == 0 || height == 0 {
            return fail(BfStatus::InvalidArgument, format!("frame size {width}x{height} is empty"));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return fail(BfStatus::InvalidArgument, format!("fps {fps} must be positive"));
        }
        boxed(
            out,
            BfSequence {
                frames: Vec::new(),
                dims: (width, height),
                fps,
            },
        )
    })
}

/// Appends one 8-bit grayscale frame of `width * height` bytes in row order.
///
/// # Safety
/// `seq` must be a live handle and `pixels` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn bf_sequence_push_gray8(seq: *mut BfSequence, pixels: *const u8, len: usize) -> BfStatus {
    non_null!(seq, pixels);
    let seq = &mut *seq;
    let bytes = std::slice::from_raw_parts(pixels, len);
    guard(|| {
        let (w, h) = seq.dims;
        if len != w * h {
            return fail(BfStatus::InvalidArgument, format!("expected {} bytes for {w}x{h}, got {len}", w * h));
        }
        match Frame::from_u8(w, h, bytes) {
            Ok(f) => {
                seq.frames.push(f);
                BfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Loads a Y4M file or a directory of PGM/PNG frames. `pattern` filters
/// directory entries and may be null for all files; `fps <= 0` keeps the
/// file's rate (30 for directories).
///
/// # Safety
/// `path` must be a NUL-terminated string, `pattern` null or NUL-terminated,
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_sequence_open(
    path: *const c_char,
    pattern: *const c_char,
    fps: f64,
    out: *mut *mut BfSequence,
) -> BfStatus {
    non_null!(out);
    let path = match c_str(path, "path") {
        Ok(p) => p,
        Err(s) => return s,
    };
    let pattern = if pattern.is_null() {
        "*"
    } else {
        match c_str(pattern, "pattern") {
            Ok(p) => p,
            Err(s) => return s,
        }
    };
    guard(|| {
        let fps = (fps > 0.0).then_some(fps);
        let stream = match open_video(Path::new(path), pattern, fps) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        let (dims, fps) = (stream.dims, stream.fps);
        match stream.collect::<Result<Vec<_>, _>>() {
            Ok(frames) => boxed(out, BfSequence { frames, dims, fps }),
            Err(e) => from_error(e),
        }
    })
}

/// Number of frames, or 0 for a null handle.
///
/// # Safety
/// `seq` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bf_sequence_len(seq: *const BfSequence) -> usize {
    seq.as_ref().map_or(0, |s| s.frames.len())
}

/// # Safety
/// `seq` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bf_sequence_free(seq: *mut BfSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Renders a synthetic breathing scene. The true rate is written to
/// `truth_bpm` when it is not null.
///
/// # Safety
/// `params` must be readable; `out_seq` and `out_keypoints` must be valid
/// pointers; `truth_bpm` may be null.
#[no_mangle]
pub unsafe extern "C" fn bf_synth_render(
    params: *const BfSceneParams,
    out_seq: *mut *mut BfSequence,
    out_keypoints: *mut *mut BfKeypoints,
    truth_bpm: *mut f64,
) -> BfStatus {
    non_null!(params, out_seq, out_keypoints);
    let p = *params;
    guard(|| {
        if !(p.bpm.is_finite() && p.bpm > 0.0) {
            return fail(BfStatus::InvalidArgument, format!("bpm {} must be positive", p.bpm));
        }
        let texture = match BfTexture::decode(p.texture) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let texture = match texture {
            BfTexture::Checker => Texture::Checker { period: p.texture_period },
            BfTexture::Sinusoid => Texture::Sinusoid2d { period: p.texture_period },
            BfTexture::Noise => Texture::Noise { scale: p.texture_period },
            BfTexture::Flat => Texture::Flat,
        };
        let spec = SceneSpec {
            fps: p.fps,
            duration_s: p.duration_s,
            breathing_amp: p.amplitude_px,
            texture,
            contrast: p.contrast,
            head_noise_amp: p.head_noise_px,
            seed: p.seed,
            ..SceneSpec::new(p.width, p.height).with_bpm(p.bpm)
        };
        let (seq, truth, keypoints) = match render_breathing_video(&spec) {
            Ok(r) => r,
            Err(e) => return from_error(e),
        };
        let fps = seq.fps();
        boxed(
            out_seq,
            BfSequence {
                frames: seq.into_frames(),
                dims: (p.width, p.height),
                fps,
            },
        );
        boxed(out_keypoints, BfKeypoints(keypoints));
        if !truth_bpm.is_null() {
            *truth_bpm = truth.bpm;
        }
        BfStatus::Ok
    })
}

/// Creates an empty landmark set.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_keypoints_new(out: *mut *mut BfKeypoints) -> BfStatus {
    non_null!(out);
    boxed(out, BfKeypoints(KeypointSet::new()))
}

/// Parses a landmark JSON document.
///
/// # Safety
/// `json` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_keypoints_parse(json: *const c_char, out: *mut *mut BfKeypoints) -> BfStatus {
    non_null!(out);
    let text = match c_str(json, "json") {
        Ok(t) => t,
        Err(s) => return s,
    };
    guard(|| match parse_keypoints_str(text) {
        Ok(k) => boxed(out, BfKeypoints(k)),
        Err(e) => from_error(e),
    })
}

/// Sets or replaces one landmark.
///
/// # Safety
/// `keypoints` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bf_keypoints_set(keypoints: *mut BfKeypoints, landmark: i32, x: f64, y: f64) -> BfStatus {
    non_null!(keypoints);
    let landmark = match BfLandmark::decode(landmark) {
        Ok(l) => l,
        Err(s) => return s,
    };
    if !(x.is_finite() && y.is_finite()) {
        return fail(BfStatus::InvalidArgument, format!("landmark ({x}, {y}) is not finite"));
    }
    (*keypoints).0.set(landmark.into(), (x, y));
    BfStatus::Ok
}

/// Reads one landmark; returns [`BfStatus::Format`] when it is absent.
///
/// # Safety
/// `keypoints` must be a live handle and `x`, `y` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bf_keypoints_get(
    keypoints: *const BfKeypoints,
    landmark: i32,
    x: *mut f64,
    y: *mut f64,
) -> BfStatus {
    non_null!(keypoints, x, y);
    let landmark = match BfLandmark::decode(landmark) {
        Ok(l) => l,
        Err(s) => return s,
    };
    match (*keypoints).0.require(landmark.into()) {
        Ok(p) => {
            *x = p.0;
            *y = p.1;
            BfStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// # Safety
/// `keypoints` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bf_keypoints_free(keypoints: *mut BfKeypoints) {
    if !keypoints.is_null() {
        drop(Box::from_raw(keypoints));
    }
}

/// Estimates the breathing rate. `kind` is a [`BfPointKind`] value and
/// `config` may be null for defaults.
///
/// # Safety
/// `seq` and `keypoints` must be live handles, `config` null or readable,
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_estimate(
    seq: *const BfSequence,
    keypoints: *const BfKeypoints,
    kind: i32,
    config: *const BfConfig,
    out: *mut *mut BfReport,
) -> BfStatus {
    non_null!(seq, keypoints, out);
    let (seq, keypoints) = (&*seq, &(*keypoints).0);
    let (kind, cfg) = match decode_request(kind, config) {
        Ok(r) => r,
        Err(s) => return s,
    };
    guard(|| {
        let frames = seq.frames.iter().cloned().map(Ok);
        match run_pipeline(frames, seq.fps, keypoints, kind.into(), &cfg) {
            Ok(est) => {
                let json = CString::new(est.report.to_json()).expect("JSON has no NUL");
                boxed(
                    out,
                    BfReport {
                        report: est.report,
                        json,
                    },
                )
            }
            Err(e) => from_error(e),
        }
    })
}

/// Estimated rate in breaths per minute; NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bf_report_bpm(report: *const BfReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.bpm)
}

/// Copies up to `capacity` peak sample indices into `indices` and returns
/// the total number of peaks. Pass a null buffer to query the count.
///
/// # Safety
/// `report` must be null or a live handle; `indices` must be null or point
/// to `capacity` writable elements.
#[no_mangle]
pub unsafe extern "C" fn bf_report_peaks(report: *const BfReport, indices: *mut usize, capacity: usize) -> usize {
    let Some(r) = report.as_ref() else { return 0 };
    let peaks = &r.report.peak_indices;
    if !indices.is_null() {
        let n = peaks.len().min(capacity);
        ptr::copy_nonoverlapping(peaks.as_ptr(), indices, n);
    }
    peaks.len()
}

/// Points that survived tracking; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bf_report_points_used(report: *const BfReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.n_points_used)
}

/// The full report as JSON, owned by the handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bf_report_json(report: *const BfReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bf_report_free(report: *mut BfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Tracks the points selected by `kind` through the whole sequence.
///
/// # Safety
/// `seq` and `keypoints` must be live handles, `config` null or readable,
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_track(
    seq: *const BfSequence,
    keypoints: *const BfKeypoints,
    kind: i32,
    config: *const BfConfig,
    out: *mut *mut BfTracks,
) -> BfStatus {
    non_null!(seq, keypoints, out);
    let (seq, keypoints) = (&*seq, &(*keypoints).0);
    let (kind, cfg) = match decode_request(kind, config) {
        Ok(r) => r,
        Err(s) => return s,
    };
    guard(|| {
        let (width, height) = seq.dims;
        let bounds = Bounds {
            width,
            height,
            margin: cfg.flow.window_half_width,
        };
        let result = select_points(kind.into(), keypoints, cfg.grid, Some(bounds)).and_then(|sel| {
            let frames = FrameSequence::new(seq.frames.clone(), seq.fps)?;
            track_sequence(&frames, &sel.points, &cfg.flow)
        });
        match result {
            Ok(t) => boxed(out, BfTracks(t)),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `tracks` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bf_tracks_points(tracks: *const BfTracks) -> usize {
    tracks.as_ref().map_or(0, |t| t.0.n_points())
}

/// # Safety
/// `tracks` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bf_tracks_frames(tracks: *const BfTracks) -> usize {
    tracks.as_ref().map_or(0, |t| t.0.n_frames())
}

/// Position of `point` at `frame`; `tracked` receives 1 while the point is
/// tracked and 0 once it is lost. `tracked` may be null.
///
/// # Safety
/// `tracks` must be a live handle, `x` and `y` valid pointers, and
/// `tracked` null or valid.
#[no_mangle]
pub unsafe extern "C" fn bf_tracks_position(
    tracks: *const BfTracks,
    point: usize,
    frame: usize,
    x: *mut f64,
    y: *mut f64,
    tracked: *mut i32,
) -> BfStatus {
    non_null!(tracks, x, y);
    let t = &(*tracks).0;
    if point >= t.n_points() || frame >= t.n_frames() {
        return fail(
            BfStatus::InvalidArgument,
            format!("({point}, {frame}) outside {} points x {} frames", t.n_points(), t.n_frames()),
        );
    }
    let (px, py) = t.position(point, frame);
    *x = px;
    *y = py;
    if !tracked.is_null() {
        *tracked = i32::from(t.status(point, frame) == TrackStatus::Tracked);
    }
    BfStatus::Ok
}

/// # Safety
/// `tracks` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bf_tracks_free(tracks: *mut BfTracks) {
    if !tracks.is_null() {
        drop(Box::from_raw(tracks));
    }
}
