//! End-to-end estimation: select points, track, extract, filter, count peaks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};
use crate::flow::{FlowConfig, TrackMatrix, Tracker};
use crate::frame::{Frame, FrameSequence};
use crate::roi::{select_points, Bounds, GridSpec, KeypointSet, PointConfigKind};
use crate::signal::{
    bandpass, breathing_rate, detect_peaks, displacement, extract_raw, BreathSignal, FilterSpec, PeakParams,
    SignalMode,
};

/// Every tunable of the pipeline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimateConfig {
    pub flow: FlowConfig,
    pub filter: FilterSpec,
    pub peaks: PeakParams,
    pub grid: GridSpec,
    pub signal_mode: SignalMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    NoBreathingDetected,
    AllZeroSignal,
    PyramidReduced,
    GridPointsDropped,
    PointsLost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub bpm: f64,
    pub n_peaks: usize,
    pub peak_indices: Vec<usize>,
    pub duration_s: f64,
    pub n_frames: usize,
    pub fps: f64,
    pub kind: PointConfigKind,
    pub n_points_used: usize,
    pub n_points_lost: usize,
    pub n_points_dropped: usize,
    pub pyramid_levels_used: usize,
    pub flags: Vec<Flag>,
    pub config: EstimateConfig,
}

impl EstimateReport {
    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A report together with the intermediate products it was computed from.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub report: EstimateReport,
    pub tracks: TrackMatrix,
    /// Per-frame mean y difference.
    pub raw: BreathSignal,
    /// The series that was band-passed (depends on the signal mode).
    pub filter_input: BreathSignal,
    pub filtered: BreathSignal,
}

/// Runs the whole pipeline on an in-memory sequence.
pub fn estimate(
    seq: &FrameSequence,
    keypoints: &KeypointSet,
    kind: PointConfigKind,
    cfg: &EstimateConfig,
) -> Result<EstimateReport> {
    run_pipeline(seq.frames().iter().cloned().map(Ok), seq.fps(), keypoints, kind, cfg).map(|e| e.report)
}

/// Runs the pipeline over a stream of frames, holding only two pyramids in
/// memory at a time. Every error is tagged with the stage that raised it.
pub fn run_pipeline<I>(
    frames: I,
    fps: f64,
    keypoints: &KeypointSet,
    kind: PointConfigKind,
    cfg: &EstimateConfig,
) -> Result<Estimate>
where
    I: IntoIterator<Item = Result<Frame>>,
{
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidConfig(format!("fps {fps} must be positive")).at(Stage::Input));
    }
    cfg.flow.validate().map_err(|e| e.at(Stage::Track))?;
    cfg.filter.validate(fps).map_err(|e| e.at(Stage::Filter))?;

    let mut frames = frames.into_iter();
    let first = match frames.next() {
        Some(f) => f.map_err(|e| e.at(Stage::Input))?,
        None => return Err(Error::InsufficientInput { needed: 2, found: 0 }.at(Stage::Input)),
    };
    let (width, height) = first.dims();
    let bounds = Bounds {
        width,
        height,
        margin: cfg.flow.window_half_width,
    };
    let selection = select_points(kind, keypoints, cfg.grid, Some(bounds)).map_err(|e| e.at(Stage::Select))?;

    let mut tracker = Tracker::new(&first, &selection.points, &cfg.flow).map_err(|e| e.at(Stage::Track))?;
    drop(first);
    for frame in frames {
        let frame = frame.map_err(|e| e.at(Stage::Input))?;
        tracker.advance(&frame).map_err(|e| e.at(Stage::Track))?;
    }
    let n_frames = tracker.frames_seen();
    if n_frames < 2 {
        return Err(Error::InsufficientInput { needed: 2, found: n_frames }.at(Stage::Input));
    }
    let pyramid_levels_used = tracker.pyramid_levels();
    let tracks = tracker.finish(fps).map_err(|e| e.at(Stage::Track))?;

    let raw = extract_raw(&tracks).map_err(|e| e.at(Stage::Extract))?;
    let filter_input = match cfg.signal_mode {
        SignalMode::Displacement => displacement(&raw).map_err(|e| e.at(Stage::Extract))?,
        SignalMode::Difference => raw.clone(),
    };
    let filtered = bandpass(&filter_input, &cfg.filter).map_err(|e| e.at(Stage::Filter))?;
    let peaks = detect_peaks(&filtered, &cfg.peaks).map_err(|e| e.at(Stage::Peaks))?;
    let duration_s = n_frames as f64 / fps;
    let bpm = breathing_rate(peaks.len(), duration_s).map_err(|e| e.at(Stage::Rate))?;

    let n_points_lost = tracks.n_points() - tracks.n_tracked_at_end();
    let mut flags = Vec::new();
    if peaks.is_empty() {
        flags.push(Flag::NoBreathingDetected);
    }
    if raw.is_all_zero() {
        flags.push(Flag::AllZeroSignal);
    }
    if pyramid_levels_used < cfg.flow.pyramid_levels {
        flags.push(Flag::PyramidReduced);
    }
    if !selection.dropped.is_empty() {
        flags.push(Flag::GridPointsDropped);
    }
    if n_points_lost > 0 {
        flags.push(Flag::PointsLost);
    }

    let report = EstimateReport {
        bpm,
        n_peaks: peaks.len(),
        peak_indices: peaks,
        duration_s,
        n_frames,
        fps,
        kind,
        n_points_used: selection.points.len(),
        n_points_lost,
        n_points_dropped: selection.dropped.len(),
        pyramid_levels_used,
        flags,
        config: cfg.clone(),
    };
    Ok(Estimate {
        report,
        tracks,
        raw,
        filter_input,
        filtered,
    })
}
