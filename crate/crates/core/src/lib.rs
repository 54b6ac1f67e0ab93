//! Breathing-rate estimation from video.
//!
//! Points on the face or chest are tracked with a sparse pyramidal
//! Lucas-Kanade tracker; their mean vertical motion becomes a signal that is
//! band-passed to 0.1-0.5 Hz, and the rate is the peak count per minute.
//! [`synth`] renders scenes with known motion for end-to-end checks.

pub mod error;
pub mod evaluate;
pub mod flow;
pub mod frame;
pub mod pipeline;
pub mod plot;
pub mod roi;
pub mod signal;
pub mod synth;
pub mod video_io;

pub use error::{Error, Result, Stage};
pub use flow::{FlowConfig, TrackMatrix, TrackStatus};
pub use frame::{Frame, FrameSequence, Plane};
pub use pipeline::{estimate, run_pipeline, Estimate, EstimateConfig, EstimateReport, Flag};
pub use roi::{KeypointSet, Landmark, PointConfigKind};
pub use signal::{BreathSignal, FilterSpec, PeakParams, SignalKind, SignalMode};
