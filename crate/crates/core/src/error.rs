use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

/// Pipeline stage an error originated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Input,
    Select,
    Track,
    Extract,
    Filter,
    Peaks,
    Rate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Input => "input",
            Stage::Select => "select",
            Stage::Track => "track",
            Stage::Extract => "extract",
            Stage::Filter => "filter",
            Stage::Peaks => "peaks",
            Stage::Rate => "rate",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed stream at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("truncated payload in frame {frame}")]
    Truncated { frame: usize },

    #[error("unsupported image: {0}")]
    Unsupported(String),

    #[error("need at least {needed} frames, found {found}")]
    InsufficientInput { needed: usize, found: usize },

    #[error("{path}: dimensions {found_w}x{found_h} differ from {expected_w}x{expected_h}")]
    DimensionMismatch {
        path: PathBuf,
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("point ({x:.2}, {y:.2}) is within {margin} px of the {width}x{height} frame border")]
    PointOutOfBounds {
        x: f64,
        y: f64,
        margin: usize,
        width: usize,
        height: usize,
    },

    #[error("degenerate texture: min eigenvalue {min_eig:.3e} below threshold")]
    DegenerateTexture { min_eig: f64 },

    #[error("non-finite arithmetic: {0}")]
    Numeric(String),

    #[error("all points lost by frame {frame}")]
    AllPointsLost { frame: usize },

    #[error("keypoint file line {line}: {message}")]
    KeypointSyntax { line: usize, message: String },

    #[error("unknown landmark \"{0}\"")]
    UnknownLandmark(String),

    #[error("duplicate landmark \"{0}\"")]
    DuplicateLandmark(String),

    #[error("missing landmark \"{0}\"")]
    MissingLandmark(&'static str),

    #[error("invalid keypoints: {0}")]
    InvalidKeypoints(String),

    #[error("degenerate grid: {dropped} of {total} points fell outside the trackable area")]
    DegenerateGrid { dropped: usize, total: usize },

    #[error("no point survives past frame 1")]
    EmptySignal,

    #[error("filter design: {0}")]
    FilterDesign(String),

    #[error("signal of {len} samples is too short, need more than {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("duration must be positive")]
    ZeroDuration,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at(self, stage: Stage) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The stage tag, if this error came out of the end-to-end pipeline.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// The innermost untagged error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
