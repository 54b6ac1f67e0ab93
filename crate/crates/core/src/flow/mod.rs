//! Sparse pyramidal Lucas-Kanade tracking.

mod gradient;
mod lk;
mod pyramid;
mod track;

pub use gradient::{spatial_gradient, Gradients};
pub use lk::{lk_refine, LkStep};
pub use pyramid::{build_pyramid, pyramid_depth, Pyramid};
pub use track::{track_point, track_sequence, TrackMatrix, TrackStatus, Tracker};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lucas-Kanade tracker parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    /// Half-width of the square integration window; the window is
    /// `2 * window_half_width + 1` pixels on a side.
    pub window_half_width: usize,
    pub pyramid_levels: usize,
    /// Iteration cap per pyramid level.
    pub max_iterations: usize,
    /// Step norm (pixels) below which a level is considered converged.
    pub convergence_epsilon: f64,
    /// Threshold on the smaller eigenvalue of the gradient matrix divided by
    /// the window pixel count.
    pub min_eigenvalue: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            window_half_width: 10,
            pyramid_levels: 3,
            max_iterations: 30,
            convergence_epsilon: 0.01,
            min_eigenvalue: 1e-4,
        }
    }
}

impl FlowConfig {
    /// Config for a full window size such as 20 or 40, mapped to the odd
    /// centered window with half-width `size / 2`.
    pub fn with_window(size: usize) -> Self {
        Self {
            window_half_width: size / 2,
            ..Self::default()
        }
    }

    pub fn window_pixels(&self) -> usize {
        let side = 2 * self.window_half_width + 1;
        side * side
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.window_half_width < 1 {
            return bad("window_half_width must be at least 1");
        }
        if self.pyramid_levels < 1 {
            return bad("pyramid_levels must be at least 1");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.convergence_epsilon.is_finite() && self.convergence_epsilon > 0.0) {
            return bad("convergence_epsilon must be positive");
        }
        if !(self.min_eigenvalue.is_finite() && self.min_eigenvalue >= 0.0) {
            return bad("min_eigenvalue must be non-negative");
        }
        Ok(())
    }

    /// Whether `(x, y)` lies at least one half-width inside a `width`x`height` frame.
    pub fn inside(&self, x: f64, y: f64, width: usize, height: usize) -> bool {
        let m = self.window_half_width as f64;
        x.is_finite()
            && y.is_finite()
            && x >= m
            && y >= m
            && x <= width as f64 - 1.0 - m
            && y <= height as f64 - 1.0 - m
    }
}
