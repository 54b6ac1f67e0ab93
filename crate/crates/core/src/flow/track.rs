use std::io::{self, Write};

use serde::Serialize;

use super::lk::{refine, Scratch};
use super::pyramid::{build_pyramid_region, pyramid_depth, Pyramid};
use super::FlowConfig;
use crate::error::{Error, Result};
use crate::frame::{Frame, FrameSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Tracked,
    Lost,
}

impl TrackStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrackStatus::Tracked => "tracked",
            TrackStatus::Lost => "lost",
        }
    }
}

/// Coarse-to-fine tracking of one point between two pyramids. The
/// displacement found at each level is doubled and used as the initial guess
/// at the next finer level.
///
/// The point is reported lost if full resolution hits degenerate texture or
/// fails to converge, or if the final position leaves the inset frame
/// bounds. A coarse level that is degenerate or does not converge is skipped
/// and the guess passed down unchanged (apart from the scale doubling).
pub fn track_point(
    pyr_prev: &Pyramid,
    pyr_next: &Pyramid,
    point: (f64, f64),
    cfg: &FlowConfig,
) -> Result<((f64, f64), TrackStatus)> {
    let mut scratch = Scratch::default();
    track_point_with(pyr_prev, pyr_next, point, cfg, &mut scratch)
}

fn track_point_with(
    pyr_prev: &Pyramid,
    pyr_next: &Pyramid,
    point: (f64, f64),
    cfg: &FlowConfig,
    scratch: &mut Scratch,
) -> Result<((f64, f64), TrackStatus)> {
    let (w, h) = pyr_prev.full_dims();
    if pyr_next.full_dims() != (w, h)
        || pyr_next.origin() != pyr_prev.origin()
        || pyr_next.level(0).dims() != pyr_prev.level(0).dims()
    {
        return Err(Error::InvalidFrame("pyramids cover different areas".into()));
    }
    if !(point.0 >= 0.0 && point.1 >= 0.0 && point.0 <= (w - 1) as f64 && point.1 <= (h - 1) as f64) {
        return Err(Error::PointOutOfBounds {
            x: point.0,
            y: point.1,
            margin: 0,
            width: w,
            height: h,
        });
    }

    let (ox, oy) = pyr_prev.origin();
    let local = (point.0 - ox as f64, point.1 - oy as f64);
    let top = pyr_prev.len().min(pyr_next.len()) - 1;
    let mut guess = (0.0, 0.0);
    for level in (0..=top).rev() {
        let scale = (1u32 << level) as f64;
        let p = (local.0 / scale, local.1 / scale);
        let step = refine(
            pyr_prev.level(level),
            pyr_next.level(level),
            None,
            p,
            guess,
            cfg,
            scratch,
        );
        let step = match step {
            Ok(step) if step.converged => step,
            // fine texture can vanish or alias under downsampling; a coarse
            // level that cannot lock on passes its guess down unchanged
            Ok(_) | Err(Error::DegenerateTexture { .. }) if level > 0 => {
                guess = (2.0 * guess.0, 2.0 * guess.1);
                continue;
            }
            Ok(_) | Err(Error::DegenerateTexture { .. }) => return Ok((point, TrackStatus::Lost)),
            Err(e) => return Err(e),
        };
        guess = if level > 0 {
            (2.0 * step.displacement.0, 2.0 * step.displacement.1)
        } else {
            step.displacement
        };
    }

    let moved = (point.0 + guess.0, point.1 + guess.1);
    if cfg.inside(moved.0, moved.1, w, h) {
        Ok((moved, TrackStatus::Tracked))
    } else {
        Ok((point, TrackStatus::Lost))
    }
}

/// Per-point, per-frame sub-pixel positions with tracked/lost status.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackMatrix {
    positions: Vec<Vec<(f64, f64)>>,
    status: Vec<Vec<TrackStatus>>,
    fps: f64,
}

impl TrackMatrix {
    pub fn new(positions: Vec<Vec<(f64, f64)>>, status: Vec<Vec<TrackStatus>>, fps: f64) -> Result<Self> {
        if positions.len() != status.len() {
            return Err(Error::LengthMismatch {
                left: positions.len(),
                right: status.len(),
            });
        }
        let frames = positions.first().map_or(0, Vec::len);
        for (p, s) in positions.iter().zip(&status) {
            if p.len() != frames || s.len() != frames {
                return Err(Error::LengthMismatch {
                    left: frames,
                    right: p.len().max(s.len()),
                });
            }
            if s.windows(2).any(|w| w[0] == TrackStatus::Lost && w[1] == TrackStatus::Tracked) {
                return Err(Error::InvalidConfig("a lost point cannot be tracked again".into()));
            }
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidConfig(format!("fps must be positive, got {fps}")));
        }
        Ok(Self { positions, status, fps })
    }

    pub fn n_points(&self) -> usize {
        self.positions.len()
    }

    pub fn n_frames(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn position(&self, point: usize, frame: usize) -> (f64, f64) {
        self.positions[point][frame]
    }

    pub fn status(&self, point: usize, frame: usize) -> TrackStatus {
        self.status[point][frame]
    }

    pub fn trajectory(&self, point: usize) -> &[(f64, f64)] {
        &self.positions[point]
    }

    pub fn statuses(&self, point: usize) -> &[TrackStatus] {
        &self.status[point]
    }

    /// Points still tracked in the final frame.
    pub fn n_tracked_at_end(&self) -> usize {
        self.status
            .iter()
            .filter(|s| s.last() == Some(&TrackStatus::Tracked))
            .count()
    }

    /// Writes `frame,point_id,x,y,status`, one row per (frame, point).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "frame,point_id,x,y,status")?;
        for t in 0..self.n_frames() {
            for p in 0..self.n_points() {
                let (x, y) = self.positions[p][t];
                writeln!(out, "{t},{p},{x:.6},{y:.6},{}", self.status[p][t].as_str())?;
            }
        }
        Ok(())
    }
}

/// Part of the frame the tracker builds pyramids over, and the region the
/// active points must stay inside for that crop to remain valid.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Crop {
    origin: (usize, usize),
    size: (usize, usize),
    safe: [f64; 4],
}

impl Crop {
    fn plan(points: &[(f64, f64)], (w, h): (usize, usize), depth: usize, half_width: usize) -> Self {
        let align = 1usize << (depth - 1);
        // level-0 reach of a coarsest-level solve: window, bilinear and
        // gradient taps, blur support, plus one window of capture range
        let reach = ((2 * half_width + 8) * align) as f64;
        let slack = (4 * align) as f64;
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        let lo = |v: f64| ((v - slack - reach).floor().max(0.0) as usize) / align * align;
        let hi = |v: f64, limit: usize| (((v + slack + reach).ceil().max(0.0) as usize) + 1).min(limit);
        let (x0, y0) = (lo(min_x), lo(min_y));
        let (x1, y1) = (hi(max_x, w), hi(max_y, h));
        Self {
            origin: (x0, y0),
            size: (x1 - x0, y1 - y0),
            safe: [min_x - slack, min_y - slack, max_x + slack, max_y + slack],
        }
    }

    fn holds(&self, (x, y): (f64, f64)) -> bool {
        x >= self.safe[0] && y >= self.safe[1] && x <= self.safe[2] && y <= self.safe[3]
    }
}

/// Incremental frame-to-frame tracker: each frame's output positions are the
/// next frame's inputs. Lost points keep their last position.
///
/// Pyramids are built only over a crop around the active points, large
/// enough that results match full-frame pyramids; the crop is re-planned
/// when points drift towards its edge.
pub struct Tracker {
    cfg: FlowConfig,
    prev: Pyramid,
    prev_frame: Frame,
    crop: Crop,
    depth: usize,
    dims: (usize, usize),
    positions: Vec<Vec<(f64, f64)>>,
    status: Vec<Vec<TrackStatus>>,
    frame: usize,
    scratch: Scratch,
}

impl Tracker {
    pub fn new(first: &Frame, points: &[(f64, f64)], cfg: &FlowConfig) -> Result<Self> {
        cfg.validate()?;
        if points.is_empty() {
            return Err(Error::InvalidConfig("no points to track".into()));
        }
        let (w, h) = first.dims();
        for &(x, y) in points {
            if !cfg.inside(x, y, w, h) {
                return Err(Error::PointOutOfBounds {
                    x,
                    y,
                    margin: cfg.window_half_width,
                    width: w,
                    height: h,
                });
            }
        }
        let depth = pyramid_depth(w, h, cfg.pyramid_levels, cfg.window_half_width);
        let crop = Crop::plan(points, (w, h), depth, cfg.window_half_width);
        let prev = build_pyramid_region(first, crop.origin, crop.size, depth, cfg.pyramid_levels);
        Ok(Self {
            cfg: cfg.clone(),
            prev,
            prev_frame: first.clone(),
            crop,
            depth,
            dims: (w, h),
            positions: points.iter().map(|&p| vec![p]).collect(),
            status: points.iter().map(|_| vec![TrackStatus::Tracked]).collect(),
            frame: 0,
            scratch: Scratch::default(),
        })
    }

    /// Pyramid depth actually used, which may be less than configured.
    pub fn pyramid_levels(&self) -> usize {
        self.depth
    }

    pub fn frames_seen(&self) -> usize {
        self.frame + 1
    }

    pub fn n_active(&self) -> usize {
        self.status
            .iter()
            .filter(|s| s.last() == Some(&TrackStatus::Tracked))
            .count()
    }

    fn active_positions(&self) -> Vec<(f64, f64)> {
        self.positions
            .iter()
            .zip(&self.status)
            .filter(|(_, s)| s.last() == Some(&TrackStatus::Tracked))
            .map(|(p, _)| *p.last().expect("seeded with the initial point"))
            .collect()
    }

    /// Tracks every active point into `next`. Fails once no point remains.
    pub fn advance(&mut self, next: &Frame) -> Result<()> {
        if next.dims() != self.dims {
            let (w, h) = next.dims();
            return Err(Error::InvalidFrame(format!(
                "frame {} is {w}x{h}, expected {}x{}",
                self.frame + 1,
                self.dims.0,
                self.dims.1
            )));
        }
        let active = self.active_positions();
        if !active.iter().all(|&p| self.crop.holds(p)) {
            self.crop = Crop::plan(&active, self.dims, self.depth, self.cfg.window_half_width);
            self.prev = build_pyramid_region(
                &self.prev_frame,
                self.crop.origin,
                self.crop.size,
                self.depth,
                self.cfg.pyramid_levels,
            );
        }
        let pyr_next = build_pyramid_region(next, self.crop.origin, self.crop.size, self.depth, self.cfg.pyramid_levels);
        for (pos, status) in self.positions.iter_mut().zip(self.status.iter_mut()) {
            let last = *pos.last().expect("seeded with the initial point");
            let (new_pos, new_status) = match status.last() {
                Some(TrackStatus::Tracked) => {
                    track_point_with(&self.prev, &pyr_next, last, &self.cfg, &mut self.scratch)?
                }
                _ => (last, TrackStatus::Lost),
            };
            pos.push(new_pos);
            status.push(new_status);
        }
        self.prev = pyr_next;
        self.prev_frame.clone_from(next);
        self.frame += 1;
        if self.n_active() == 0 {
            return Err(Error::AllPointsLost { frame: self.frame });
        }
        Ok(())
    }

    pub fn finish(self, fps: f64) -> Result<TrackMatrix> {
        TrackMatrix::new(self.positions, self.status, fps)
    }
}

/// Tracks `initial_points` through every frame of `seq`.
pub fn track_sequence(seq: &FrameSequence, initial_points: &[(f64, f64)], cfg: &FlowConfig) -> Result<TrackMatrix> {
    if seq.len() < 2 {
        return Err(Error::InsufficientInput {
            needed: 2,
            found: seq.len(),
        });
    }
    let frames = seq.frames();
    let mut tracker = Tracker::new(&frames[0], initial_points, cfg)?;
    for frame in &frames[1..] {
        tracker.advance(frame)?;
    }
    tracker.finish(seq.fps())
}
