use std::sync::OnceLock;

use super::gradient::{spatial_gradient, Gradients};
use crate::frame::{Frame, Plane};

const BINOMIAL: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Multi-resolution stack; level 0 is full resolution and each further level
/// halves both dimensions (rounding up).
///
/// A pyramid may cover only a rectangle of its source frame. Level `k` pixel
/// `(i, j)` then corresponds to pixel `(i + ox / 2^k, j + oy / 2^k)` of the
/// full-frame pyramid, where `(ox, oy)` is [`Pyramid::origin`].
#[derive(Debug)]
pub struct Pyramid {
    levels: Vec<Frame>,
    gradients: Vec<OnceLock<Gradients>>,
    requested: usize,
    origin: (usize, usize),
    full_dims: (usize, usize),
}

impl Pyramid {
    pub fn levels(&self) -> &[Frame] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &Frame {
        &self.levels[k]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Number of levels originally requested, when the window-size limit
    /// forced fewer.
    pub fn reduced_from(&self) -> Option<usize> {
        (self.requested > self.levels.len()).then_some(self.requested)
    }

    /// Level-0 position of the covered rectangle's top-left corner.
    pub fn origin(&self) -> (usize, usize) {
        self.origin
    }

    /// Dimensions of the source frame.
    pub fn full_dims(&self) -> (usize, usize) {
        self.full_dims
    }

    /// Spatial gradients of level `k`, computed on first use.
    pub fn gradients(&self, k: usize) -> &Gradients {
        self.gradients[k].get_or_init(|| spatial_gradient(&self.levels[k]))
    }
}

/// Builds up to `levels` levels. A level is only kept while both of its
/// dimensions are at least the full window side `2 * window_half_width + 1`;
/// level 0 is always kept.
pub fn build_pyramid(frame: &Frame, levels: usize, window_half_width: usize) -> Pyramid {
    let (w, h) = frame.dims();
    let depth = pyramid_depth(w, h, levels, window_half_width);
    if depth < levels.max(1) {
        log::debug!("pyramid reduced from {levels} to {depth} levels for window half-width {window_half_width}");
    }
    let mut out = vec![frame.clone()];
    while out.len() < depth {
        let next = pyr_down(out.last().expect("non-empty"));
        out.push(next);
    }
    Pyramid {
        gradients: (0..out.len()).map(|_| OnceLock::new()).collect(),
        levels: out,
        requested: levels.max(1),
        origin: (0, 0),
        full_dims: (w, h),
    }
}

/// Number of levels [`build_pyramid`] keeps for a `width`x`height` frame.
pub fn pyramid_depth(width: usize, height: usize, levels: usize, window_half_width: usize) -> usize {
    let min_side = 2 * window_half_width + 1;
    let (mut w, mut h) = (width, height);
    let mut depth = 1;
    while depth < levels && w.div_ceil(2) >= min_side && h.div_ceil(2) >= min_side {
        w = w.div_ceil(2);
        h = h.div_ceil(2);
        depth += 1;
    }
    depth
}

/// A `depth`-level pyramid over the `size` rectangle of `frame` at `origin`.
/// With `origin` a multiple of `2^(depth-1)` every level is an exact
/// sub-grid of the full-frame pyramid, up to border effects within a few
/// coarse pixels of cropped (non-frame) edges.
pub(crate) fn build_pyramid_region(
    frame: &Frame,
    origin: (usize, usize),
    size: (usize, usize),
    depth: usize,
    requested: usize,
) -> Pyramid {
    let (fw, fh) = frame.dims();
    let (ox, oy) = origin;
    let (w, h) = size;
    debug_assert!(ox + w <= fw && oy + h <= fh && w > 0 && h > 0);
    let base = if (ox, oy, w, h) == (0, 0, fw, fh) {
        frame.clone()
    } else {
        let src = frame.data();
        let mut data = Vec::with_capacity(w * h);
        for y in oy..oy + h {
            data.extend_from_slice(&src[y * fw + ox..y * fw + ox + w]);
        }
        Frame::from_plane_unchecked(Plane::new(w, h, data).expect("non-empty crop"))
    };
    let mut out = vec![base];
    while out.len() < depth.max(1) {
        let next = pyr_down(out.last().expect("non-empty"));
        out.push(next);
    }
    Pyramid {
        gradients: (0..out.len()).map(|_| OnceLock::new()).collect(),
        levels: out,
        requested: requested.max(1),
        origin,
        full_dims: (fw, fh),
    }
}

/// Separable `[1 4 6 4 1] / 16` blur with replicate borders, keeping every
/// other sample in each direction. Only the retained columns are blurred.
pub(crate) fn pyr_down(frame: &Frame) -> Frame {
    let (w, h) = frame.dims();
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    let src = frame.data();
    let clamp_x = |x: isize| x.clamp(0, w as isize - 1) as usize;

    let mut tmp = vec![0.0f32; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut tmp[y * ow..(y + 1) * ow];
        for (i, o) in out.iter_mut().enumerate() {
            let cx = 2 * i as isize;
            *o = if cx >= 2 && (cx as usize) + 2 < w {
                let c = cx as usize;
                BINOMIAL[0] * row[c - 2]
                    + BINOMIAL[1] * row[c - 1]
                    + BINOMIAL[2] * row[c]
                    + BINOMIAL[3] * row[c + 1]
                    + BINOMIAL[4] * row[c + 2]
            } else {
                (0..5)
                    .map(|k| BINOMIAL[k] * row[clamp_x(cx + k as isize - 2)])
                    .sum()
            };
        }
    }

    let mut dst = vec![0.0f32; ow * oh];
    let clamp_y = |y: isize| y.clamp(0, h as isize - 1) as usize;
    for j in 0..oh {
        let cy = 2 * j as isize;
        let rows: [usize; 5] = std::array::from_fn(|k| clamp_y(cy + k as isize - 2) * ow);
        let out = &mut dst[j * ow..(j + 1) * ow];
        for (i, o) in out.iter_mut().enumerate() {
            let v = BINOMIAL[0] * tmp[rows[0] + i]
                + BINOMIAL[1] * tmp[rows[1] + i]
                + BINOMIAL[2] * tmp[rows[2] + i]
                + BINOMIAL[3] * tmp[rows[3] + i]
                + BINOMIAL[4] * tmp[rows[4] + i];
            // rounding can push a convex combination marginally past the range
            *o = v.clamp(0.0, 1.0);
        }
    }
    Frame::from_plane_unchecked(Plane::new(ow, oh, dst).expect("dimensions are positive"))
}
