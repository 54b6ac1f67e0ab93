use super::gradient::{scharr_at, Gradients};
use super::FlowConfig;
use crate::error::{Error, Result};
use crate::frame::{Frame, Plane};

/// Result of a single-level iterative Lucas-Kanade solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkStep {
    pub displacement: (f64, f64),
    /// Smaller eigenvalue of the gradient matrix divided by the window pixel count.
    pub min_eig: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Iterative forward-additive Lucas-Kanade at one resolution.
///
/// The gradient matrix is accumulated once from `prev` around `point`;
/// each iteration resamples `next` at `point + d` and applies
/// `d += G^-1 * sum(grad * (prev - next))` until the step norm drops below
/// `cfg.convergence_epsilon` or `cfg.max_iterations` is reached.
///
/// Fails with [`Error::PointOutOfBounds`] unless `point` lies one half-width
/// inside `prev`, and with [`Error::DegenerateTexture`] when the normalized
/// minimum eigenvalue is below `cfg.min_eigenvalue`.
pub fn lk_refine(
    prev: &Frame,
    next: &Frame,
    grads: &Gradients,
    point: (f64, f64),
    guess: (f64, f64),
    cfg: &FlowConfig,
) -> Result<LkStep> {
    let (w, h) = prev.dims();
    if !cfg.inside(point.0, point.1, w, h) {
        return Err(Error::PointOutOfBounds {
            x: point.0,
            y: point.1,
            margin: cfg.window_half_width,
            width: w,
            height: h,
        });
    }
    if next.dims() != (w, h) || grads.ix.width() != w || grads.ix.height() != h {
        return Err(Error::InvalidFrame("lk_refine inputs differ in size".into()));
    }
    let mut scratch = Scratch::default();
    refine(prev, next, Some(grads), point, guess, cfg, &mut scratch)
}

/// Reusable window buffers.
#[derive(Default)]
pub(crate) struct Scratch {
    prev: Vec<f64>,
    ix: Vec<f64>,
    iy: Vec<f64>,
    next: Vec<f64>,
    patch_x: Vec<f32>,
    patch_y: Vec<f32>,
}

/// Bilinearly samples the `(2r+1)^2` window centred on `(x, y)` in row-major
/// order. All window taps share the same fractional offset, so the weights
/// are computed once.
fn sample_window(plane: &Plane, x: f64, y: f64, r: usize, out: &mut Vec<f64>) {
    out.clear();
    let (w, h) = (plane.width(), plane.height());
    let fx = x.floor();
    let fy = y.floor();
    let ax = x - fx;
    let ay = y - fy;
    let x0 = fx as isize - r as isize;
    let y0 = fy as isize - r as isize;
    let side = 2 * r as isize + 1;
    let data = plane.data();

    let interior = x0 >= 0 && y0 >= 0 && x0 + side < w as isize && y0 + side < h as isize;
    if interior {
        let (x0, y0) = (x0 as usize, y0 as usize);
        for wy in 0..side as usize {
            let r0 = &data[(y0 + wy) * w + x0..];
            let r1 = &data[(y0 + wy + 1) * w + x0..];
            for wx in 0..side as usize {
                let top = r0[wx] as f64 * (1.0 - ax) + r0[wx + 1] as f64 * ax;
                let bottom = r1[wx] as f64 * (1.0 - ax) + r1[wx + 1] as f64 * ax;
                out.push(top * (1.0 - ay) + bottom * ay);
            }
        }
    } else {
        for wy in 0..side {
            for wx in 0..side {
                out.push(plane.sample_bilinear((x0 + wx) as f64 + ax, (y0 + wy) as f64 + ay));
            }
        }
    }
}

/// Gradient windows computed directly from `plane`: Scharr derivatives on the
/// `(2r+2)^2` integer lattice under the window, then the same shared-weight
/// bilinear interpolation as [`sample_window`]. Agrees with sampling the
/// full gradient planes (exactly away from the border, to rounding at it).
fn gradient_window(plane: &Plane, x: f64, y: f64, r: usize, s: &mut Scratch) {
    let fx = x.floor();
    let fy = y.floor();
    let ax = x - fx;
    let ay = y - fy;
    let x0 = fx as isize - r as isize;
    let y0 = fy as isize - r as isize;
    let side = 2 * r + 1;
    let lattice = side + 1;
    s.patch_x.clear();
    s.patch_y.clear();
    for j in 0..lattice as isize {
        for i in 0..lattice as isize {
            let (gx, gy) = scharr_at(plane, x0 + i, y0 + j);
            s.patch_x.push(gx);
            s.patch_y.push(gy);
        }
    }
    for (patch, out) in [(&s.patch_x, &mut s.ix), (&s.patch_y, &mut s.iy)] {
        out.clear();
        for wy in 0..side {
            let r0 = &patch[wy * lattice..];
            let r1 = &patch[(wy + 1) * lattice..];
            for wx in 0..side {
                let top = r0[wx] as f64 * (1.0 - ax) + r0[wx + 1] as f64 * ax;
                let bottom = r1[wx] as f64 * (1.0 - ax) + r1[wx + 1] as f64 * ax;
                out.push(top * (1.0 - ay) + bottom * ay);
            }
        }
    }
}

/// Smaller eigenvalue of the symmetric matrix `[[a, b], [b, c]]`.
#[inline]
pub(crate) fn min_eigenvalue(a: f64, b: f64, c: f64) -> f64 {
    let half_trace = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    half_trace - (half_diff * half_diff + b * b).sqrt()
}

/// [`lk_refine`] without the bounds precondition, used at coarse pyramid
/// levels where windows may overlap the replicated border. Without `grads`
/// the gradient windows are computed from `prev` on the spot.
pub(crate) fn refine(
    prev: &Frame,
    next: &Frame,
    grads: Option<&Gradients>,
    point: (f64, f64),
    guess: (f64, f64),
    cfg: &FlowConfig,
    s: &mut Scratch,
) -> Result<LkStep> {
    let r = cfg.window_half_width;
    let (px, py) = point;
    sample_window(prev, px, py, r, &mut s.prev);
    match grads {
        Some(g) => {
            sample_window(&g.ix, px, py, r, &mut s.ix);
            sample_window(&g.iy, px, py, r, &mut s.iy);
        }
        None => gradient_window(prev, px, py, r, s),
    }

    let (mut gxx, mut gxy, mut gyy) = (0.0f64, 0.0f64, 0.0f64);
    for (&gx, &gy) in s.ix.iter().zip(&s.iy) {
        gxx += gx * gx;
        gxy += gx * gy;
        gyy += gy * gy;
    }
    let n = s.prev.len() as f64;
    let min_eig = min_eigenvalue(gxx, gxy, gyy) / n;
    if !min_eig.is_finite() {
        return Err(Error::Numeric("gradient matrix is not finite".into()));
    }
    let det = gxx * gyy - gxy * gxy;
    if min_eig < cfg.min_eigenvalue || det <= f64::MIN_POSITIVE {
        return Err(Error::DegenerateTexture { min_eig });
    }
    let inv_det = 1.0 / det;

    let (mut dx, mut dy) = guess;
    let mut converged = false;
    let mut iterations = 0;
    let eps2 = cfg.convergence_epsilon * cfg.convergence_epsilon;
    while iterations < cfg.max_iterations {
        iterations += 1;
        sample_window(next, px + dx, py + dy, r, &mut s.next);
        let (mut bx, mut by) = (0.0f64, 0.0f64);
        for i in 0..s.next.len() {
            let diff = s.prev[i] - s.next[i];
            bx += s.ix[i] * diff;
            by += s.iy[i] * diff;
        }
        let step_x = inv_det * (gyy * bx - gxy * by);
        let step_y = inv_det * (gxx * by - gxy * bx);
        if !(step_x.is_finite() && step_y.is_finite()) {
            return Err(Error::Numeric("non-finite Lucas-Kanade update".into()));
        }
        dx += step_x;
        dy += step_y;
        if step_x * step_x + step_y * step_y < eps2 {
            converged = true;
            break;
        }
    }

    Ok(LkStep {
        displacement: (dx, dy),
        min_eig,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::spatial_gradient;

    fn checker(w: usize, h: usize, period: usize) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            if ((x / (period / 2)) + (y / (period / 2))) % 2 == 0 {
                0.9
            } else {
                0.1
            }
        })
    }

    #[test]
    fn identical_frames_give_zero_displacement() {
        let f = checker(64, 64, 8);
        let g = spatial_gradient(&f);
        let step = lk_refine(&f, &f, &g, (31.5, 30.25), (0.0, 0.0), &FlowConfig::default()).unwrap();
        assert_eq!(step.displacement, (0.0, 0.0));
        assert!(step.converged);
        assert_eq!(step.iterations, 1);
    }

    #[test]
    fn constant_window_is_degenerate() {
        let f = Frame::from_fn(40, 40, |_, _| 0.5);
        let g = spatial_gradient(&f);
        let err = lk_refine(&f, &f, &g, (20.0, 20.0), (0.0, 0.0), &FlowConfig::default()).unwrap_err();
        match err {
            Error::DegenerateTexture { min_eig } => assert_eq!(min_eig, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_points_near_border() {
        let f = checker(64, 64, 8);
        let g = spatial_gradient(&f);
        let cfg = FlowConfig::default();
        for p in [(0.0, 0.0), (9.9, 30.0), (30.0, 53.5)] {
            assert!(matches!(
                lk_refine(&f, &f, &g, p, (0.0, 0.0), &cfg),
                Err(Error::PointOutOfBounds { .. })
            ));
        }
        assert!(lk_refine(&f, &f, &g, (10.0, 53.0), (0.0, 0.0), &cfg).is_ok());
    }

    #[test]
    fn eigenvalue_formula() {
        assert!((min_eigenvalue(2.0, 0.0, 5.0) - 2.0).abs() < 1e-12);
        assert!((min_eigenvalue(1.0, 1.0, 1.0)).abs() < 1e-12);
    }
}
