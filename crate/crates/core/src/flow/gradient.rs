use crate::frame::{Frame, Plane};

/// Horizontal and vertical image derivatives.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub ix: Plane,
    pub iy: Plane,
}

/// Scharr 3x3 derivatives with replicate borders: smoothing taps `[3, 10, 3]`
/// and central difference `[-1, 0, 1] / 2`, overall scale `1/32`, so a linear
/// ramp of slope `s` has derivative exactly `s` in the interior.
pub fn spatial_gradient(frame: &Frame) -> Gradients {
    let (w, h) = frame.dims();
    let src = frame.data();
    let mut ix = vec![0.0f32; w * h];
    let mut iy = vec![0.0f32; w * h];
    const K: f32 = 1.0 / 32.0;

    let row_index = |y: isize| y.clamp(0, h as isize - 1) as usize * w;
    for y in 0..h {
        let up = row_index(y as isize - 1);
        let mid = y * w;
        let down = row_index(y as isize + 1);
        let (ru, rm, rd) = (&src[up..up + w], &src[mid..mid + w], &src[down..down + w]);
        let out_x = &mut ix[mid..mid + w];
        let out_y = &mut iy[mid..mid + w];

        let mut kernel = |x: usize, l: usize, r: usize| {
            out_x[x] = K * (3.0 * (ru[r] - ru[l]) + 10.0 * (rm[r] - rm[l]) + 3.0 * (rd[r] - rd[l]));
            out_y[x] = K * (3.0 * (rd[l] - ru[l]) + 10.0 * (rd[x] - ru[x]) + 3.0 * (rd[r] - ru[r]));
        };
        if w == 1 {
            kernel(0, 0, 0);
            continue;
        }
        kernel(0, 0, 1);
        for x in 1..w - 1 {
            kernel(x, x - 1, x + 1);
        }
        kernel(w - 1, w - 2, w - 1);
    }

    Gradients {
        ix: Plane::new(w, h, ix).expect("dimensions preserved"),
        iy: Plane::new(w, h, iy).expect("dimensions preserved"),
    }
}

/// Scharr derivatives at one pixel (clamped into the grid), bit-identical to
/// the corresponding entries of [`spatial_gradient`].
#[inline]
pub(crate) fn scharr_at(plane: &Plane, x: isize, y: isize) -> (f32, f32) {
    const K: f32 = 1.0 / 32.0;
    let x = x.clamp(0, plane.width() as isize - 1);
    let y = y.clamp(0, plane.height() as isize - 1);
    let at = |dx: isize, dy: isize| plane.get_clamped(x + dx, y + dy);
    let (ul, um, ur) = (at(-1, -1), at(0, -1), at(1, -1));
    let (ml, mr) = (at(-1, 0), at(1, 0));
    let (dl, dm, dr) = (at(-1, 1), at(0, 1), at(1, 1));
    let gx = K * (3.0 * (ur - ul) + 10.0 * (mr - ml) + 3.0 * (dr - dl));
    let gy = K * (3.0 * (dl - ul) + 10.0 * (dm - um) + 3.0 * (dr - ur));
    (gx, gy)
}
