//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use breathflow::Frame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of the reference tracker on one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Degenerate { min_eig: f64 },
    Solved { d: (f64, f64), min_eig: f64, converged: bool, iterations: usize },
}

fn pixel(f: &Frame, x: i64, y: i64) -> f64 {
    let (w, h) = f.dims();
    let xc = x.max(0).min(w as i64 - 1) as usize;
    let yc = y.max(0).min(h as i64 - 1) as usize;
    f.data()[yc * w + xc] as f64
}

/// Scharr derivatives written out tap by tap.
pub fn scharr(f: &Frame) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (w, h) = f.dims();
    let mut gx = vec![vec![0.0; w]; h];
    let mut gy = vec![vec![0.0; w]; h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let p = |dx: i64, dy: i64| pixel(f, x + dx, y + dy);
            let dx = 3.0 * p(1, -1) + 10.0 * p(1, 0) + 3.0 * p(1, 1) - 3.0 * p(-1, -1) - 10.0 * p(-1, 0) - 3.0 * p(-1, 1);
            let dy = 3.0 * p(-1, 1) + 10.0 * p(0, 1) + 3.0 * p(1, 1) - 3.0 * p(-1, -1) - 10.0 * p(0, -1) - 3.0 * p(1, -1);
            gx[y as usize][x as usize] = dx / 32.0;
            gy[y as usize][x as usize] = dy / 32.0;
        }
    }
    (gx, gy)
}

/// Bilinear interpolation of a row-major table with clamped borders.
pub fn interp(table: &[Vec<f64>], x: f64, y: f64) -> f64 {
    let h = table.len();
    let w = table[0].len();
    let x = x.max(0.0).min((w - 1) as f64);
    let y = y.max(0.0).min((h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let ax = x - x0 as f64;
    let ay = y - y0 as f64;
    let mut v = 0.0;
    v += table[y0][x0] * (1.0 - ax) * (1.0 - ay);
    v += table[y0][x1] * ax * (1.0 - ay);
    v += table[y1][x0] * (1.0 - ax) * ay;
    v += table[y1][x1] * ax * ay;
    v
}

pub fn as_table(f: &Frame) -> Vec<Vec<f64>> {
    let (w, _) = f.dims();
    f.data().chunks(w).map(|r| r.iter().map(|&v| v as f64).collect()).collect()
}

/// Iterative single-level Lucas-Kanade with every sum spelled out: gradient
/// matrix from `prev`, mismatch vector against `next` resampled at the
/// current estimate, 2x2 solve by Cramer's rule, eigenvalue from the
/// characteristic polynomial.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_lk(
    prev: &Frame,
    next: &Frame,
    point: (f64, f64),
    guess: (f64, f64),
    half: i64,
    max_iterations: usize,
    epsilon: f64,
    min_eigenvalue: f64,
) -> Reference {
    let (gx, gy) = scharr(prev);
    let a = as_table(prev);
    let b = as_table(next);
    let mut g11 = 0.0;
    let mut g12 = 0.0;
    let mut g22 = 0.0;
    for j in -half..=half {
        for i in -half..=half {
            let x = point.0 + i as f64;
            let y = point.1 + j as f64;
            let ix = interp(&gx, x, y);
            let iy = interp(&gy, x, y);
            g11 += ix * ix;
            g12 += ix * iy;
            g22 += iy * iy;
        }
    }
    let count = ((2 * half + 1) * (2 * half + 1)) as f64;
    let trace = g11 + g22;
    let det = g11 * g22 - g12 * g12;
    let disc = (trace * trace - 4.0 * det).max(0.0);
    let min_eig = (trace - disc.sqrt()) / 2.0 / count;
    if min_eig < min_eigenvalue || det <= f64::MIN_POSITIVE {
        return Reference::Degenerate { min_eig };
    }

    let mut d = guess;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        iterations += 1;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for j in -half..=half {
            for i in -half..=half {
                let x = point.0 + i as f64;
                let y = point.1 + j as f64;
                let diff = interp(&a, x, y) - interp(&b, x + d.0, y + d.1);
                b1 += interp(&gx, x, y) * diff;
                b2 += interp(&gy, x, y) * diff;
            }
        }
        let sx = (b1 * g22 - g12 * b2) / det;
        let sy = (g11 * b2 - g12 * b1) / det;
        d = (d.0 + sx, d.1 + sy);
        if (sx * sx + sy * sy).sqrt() < epsilon {
            converged = true;
            break;
        }
    }
    Reference::Solved { d, min_eig, converged, iterations }
}

/// A smooth random frame and a sub-pixel translated, slightly noisy copy.
pub fn random_pair(seed: u64, size: usize) -> (Frame, Frame, (f64, f64)) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(0.15..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
                rng.random_range(0.15..0.5),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.04..0.08),
            )
        })
        .collect();
    let field = |x: f64, y: f64| 0.5 + waves.iter().map(|&(kx, ky, ph, a)| a * (kx * x + ky * y + ph).sin()).sum::<f64>();
    let shift = (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
    let noise: Vec<f32> = (0..size * size).map(|_| rng.random_range(-0.004..0.004)).collect();
    let prev = Frame::from_fn(size, size, |x, y| field(x as f64, y as f64) as f32);
    let next = Frame::from_fn(size, size, |x, y| {
        field(x as f64 - shift.0, y as f64 - shift.1) as f32 + noise[y * size + x]
    });
    (prev, next, shift)
}

/// Squared magnitude of the analog Butterworth band-pass prototype of
/// order `n`, evaluated at the pre-warped frequency of `f` Hz.
pub fn butterworth_band_power(f: f64, low: f64, high: f64, n: i32, fs: f64) -> f64 {
    let warp = |hz: f64| 2.0 * fs * (std::f64::consts::PI * hz / fs).tan();
    let omega = warp(f);
    let (wl, wh) = (warp(low), warp(high));
    let ratio = (omega * omega - wl * wh) / (omega * (wh - wl));
    1.0 / (1.0 + ratio.powi(2 * n))
}

/// Gain in dB of forward-backward filtering with the order-2 band-pass.
pub fn analytic_two_pass_db(f: f64, fs: f64) -> f64 {
    // two passes square the magnitude: 20*log10(|H|^2) = 10*log10(|H|^2) * 2
    20.0 * butterworth_band_power(f, 0.1, 0.5, 2, fs).log10()
}
