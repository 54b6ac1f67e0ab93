//! Butterworth band-pass design (bilinear transform with pre-warped band
//! edges) and zero-phase forward-backward filtering.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Band edges in Hz and the order of the low-pass prototype.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSpec {
    pub low_cut: f64,
    pub high_cut: f64,
    pub order: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            low_cut: 0.1,
            high_cut: 0.5,
            order: 2,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if self.order == 0 {
            return Err(Error::FilterDesign("order must be at least 1".into()));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::FilterDesign(format!("sample rate {fs} must be positive")));
        }
        let nyquist = fs / 2.0;
        if !(self.low_cut > 0.0 && self.low_cut < self.high_cut && self.high_cut < nyquist) {
            return Err(Error::FilterDesign(format!(
                "need 0 < low_cut < high_cut < {nyquist} Hz, got {} .. {}",
                self.low_cut, self.high_cut
            )));
        }
        Ok(())
    }
}

/// Second-order section in transposed direct form II, `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (self.a[0] + self.a[1] * z_inv + self.a[2] * z2)
    }

    /// State for which a unit step input is already at steady state.
    fn step_state(&self) -> [f64; 2] {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let z2 = b2 - a2 * gain;
        let z1 = b1 - a1 * gain + z2;
        [z1, z2]
    }

    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }
}

/// Cascade of biquads implementing a Butterworth band-pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassFilter {
    sections: Vec<Biquad>,
    fs: f64,
}

impl BandpassFilter {
    pub fn design(spec: &FilterSpec, fs: f64) -> Result<Self> {
        spec.validate(fs)?;
        let n = spec.order;
        let fs2 = 2.0 * fs;
        let warp = |f: f64| fs2 * (PI * f / fs).tan();
        let (wl, wh) = (warp(spec.low_cut), warp(spec.high_cut));
        let bw = wh - wl;
        let w0_sq = wl * wh;

        // analog low-pass prototype poles on the unit circle's left half
        let mut poles = Vec::with_capacity(2 * n);
        for k in 0..n {
            let m = 2.0 * k as f64 - n as f64 + 1.0;
            let proto = -Complex64::from_polar(1.0, PI * m / (2.0 * n as f64));
            let scaled = proto * (bw / 2.0);
            let root = (scaled * scaled - w0_sq).sqrt();
            poles.push(scaled + root);
            poles.push(scaled - root);
        }
        // n analog zeros at the origin; bilinear maps them to z = 1 and the
        // n zeros at infinity to z = -1
        let mut gain = Complex64::new(bw.powi(n as i32) * fs2.powi(n as i32), 0.0);
        for p in &poles {
            gain /= fs2 - p;
        }
        let digital: Vec<Complex64> = poles.iter().map(|p| (fs2 + p) / (fs2 - p)).collect();

        let sections = pair_poles(&digital)
            .into_iter()
            .enumerate()
            .map(|(i, (a1, a2))| {
                let k = if i == 0 { gain.re } else { 1.0 };
                Biquad {
                    b: [k, 0.0, -k],
                    a: [1.0, a1, a2],
                }
            })
            .collect();
        Ok(Self { sections, fs })
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Complex single-pass response at `freq` Hz.
    pub fn response(&self, freq: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / self.fs);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// Edge padding length: three times the number of coefficients of the
    /// equivalent single transfer function.
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    pub fn state_len(&self) -> usize {
        2 * self.sections.len()
    }

    /// Shortest signal that can be filtered.
    pub fn min_len(&self) -> usize {
        (6 * self.state_len()).max(self.pad_len()) + 1
    }

    fn initial_state(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let [z1, z2] = s.step_state();
                let zi = [z1 * scale, z2 * scale];
                scale *= s.dc_gain();
                zi
            })
            .collect()
    }

    fn run(&self, data: &mut [f64], mut state: Vec<[f64; 2]>) {
        for (s, z) in self.sections.iter().zip(state.iter_mut()) {
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            let [mut z1, mut z2] = *z;
            for v in data.iter_mut() {
                let x = *v;
                let y = b0 * x + z1;
                z1 = b1 * x - a1 * y + z2;
                z2 = b2 * x - a2 * y;
                *v = y;
            }
            *z = [z1, z2];
        }
    }

    /// Single causal pass starting from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut data = x.to_vec();
        self.run(&mut data, vec![[0.0; 2]; self.sections.len()]);
        data
    }

    /// Zero-phase filtering: odd-reflection padding at both ends, a forward
    /// pass and a backward pass each started at the steady state of their
    /// first sample, then the padding is discarded.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let min = self.min_len();
        if x.len() < min {
            return Err(Error::SignalTooShort { len: x.len(), min: min - 1 });
        }
        let pad = self.pad_len();
        let n = x.len();
        let (first, last) = (x[0], x[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        let zi = self.initial_state();
        let scaled = |v: f64| zi.iter().map(|z| [z[0] * v, z[1] * v]).collect::<Vec<_>>();

        let start = ext[0];
        self.run(&mut ext, scaled(start));
        ext.reverse();
        let start = ext[0];
        self.run(&mut ext, scaled(start));
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// Groups poles into `(a1, a2)` denominators: conjugate pairs first, then
/// remaining real poles two at a time.
fn pair_poles(poles: &[Complex64]) -> Vec<(f64, f64)> {
    let tol = 1e-12;
    let mut out = Vec::new();
    let mut reals = Vec::new();
    for p in poles {
        if p.im > tol {
            out.push((-2.0 * p.re, p.norm_sqr()));
        } else if p.im.abs() <= tol {
            reals.push(p.re);
        }
    }
    reals.sort_by(|a, b| a.total_cmp(b));
    for pair in reals.chunks(2) {
        match *pair {
            [p1, p2] => out.push((-(p1 + p2), p1 * p2)),
            // a lone real pole would need a first-order section; band-pass
            // designs always produce an even count
            [p] => out.push((-p, 0.0)),
            _ => unreachable!(),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_bands() {
        for (lo, hi, fs) in [(0.0, 0.5, 30.0), (0.5, 0.1, 30.0), (0.1, 15.0, 30.0), (0.1, 0.5, 0.0)] {
            let spec = FilterSpec { low_cut: lo, high_cut: hi, order: 2 };
            assert!(BandpassFilter::design(&spec, fs).is_err(), "{lo} {hi} {fs}");
        }
    }

    #[test]
    fn order_two_yields_two_sections() {
        let f = BandpassFilter::design(&FilterSpec::default(), 30.0).unwrap();
        assert_eq!(f.sections().len(), 2);
        assert_eq!(f.pad_len(), 15);
        assert_eq!(f.min_len(), 25);
    }

    #[test]
    fn odd_order_designs() {
        let spec = FilterSpec { low_cut: 0.1, high_cut: 0.5, order: 3 };
        let f = BandpassFilter::design(&spec, 30.0).unwrap();
        assert_eq!(f.sections().len(), 3);
        let mid = (0.1f64 * 0.5).sqrt();
        assert!((f.response(mid).norm() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn short_signal_rejected() {
        let f = BandpassFilter::design(&FilterSpec::default(), 30.0).unwrap();
        assert!(matches!(f.filtfilt(&[0.0; 24]), Err(Error::SignalTooShort { .. })));
        assert!(f.filtfilt(&[0.0; 25]).is_ok());
    }
}
