mod common;

use std::f64::consts::PI;

use breathflow::signal::{bandpass, find_peaks, BandpassFilter, FilterSpec, PeakParams};
use breathflow::{BreathSignal, SignalKind};
use common::{analytic_two_pass_db, butterworth_band_power};

const FS: f64 = 30.0;

fn design() -> BandpassFilter {
    BandpassFilter::design(&FilterSpec::default(), FS).unwrap()
}

fn sine(freq: f64, seconds: f64) -> Vec<f64> {
    (0..(seconds * FS) as usize).map(|n| (2.0 * PI * freq * n as f64 / FS).sin()).collect()
}

fn filtered(x: Vec<f64>) -> Vec<f64> {
    let sig = BreathSignal::new(x, FS, SignalKind::Raw).unwrap();
    bandpass(&sig, &FilterSpec::default()).unwrap().samples().to_vec()
}

/// Multiplies the biquads out into a single transfer function.
fn expanded(filter: &BandpassFilter) -> (Vec<f64>, Vec<f64>) {
    let mul = |p: &[f64], q: &[f64]| {
        let mut out = vec![0.0; p.len() + q.len() - 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in q.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    };
    filter.sections().iter().fold((vec![1.0], vec![1.0]), |(b, a), s| (mul(&b, &s.b), mul(&a, &s.a)))
}

#[test]
fn response_matches_analytic_magnitude() {
    let filter = design();
    for i in 1..=400 {
        let f = i as f64 * 0.01;
        let power = filter.response(f).norm_sqr();
        let expected = butterworth_band_power(f, 0.1, 0.5, 2, FS);
        assert!((power - expected).abs() < 1e-9, "{f} Hz: {power} vs {expected}");
    }
}

#[test]
fn band_edges_and_stopband() {
    assert!((butterworth_band_power(0.1, 0.1, 0.5, 2, FS) - 0.5).abs() < 1e-12);
    assert!((butterworth_band_power(0.5, 0.1, 0.5, 2, FS) - 0.5).abs() < 1e-12);
    assert!(analytic_two_pass_db(0.3, FS) >= -1.0);
    assert!(analytic_two_pass_db(0.02, FS) <= -20.0);
    assert!(analytic_two_pass_db(2.0, FS) <= -20.0);
}

#[test]
fn coefficients_match_reference_design() {
    // scipy.signal.butter(2, [0.1, 0.5], btype="bandpass", fs=30)
    let b_ref = [0.0016556093437783467, 0.0, -0.0033112186875566933, 0.0, 0.0016556093437783467];
    let a_ref = [1.0, -3.8773916277225693, 5.643305420755696, -3.65418173929963, 0.8882724835544296];
    let (b, a) = expanded(&design());
    for (x, y) in b.iter().zip(b_ref) {
        assert!((x - y).abs() < 1e-12, "b: {b:?}");
    }
    for (x, y) in a.iter().zip(a_ref) {
        assert!((x - y).abs() < 1e-10, "a: {a:?}");
    }
}

#[test]
fn filtfilt_matches_reference_output() {
    // scipy.signal.filtfilt(b, a, x) with the default padding
    let x: Vec<f64> = (0..300)
        .map(|n| {
            let t = n as f64 / FS;
            (2.0 * PI * 0.3 * t).sin()
                + 0.5 * (2.0 * PI * 2.0 * t).sin()
                + 0.02 * n as f64 / 10.0
                + 0.3 * (2.0 * PI * 0.05 * t).cos()
        })
        .collect();
    let reference = [
        (0, 0.2756163515923601),
        (23, 1.0929784932882654),
        (46, 0.3105524003044671),
        (69, -0.9209688865022848),
        (92, -0.5285148311773205),
        (115, 0.7228667889209148),
        (138, 0.6011806337164058),
        (161, -0.685599747052583),
        (184, -0.8439316729060418),
        (207, 0.47163810330662304),
        (230, 1.046011226343877),
        (253, 0.01203307165309591),
        (276, -0.6078679558203072),
        (299, -0.10364508851988813),
    ];
    let y = design().filtfilt(&x).unwrap();
    for (i, expected) in reference {
        assert!((y[i] - expected).abs() < 1e-9, "sample {i}: {} vs {expected}", y[i]);
    }
}

#[test]
fn passband_and_stopband_amplitudes() {
    let central = |y: &[f64]| y[y.len() / 4..3 * y.len() / 4].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pass = central(&filtered(sine(0.3, 60.0)));
    assert!((0.9..=1.0).contains(&pass), "0.3 Hz amplitude {pass}");
    let stop = central(&filtered(sine(2.0, 60.0)));
    assert!(stop < 0.05, "2 Hz amplitude {stop}");
}

#[test]
fn clean_breathing_wave_gives_nine_peaks() {
    let y = filtered(sine(0.3, 30.0));
    let peaks = find_peaks(&y, FS, &PeakParams::default());
    assert_eq!(peaks.len(), 9);
    for (k, &p) in peaks.iter().enumerate() {
        let expected = (0.25 + k as f64) / 0.3 * FS;
        assert!((p as f64 - expected).abs() <= 2.0, "peak {k} at {p}, expected near {expected:.1}");
    }
}

#[test]
fn too_short_signals_are_rejected() {
    let filter = design();
    assert!(filter.filtfilt(&vec![0.0; filter.min_len() - 1]).is_err());
    assert!(filter.filtfilt(&vec![0.0; filter.min_len()]).is_ok());
}
