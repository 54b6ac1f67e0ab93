use serde::{Deserialize, Serialize};

/// Peak acceptance rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeakParams {
    /// Minimum prominence as a multiple of the signal's standard deviation.
    pub prominence_factor: f64,
    /// Minimum spacing between accepted peaks, in seconds.
    pub min_separation_s: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self {
            prominence_factor: 0.3,
            min_separation_s: 2.0,
        }
    }
}

/// Strict local maxima; a flat top counts once, at its leftmost sample.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    if x.len() < 3 {
        return peaks;
    }
    let mut i = 1;
    let last = x.len() - 1;
    while i < last {
        if x[i] > x[i - 1] {
            let mut ahead = i + 1;
            while ahead < last && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                peaks.push(i);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    peaks
}

/// Height of each peak above the higher of its two bases. A base is the
/// lowest sample between the peak and the nearest strictly higher sample on
/// that side (or the signal end).
pub fn prominences(x: &[f64], peaks: &[usize]) -> Vec<f64> {
    peaks
        .iter()
        .map(|&p| {
            let h = x[p];
            let mut left_min = h;
            for &v in x[..p].iter().rev() {
                if v > h {
                    break;
                }
                left_min = left_min.min(v);
            }
            let mut right_min = h;
            for &v in &x[p + 1..] {
                if v > h {
                    break;
                }
                right_min = right_min.min(v);
            }
            h - left_min.max(right_min)
        })
        .collect()
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Peaks of `x` sampled at `fs` Hz: local maxima with enough prominence,
/// then thinned so no two are closer than the minimum separation. When two
/// conflict the higher wins, ties going to the earlier index.
pub fn find_peaks(x: &[f64], fs: f64, params: &PeakParams) -> Vec<usize> {
    let threshold = params.prominence_factor * std_dev(x);
    let candidates = local_maxima(x);
    let prom = prominences(x, &candidates);
    let kept: Vec<usize> = candidates
        .into_iter()
        .zip(prom)
        .filter(|&(_, p)| p >= threshold)
        .map(|(i, _)| i)
        .collect();

    let min_sep = params.min_separation_s * fs;
    let mut order: Vec<usize> = (0..kept.len()).collect();
    order.sort_by(|&a, &b| x[kept[b]].total_cmp(&x[kept[a]]).then(kept[a].cmp(&kept[b])));
    let mut removed = vec![false; kept.len()];
    for &slot in &order {
        if removed[slot] {
            continue;
        }
        let centre = kept[slot];
        for (other, r) in removed.iter_mut().enumerate() {
            if other != slot && ((kept[other] as f64) - centre as f64).abs() < min_sep {
                *r = true;
            }
        }
    }
    kept.into_iter()
        .zip(removed)
        .filter(|&(_, r)| !r)
        .map(|(i, _)| i)
        .collect()
}
