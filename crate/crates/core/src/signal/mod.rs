//! Breathing signal extraction, band-pass filtering, peak detection and the
//! peaks-per-minute rate.

mod filter;
mod peaks;

pub use filter::{BandpassFilter, Biquad, FilterSpec};
pub use peaks::{find_peaks, local_maxima, prominences, std_dev, PeakParams};

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{TrackMatrix, TrackStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Raw,
    Filtered,
}

/// Uniformly sampled scalar series.
#[derive(Debug, Clone, PartialEq)]
pub struct BreathSignal {
    samples: Vec<f64>,
    fs: f64,
    kind: SignalKind,
}

impl BreathSignal {
    pub fn new(samples: Vec<f64>, fs: f64, kind: SignalKind) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidConfig(format!("sample rate {fs} must be positive")));
        }
        if samples.len() < 2 {
            return Err(Error::SignalTooShort {
                len: samples.len(),
                min: 1,
            });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("signal contains non-finite samples".into()));
        }
        Ok(Self { samples, fs, kind })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn is_all_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }
}

/// How the tracked y coordinates become the signal that is filtered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalMode {
    /// Running sum of the per-frame mean y difference: mean vertical
    /// displacement since the first frame.
    #[default]
    Displacement,
    /// The per-frame mean y difference itself.
    Difference,
}

/// Per-frame mean vertical difference. Sample `t >= 1` averages
/// `y[t] - y[t-1]` over points tracked at both frames; sample 0 is 0.
pub fn extract_raw(tracks: &TrackMatrix) -> Result<BreathSignal> {
    let frames = tracks.n_frames();
    if frames < 2 {
        return Err(Error::InsufficientInput {
            needed: 2,
            found: frames,
        });
    }
    let survives = (0..tracks.n_points()).any(|p| tracks.status(p, 1) == TrackStatus::Tracked);
    if !survives {
        return Err(Error::EmptySignal);
    }
    let mut samples = vec![0.0; frames];
    for (t, sample) in samples.iter_mut().enumerate().skip(1) {
        let mut sum = 0.0;
        let mut count = 0usize;
        for p in 0..tracks.n_points() {
            if tracks.status(p, t - 1) == TrackStatus::Tracked && tracks.status(p, t) == TrackStatus::Tracked {
                sum += tracks.position(p, t).1 - tracks.position(p, t - 1).1;
                count += 1;
            }
        }
        if count > 0 {
            *sample = sum / count as f64;
        }
    }
    BreathSignal::new(samples, tracks.fps(), SignalKind::Raw)
}

/// Running sum of a raw difference signal.
pub fn displacement(raw: &BreathSignal) -> Result<BreathSignal> {
    if raw.kind != SignalKind::Raw {
        return Err(Error::InvalidConfig("displacement expects a raw signal".into()));
    }
    let mut acc = 0.0;
    let samples = raw
        .samples
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    BreathSignal::new(samples, raw.fs, SignalKind::Raw)
}

/// Zero-phase Butterworth band-pass of a raw signal.
pub fn bandpass(sig: &BreathSignal, spec: &FilterSpec) -> Result<BreathSignal> {
    if sig.kind != SignalKind::Raw {
        return Err(Error::InvalidConfig("bandpass expects a raw signal".into()));
    }
    let filter = BandpassFilter::design(spec, sig.fs)?;
    let out = filter.filtfilt(&sig.samples)?;
    BreathSignal::new(out, sig.fs, SignalKind::Filtered)
}

/// Peak sample indices of a filtered signal.
pub fn detect_peaks(sig: &BreathSignal, params: &PeakParams) -> Result<Vec<usize>> {
    if sig.kind != SignalKind::Filtered {
        return Err(Error::InvalidConfig("peak detection expects a filtered signal".into()));
    }
    Ok(find_peaks(&sig.samples, sig.fs, params))
}

/// Breaths per minute: peak count over duration, times 60.
pub fn breathing_rate(n_peaks: usize, duration_s: f64) -> Result<f64> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::ZeroDuration);
    }
    Ok(n_peaks as f64 / duration_s * 60.0)
}

/// Writes `sample_index,time_s,raw,filtered` rows and a `# peaks:` trailer.
pub fn write_signal_csv<W: Write>(
    mut out: W,
    raw: &BreathSignal,
    filtered: &BreathSignal,
    peaks: &[usize],
) -> io::Result<()> {
    writeln!(out, "sample_index,time_s,raw,filtered")?;
    for (i, (r, f)) in raw.samples.iter().zip(&filtered.samples).enumerate() {
        writeln!(out, "{i},{:.6},{r:.9},{f:.9}", i as f64 / raw.fs)?;
    }
    let list: Vec<String> = peaks.iter().map(usize::to_string).collect();
    writeln!(out, "# peaks: {}", list.join(" "))
}

/// Contents of a signal dump.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDump {
    pub time_s: Vec<f64>,
    pub raw: Vec<f64>,
    pub filtered: Vec<f64>,
    pub peaks: Vec<usize>,
}

pub fn read_signal_csv<R: BufRead>(input: R) -> Result<SignalDump> {
    let bad = |line: usize, m: &str| Error::Format {
        offset: line as u64,
        message: format!("signal CSV line {line}: {m}"),
    };
    let mut dump = SignalDump {
        time_s: Vec::new(),
        raw: Vec::new(),
        filtered: Vec::new(),
        peaks: Vec::new(),
    };
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<signal csv>", e))?;
        let line = line.trim();
        if n == 0 {
            if line != "sample_index,time_s,raw,filtered" {
                return Err(bad(1, "unexpected header"));
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("# peaks:") {
            dump.peaks = rest
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(n + 1, "bad peak index")))
                .collect::<Result<_>>()?;
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(n + 1, "expected 4 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n + 1, "bad number"));
        dump.time_s.push(num(fields[1])?);
        dump.raw.push(num(fields[2])?);
        dump.filtered.push(num(fields[3])?);
    }
    Ok(dump)
}
