//! Scoring against ground truth and manifest-driven comparison suites.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{run_pipeline, EstimateConfig, Flag};
use crate::roi::{parse_keypoints, PointConfigKind};
use crate::video_io::open_video;

/// Root-mean-square difference of paired values.
pub fn rmse(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truths.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::InvalidConfig("rmse of zero pairs".into()));
    }
    let sum: f64 = estimates.iter().zip(truths).map(|(e, t)| (e - t) * (e - t)).sum();
    Ok((sum / estimates.len() as f64).sqrt())
}

/// Optional per-case (or manifest-wide) configuration overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Full window size, e.g. 20 or 40.
    pub window: Option<usize>,
    pub pyramid_levels: Option<usize>,
    pub rows: Option<usize>,
    pub low_cut: Option<f64>,
    pub high_cut: Option<f64>,
    pub fps: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut EstimateConfig) {
        if let Some(w) = self.window {
            cfg.flow.window_half_width = w / 2;
        }
        if let Some(l) = self.pyramid_levels {
            cfg.flow.pyramid_levels = l;
        }
        if let Some(r) = self.rows {
            cfg.grid.rows = r;
        }
        if let Some(f) = self.low_cut {
            cfg.filter.low_cut = f;
        }
        if let Some(f) = self.high_cut {
            cfg.filter.high_cut = f;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub id: String,
    /// Y4M file or frame directory.
    pub video: PathBuf,
    pub keypoints: PathBuf,
    pub kinds: Vec<PointConfigKind>,
    pub truth_bpm: f64,
    /// Filename pattern when `video` is a directory.
    #[serde(default)]
    pub pattern: Option<String>,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteManifest {
    #[serde(default)]
    pub defaults: Overrides,
    pub cases: Vec<CaseSpec>,
}

impl SuiteManifest {
    /// Parses a manifest. Relative paths are resolved against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut m: SuiteManifest = serde_json::from_str(text)
            .map_err(|e| Error::Manifest(format!("line {}: {e}", e.line())))?;
        for case in &mut m.cases {
            for p in [&mut case.video, &mut case.keypoints] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() {
            return Err(Error::Manifest("no cases".into()));
        }
        let mut ids = HashSet::new();
        for c in &self.cases {
            if !ids.insert(c.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate case id \"{}\"", c.id)));
            }
            if c.video == c.keypoints {
                return Err(Error::Manifest(format!("case \"{}\": video and keypoints are the same file", c.id)));
            }
            if c.kinds.is_empty() {
                return Err(Error::Manifest(format!("case \"{}\": no kinds", c.id)));
            }
            if !(c.truth_bpm.is_finite() && c.truth_bpm > 0.0) {
                return Err(Error::Manifest(format!("case \"{}\": truth_bpm must be positive", c.id)));
            }
        }
        Ok(())
    }
}

/// One scored (case, kind) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub id: String,
    pub kind: PointConfigKind,
    pub truth_bpm: f64,
    pub bpm: f64,
    pub error_bpm: f64,
    pub n_points_used: usize,
    pub n_points_lost: usize,
    pub flags: Vec<Flag>,
}

/// One (case, kind) run that raised an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub id: String,
    pub kind: PointConfigKind,
    pub stage: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub kind: PointConfigKind,
    pub n_scored: usize,
    pub n_failed: usize,
    /// `None` when no case of this kind produced an estimate.
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<CaseRow>,
    pub failures: Vec<CaseFailure>,
    pub per_kind: Vec<KindSummary>,
}

impl SuiteReport {
    /// Aggregates rows and failures; RMSE uses scored rows only.
    pub fn from_rows(rows: Vec<CaseRow>, failures: Vec<CaseFailure>) -> Self {
        let per_kind = PointConfigKind::ALL
            .into_iter()
            .filter(|k| rows.iter().any(|r| r.kind == *k) || failures.iter().any(|f| f.kind == *k))
            .map(|kind| {
                let (est, truth): (Vec<f64>, Vec<f64>) =
                    rows.iter().filter(|r| r.kind == kind).map(|r| (r.bpm, r.truth_bpm)).unzip();
                KindSummary {
                    kind,
                    n_scored: est.len(),
                    n_failed: failures.iter().filter(|f| f.kind == kind).count(),
                    rmse: rmse(&est, &truth).ok(),
                }
            })
            .collect();
        Self {
            rows,
            failures,
            per_kind,
        }
    }

    pub fn summary(&self, kind: PointConfigKind) -> Option<&KindSummary> {
        self.per_kind.iter().find(|s| s.kind == kind)
    }

    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16} {:<13} {:>8} {:>8} {:>7}", "case", "kind", "truth", "bpm", "error");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<16} {:<13} {:>8.2} {:>8.2} {:>+7.2}",
                r.id,
                r.kind.name(),
                r.truth_bpm,
                r.bpm,
                r.error_bpm
            );
        }
        for f in &self.failures {
            let _ = writeln!(s, "{:<16} {:<13} FAILED: {}", f.id, f.kind.name(), f.message);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<13} {:>6} {:>6} {:>8}", "kind", "scored", "failed", "rmse");
        for k in &self.per_kind {
            let rmse = k.rmse.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(s, "{:<13} {:>6} {:>6} {:>8}", k.kind.name(), k.n_scored, k.n_failed, rmse);
        }
        s
    }
}

fn run_case(case: &CaseSpec, kind: PointConfigKind, cfg: &EstimateConfig, fps: Option<f64>) -> Result<CaseRow> {
    let keypoints = parse_keypoints(&case.keypoints)?;
    let pattern = case.pattern.as_deref().unwrap_or("*");
    let stream = open_video(&case.video, pattern, fps)?;
    let fps = stream.fps;
    let est = run_pipeline(stream, fps, &keypoints, kind, cfg)?;
    let r = est.report;
    Ok(CaseRow {
        id: case.id.clone(),
        kind,
        truth_bpm: case.truth_bpm,
        bpm: r.bpm,
        error_bpm: r.bpm - case.truth_bpm,
        n_points_used: r.n_points_used,
        n_points_lost: r.n_points_lost,
        flags: r.flags,
    })
}

/// Runs every (case, kind) pair on up to `jobs` threads. Individual failures
/// are recorded and never abort the suite; output order follows the manifest.
pub fn run_suite(manifest: &SuiteManifest, base: &EstimateConfig, jobs: usize) -> Result<SuiteReport> {
    manifest.validate()?;
    let work: Vec<(&CaseSpec, PointConfigKind)> = manifest
        .cases
        .iter()
        .flat_map(|c| c.kinds.iter().map(move |k| (c, *k)))
        .collect();
    let exec = |&(case, kind): &(&CaseSpec, PointConfigKind)| {
        let mut cfg = base.clone();
        manifest.defaults.apply(&mut cfg);
        case.overrides.apply(&mut cfg);
        let fps = case.overrides.fps.or(manifest.defaults.fps);
        run_case(case, kind, &cfg, fps).map_err(|e| CaseFailure {
            id: case.id.clone(),
            kind,
            stage: e.stage().map(|s| s.to_string()),
            message: e.to_string(),
        })
    };
    let outcomes: Vec<std::result::Result<CaseRow, CaseFailure>> = if jobs <= 1 {
        work.iter().map(exec).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| work.par_iter().map(exec).collect())
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok(SuiteReport::from_rows(rows, failures))
}
