//! Point configurations built from externally supplied keypoints: the face
//! triple, the chest triple and the triangular chest grid.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

pub type Point = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Landmark {
    EyeLeft,
    EyeRight,
    Nose,
    Chin,
    ShoulderLeft,
    ShoulderRight,
    Neck,
}

impl Landmark {
    pub const ALL: [Landmark; 7] = [
        Landmark::EyeLeft,
        Landmark::EyeRight,
        Landmark::Nose,
        Landmark::Chin,
        Landmark::ShoulderLeft,
        Landmark::ShoulderRight,
        Landmark::Neck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Landmark::EyeLeft => "eye_left",
            Landmark::EyeRight => "eye_right",
            Landmark::Nose => "nose",
            Landmark::Chin => "chin",
            Landmark::ShoulderLeft => "shoulder_left",
            Landmark::ShoulderRight => "shoulder_right",
            Landmark::Neck => "neck",
        }
    }

    pub fn is_face(self) -> bool {
        matches!(self, Landmark::EyeLeft | Landmark::EyeRight | Landmark::Nose | Landmark::Chin)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Landmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Landmark::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::UnknownLandmark(s.to_string()))
    }
}

/// Named landmarks in pixel coordinates (origin top-left, y down). Every
/// landmark is optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeypointSet {
    points: [Option<Point>; 7],
}

impl KeypointSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, landmark: Landmark, point: Point) -> Self {
        self.set(landmark, point);
        self
    }

    pub fn set(&mut self, landmark: Landmark, point: Point) {
        self.points[landmark.index()] = Some(point);
    }

    pub fn get(&self, landmark: Landmark) -> Option<Point> {
        self.points[landmark.index()]
    }

    pub fn require(&self, landmark: Landmark) -> Result<Point> {
        self.get(landmark)
            .ok_or(Error::MissingLandmark(landmark.name()))
    }

    pub fn present(&self) -> impl Iterator<Item = (Landmark, Point)> + '_ {
        Landmark::ALL
            .into_iter()
            .filter_map(|l| self.get(l).map(|p| (l, p)))
    }

    /// Checks that every present landmark lies inside a `width`x`height` frame.
    pub fn validate_bounds(&self, width: usize, height: usize) -> Result<()> {
        for (l, (x, y)) in self.present() {
            if !(x >= 0.0 && y >= 0.0 && x <= (width - 1) as f64 && y <= (height - 1) as f64) {
                return Err(Error::InvalidKeypoints(format!(
                    "{} at ({x}, {y}) is outside the {width}x{height} frame",
                    l.name()
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .present()
            .map(|(l, (x, y))| (l.name().to_string(), serde_json::json!([x, y])))
            .collect();
        serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("plain numbers serialize")
    }
}

/// Map entries in document order, duplicates preserved.
struct RawEntries(Vec<(String, [f64; 2])>);

impl<'de> Deserialize<'de> for RawEntries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = RawEntries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping landmark names to [x, y]")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<RawEntries, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, [f64; 2]>()? {
                    if !(v[0].is_finite() && v[1].is_finite()) {
                        return Err(de::Error::custom(format!("non-finite coordinate for {k}")));
                    }
                    entries.push((k, v));
                }
                Ok(RawEntries(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

/// Parses a keypoint document: one JSON object whose keys are landmark names
/// and whose values are `[x, y]` pixel positions.
pub fn parse_keypoints_str(text: &str) -> Result<KeypointSet> {
    let RawEntries(entries) = serde_json::from_str(text).map_err(|e| Error::KeypointSyntax {
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut set = KeypointSet::new();
    for (name, [x, y]) in entries {
        let landmark: Landmark = name.parse()?;
        if set.get(landmark).is_some() {
            return Err(Error::DuplicateLandmark(name));
        }
        set.set(landmark, (x, y));
    }
    Ok(set)
}

pub fn parse_keypoints(path: &Path) -> Result<KeypointSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_keypoints_str(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointConfigKind {
    FacePoints,
    ChestPoints,
    ChestGrid,
}

impl PointConfigKind {
    pub const ALL: [PointConfigKind; 3] = [
        PointConfigKind::FacePoints,
        PointConfigKind::ChestPoints,
        PointConfigKind::ChestGrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PointConfigKind::FacePoints => "face_points",
            PointConfigKind::ChestPoints => "chest_points",
            PointConfigKind::ChestGrid => "chest_grid",
        }
    }
}

impl fmt::Display for PointConfigKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PointConfigKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PointConfigKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown point configuration {s:?}")))
    }
}

fn midpoint(a: Point, b: Point) -> Point {
    (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))
}

/// `[midpoint of the eyes, nose, chin]`.
pub fn face_points(k: &KeypointSet) -> Result<[Point; 3]> {
    let left = k.require(Landmark::EyeLeft)?;
    let right = k.require(Landmark::EyeRight)?;
    let nose = k.require(Landmark::Nose)?;
    let chin = k.require(Landmark::Chin)?;
    Ok([midpoint(left, right), nose, chin])
}

fn shoulders(k: &KeypointSet) -> Result<(Point, Point)> {
    let left = k.require(Landmark::ShoulderLeft)?;
    let right = k.require(Landmark::ShoulderRight)?;
    if left.0 == right.0 {
        return Err(Error::InvalidKeypoints(
            "shoulder_left and shoulder_right share an x coordinate".into(),
        ));
    }
    Ok((left, right))
}

/// `[left shoulder, right shoulder, neck]`.
pub fn chest_points(k: &KeypointSet) -> Result<[Point; 3]> {
    let (left, right) = shoulders(k)?;
    let neck = k.require(Landmark::Neck)?;
    Ok([left, right, neck])
}

/// Trackable area: points must lie `margin` pixels inside a `width`x`height` frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub width: usize,
    pub height: usize,
    pub margin: usize,
}

impl Bounds {
    pub fn contains(&self, (x, y): Point) -> bool {
        let m = self.margin as f64;
        x >= m && y >= m && x <= self.width as f64 - 1.0 - m && y <= self.height as f64 - 1.0 - m
    }
}

/// Points chosen for tracking, plus any generated points discarded for lying
/// outside the trackable area.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Selection {
    pub points: Vec<Point>,
    pub dropped: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub rows: usize,
    /// Apex distance from the shoulder midpoint, in shoulder widths.
    pub apex_scale: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rows: 5,
            apex_scale: 1.0,
        }
    }
}

/// Triangular lattice with the shoulder segment as its base. The apex sits
/// `apex_scale` shoulder widths from the shoulder midpoint, perpendicular to
/// the segment and on the side away from the head. Row `r` holds `rows - r`
/// evenly spaced points on the chord at fractional height `r / (rows - 1)`.
pub fn chest_grid(k: &KeypointSet, grid: GridSpec, bounds: Option<Bounds>) -> Result<Selection> {
    if grid.rows < 2 {
        return Err(Error::InvalidConfig(format!("grid needs at least 2 rows, got {}", grid.rows)));
    }
    if !(grid.apex_scale.is_finite() && grid.apex_scale > 0.0) {
        return Err(Error::InvalidConfig("apex_scale must be positive".into()));
    }
    let (left, right) = shoulders(k)?;
    let base = (right.0 - left.0, right.1 - left.1);
    let width = base.0.hypot(base.1);
    let mid = midpoint(left, right);
    let mut normal = (-base.1 / width, base.0 / width);

    let head = k
        .get(Landmark::Nose)
        .or_else(|| match (k.get(Landmark::EyeLeft), k.get(Landmark::EyeRight)) {
            (Some(a), Some(b)) => Some(midpoint(a, b)),
            _ => None,
        })
        .or_else(|| k.get(Landmark::Chin))
        .or_else(|| k.get(Landmark::Neck));
    let toward_head = head.map(|h| (h.0 - mid.0) * normal.0 + (h.1 - mid.1) * normal.1);
    let flip = match toward_head {
        Some(side) if side.abs() > 1e-9 * width => side > 0.0,
        _ => normal.1 < 0.0,
    };
    if flip {
        normal = (-normal.0, -normal.1);
    }
    let depth = grid.apex_scale * width;
    let apex = (mid.0 + normal.0 * depth, mid.1 + normal.1 * depth);

    let rows = grid.rows;
    let lerp = |a: Point, b: Point, t: f64| (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
    let mut selection = Selection::default();
    for r in 0..rows {
        let t = r as f64 / (rows - 1) as f64;
        let start = lerp(left, apex, t);
        let end = lerp(right, apex, t);
        let count = rows - r;
        for j in 0..count {
            let p = if count == 1 {
                start
            } else {
                lerp(start, end, j as f64 / (count - 1) as f64)
            };
            match bounds {
                Some(b) if !b.contains(p) => selection.dropped.push(p),
                _ => selection.points.push(p),
            }
        }
    }

    let total = rows * (rows + 1) / 2;
    if !selection.dropped.is_empty() {
        log::warn!(
            "chest grid: dropped {} of {total} points outside the trackable area",
            selection.dropped.len()
        );
    }
    if 2 * selection.dropped.len() > total {
        return Err(Error::DegenerateGrid {
            dropped: selection.dropped.len(),
            total,
        });
    }
    Ok(selection)
}

/// Builds the point set for `kind`. With `bounds`, face and chest landmarks
/// outside the trackable area are rejected and grid points are dropped.
pub fn select_points(kind: PointConfigKind, k: &KeypointSet, grid: GridSpec, bounds: Option<Bounds>) -> Result<Selection> {
    let fixed = match kind {
        PointConfigKind::FacePoints => face_points(k)?,
        PointConfigKind::ChestPoints => chest_points(k)?,
        PointConfigKind::ChestGrid => return chest_grid(k, grid, bounds),
    };
    if let Some(b) = bounds {
        if let Some(p) = fixed.iter().find(|p| !b.contains(**p)) {
            return Err(Error::PointOutOfBounds {
                x: p.0,
                y: p.1,
                margin: b.margin,
                width: b.width,
                height: b.height,
            });
        }
    }
    Ok(Selection {
        points: fixed.to_vec(),
        dropped: Vec::new(),
    })
}
