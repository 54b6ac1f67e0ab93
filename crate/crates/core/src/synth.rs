//! Deterministic synthetic scenes with known breathing motion.
//!
//! A static background carries two moving layers: the chest region slides
//! vertically by `amp * sin(2 pi f t)` and the face region follows the same
//! motion plus an optional seeded head jitter. Every layer is resampled
//! bilinearly, so ground truth is exact up to interpolation.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameSequence, Plane};
use crate::roi::{KeypointSet, Landmark};
use crate::video_io::{fps_to_rational, write_frame_dir, write_y4m};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn right(&self) -> usize {
        self.x + self.width
    }

    pub fn bottom(&self) -> usize {
        self.y + self.height
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.right() && other.x < self.right() && self.y < other.bottom() && other.y < self.bottom()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Texture {
    /// Squares alternating every `period / 2` pixels, with edges softened
    /// over about two pixels.
    Checker { period: f64 },
    /// Product of sines with the given period along both axes.
    Sinusoid2d { period: f64 },
    /// Bilinearly interpolated random lattice with cells of `scale` pixels.
    Noise { scale: f64 },
    /// Constant intensity: nothing to track.
    Flat,
}

impl Texture {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Texture::Checker { period } | Texture::Sinusoid2d { period } => period.is_finite() && period >= 2.0,
            Texture::Noise { scale } => scale.is_finite() && scale >= 1.0,
            Texture::Flat => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad texture parameters {self:?}")))
        }
    }

    /// Intensity at integer pixel `(x, y)`, mean 0.5 and peak-to-peak `contrast`.
    pub fn sample(&self, x: f64, y: f64, contrast: f64, seed: u64) -> f64 {
        let v = match *self {
            Texture::Checker { period } => 0.5 * soft_square(x, period) * soft_square(y, period),
            Texture::Sinusoid2d { period } => 0.5 * (2.0 * PI * x / period).sin() * (2.0 * PI * y / period).sin(),
            Texture::Noise { scale } => value_noise(x / scale, y / scale, seed) - 0.5,
            Texture::Flat => 0.0,
        };
        (0.5 + contrast * v).clamp(0.0, 1.0)
    }
}

/// Edge half-width of the checker texture, in pixels.
const CHECKER_EDGE: f64 = 1.0;

/// Clipped sine: a unit square wave whose transitions ramp across about
/// `2 * CHECKER_EDGE` pixels. Hard edges would alias under sub-pixel shifts.
fn soft_square(t: f64, period: f64) -> f64 {
    let gain = period / (2.0 * PI * CHECKER_EDGE);
    (gain * (2.0 * PI * t / period).sin()).clamp(-1.0, 1.0)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn lattice(ix: i64, iy: i64, seed: u64) -> f64 {
    let h = splitmix64(seed ^ splitmix64((ix as u64).wrapping_mul(0x1f1f_1f1f) ^ splitmix64(iy as u64)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(u: f64, v: f64, seed: u64) -> f64 {
    let (fu, fv) = (u.floor(), v.floor());
    let (au, av) = (u - fu, v - fv);
    let (iu, iv) = (fu as i64, fv as i64);
    let top = lattice(iu, iv, seed) * (1.0 - au) + lattice(iu + 1, iv, seed) * au;
    let bottom = lattice(iu, iv + 1, seed) * (1.0 - au) + lattice(iu + 1, iv + 1, seed) * au;
    top * (1.0 - av) + bottom * av
}

/// Full description of a synthetic breathing scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub duration_s: f64,
    pub breathing_freq: f64,
    /// Peak vertical chest displacement in pixels.
    pub breathing_amp: f64,
    pub texture: Texture,
    pub contrast: f64,
    pub chest_region: Rect,
    pub face_region: Rect,
    /// Peak head jitter in pixels.
    pub head_noise_amp: f64,
    pub seed: u64,
}

impl SceneSpec {
    /// 30 s at 30 fps, 18 bpm, 2 px amplitude on a 640x480 checker scene.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            fps: 30.0,
            duration_s: 30.0,
            breathing_freq: 0.3,
            breathing_amp: 2.0,
            texture: Texture::Checker { period: 16.0 },
            contrast: 0.8,
            chest_region: Self::default_chest(width, height),
            face_region: Self::default_face(width, height),
            head_noise_amp: 0.0,
            seed: 0,
        }
    }

    pub fn default_chest(width: usize, height: usize) -> Rect {
        let x = width / 4;
        let y = height * 2 / 5;
        Rect {
            x,
            y,
            width: width / 2,
            height: height * 49 / 50 - y,
        }
    }

    pub fn default_face(width: usize, height: usize) -> Rect {
        let x = width * 3 / 8;
        let y = height / 25;
        Rect {
            x,
            y,
            width: width / 4,
            height: height * 9 / 25 - y,
        }
    }

    pub fn with_bpm(mut self, bpm: f64) -> Self {
        self.breathing_freq = bpm / 60.0;
        self
    }

    pub fn n_frames(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.width < 8 || self.height < 8 {
            return bad(format!("scene {}x{} is too small", self.width, self.height));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps {} must be positive", self.fps));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) || self.n_frames() < 2 {
            return bad(format!("duration {} s gives fewer than 2 frames", self.duration_s));
        }
        if !(self.breathing_freq > 0.0 && self.breathing_freq < self.fps / 2.0) {
            return bad(format!(
                "breathing frequency {} Hz must lie in (0, {})",
                self.breathing_freq,
                self.fps / 2.0
            ));
        }
        if !(self.breathing_amp.is_finite() && self.breathing_amp >= 0.0) {
            return bad("breathing amplitude must be non-negative".into());
        }
        if !(self.head_noise_amp.is_finite() && self.head_noise_amp >= 0.0) {
            return bad("head noise amplitude must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return bad(format!("contrast {} outside [0, 1]", self.contrast));
        }
        self.texture.validate()?;
        for (name, r) in [("chest", &self.chest_region), ("face", &self.face_region)] {
            if r.width == 0 || r.height == 0 || r.right() > self.width || r.bottom() > self.height {
                return bad(format!("{name} region {r:?} is empty or outside the frame"));
            }
        }
        if self.chest_region.overlaps(&self.face_region) {
            return bad("chest and face regions overlap".into());
        }
        Ok(())
    }
}

/// Ground truth for a rendered scene.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneTruth {
    pub bpm: f64,
    pub fps: f64,
    /// Vertical chest offset per frame.
    pub chest_dy: Vec<f64>,
    /// Face offset per frame: breathing motion plus head jitter.
    pub face_offset: Vec<(f64, f64)>,
}

impl SceneTruth {
    /// Writes a `# bpm:` comment followed by `frame,time_s,chest_dy,face_dx,face_dy` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# bpm: {}", self.bpm)?;
        writeln!(out, "frame,time_s,chest_dy,face_dx,face_dy")?;
        for (i, (dy, (fx, fy))) in self.chest_dy.iter().zip(&self.face_offset).enumerate() {
            writeln!(out, "{i},{:.6},{dy:.9},{fx:.9},{fy:.9}", i as f64 / self.fps)?;
        }
        Ok(())
    }
}

/// Seeded head jitter: a Gaussian random walk smoothed over half a second,
/// centred and scaled so its largest excursion on either axis is `amp`.
fn head_jitter(n: usize, fps: f64, amp: f64, seed: u64) -> Vec<(f64, f64)> {
    if amp == 0.0 {
        return vec![(0.0, 0.0); n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let walk = |rng: &mut ChaCha8Rng| {
        let mut acc = 0.0;
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                let step: f64 = StandardNormal.sample(rng);
                acc += step;
                acc
            })
            .collect();
        let half = ((fps * 0.25).round() as usize).max(1);
        let smooth: Vec<f64> = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(n - 1);
                raw[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect();
        let mean = smooth.iter().sum::<f64>() / n as f64;
        smooth.into_iter().map(|v| v - mean).collect::<Vec<f64>>()
    };
    let xs = walk(&mut rng);
    let ys = walk(&mut rng);
    let peak = xs.iter().chain(&ys).fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { amp / peak } else { 0.0 };
    xs.into_iter().zip(ys).map(|(x, y)| (x * scale, y * scale)).collect()
}

/// Renders frames of a scene on demand.
pub struct SceneRenderer {
    spec: SceneSpec,
    background: Plane,
    layer: Plane,
    truth: SceneTruth,
}

impl SceneRenderer {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        spec.validate()?;
        let (w, h) = (spec.width, spec.height);
        let bg_seed = spec.seed ^ 0xb4c6_9d1e_5a3f_0007;
        let background = Plane::from_fn(w, h, |x, y| {
            Texture::Noise { scale: 6.0 }.sample(x as f64, y as f64, 0.6, bg_seed) as f32
        });
        let layer = Plane::from_fn(w, h, |x, y| {
            spec.texture.sample(x as f64, y as f64, spec.contrast, spec.seed) as f32
        });

        let n = spec.n_frames();
        let omega = 2.0 * PI * spec.breathing_freq;
        let chest_dy: Vec<f64> = (0..n)
            .map(|i| spec.breathing_amp * (omega * i as f64 / spec.fps).sin())
            .collect();
        let jitter = head_jitter(n, spec.fps, spec.head_noise_amp, spec.seed);
        let face_offset = chest_dy
            .iter()
            .zip(&jitter)
            .map(|(dy, (jx, jy))| (*jx, dy + jy))
            .collect();
        let truth = SceneTruth {
            bpm: spec.breathing_freq * 60.0,
            fps: spec.fps,
            chest_dy,
            face_offset,
        };
        Ok(Self {
            spec,
            background,
            layer,
            truth,
        })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn truth(&self) -> &SceneTruth {
        &self.truth
    }

    pub fn len(&self) -> usize {
        self.truth.chest_dy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.chest_dy.is_empty()
    }

    /// Landmarks placed inside the chest and face regions of frame 0.
    pub fn keypoints(&self) -> KeypointSet {
        scene_keypoints(&self.spec)
    }

    pub fn frame(&self, index: usize) -> Frame {
        let mut out = self.background.clone();
        let dy = self.truth.chest_dy[index];
        let (fx, fy) = self.truth.face_offset[index];
        self.paint(&mut out, &self.spec.chest_region, 0.0, dy);
        self.paint(&mut out, &self.spec.face_region, fx, fy);
        Frame::from_plane_unchecked(out)
    }

    /// Copies `region` from the texture layer moved by `(dx, dy)`. The shift
    /// is uniform, so all taps share one set of bilinear weights.
    fn paint(&self, out: &mut Plane, region: &Rect, dx: f64, dy: f64) {
        let (lw, lh) = (self.layer.width() as isize, self.layer.height() as isize);
        let (sx, sy) = (-dx, -dy);
        let (ax, ay) = (sx - sx.floor(), sy - sy.floor());
        let (ix, iy) = (sx.floor() as isize, sy.floor() as isize);
        let col = |x: usize, k: isize| (x as isize + ix + k).clamp(0, lw - 1) as usize;
        let cols: Vec<(usize, usize)> = (region.x..region.right()).map(|x| (col(x, 0), col(x, 1))).collect();
        let src = self.layer.data();
        let w = out.width();
        let data = out.data_mut();
        for y in region.y..region.bottom() {
            let r0 = (y as isize + iy).clamp(0, lh - 1) as usize * lw as usize;
            let r1 = (y as isize + iy + 1).clamp(0, lh - 1) as usize * lw as usize;
            let dst = &mut data[y * w + region.x..y * w + region.right()];
            for (o, &(c0, c1)) in dst.iter_mut().zip(&cols) {
                let top = src[r0 + c0] as f64 * (1.0 - ax) + src[r0 + c1] as f64 * ax;
                let bottom = src[r1 + c0] as f64 * (1.0 - ax) + src[r1 + c1] as f64 * ax;
                *o = (top * (1.0 - ay) + bottom * ay).clamp(0.0, 1.0) as f32;
            }
        }
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame> + '_ {
        (0..self.len()).map(move |i| self.frame(i))
    }
}

/// Largest window half-width the generated landmarks are guaranteed to suit.
pub const MAX_WINDOW_HALF_WIDTH: usize = 20;

fn scene_keypoints(spec: &SceneSpec) -> KeypointSet {
    let c = &spec.chest_region;
    let f = &spec.face_region;
    let cx = c.x as f64 + c.width as f64 / 2.0;
    let shoulder_y = c.y as f64 + 0.15 * c.height as f64;
    // the default grid hangs one shoulder width below the shoulders; keep
    // its apex inside the chest and clear of the widest tracking window
    let lowest = (c.bottom() as f64 - 1.0).min(spec.height as f64 - 1.0 - MAX_WINDOW_HALF_WIDTH as f64);
    let half_span = (0.25 * c.width as f64).min(0.5 * (lowest - shoulder_y)).max(1.0);
    let fxm = f.x as f64 + f.width as f64 / 2.0;
    let fy = |frac: f64| f.y as f64 + frac * f.height as f64;
    KeypointSet::new()
        .with(Landmark::ShoulderLeft, (cx - half_span, shoulder_y))
        .with(Landmark::ShoulderRight, (cx + half_span, shoulder_y))
        .with(Landmark::Neck, (cx, c.y as f64 + 0.08 * c.height as f64))
        .with(Landmark::EyeLeft, (fxm - 0.15 * f.width as f64, fy(0.35)))
        .with(Landmark::EyeRight, (fxm + 0.15 * f.width as f64, fy(0.35)))
        .with(Landmark::Nose, (fxm, fy(0.55)))
        .with(Landmark::Chin, (fxm, fy(0.8)))
}

/// Renders a whole scene into memory.
pub fn render_breathing_video(spec: &SceneSpec) -> Result<(FrameSequence, SceneTruth, KeypointSet)> {
    let renderer = SceneRenderer::new(spec.clone())?;
    let frames = renderer.frames().collect();
    let seq = FrameSequence::new(frames, spec.fps)?;
    Ok((seq, renderer.truth.clone(), renderer.keypoints()))
}

/// Texture fixture for tracker tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureSpec {
    pub width: usize,
    pub height: usize,
    pub texture: Texture,
    pub contrast: f64,
    pub seed: u64,
}

/// A textured frame and a copy whose content is moved by `shift` pixels
/// (bilinear resampling, replicate borders).
pub fn render_shift_pair(spec: &TextureSpec, shift: (f64, f64)) -> (Frame, Frame) {
    let first = Frame::from_fn(spec.width, spec.height, |x, y| {
        spec.texture.sample(x as f64, y as f64, spec.contrast, spec.seed) as f32
    });
    let second = Frame::from_fn(spec.width, spec.height, |x, y| {
        first.sample_bilinear(x as f64 - shift.0, y as f64 - shift.1) as f32
    });
    (first, second)
}

/// Which artifacts [`write_scene`] produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneOutputs {
    pub pgm_frames: bool,
    pub y4m: bool,
}

/// Paths written by [`write_scene`].
#[derive(Debug, Clone, Default)]
pub struct WrittenScene {
    pub frames_dir: Option<PathBuf>,
    pub y4m: Option<PathBuf>,
    pub keypoints: PathBuf,
    pub truth: PathBuf,
}

/// Writes frames (`frames/`, `video.y4m`), `keypoints.json` and `truth.csv`.
pub fn write_scene(renderer: &SceneRenderer, dir: &Path, outputs: SceneOutputs) -> Result<WrittenScene> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = WrittenScene {
        keypoints: dir.join("keypoints.json"),
        truth: dir.join("truth.csv"),
        ..Default::default()
    };
    let spec = renderer.spec();
    if outputs.pgm_frames {
        let frames_dir = dir.join("frames");
        let frames: Vec<Frame> = renderer.frames().collect();
        write_frame_dir(&frames_dir, "frame_", &frames)?;
        written.frames_dir = Some(frames_dir);
    }
    if outputs.y4m {
        let path = dir.join("video.y4m");
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let (num, den) = fps_to_rational(spec.fps);
        let frames: Vec<Frame> = renderer.frames().collect();
        write_y4m(file, &frames, spec.width, spec.height, num, den).map_err(|e| Error::io(&path, e))?;
        written.y4m = Some(path);
    }
    std::fs::write(&written.keypoints, renderer.keypoints().to_json() + "\n")
        .map_err(|e| Error::io(&written.keypoints, e))?;
    let mut truth = Vec::new();
    renderer.truth().write_csv(&mut truth).expect("writing to memory");
    std::fs::write(&written.truth, truth).map_err(|e| Error::io(&written.truth, e))?;
    Ok(written)
}
