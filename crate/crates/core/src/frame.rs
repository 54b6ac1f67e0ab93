//! Single-channel intensity frames and frame sequences.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Row-major grid of `f32` samples. Used for intensities and for derived
/// quantities such as gradients, which are not confined to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!(
                "dimensions {width}x{height} must be at least 1x1"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "{} samples for a {width}x{height} grid",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        assert!(width > 0 && height > 0);
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(width > 0 && height > 0);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Sample at integer coordinates with replicate borders.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    /// Bilinear interpolation of the four surrounding samples. Coordinates
    /// outside the grid are clamped to the border.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, max_x) };
        let y = if y.is_nan() { 0.0 } else { y.clamp(0.0, max_y) };
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let ax = x - x0 as f64;
        let ay = y - y0 as f64;
        let r0 = y0 * self.width;
        let r1 = y1 * self.width;
        let top = self.data[r0 + x0] as f64 * (1.0 - ax) + self.data[r0 + x1] as f64 * ax;
        let bottom = self.data[r1 + x0] as f64 * (1.0 - ax) + self.data[r1 + x1] as f64 * ax;
        top * (1.0 - ay) + bottom * ay
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }
}

/// Single-channel intensity frame with every sample finite and in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame(Plane);

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        let plane = Plane::new(width, height, data)?;
        Self::from_plane(plane)
    }

    pub fn from_plane(plane: Plane) -> Result<Self> {
        if let Some(i) = plane
            .data
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
        {
            return Err(Error::InvalidFrame(format!(
                "sample {} at ({}, {}) outside [0, 1]",
                plane.data[i],
                i % plane.width,
                i / plane.width
            )));
        }
        Ok(Frame(plane))
    }

    /// Builds a frame from values the caller guarantees to be in range.
    pub(crate) fn from_plane_unchecked(plane: Plane) -> Self {
        debug_assert!(plane.data.iter().all(|v| (0.0..=1.0).contains(v)));
        Frame(plane)
    }

    /// Builds a frame by clamping every sample of `f` into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        Frame(Plane::from_fn(width, height, |x, y| {
            let v = f(x, y);
            if v.is_nan() {
                0.0
            } else {
                v.clamp(0.0, 1.0)
            }
        }))
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        let data = bytes.iter().map(|&b| b as f32 / 255.0).collect();
        Ok(Frame(Plane::new(width, height, data)?))
    }

    /// Quantizes to 8 bits with round-to-nearest.
    pub fn to_u8(&self) -> Vec<u8> {
        self.0
            .data
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.0.width, self.0.height)
    }
}

impl Deref for Frame {
    type Target = Plane;

    fn deref(&self) -> &Plane {
        &self.0
    }
}

/// Ordered frames of identical dimensions with a frame rate.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    fps: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, fps: f64) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidConfig(format!("fps must be positive, got {fps}")));
        }
        if let Some(first) = frames.first() {
            let dims = first.dims();
            if let Some(bad) = frames.iter().position(|f| f.dims() != dims) {
                let (w, h) = frames[bad].dims();
                return Err(Error::InvalidFrame(format!(
                    "frame {bad} is {w}x{h}, expected {}x{}",
                    dims.0, dims.1
                )));
            }
        }
        Ok(Self { frames, fps })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.frames.first().map(Frame::dims)
    }

    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_samples() {
        assert!(Frame::new(2, 1, vec![0.0, 1.5]).is_err());
        assert!(Frame::new(2, 1, vec![0.0, f32::NAN]).is_err());
        assert!(Frame::new(0, 1, vec![]).is_err());
        assert!(Frame::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn bilinear_examples() {
        let f = Frame::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(f.sample_bilinear(0.0, 0.0), 0.0);
        assert_eq!(f.sample_bilinear(1.0, 0.0), 1.0);
        assert!((f.sample_bilinear(0.5, 0.0) - 0.5).abs() < 1e-12);
        let g = Frame::from_fn(3, 3, |x, y| (x + 3 * y) as f32 / 8.0);
        assert_eq!(g.sample_bilinear(-5.0, -5.0), g.get(0, 0) as f64);
        assert_eq!(g.sample_bilinear(2.0, 1.0), g.get(2, 1) as f64);
    }

    #[test]
    fn sequence_rejects_mixed_dims() {
        let a = Frame::from_fn(2, 2, |_, _| 0.0);
        let b = Frame::from_fn(3, 2, |_, _| 0.0);
        assert!(FrameSequence::new(vec![a.clone(), b], 30.0).is_err());
        assert!(FrameSequence::new(vec![a], 0.0).is_err());
    }
}
