//! Pixel-level primitives shared by every stage: image containers, HSV
//! conversion and thresholds, binary masks with connected components,
//! resampling, and netpbm I/O.

pub mod color;
pub mod geometry;
pub mod mask;
pub mod netpbm;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use color::{hsv_to_rgb, rgb_to_hsv, threshold_hsv, Hsv, HsvRange};
pub use geometry::{resize_bilinear, resize_nearest, warp_affine, warp_affine_nearest, AffineParams};
pub use mask::{
    connected_components, dilate, label_boundary_band, largest_component, mask_apply, mask_bbox, threshold_depth,
    BitMask, Components,
};

pub type Rgb = [u8; 3];

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParams(format!(
            "image dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Row-major 8-bit RGB image.
#[derive(Clone, PartialEq, Eq)]
pub struct Rgb8Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Rgb8Image {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, [0, 0, 0])
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self> {
        check_dims(width, height)?;
        let data = color.repeat(width * height);
        Ok(Self { width, height, data })
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(Error::Format(format!(
                "rgb buffer has {} bytes, expected {}",
                data.len(),
                width * height * 3
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Ok(Self { width, height, data })
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
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn as_raw_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, p: Rgb) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&p);
    }

    /// Pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = Rgb> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// Copies the `w`x`h` window at (`left`, `top`).
    pub fn sub_image(&self, left: usize, top: usize, w: usize, h: usize) -> Result<Self> {
        if left + w > self.width || top + h > self.height {
            return Err(Error::InvalidRange(format!(
                "window {w}x{h}+{left}+{top} exceeds {}x{}",
                self.width, self.height
            )));
        }
        check_dims(w, h)?;
        let mut data = Vec::with_capacity(w * h * 3);
        for y in top..top + h {
            let start = (y * self.width + left) * 3;
            data.extend_from_slice(&self.data[start..start + w * 3]);
        }
        Ok(Self {
            width: w,
            height: h,
            data,
        })
    }

    /// Mirror around the vertical axis.
    pub fn flip_horizontal(&self) -> Self {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.put(self.width - 1 - x, y, self.get(x, y));
            }
        }
        out
    }
}

impl fmt::Debug for Rgb8Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rgb8Image({}x{})", self.width, self.height)
    }
}

/// Row-major depth map in millimeters; 0 means the sensor saw nothing.
#[derive(Clone, PartialEq, Eq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl DepthImage {
    pub fn filled(width: usize, height: usize, mm: u16) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![mm; width * height],
        })
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::Format(format!(
                "depth buffer has {} samples, expected {}",
                data.len(),
                width * height
            )));
        }
        Ok(Self { width, height, data })
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
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_raw(&self) -> &[u16] {
        &self.data
    }

    pub fn as_raw_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, mm: u16) {
        self.data[y * self.width + x] = mm;
    }
}

impl fmt::Debug for DepthImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DepthImage({}x{})", self.width, self.height)
    }
}

/// Aligned color + depth capture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbdFrame {
    pub color: Rgb8Image,
    pub depth: DepthImage,
    pub config_id: Option<u64>,
}

impl RgbdFrame {
    pub fn new(color: Rgb8Image, depth: DepthImage, config_id: Option<u64>) -> Result<Self> {
        if color.dims() != depth.dims() {
            return Err(Error::DimensionMismatch {
                expected: color.dims(),
                actual: depth.dims(),
            });
        }
        Ok(Self {
            color,
            depth,
            config_id,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.color.dims()
    }
}

/// Axis-aligned pixel rectangle, half-open on the right and bottom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub left: usize,
    pub top: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn right(&self) -> usize {
        self.left + self.width
    }

    pub fn bottom(&self) -> usize {
        self.top + self.height
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.left && x < self.right() && y >= self.top && y < self.bottom()
    }
}
