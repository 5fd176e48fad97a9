//! The crop-and-resize transform shared by both sides of a pair, and its
//! inverse used when pasting a translated garment back into a frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::SegmentationMap;
use crate::imaging::{mask_bbox, resize_bilinear, resize_nearest, BitMask, Rgb8Image};

pub const DEFAULT_OUT_SIZE: usize = 512;

/// Source rectangle and the square side it is resized to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropParams {
    pub left: usize,
    pub top: usize,
    pub width: usize,
    pub height: usize,
    pub out_size: usize,
}

impl CropParams {
    pub fn full_frame(width: usize, height: usize, out_size: usize) -> Self {
        Self {
            left: 0,
            top: 0,
            width,
            height,
            out_size,
        }
    }

    pub fn right(&self) -> usize {
        self.left + self.width
    }

    pub fn bottom(&self) -> usize {
        self.top + self.height
    }

    /// True when apply/invert involve no resampling.
    pub fn is_unscaled(&self) -> bool {
        self.width == self.out_size && self.height == self.out_size
    }

    pub fn validate_for(&self, width: usize, height: usize) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.out_size == 0 {
            return Err(Error::InvalidParams("crop dimensions must be positive".into()));
        }
        if self.right() > width || self.bottom() > height {
            return Err(Error::InvalidParams(format!(
                "crop {self:?} exceeds {width}x{height} canvas"
            )));
        }
        Ok(())
    }
}

/// Places a span of `len` centered on `[lo, hi)` inside `[0, limit)`.
fn center_span(lo: usize, hi: usize, len: usize, limit: usize) -> usize {
    let start = (lo as i64 + hi as i64 - len as i64).div_euclid(2);
    start.clamp(0, (limit - len) as i64) as usize
}

/// Crop around the garment with a border of `border_frac` of the garment
/// height above and below, widened to a square where the frame allows.
///
/// Vertical borders stop at the frame edge. When the garment is wider than
/// tall, the square grows vertically instead, centered on the garment.
pub fn compute_crop(mask: &BitMask, border_frac: f32, out_size: usize) -> Result<CropParams> {
    if !(0.0..=1.0).contains(&border_frac) || out_size == 0 {
        return Err(Error::InvalidParams(format!(
            "border_frac {border_frac} must lie in [0, 1] and out_size must be positive"
        )));
    }
    let (fw, fh) = mask.dims();
    let bbox = mask_bbox(mask).ok_or(Error::EmptyMask("cannot crop an empty mask"))?;
    let border = (border_frac as f64 * bbox.height as f64).round() as usize;
    let top = bbox.top.saturating_sub(border);
    let bottom = (bbox.bottom() + border).min(fh);
    let vertical = bottom - top;
    if vertical >= bbox.width {
        let side = vertical.min(fw);
        Ok(CropParams {
            left: center_span(bbox.left, bbox.right(), side, fw),
            top,
            width: side,
            height: vertical,
            out_size,
        })
    } else {
        let side = bbox.width.min(fh);
        Ok(CropParams {
            left: bbox.left,
            top: center_span(top, bottom, side, fh),
            width: bbox.width,
            height: side,
            out_size,
        })
    }
}

/// Crops, then resizes bilinearly to `out_size` square.
pub fn apply_crop(img: &Rgb8Image, crop: &CropParams) -> Result<Rgb8Image> {
    crop.validate_for(img.width(), img.height())?;
    let sub = img.sub_image(crop.left, crop.top, crop.width, crop.height)?;
    Ok(resize_bilinear(&sub, crop.out_size, crop.out_size))
}

fn crop_plane<T: Copy>(plane: &[T], width: usize, crop: &CropParams) -> Vec<T> {
    let mut sub = Vec::with_capacity(crop.width * crop.height);
    for y in crop.top..crop.bottom() {
        sub.extend_from_slice(&plane[y * width + crop.left..y * width + crop.right()]);
    }
    resize_nearest(&sub, crop.width, crop.height, crop.out_size, crop.out_size)
}

/// Nearest-neighbor counterpart of [`apply_crop`] for masks.
pub fn apply_crop_mask(m: &BitMask, crop: &CropParams) -> Result<BitMask> {
    crop.validate_for(m.width(), m.height())?;
    BitMask::from_bits(crop.out_size, crop.out_size, crop_plane(m.as_slice(), m.width(), crop))
}

/// Nearest-neighbor counterpart of [`apply_crop`] for label maps.
pub fn apply_crop_labels(seg: &SegmentationMap, crop: &CropParams) -> Result<SegmentationMap> {
    crop.validate_for(seg.width(), seg.height())?;
    SegmentationMap::from_labels(
        crop.out_size,
        crop.out_size,
        crop_plane(seg.labels(), seg.width(), crop),
    )
}

fn check_cropped(dims: (usize, usize), crop: &CropParams) -> Result<()> {
    if dims != (crop.out_size, crop.out_size) {
        return Err(Error::DimensionMismatch {
            expected: (crop.out_size, crop.out_size),
            actual: dims,
        });
    }
    Ok(())
}

/// Resizes `cropped` back to the crop rectangle and pastes it into a copy
/// of `canvas`; pixels outside the rectangle are untouched.
pub fn invert_crop(cropped: &Rgb8Image, crop: &CropParams, canvas: &Rgb8Image) -> Result<Rgb8Image> {
    check_cropped(cropped.dims(), crop)?;
    crop.validate_for(canvas.width(), canvas.height())?;
    let back = resize_bilinear(cropped, crop.width, crop.height);
    let mut out = canvas.clone();
    let w = canvas.width();
    let row_bytes = crop.width * 3;
    for (y, src) in back.as_raw().chunks_exact(row_bytes).enumerate() {
        let start = ((crop.top + y) * w + crop.left) * 3;
        out.as_raw_mut()[start..start + row_bytes].copy_from_slice(src);
    }
    Ok(out)
}

/// Maps a cropped mask back to a `width` x `height` frame; bits outside
/// the crop rectangle are clear.
pub fn invert_crop_mask(cropped: &BitMask, crop: &CropParams, width: usize, height: usize) -> Result<BitMask> {
    check_cropped(cropped.dims(), crop)?;
    crop.validate_for(width, height)?;
    let back = resize_nearest(
        cropped.as_slice(),
        crop.out_size,
        crop.out_size,
        crop.width,
        crop.height,
    );
    let mut out = BitMask::new(width, height);
    for y in 0..crop.height {
        for x in 0..crop.width {
            if back[y * crop.width + x] {
                out.set(crop.left + x, crop.top + y, true);
            }
        }
    }
    Ok(out)
}
