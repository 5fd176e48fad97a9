//! Turns captured frames into aligned (measurement, target) training pairs
//! and augments them.

pub mod augment;
pub mod crop;
pub mod pairing;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::ReferencePalette;
use crate::imaging::color::threshold_hsv_within;
use crate::imaging::{largest_component, rgb_to_hsv, threshold_depth, BitMask, HsvRange, RgbdFrame};
use crate::rig::GarmentSpec;

pub use augment::{ColorJitterParams, PairSample, PartialBodyParams};
pub use crop::{apply_crop, compute_crop, invert_crop, CropParams};
pub use pairing::{pair_records, postprocess, PairedRecord, PairsDataset, PostprocessConfig};

/// Depth slab and color boxes selecting garment pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationConfig {
    pub depth_near_mm: u16,
    pub depth_far_mm: u16,
    pub ranges: Vec<HsvRange>,
}

impl SegmentationConfig {
    /// One box per patch color: hue within 15 degrees, clearly saturated.
    pub fn for_palette(palette: &ReferencePalette) -> Self {
        Self {
            depth_near_mm: 1000,
            depth_far_mm: 2000,
            ranges: palette
                .colors
                .iter()
                .map(|&c| HsvRange::around(c, 15.0, [0.5, 1.0], [0.25, 1.0]))
                .collect(),
        }
    }

    /// A box around the garment's base color, wide enough in value to keep
    /// shaded and textured regions.
    pub fn for_target(base: crate::imaging::Rgb) -> Self {
        let c = rgb_to_hsv(base);
        Self {
            depth_near_mm: 1000,
            depth_far_mm: 2000,
            ranges: vec![HsvRange::around(c, 20.0, [0.6 * c.s, 1.0], [0.15, 1.0])],
        }
    }

    pub fn for_garment(spec: &GarmentSpec) -> Self {
        match spec {
            GarmentSpec::Measurement { colors } => Self::for_palette(&ReferencePalette::from_rgb(colors)),
            GarmentSpec::Target { base, .. } => Self::for_target(*base),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth_near_mm >= self.depth_far_mm {
            return Err(Error::InvalidRange("depth_near_mm must be below depth_far_mm".into()));
        }
        if self.ranges.is_empty() {
            return Err(Error::InvalidParams("segmentation needs at least one HSV range".into()));
        }
        self.ranges.iter().try_for_each(HsvRange::validate)
    }
}

/// Depth slab intersected with the color boxes, reduced to the largest
/// region.
pub fn segment_garment(frame: &RgbdFrame, cfg: &SegmentationConfig) -> Result<BitMask> {
    let depth = threshold_depth(&frame.depth, cfg.depth_near_mm, cfg.depth_far_mm)?;
    let color = threshold_hsv_within(&frame.color, &cfg.ranges, &depth);
    let m = largest_component(&color);
    if m.is_empty() {
        return Err(Error::EmptyMask("no garment pixels in frame"));
    }
    Ok(m)
}
