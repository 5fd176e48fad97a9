//! Live measurement-garment extraction: depth body mask, skin removal, then
//! palette-seeded K-means into the eight canonical patch labels.

pub mod kmeans;
pub mod segmap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::color::in_any;
use crate::imaging::{largest_component, rgb_to_hsv, threshold_depth, BitMask, HsvRange, RgbdFrame};

pub use kmeans::{embed, KMeansResult};
pub use segmap::{OneHot, ReferencePalette, SegmentationMap, PATCH_COUNT};

/// HSV boxes classifying exposed skin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkinModel {
    pub ranges: Vec<HsvRange>,
}

impl Default for SkinModel {
    /// Hue 340..50 through red, moderate saturation, not too dark.
    fn default() -> Self {
        Self {
            ranges: vec![HsvRange::new([340.0, 50.0], [0.15, 0.8], [0.3, 1.0])],
        }
    }
}

impl SkinModel {
    pub fn validate(&self) -> Result<()> {
        self.ranges.iter().try_for_each(HsvRange::validate)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub depth_near_mm: u16,
    pub depth_far_mm: u16,
    pub skin: SkinModel,
    /// Body pixels below this saturation are suit or shadow, never garment.
    pub min_garment_saturation: f32,
    pub min_garment_value: f32,
    pub palette: ReferencePalette,
    pub max_iters: u32,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            depth_near_mm: 1000,
            depth_far_mm: 2000,
            skin: SkinModel::default(),
            min_garment_saturation: 0.3,
            min_garment_value: 0.2,
            palette: ReferencePalette::default(),
            max_iters: 20,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth_near_mm >= self.depth_far_mm {
            return Err(Error::InvalidRange("depth_near_mm must be below depth_far_mm".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.min_garment_saturation) || !(0.0..=1.0).contains(&self.min_garment_value) {
            return Err(Error::InvalidRange(
                "garment saturation/value floors must lie in [0, 1]".into(),
            ));
        }
        self.skin.validate()?;
        self.palette.validate()
    }
}

/// Depth slab, reduced to its largest region.
pub fn body_mask_from_depth(frame: &RgbdFrame, near: u16, far: u16) -> Result<BitMask> {
    let m = largest_component(&threshold_depth(&frame.depth, near, far)?);
    if m.is_empty() {
        return Err(Error::EmptyMask("no body within the depth range"));
    }
    Ok(m)
}

/// Body pixels that are not skin, reduced to the largest region.
pub fn remove_skin(frame: &RgbdFrame, body: &BitMask, skin: &SkinModel) -> Result<BitMask> {
    check_dims(frame, body)?;
    let mut m = body.clone();
    for i in body.iter_set().collect::<Vec<_>>() {
        if in_any(&skin.ranges, rgb_to_hsv(pixel(frame, i))) {
            m.set_index(i, false);
        }
    }
    let m = largest_component(&m);
    if m.is_empty() {
        return Err(Error::EmptyMask("nothing left after skin removal"));
    }
    Ok(m)
}

/// Drops pixels too gray or dark to be a patch, then keeps the largest
/// region.
pub fn reject_achromatic(frame: &RgbdFrame, mask: &BitMask, min_s: f32, min_v: f32) -> Result<BitMask> {
    check_dims(frame, mask)?;
    let mut m = mask.clone();
    for i in mask.iter_set().collect::<Vec<_>>() {
        let c = rgb_to_hsv(pixel(frame, i));
        if c.s < min_s || c.v < min_v {
            m.set_index(i, false);
        }
    }
    let m = largest_component(&m);
    if m.is_empty() {
        return Err(Error::EmptyMask("no chromatic garment pixels"));
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterOptions {
    pub max_iters: u32,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self { max_iters: 20 }
    }
}

/// Segmentation plus the clustering run that produced it.
#[derive(Clone, Debug)]
pub struct Clustering {
    pub seg: SegmentationMap,
    pub kmeans: KMeansResult,
}

/// K-means over the garment pixels seeded at `init`; each final cluster
/// takes the label of the nearest palette color (lowest label on ties).
pub fn cluster_with_init(
    frame: &RgbdFrame,
    garment: &BitMask,
    palette: &ReferencePalette,
    init: &[kmeans::Feature],
    opts: ClusterOptions,
) -> Result<Clustering> {
    check_dims(frame, garment)?;
    let idx: Vec<usize> = garment.iter_set().collect();
    if idx.is_empty() {
        return Err(Error::EmptyMask("garment mask is empty"));
    }
    let features: Vec<kmeans::Feature> = idx.iter().map(|&i| embed(rgb_to_hsv(pixel(frame, i)))).collect();
    let km = kmeans::kmeans(&features, init, opts.max_iters);
    let anchors: Vec<kmeans::Feature> = palette.colors.iter().map(|&c| embed(c)).collect();
    let to_label: Vec<u8> = km
        .centroids
        .iter()
        .map(|c| kmeans::nearest(c, &anchors) as u8 + 1)
        .collect();
    let (w, h) = frame.dims();
    let mut labels = vec![0u8; w * h];
    for (&i, &a) in idx.iter().zip(&km.assignment) {
        labels[i] = to_label[a as usize];
    }
    Ok(Clustering {
        seg: SegmentationMap::from_labels(w, h, labels)?,
        kmeans: km,
    })
}

pub fn cluster_segments(
    frame: &RgbdFrame,
    garment: &BitMask,
    palette: &ReferencePalette,
    opts: ClusterOptions,
) -> Result<Clustering> {
    let init: Vec<kmeans::Feature> = palette.colors.iter().map(|&c| embed(c)).collect();
    cluster_with_init(frame, garment, palette, &init, opts)
}

/// Full extraction; returns the patch labels and the garment mask they
/// cover.
pub fn extract(frame: &RgbdFrame, cfg: &ExtractionConfig) -> Result<(SegmentationMap, BitMask)> {
    let body = body_mask_from_depth(frame, cfg.depth_near_mm, cfg.depth_far_mm)?;
    let clothed = remove_skin(frame, &body, &cfg.skin)?;
    let garment = reject_achromatic(frame, &clothed, cfg.min_garment_saturation, cfg.min_garment_value)?;
    let c = cluster_segments(
        frame,
        &garment,
        &cfg.palette,
        ClusterOptions {
            max_iters: cfg.max_iters,
        },
    )?;
    Ok((c.seg, garment))
}

#[inline]
fn pixel(frame: &RgbdFrame, i: usize) -> crate::imaging::Rgb {
    let raw = frame.color.as_raw();
    [raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]]
}

fn check_dims(frame: &RgbdFrame, m: &BitMask) -> Result<()> {
    if frame.dims() != m.dims() {
        return Err(Error::DimensionMismatch {
            expected: frame.dims(),
            actual: m.dims(),
        });
    }
    Ok(())
}
