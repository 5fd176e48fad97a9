//! Pair augmentations. Geometric ops move both sides together (labels and
//! masks by nearest neighbor, the target bilinearly); color jitter touches
//! only the target garment pixels.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::crop::CropParams;
use super::pairing::{write_pairs_manifest, PairedRecord, PairsDataset};
use crate::error::{Error, Result};
use crate::extraction::SegmentationMap;
use crate::imaging::{
    hsv_to_rgb, netpbm, rgb_to_hsv, warp_affine, warp_affine_nearest, AffineParams, BitMask, Hsv, Rgb8Image,
};

/// In-memory pair: cropped labels, cropped mask, masked cropped target.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSample {
    pub seg: SegmentationMap,
    pub mask: BitMask,
    pub target: Rgb8Image,
}

impl PairSample {
    pub fn read(root: &Path, rec: &PairedRecord) -> Result<Self> {
        Ok(Self {
            seg: SegmentationMap::read_pgm(root.join(&rec.seg))?,
            mask: netpbm::read_mask(root.join(&rec.mask))?,
            target: netpbm::read_ppm(root.join(&rec.target))?,
        })
    }

    pub fn write(&self, root: &Path, rec: &PairedRecord) -> Result<()> {
        self.seg.write_pgm(root.join(&rec.seg))?;
        netpbm::write_mask(root.join(&rec.mask), &self.mask)?;
        netpbm::write_ppm(root.join(&rec.target), &self.target)
    }

    fn dims(&self) -> (usize, usize) {
        self.target.dims()
    }
}

/// Half-widths of the uniform affine sampling box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffineRanges {
    pub translate_px: f32,
    pub rotation_deg: f32,
    pub shear_deg: f32,
}

impl Default for AffineRanges {
    fn default() -> Self {
        Self {
            translate_px: 50.0,
            rotation_deg: 15.0,
            shear_deg: 10.0,
        }
    }
}

#[inline]
fn symmetric(rng: &mut ChaCha8Rng, half: f32) -> f32 {
    if half == 0.0 {
        0.0
    } else {
        rng.random_range(-half..=half)
    }
}

impl AffineRanges {
    pub fn zero() -> Self {
        Self {
            translate_px: 0.0,
            rotation_deg: 0.0,
            shear_deg: 0.0,
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> AffineParams {
        AffineParams {
            dx: symmetric(rng, self.translate_px),
            dy: symmetric(rng, self.translate_px),
            rotation: symmetric(rng, self.rotation_deg),
            shear_x: symmetric(rng, self.shear_deg),
            shear_y: symmetric(rng, self.shear_deg),
        }
    }

    pub fn contains(&self, p: &AffineParams) -> bool {
        p.dx.abs() <= self.translate_px
            && p.dy.abs() <= self.translate_px
            && p.rotation.abs() <= self.rotation_deg
            && p.shear_x.abs() <= self.shear_deg
            && p.shear_y.abs() <= self.shear_deg
    }
}

/// Signed fractional changes. Hue is a fraction of a full turn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorJitterParams {
    pub saturation: f32,
    pub hue: f32,
    pub brightness: f32,
    pub contrast: f32,
}

pub const MAX_JITTER: f32 = 0.05;

impl ColorJitterParams {
    pub fn sample(rng: &mut ChaCha8Rng, max: f32) -> Self {
        Self {
            saturation: symmetric(rng, max),
            hue: symmetric(rng, max),
            brightness: symmetric(rng, max),
            contrast: symmetric(rng, max),
        }
    }

    pub fn max_abs(&self) -> f32 {
        self.saturation
            .abs()
            .max(self.hue.abs())
            .max(self.brightness.abs())
            .max(self.contrast.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialBodyParams {
    pub phi: f32,
    /// Rows at or below `round(clip_height * height)` are cleared.
    pub clip_height: f32,
}

impl PartialBodyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_height > 0.0 && self.clip_height <= 1.0) {
            return Err(Error::InvalidParams("clip_height must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialBodyRanges {
    pub phi: [f32; 2],
    pub clip_height: [f32; 2],
}

impl Default for PartialBodyRanges {
    fn default() -> Self {
        Self {
            phi: [-15.0, 15.0],
            clip_height: [0.3, 0.9],
        }
    }
}

impl PartialBodyRanges {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> PartialBodyParams {
        PartialBodyParams {
            phi: rng.random_range(self.phi[0]..=self.phi[1]),
            clip_height: rng.random_range(self.clip_height[0]..=self.clip_height[1]),
        }
    }
}

/// Seed for augmentation `aug_index` of a configuration, independent of
/// processing order.
pub fn record_seed(global: u64, config_id: u64, aug_index: u32) -> u64 {
    global ^ (config_id << 24) ^ aug_index as u64
}

/// Warps both sides with one transform.
pub fn apply_affine(pair: &PairSample, p: &AffineParams) -> PairSample {
    let (w, h) = pair.dims();
    let labels = warp_affine_nearest(pair.seg.labels(), w, h, p, 0);
    let bits = warp_affine_nearest(pair.mask.as_slice(), w, h, p, false);
    PairSample {
        seg: SegmentationMap::from_labels(w, h, labels).expect("labels come from a valid map"),
        mask: BitMask::from_bits(w, h, bits).expect("same dimensions"),
        target: warp_affine(&pair.target, p, [0, 0, 0]),
    }
}

/// Samples one transform from `ranges` using `seed` and applies it.
pub fn augment_affine(pair: &PairSample, ranges: &AffineRanges, seed: u64) -> (PairSample, AffineParams) {
    let p = ranges.sample(&mut ChaCha8Rng::seed_from_u64(seed));
    (apply_affine(pair, &p), p)
}

/// Brightness, contrast, saturation and hue changes, in that order, on the
/// pixels of `mask`. A zero factor leaves its step out entirely.
pub fn jitter_image(img: &Rgb8Image, mask: &BitMask, j: &ColorJitterParams) -> Rgb8Image {
    let mut out = img.clone();
    let idx: Vec<usize> = mask.iter_set().collect();
    if idx.is_empty() {
        return out;
    }
    let raw = out.as_raw_mut();
    let px = |raw: &[u8], i: usize| [raw[3 * i] as f32, raw[3 * i + 1] as f32, raw[3 * i + 2] as f32];
    let q = |v: f32| v.round().clamp(0.0, 255.0) as u8;
    let mut vals: Vec<[f32; 3]> = idx.iter().map(|&i| px(raw, i)).collect();
    if j.brightness != 0.0 {
        for v in &mut vals {
            *v = v.map(|c| c * (1.0 + j.brightness));
        }
    }
    if j.contrast != 0.0 {
        let mean = vals.iter().map(|v| luma(v) as f64).sum::<f64>() as f32 / vals.len() as f32;
        for v in &mut vals {
            *v = v.map(|c| mean + (c - mean) * (1.0 + j.contrast));
        }
    }
    if j.saturation != 0.0 {
        for v in &mut vals {
            let g = luma(v);
            *v = v.map(|c| g + (c - g) * (1.0 + j.saturation));
        }
    }
    for (&i, v) in idx.iter().zip(&vals) {
        let mut p = v.map(q);
        if j.hue != 0.0 {
            let c = rgb_to_hsv(p);
            if c.s > 0.0 {
                p = hsv_to_rgb(Hsv::new((c.h + j.hue * 360.0).rem_euclid(360.0), c.s, c.v));
            }
        }
        raw[3 * i..3 * i + 3].copy_from_slice(&p);
    }
    out
}

#[inline]
fn luma(v: &[f32; 3]) -> f32 {
    0.299 * v[0] + 0.587 * v[1] + 0.114 * v[2]
}

pub fn augment_color(pair: &PairSample, max: f32, seed: u64) -> (PairSample, ColorJitterParams) {
    let j = ColorJitterParams::sample(&mut ChaCha8Rng::seed_from_u64(seed), max);
    let mut out = pair.clone();
    out.target = jitter_image(&pair.target, &pair.mask, &j);
    (out, j)
}

/// Rotates both sides by `phi` about the center, then clears every row from
/// the clipping line down.
pub fn augment_partial_body(pair: &PairSample, p: &PartialBodyParams) -> Result<PairSample> {
    p.validate()?;
    let mut out = if p.phi == 0.0 {
        pair.clone()
    } else {
        apply_affine(pair, &AffineParams::rotation(p.phi))
    };
    let (w, h) = out.dims();
    let clip = ((p.clip_height as f64 * h as f64).round() as usize).min(h);
    if clip < h {
        let labels: Vec<u8> = out
            .seg
            .labels()
            .iter()
            .enumerate()
            .map(|(i, &l)| if i / w >= clip { 0 } else { l })
            .collect();
        out.seg = SegmentationMap::from_labels(w, h, labels)?;
        for y in clip..h {
            for x in 0..w {
                out.mask.set(x, y, false);
            }
        }
        out.target.as_raw_mut()[clip * w * 3..].fill(0);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Augmented copies written per source pair.
    pub copies: u32,
    pub affine: AffineRanges,
    pub jitter: f32,
    /// When set, each copy is also clipped to a rotated upper body.
    pub partial_body: Option<PartialBodyRanges>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            copies: 1,
            affine: AffineRanges::default(),
            jitter: MAX_JITTER,
            partial_body: None,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.affine;
        let finite_nonneg = |v: f32| v.is_finite() && v >= 0.0;
        if !(finite_nonneg(a.translate_px) && finite_nonneg(a.rotation_deg) && finite_nonneg(a.shear_deg)) {
            return Err(Error::InvalidParams(
                "affine ranges must be finite and non-negative".into(),
            ));
        }
        if !(finite_nonneg(self.jitter) && self.jitter <= 1.0) {
            return Err(Error::InvalidParams("jitter must lie in [0, 1]".into()));
        }
        if let Some(p) = &self.partial_body {
            if p.phi[0] > p.phi[1]
                || p.clip_height[0] > p.clip_height[1]
                || p.clip_height[0] <= 0.0
                || p.clip_height[1] > 1.0
            {
                return Err(Error::InvalidParams("bad partial-body ranges".into()));
            }
        }
        Ok(())
    }
}

/// Metadata for one augmented pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentedRecord {
    pub config_id: u64,
    pub aug_index: u32,
    pub seed: u64,
    pub seg: String,
    pub mask: String,
    pub target: String,
    pub crop: CropParams,
    pub affine: AffineParams,
    pub jitter: ColorJitterParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_body: Option<PartialBodyParams>,
}

/// The full augmentation of one pair for a given seed.
pub fn augment_sample(
    pair: &PairSample,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<(PairSample, AffineParams, ColorJitterParams, Option<PartialBodyParams>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let affine = cfg.affine.sample(&mut rng);
    let jitter = ColorJitterParams::sample(&mut rng, cfg.jitter);
    let partial = cfg.partial_body.map(|r| r.sample(&mut rng));
    let mut out = apply_affine(pair, &affine);
    out.target = jitter_image(&out.target, &out.mask, &jitter);
    if let Some(p) = &partial {
        out = augment_partial_body(&out, p)?;
    }
    Ok((out, affine, jitter, partial))
}

pub const AUGMENTED_FILE: &str = "augmented.jsonl";

/// Writes `cfg.copies` augmented versions of every pair, plus a pairs
/// manifest so the output can be indexed like any pair set.
pub fn augment_dataset(
    pairs: &PairsDataset,
    cfg: &AugmentConfig,
    global_seed: u64,
    out_dir: &Path,
) -> Result<Vec<AugmentedRecord>> {
    cfg.validate()?;
    for sub in ["seg", "mask", "target"] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let jobs: Vec<(usize, u32)> = (0..pairs.records.len())
        .flat_map(|r| (0..cfg.copies).map(move |k| (r, k)))
        .collect();
    let out: Vec<Result<AugmentedRecord>> = jobs
        .par_iter()
        .map(|&(r, k)| {
            let rec = &pairs.records[r];
            let sample = pairs.load(rec)?;
            let seed = record_seed(global_seed, rec.config_id, k);
            let (aug, affine, jitter, partial) = augment_sample(&sample, cfg, seed)?;
            let stem = format!("{:06}_{k:03}", rec.config_id);
            let out = AugmentedRecord {
                config_id: rec.config_id,
                aug_index: k,
                seed,
                seg: format!("seg/{stem}.pgm"),
                mask: format!("mask/{stem}.pgm"),
                target: format!("target/{stem}.ppm"),
                crop: rec.crop,
                affine,
                jitter,
                partial_body: partial,
            };
            aug.write(out_dir, &as_pair(&out))?;
            Ok(out)
        })
        .collect();
    let records = out.into_iter().collect::<Result<Vec<_>>>()?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).expect("serializable"));
        text.push('\n');
    }
    let p = out_dir.join(AUGMENTED_FILE);
    fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    let as_pairs: Vec<PairedRecord> = records.iter().map(as_pair).collect();
    write_pairs_manifest(out_dir, &as_pairs)?;
    Ok(records)
}

fn as_pair(r: &AugmentedRecord) -> PairedRecord {
    PairedRecord {
        config_id: r.config_id,
        seg: r.seg.clone(),
        mask: r.mask.clone(),
        target: r.target.clone(),
        crop: r.crop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PairSample {
        let (w, h) = (64, 48);
        let labels: Vec<u8> = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                if (10..50).contains(&x) && (8..40).contains(&y) {
                    1 + ((x / 10 + y / 16) % 8) as u8
                } else {
                    0
                }
            })
            .collect();
        let seg = SegmentationMap::from_labels(w, h, labels).unwrap();
        let mask = seg.garment_mask();
        let target = Rgb8Image::from_fn(w, h, |x, y| {
            if mask.get(x, y) {
                [200, (x * 3) as u8, (y * 4) as u8]
            } else {
                [0, 0, 0]
            }
        })
        .unwrap();
        PairSample { seg, mask, target }
    }

    #[test]
    fn same_seed_same_output() {
        let s = sample();
        let cfg = AugmentConfig::default();
        assert_eq!(
            augment_sample(&s, &cfg, 9).unwrap().0,
            augment_sample(&s, &cfg, 9).unwrap().0
        );
    }

    #[test]
    fn zero_ranges_are_identity() {
        let s = sample();
        let (out, p) = augment_affine(&s, &AffineRanges::zero(), 123);
        assert_eq!(p, AffineParams::identity());
        assert_eq!(out, s);
        let (out, _) = augment_color(&s, 0.0, 5);
        assert_eq!(out, s);
    }

    #[test]
    fn brightness_scales_mid_gray() {
        let img = Rgb8Image::filled(4, 4, [128, 128, 128]).unwrap();
        let j = ColorJitterParams {
            brightness: 0.05,
            ..Default::default()
        };
        let out = jitter_image(&img, &BitMask::full(4, 4), &j);
        assert!(out.pixels().all(|p| p == [134, 134, 134]));
    }

    #[test]
    fn hue_shift_keeps_grays() {
        let img = Rgb8Image::from_fn(16, 1, |x, _| {
            let g = (x * 16) as u8;
            [g, g, g]
        })
        .unwrap();
        let j = ColorJitterParams {
            hue: 0.05,
            ..Default::default()
        };
        assert_eq!(jitter_image(&img, &BitMask::full(16, 1), &j), img);
    }

    #[test]
    fn jitter_stays_inside_mask() {
        let s = sample();
        let j = ColorJitterParams {
            saturation: 0.05,
            hue: -0.05,
            brightness: 0.05,
            contrast: -0.05,
        };
        let out = jitter_image(&s.target, &s.mask, &j);
        for i in s.mask.not().iter_set() {
            let (x, y) = (i % 64, i / 64);
            assert_eq!(out.get(x, y), s.target.get(x, y));
        }
    }

    #[test]
    fn partial_body_identity_and_half() {
        let s = sample();
        let id = PartialBodyParams {
            phi: 0.0,
            clip_height: 1.0,
        };
        assert_eq!(augment_partial_body(&s, &id).unwrap(), s);
        let half = augment_partial_body(
            &s,
            &PartialBodyParams {
                phi: 0.0,
                clip_height: 0.5,
            },
        )
        .unwrap();
        for y in 24..48 {
            for x in 0..64 {
                assert_eq!(half.seg.get(x, y), 0);
                assert!(!half.mask.get(x, y));
                assert_eq!(half.target.get(x, y), [0, 0, 0]);
            }
        }
        assert_eq!(half.seg.get(20, 20), s.seg.get(20, 20));
    }

    #[test]
    fn record_seeds_do_not_collide_across_neighbors() {
        assert_ne!(record_seed(0, 1, 0), record_seed(0, 0, 1));
        assert_eq!(record_seed(5, 0, 0), 5);
    }
}
