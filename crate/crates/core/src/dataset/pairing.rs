//! Per-frame garment masks for a capture, and the aligned pair set built
//! from a measurement capture and a target capture of the same plan.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::augment::PairSample;
use super::crop::{apply_crop, apply_crop_labels, apply_crop_mask, compute_crop, CropParams, DEFAULT_OUT_SIZE};
use super::{segment_garment, SegmentationConfig};
use crate::error::{Error, Result};
use crate::extraction::{extract, ExtractionConfig, SegmentationMap};
use crate::imaging::{mask_apply, netpbm, BitMask};
use crate::rig::{read_jsonl, write_json, CaptureDataset, GarmentSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessConfig {
    /// Border above and below the garment, as a fraction of its height.
    pub border_frac: f32,
    pub out_size: usize,
    /// Measurement captures go through the same extraction as live frames.
    pub extraction: ExtractionConfig,
    /// Target segmentation; derived from the garment spec when absent.
    pub target_segmentation: Option<SegmentationConfig>,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            border_frac: 0.05,
            out_size: DEFAULT_OUT_SIZE,
            extraction: ExtractionConfig::default(),
            target_segmentation: None,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.border_frac) {
            return Err(Error::InvalidParams("border_frac must lie in [0, 1]".into()));
        }
        if self.out_size == 0 {
            return Err(Error::InvalidParams("out_size must be positive".into()));
        }
        self.extraction.validate()?;
        if let Some(s) = &self.target_segmentation {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub config_id: u64,
    pub mask: String,
    /// Full-frame patch labels; measurement captures only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seg: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskSetSummary {
    /// Relative to the mask set root when both sit on one filesystem tree.
    pub capture_root: PathBuf,
    pub measurement: bool,
    pub frames: u64,
    /// Frames where no garment was found; they have no mask record.
    pub skipped: Vec<u64>,
}

/// Output of [`postprocess`].
#[derive(Clone, Debug)]
pub struct MaskSet {
    pub root: PathBuf,
    pub summary: MaskSetSummary,
    pub records: Vec<MaskRecord>,
}

const MASKS_FILE: &str = "masks.jsonl";
const MASKS_SUMMARY: &str = "masks.json";
pub const PAIRS_FILE: &str = "pairs.jsonl";

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut text = String::new();
    for it in items {
        text.push_str(&serde_json::to_string(it).expect("serializable"));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Segments every frame of a capture. Measurement frames yield a mask and
/// patch labels, target frames a mask only.
pub fn postprocess(capture: &CaptureDataset, cfg: &PostprocessConfig, out_dir: &Path) -> Result<MaskSet> {
    cfg.validate()?;
    let measurement = capture.summary.garment.is_measurement();
    let target_cfg = cfg
        .target_segmentation
        .clone()
        .unwrap_or_else(|| SegmentationConfig::for_garment(&capture.summary.garment));
    create_dir(&out_dir.join("mask"))?;
    if measurement {
        create_dir(&out_dir.join("seg"))?;
    }
    let results: Vec<Result<Option<MaskRecord>>> = capture
        .records
        .par_iter()
        .map(|rec| {
            let id = rec.entry.index;
            let frame = capture.load_frame(rec)?;
            let found = if measurement {
                extract(&frame, &cfg.extraction).map(|(s, m)| (m, Some(s)))
            } else {
                segment_garment(&frame, &target_cfg).map(|m| (m, None))
            };
            let (mask, seg) = match found {
                Ok(v) => v,
                Err(Error::EmptyMask(why)) => {
                    log::warn!("frame {id}: {why}; skipped");
                    return Ok(None);
                }
                Err(e) => return Err(e),
            };
            let out = MaskRecord {
                config_id: id,
                mask: format!("mask/{id:06}.pgm"),
                seg: seg.as_ref().map(|_| format!("seg/{id:06}.seg.pgm")),
            };
            netpbm::write_mask(out_dir.join(&out.mask), &mask)?;
            if let (Some(s), Some(p)) = (&seg, &out.seg) {
                s.write_pgm(out_dir.join(p))?;
            }
            Ok(Some(out))
        })
        .collect();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (rec, r) in capture.records.iter().zip(results) {
        match r? {
            Some(m) => records.push(m),
            None => skipped.push(rec.entry.index),
        }
    }
    let capture_abs = fs::canonicalize(&capture.root).map_err(|e| Error::io(&capture.root, e))?;
    let out_abs = fs::canonicalize(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let capture_root = pathdiff::diff_paths(&capture_abs, &out_abs).unwrap_or(capture_abs);
    let summary = MaskSetSummary {
        capture_root,
        measurement,
        frames: records.len() as u64,
        skipped,
    };
    write_jsonl(&out_dir.join(MASKS_FILE), &records)?;
    write_json(&out_dir.join(MASKS_SUMMARY), &summary)?;
    Ok(MaskSet {
        root: out_dir.to_path_buf(),
        summary,
        records,
    })
}

impl MaskSet {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let p = root.join(MASKS_SUMMARY);
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let summary = serde_json::from_str(&text).map_err(|e| Error::json(&p, e))?;
        let records = read_jsonl(&root.join(MASKS_FILE))?;
        Ok(Self { root, summary, records })
    }

    pub fn capture(&self) -> Result<CaptureDataset> {
        CaptureDataset::open(self.root.join(&self.summary.capture_root))
    }

    pub fn garment(&self) -> Result<GarmentSpec> {
        Ok(self.capture()?.summary.garment)
    }
}

/// One aligned training triple. Paths are relative to the pair set root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairedRecord {
    pub config_id: u64,
    pub seg: String,
    pub mask: String,
    pub target: String,
    /// Applied to both sides.
    pub crop: CropParams,
}

/// Crops one measurement/target frame pair with the measurement crop.
pub fn pair_one(
    seg: &SegmentationMap,
    meas_mask: &BitMask,
    target_frame: &crate::imaging::Rgb8Image,
    target_mask: &BitMask,
    border_frac: f32,
    out_size: usize,
) -> Result<(CropParams, PairSample)> {
    let crop = compute_crop(meas_mask, border_frac, out_size)?;
    let sample = PairSample {
        seg: apply_crop_labels(&seg.masked(meas_mask)?, &crop)?,
        mask: apply_crop_mask(meas_mask, &crop)?,
        target: mask_apply(&apply_crop(target_frame, &crop)?, &apply_crop_mask(target_mask, &crop)?)?,
    };
    Ok((crop, sample))
}

/// Builds the pair set; both mask sets must cover the same configurations.
/// Records are written sorted by configuration id.
pub fn pair_records(
    measurement: &MaskSet,
    target: &MaskSet,
    border_frac: f32,
    out_size: usize,
    out_dir: &Path,
) -> Result<PairsDataset> {
    if !measurement.summary.measurement || target.summary.measurement {
        return Err(Error::PlanMismatch(
            "expected a measurement mask set and a target mask set".into(),
        ));
    }
    let m: BTreeMap<u64, &MaskRecord> = measurement.records.iter().map(|r| (r.config_id, r)).collect();
    let t: BTreeMap<u64, &MaskRecord> = target.records.iter().map(|r| (r.config_id, r)).collect();
    if !m.keys().eq(t.keys()) {
        let only_m = m.keys().filter(|k| !t.contains_key(k)).count();
        let only_t = t.keys().filter(|k| !m.contains_key(k)).count();
        return Err(Error::PlanMismatch(format!(
            "{only_m} configurations only in the measurement set, {only_t} only in the target set"
        )));
    }
    let target_capture = target.capture()?;
    let frames: BTreeMap<u64, _> = target_capture.records.iter().map(|r| (r.entry.index, r)).collect();
    for sub in ["seg", "mask", "target"] {
        create_dir(&out_dir.join(sub))?;
    }
    let ids: Vec<u64> = m.keys().copied().collect();
    let records: Vec<Result<PairedRecord>> = ids
        .par_iter()
        .map(|&id| {
            let mr = m[&id];
            let seg_path = mr
                .seg
                .as_ref()
                .ok_or_else(|| Error::PlanMismatch(format!("measurement frame {id} has no labels")))?;
            let seg = SegmentationMap::read_pgm(measurement.root.join(seg_path))?;
            let meas_mask = netpbm::read_mask(measurement.root.join(&mr.mask))?;
            let target_mask = netpbm::read_mask(target.root.join(&t[&id].mask))?;
            let frame_rec = frames
                .get(&id)
                .ok_or_else(|| Error::PlanMismatch(format!("target capture lacks frame {id}")))?;
            let target_frame = target_capture.load_frame(frame_rec)?;
            let (crop, sample) = pair_one(
                &seg,
                &meas_mask,
                &target_frame.color,
                &target_mask,
                border_frac,
                out_size,
            )?;
            let rec = PairedRecord {
                config_id: id,
                seg: format!("seg/{id:06}.pgm"),
                mask: format!("mask/{id:06}.pgm"),
                target: format!("target/{id:06}.ppm"),
                crop,
            };
            sample.write(out_dir, &rec)?;
            Ok(rec)
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    write_jsonl(&out_dir.join(PAIRS_FILE), &records)?;
    Ok(PairsDataset {
        root: out_dir.to_path_buf(),
        records,
    })
}

/// A pair set on disk.
#[derive(Clone, Debug)]
pub struct PairsDataset {
    pub root: PathBuf,
    pub records: Vec<PairedRecord>,
}

impl PairsDataset {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let records = read_jsonl(&root.join(PAIRS_FILE))?;
        Ok(Self { root, records })
    }

    pub fn load(&self, rec: &PairedRecord) -> Result<PairSample> {
        PairSample::read(&self.root, rec)
    }
}

pub(crate) fn write_pairs_manifest(out_dir: &Path, records: &[PairedRecord]) -> Result<()> {
    write_jsonl(&out_dir.join(PAIRS_FILE), records)
}
