//! Throughput harness: a retrieval index over a dense synthetic plan, a
//! fixed frame set, and repeated timed stream runs.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_stream, FrameStatus, PipelineConfig, PipelineStats};
use crate::dataset::crop::{apply_crop, apply_crop_labels, apply_crop_mask, compute_crop};
use crate::error::{Error, Result};
use crate::imaging::{mask_apply, Rgb8Image, RgbdFrame};
use crate::plan::{build_plan, CapturePlan, CapturePlanParams};
use crate::rig::{ground_truth, render_with_parts, GarmentSpec, GroundTruth, RigOptions, RigScene, Texture};
use crate::translator::nn::{CachedPayloads, LabelGrid, NNIndex, NnTranslator, DEFAULT_GRID};
use crate::translator::Translator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Plan whose every configuration becomes an index entry.
    pub plan: CapturePlanParams,
    pub grid_size: usize,
    /// Query frames, spread evenly over the plan.
    pub frames: usize,
    /// Timed passes over the frame set, after one untimed warm-up pass.
    pub reps: usize,
    pub target: GarmentSpec,
    pub rig: RigOptions,
}

impl Default for BenchConfig {
    /// Every degree of the rotation sweep with 3x3 arm grids: 10,935
    /// entries.
    fn default() -> Self {
        Self {
            plan: CapturePlanParams {
                arm_grid: [3, 3],
                ..CapturePlanParams::default()
            },
            grid_size: DEFAULT_GRID,
            frames: 100,
            reps: 3,
            target: GarmentSpec::target([40, 90, 200], Texture::Stripes, 24),
            rig: RigOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub index_entries: usize,
    pub index_build_s: f64,
    pub frames: usize,
    pub reps: usize,
    pub threads: usize,
    pub warmup_fps: f64,
    pub fps_per_rep: Vec<f64>,
    pub fps_median: f64,
    pub fps_min: f64,
    /// Frames whose retrieval returned their own configuration.
    pub self_hits: usize,
    /// Stats of the last timed pass.
    pub stats: PipelineStats,
}

fn scene(plan: &CapturePlan, id: u64, garment: &GarmentSpec, rig: &RigOptions) -> Result<RigScene> {
    Ok(RigScene {
        config: plan.config_at(id)?,
        arm_grid: plan.params().arm_grid,
        garment: garment.clone(),
        options: rig.clone(),
    })
}

/// Index entry for one configuration, from exact rig labels.
fn entry(gt: &GroundTruth, border_frac: f32, out_size: usize, grid: usize) -> Result<LabelGrid> {
    let crop = compute_crop(&gt.garment, border_frac, out_size)?;
    LabelGrid::from_segmap(&apply_crop_labels(&gt.segmentation, &crop)?, grid)
}

/// Target payload for one configuration, cropped like its measurement.
fn payload(plan: &CapturePlan, id: u64, cfg: &BenchConfig, pipe: &PipelineConfig) -> Result<Rgb8Image> {
    let (frame, parts) = render_with_parts(&scene(plan, id, &cfg.target, &cfg.rig)?);
    let (w, h) = frame.dims();
    let gt = GroundTruth::from_parts(w, h, &parts);
    let crop = compute_crop(&gt.garment, pipe.border_frac, pipe.out_size)?;
    mask_apply(&apply_crop(&frame.color, &crop)?, &apply_crop_mask(&gt.garment, &crop)?)
}

/// Builds the index for every configuration of `cfg.plan`.
pub fn synthetic_index(cfg: &BenchConfig, pipe: &PipelineConfig) -> Result<NNIndex> {
    let plan = build_plan(cfg.plan)?;
    let measurement = GarmentSpec::measurement();
    let entries: Vec<Result<(u64, LabelGrid)>> = (0..plan.total_frames())
        .into_par_iter()
        .map(|id| {
            let gt = ground_truth(&scene(&plan, id, &measurement, &cfg.rig)?);
            Ok((id, entry(&gt, pipe.border_frac, pipe.out_size, cfg.grid_size)?))
        })
        .collect();
    NNIndex::from_grids(cfg.grid_size, entries.into_iter().collect::<Result<_>>()?)
}

/// Plan ids of the query frames.
pub fn query_ids(total: u64, frames: usize) -> Vec<u64> {
    let n = (frames as u64).min(total).max(1);
    (0..n).map(|k| k * total / n).collect()
}

/// Times `reps` passes over `frames` after one warm-up pass.
pub fn time_stream(
    frames: &[(String, RgbdFrame)],
    pipe: &PipelineConfig,
    translator: &dyn Translator,
    reps: usize,
) -> Result<(f64, Vec<f64>, PipelineStats, Vec<FrameStatus>)> {
    let pass = |statuses: &mut Vec<FrameStatus>| {
        statuses.clear();
        run_stream(frames.iter().cloned().map(Ok), pipe, translator, |out| {
            statuses.push(out.status);
            Ok(())
        })
    };
    let mut statuses = Vec::new();
    let warm = pass(&mut statuses)?;
    let mut fps = Vec::with_capacity(reps);
    let mut last = warm.clone();
    for _ in 0..reps {
        last = pass(&mut statuses)?;
        fps.push(last.fps);
    }
    Ok((warm.fps, fps, last, statuses))
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        0.0
    } else if s.len() % 2 == 1 {
        s[s.len() / 2]
    } else {
        (s[s.len() / 2 - 1] + s[s.len() / 2]) / 2.0
    }
}

/// Times a fixed frame set. A frame counts as a self hit when retrieval
/// returned the record of its own configuration.
pub fn bench_frames(
    frames: &[(String, RgbdFrame)],
    pipe: &PipelineConfig,
    translator: &dyn Translator,
    reps: usize,
) -> Result<BenchReport> {
    if frames.is_empty() || reps == 0 {
        return Err(Error::InvalidParams(
            "bench needs at least one frame and one rep".into(),
        ));
    }
    pipe.validate()?;
    let (warmup_fps, fps_per_rep, stats, statuses) = time_stream(frames, pipe, translator, reps)?;
    let self_hits = statuses
        .iter()
        .zip(frames)
        .filter(|(s, (_, f))| matches!(s, FrameStatus::Translated(Some(p)) if Some(p.record_id) == f.config_id))
        .count();
    Ok(BenchReport {
        index_entries: 0,
        index_build_s: 0.0,
        frames: frames.len(),
        reps,
        threads: rayon::current_num_threads(),
        warmup_fps,
        fps_min: fps_per_rep.iter().copied().fold(f64::INFINITY, f64::min),
        fps_median: median(&fps_per_rep),
        fps_per_rep,
        self_hits,
        stats,
    })
}

/// Full synthetic benchmark.
pub fn bench(cfg: &BenchConfig, pipe: &PipelineConfig) -> Result<BenchReport> {
    if cfg.frames == 0 || cfg.reps == 0 {
        return Err(Error::InvalidParams(
            "bench needs at least one frame and one rep".into(),
        ));
    }
    pipe.validate()?;
    cfg.target.validate()?;
    let plan = build_plan(cfg.plan)?;
    let t = Instant::now();
    let index = synthetic_index(cfg, pipe)?;
    let index_build_s = t.elapsed().as_secs_f64();
    log::info!("index of {} entries built in {index_build_s:.1}s", index.len());

    let ids = query_ids(plan.total_frames(), cfg.frames);
    let measurement = GarmentSpec::measurement();
    let frames: Vec<(String, RgbdFrame)> = ids
        .par_iter()
        .map(|&id| {
            let mut f = render_with_parts(&scene(&plan, id, &measurement, &cfg.rig)?).0;
            f.config_id = Some(id);
            Ok((format!("{id:06}"), f))
        })
        .collect::<Result<_>>()?;

    let (bench_cfg, pipe_cfg) = (cfg.clone(), pipe.clone());
    let store = CachedPayloads::new(move |id| payload(&plan, id, &bench_cfg, &pipe_cfg));
    let index_entries = index.len();
    let translator = NnTranslator::new(index, Box::new(store));
    Ok(BenchReport {
        index_entries,
        index_build_s,
        ..bench_frames(&frames, pipe, &translator, cfg.reps)?
    })
}
