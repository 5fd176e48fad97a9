//! Synthetic stand-in for the actuated mannequin and RGBD camera.
//!
//! The figure is rasterized in integer arithmetic so frames are
//! bit-reproducible. All geometry is evaluated in "doubled" pixel
//! coordinates centered on the image (`X = 2x + 1 - W`), which makes the
//! horizontal mirror `x -> W - 1 - x` an exact sign flip. The only floating
//! point inputs are the arm and rotation trig values, quantized to Q16
//! before use.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::segmap::{ReferencePalette, SegmentationMap, PATCH_COUNT};
use crate::imaging::color::hue_distance;
use crate::imaging::netpbm;
use crate::imaging::{rgb_to_hsv, BitMask, DepthImage, Rgb, Rgb8Image, RgbdFrame};
use crate::plan::{BodyConfiguration, CapturePlan, CapturePlanParams, PlanEntry};

const Q16: i64 = 1 << 16;

/// Reference resolution for the layout constants below.
const BASE_SIZE: i64 = 512;
const HEAD_CY: i64 = -150;
const HEAD_R: i64 = 30;
const NECK_HALF_W: i64 = 12;
const NECK_TOP: i64 = -125;
const TORSO_TOP: i64 = -105;
const TORSO_HALF_W: i64 = 70;
const TORSO_BOTTOM: i64 = 95;
const TORSO_ROWS: i64 = 3;
const HIPS_INSET: i64 = 10;
const HIPS_HEIGHT: i64 = 50;
const ARM_HALF_W: i64 = 18;
const ARM_LEN: i64 = 170;
const SHOULDER_DROP: i64 = 15;
/// Body-size growth per centimeter, in pixels at the reference resolution.
pub const PX_PER_CM: i64 = 4;

const YAW_RANGE: (f64, f64) = (-30.0, 90.0);
const PITCH_RANGE: (f64, f64) = (0.0, 90.0);

const SHADE_PERIOD: i64 = 144;
const SHADE_AMPLITUDE: i64 = 24;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Texture {
    #[default]
    Solid,
    Stripes,
    Grid,
}

/// What the mannequin wears.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GarmentSpec {
    /// Eight-patch color-coded garment; `colors[i]` paints label `i + 1`.
    Measurement { colors: [Rgb; PATCH_COUNT] },
    Target {
        base: Rgb,
        #[serde(default)]
        texture: Texture,
        #[serde(default = "default_texture_scale")]
        texture_scale: u32,
    },
}

fn default_texture_scale() -> u32 {
    24
}

impl GarmentSpec {
    pub fn measurement() -> Self {
        GarmentSpec::Measurement {
            colors: ReferencePalette::default().rgb(),
        }
    }

    pub fn target(base: Rgb, texture: Texture, texture_scale: u32) -> Self {
        GarmentSpec::Target {
            base,
            texture,
            texture_scale,
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, GarmentSpec::Measurement { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GarmentSpec::Measurement { colors } => {
                let hsv = colors.map(rgb_to_hsv);
                if hsv.iter().any(|c| c.s < 0.6 || c.v < 0.6) {
                    return Err(Error::InvalidParams("measurement patch colors need s, v >= 0.6".into()));
                }
                for i in 0..PATCH_COUNT {
                    for j in i + 1..PATCH_COUNT {
                        if hue_distance(hsv[i].h, hsv[j].h) < 30.0 {
                            return Err(Error::InvalidParams(format!(
                                "patches {} and {} are closer than 30 degrees in hue",
                                i + 1,
                                j + 1
                            )));
                        }
                    }
                }
                Ok(())
            }
            GarmentSpec::Target { texture_scale, .. } => {
                if *texture_scale < 4 {
                    return Err(Error::InvalidParams("texture_scale must be >= 4".into()));
                }
                Ok(())
            }
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Camera and scene constants shared by every frame of a capture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigOptions {
    pub width: usize,
    pub height: usize,
    pub figure_depth_mm: u16,
    pub backdrop_depth_mm: u16,
    pub background: Rgb,
    pub skin: Rgb,
    pub suit: Rgb,
}

impl Default for RigOptions {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            figure_depth_mm: 1500,
            backdrop_depth_mm: 3000,
            background: [0, 0, 0],
            skin: [224, 172, 140],
            suit: [12, 12, 12],
        }
    }
}

impl RigOptions {
    pub fn validate(&self) -> Result<()> {
        if self.width < 16 || self.height < 16 {
            return Err(Error::InvalidParams("rig frames must be at least 16x16".into()));
        }
        if self.figure_depth_mm == 0 || self.figure_depth_mm >= self.backdrop_depth_mm {
            return Err(Error::InvalidParams(
                "figure depth must be nonzero and in front of the backdrop".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigScene {
    pub config: BodyConfiguration,
    /// Arm grid the configuration's indices refer to.
    pub arm_grid: [u32; 2],
    pub garment: GarmentSpec,
    pub options: RigOptions,
}

impl RigScene {
    pub fn new(config: BodyConfiguration, arm_grid: [u32; 2], garment: GarmentSpec) -> Self {
        Self {
            config,
            arm_grid,
            garment,
            options: RigOptions::default(),
        }
    }
}

/// Ground-truth class of a rendered pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Background,
    Skin,
    Suit,
    /// Patch label 1..=8.
    Garment(u8),
}

fn trig_q16(deg: f64) -> (i64, i64) {
    let (s, c) = deg.abs().to_radians().sin_cos();
    let s = (s * Q16 as f64).round() as i64;
    let c = (c * Q16 as f64).round() as i64;
    (if deg < 0.0 { -s } else { s }, c)
}

fn grid_angle(idx: u8, cells: u32, (lo, hi): (f64, f64)) -> f64 {
    if cells <= 1 {
        return (lo + hi) / 2.0;
    }
    lo + (hi - lo) * idx as f64 / (cells - 1) as f64
}

/// Arm yaw and pitch in degrees for a grid cell.
pub fn arm_angles(yaw_idx: u8, pitch_idx: u8, arm_grid: [u32; 2]) -> (f64, f64) {
    (
        grid_angle(yaw_idx, arm_grid[0], YAW_RANGE),
        grid_angle(pitch_idx, arm_grid[1], PITCH_RANGE),
    )
}

#[derive(Clone, Copy, Debug)]
struct Arm {
    ax: i64,
    ay: i64,
    dir_x: i64,
    dir_y: i64,
    t_min: i64,
    t_sleeve: i64,
    t_end: i64,
    half_w: i64,
    label: u8,
}

impl Arm {
    #[inline]
    fn classify(&self, xb: i64, y: i64) -> Option<Part> {
        let dx = xb - self.ax;
        let dy = y - self.ay;
        let n = dx * self.dir_y - dy * self.dir_x;
        // closed interval: a hanging arm shares the torso edge line
        if n.abs() > self.half_w {
            return None;
        }
        let t = dx * self.dir_x + dy * self.dir_y;
        if t < self.t_min || t >= self.t_end {
            return None;
        }
        Some(if t < self.t_sleeve {
            Part::Garment(self.label)
        } else {
            Part::Skin
        })
    }
}

/// Scene geometry resolved to doubled, centered integer coordinates.
#[derive(Clone, Debug)]
pub struct Layout {
    width: usize,
    height: usize,
    squash_q16: i64,
    shear_q16: i64,
    head_cy: i64,
    head_r2: i64,
    neck_half_w: i64,
    neck_top: i64,
    torso_half_w: i64,
    torso_top: i64,
    torso_bottom: i64,
    row_edges: [i64; TORSO_ROWS as usize - 1],
    hips_half_w: i64,
    hips_bottom: i64,
    arms: [Arm; 2],
    shade_phase: i64,
}

/// FNV-1a over the configuration fields, used to phase the shading field.
fn config_hash(c: &BodyConfiguration) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let bytes = [
        c.rotation_deg.to_le_bytes().as_slice(),
        &[
            c.left_arm.yaw_idx,
            c.left_arm.pitch_idx,
            c.right_arm.yaw_idx,
            c.right_arm.pitch_idx,
        ],
        &c.body_size_cm.to_le_bytes(),
    ]
    .concat();
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Layout {
    pub fn new(scene: &RigScene) -> Self {
        let o = &scene.options;
        let base = o.width.min(o.height) as i64;
        let px = |n: i64| n * base / BASE_SIZE;
        let d = |n: i64| 2 * px(n);
        let size = scene.config.body_size_cm as i64;
        let grow = PX_PER_CM * base / BASE_SIZE * size;

        let (sin, cos) = trig_q16(scene.config.rotation_deg as f64);
        let torso_half_w = 2 * (px(TORSO_HALF_W) + grow / 2);
        let torso_top = d(TORSO_TOP);
        let torso_bottom = 2 * (px(TORSO_BOTTOM) + grow);
        let rows = TORSO_ROWS;
        let row_edges = std::array::from_fn(|r| {
            let r = r as i64 + 1;
            2 * (torso_top / 2 + (torso_bottom - torso_top) / 2 * r / rows)
        });

        let arm = |side: i64, pose: crate::plan::ArmPose, label: u8| {
            let (yaw, pitch) = arm_angles(pose.yaw_idx, pose.pitch_idx, scene.arm_grid);
            let (ys, yc) = trig_q16(yaw);
            let (ps, _) = trig_q16(pitch);
            // foreshortening: 1 - 0.4 sin(pitch)
            let len = px(ARM_LEN) * (10 * Q16 - 4 * ps) / (10 * Q16);
            Arm {
                ax: side * (torso_half_w + d(ARM_HALF_W)),
                ay: torso_top + d(SHOULDER_DROP),
                dir_x: side * ys,
                dir_y: yc,
                t_min: -d(ARM_HALF_W) * Q16,
                t_sleeve: 2 * (len / 2) * Q16,
                t_end: 2 * len * Q16,
                half_w: d(ARM_HALF_W) * Q16,
                label,
            }
        };

        Self {
            width: o.width,
            height: o.height,
            squash_q16: (Q16 + cos) / 2,
            shear_q16: sin,
            head_cy: d(HEAD_CY),
            head_r2: d(HEAD_R) * d(HEAD_R),
            neck_half_w: d(NECK_HALF_W),
            neck_top: d(NECK_TOP),
            torso_half_w,
            torso_top,
            torso_bottom,
            row_edges,
            hips_half_w: torso_half_w - d(HIPS_INSET),
            hips_bottom: torso_bottom + d(HIPS_HEIGHT),
            arms: [arm(-1, scene.config.left_arm, 7), arm(1, scene.config.right_arm, 8)],
            shade_phase: (config_hash(&scene.config) % (2 * SHADE_PERIOD) as u64) as i64,
        }
    }

    /// Horizontal body coordinate after undoing the faked turn.
    #[inline]
    fn body_x(&self, x: i64, y: i64) -> i64 {
        (x * Q16 - self.shear_q16 * y / 4) / self.squash_q16
    }

    #[inline]
    fn classify_body(&self, xb: i64, y: i64) -> Part {
        for arm in &self.arms {
            if let Some(p) = arm.classify(xb, y) {
                return p;
            }
        }
        let hy = y - self.head_cy;
        if xb * xb + hy * hy < self.head_r2 {
            return Part::Skin;
        }
        if xb.abs() < self.neck_half_w && y >= self.neck_top && y < self.torso_top {
            return Part::Suit;
        }
        if xb.abs() < self.torso_half_w && y >= self.torso_top && y < self.torso_bottom {
            let row = self.row_edges.iter().filter(|&&e| y >= e).count() as u8;
            let col = (xb >= 0) as u8;
            return Part::Garment(2 * row + col + 1);
        }
        if xb.abs() < self.hips_half_w && y >= self.torso_bottom && y < self.hips_bottom {
            return Part::Suit;
        }
        Part::Background
    }

    /// Class of pixel `(x, y)`.
    pub fn classify(&self, x: usize, y: usize) -> Part {
        let xd = 2 * x as i64 + 1 - self.width as i64;
        let yd = 2 * y as i64 + 1 - self.height as i64;
        self.classify_body(self.body_x(xd, yd), yd)
    }

    /// Darkening factor in Q8 (256 = unshaded) standing in for wrinkles.
    #[inline]
    fn shade_q8(&self, xb: i64, y: i64) -> u32 {
        let arg = (xb * 3 + y * 2 + self.shade_phase).rem_euclid(2 * SHADE_PERIOD);
        let tri = (arg - SHADE_PERIOD).abs();
        (256 - SHADE_AMPLITUDE * tri / SHADE_PERIOD) as u32
    }
}

#[inline]
fn scale(c: Rgb, q8: u32) -> Rgb {
    c.map(|v| ((v as u32 * q8 + 128) >> 8) as u8)
}

fn texture_q8(texture: Texture, scale_px: u32, xb: i64, y: i64, torso_top: i64) -> u32 {
    let period = 2 * scale_px as i64;
    match texture {
        Texture::Solid => 256,
        Texture::Stripes => {
            if (y - torso_top).div_euclid(period) % 2 == 1 {
                154
            } else {
                256
            }
        }
        Texture::Grid => {
            let line = period / 4;
            if xb.rem_euclid(period) < line || (y - torso_top).rem_euclid(period) < line {
                141
            } else {
                256
            }
        }
    }
}

/// Renders color, depth and the per-pixel part map in one pass.
pub fn render_with_parts(scene: &RigScene) -> (RgbdFrame, Vec<Part>) {
    let layout = Layout::new(scene);
    let o = &scene.options;
    let (w, h) = (o.width, o.height);
    let mut color = vec![0u8; w * h * 3];
    let mut depth = vec![0u16; w * h];
    let mut parts = Vec::with_capacity(w * h);
    let measurement = match &scene.garment {
        GarmentSpec::Measurement { colors } => Some(colors),
        GarmentSpec::Target { .. } => None,
    };
    for y in 0..h {
        let yd = 2 * y as i64 + 1 - h as i64;
        for x in 0..w {
            let xd = 2 * x as i64 + 1 - w as i64;
            let xb = layout.body_x(xd, yd);
            let part = layout.classify_body(xb, yd);
            let rgb = match part {
                Part::Background => o.background,
                Part::Skin => o.skin,
                Part::Suit => o.suit,
                Part::Garment(label) => {
                    let shade = layout.shade_q8(xb, yd);
                    match (measurement, &scene.garment) {
                        (Some(colors), _) => scale(colors[label as usize - 1], shade),
                        (
                            None,
                            GarmentSpec::Target {
                                base,
                                texture,
                                texture_scale,
                            },
                        ) => {
                            let tex = texture_q8(*texture, *texture_scale, xb, yd, layout.torso_top);
                            scale(scale(*base, tex), shade)
                        }
                        _ => unreachable!(),
                    }
                }
            };
            let i = y * w + x;
            color[3 * i..3 * i + 3].copy_from_slice(&rgb);
            depth[i] = if part == Part::Background {
                o.backdrop_depth_mm
            } else {
                o.figure_depth_mm
            };
            parts.push(part);
        }
    }
    let frame = RgbdFrame::new(
        Rgb8Image::from_raw(w, h, color).expect("sized above"),
        DepthImage::from_raw(w, h, depth).expect("sized above"),
        None,
    )
    .expect("same dimensions");
    (frame, parts)
}

pub fn render_frame(scene: &RigScene) -> RgbdFrame {
    render_with_parts(scene).0
}

/// Exact labels for a scene.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub garment: BitMask,
    pub segmentation: SegmentationMap,
    pub skin: BitMask,
    pub suit: BitMask,
}

impl GroundTruth {
    pub fn from_parts(width: usize, height: usize, parts: &[Part]) -> Self {
        let pick =
            |f: fn(&Part) -> bool| BitMask::from_bits(width, height, parts.iter().map(f).collect()).expect("sized");
        let labels = parts
            .iter()
            .map(|p| match p {
                Part::Garment(l) => *l,
                _ => 0,
            })
            .collect();
        Self {
            garment: pick(|p| matches!(p, Part::Garment(_))),
            segmentation: SegmentationMap::from_labels(width, height, labels).expect("sized"),
            skin: pick(|p| *p == Part::Skin),
            suit: pick(|p| *p == Part::Suit),
        }
    }

    /// Every non-background pixel.
    pub fn figure(&self) -> BitMask {
        self.garment
            .or(&self.skin)
            .and_then(|m| m.or(&self.suit))
            .expect("same dimensions")
    }
}

pub fn ground_truth(scene: &RigScene) -> GroundTruth {
    let layout = Layout::new(scene);
    let (w, h) = (scene.options.width, scene.options.height);
    let mut parts = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            parts.push(layout.classify(x, y));
        }
    }
    GroundTruth::from_parts(w, h, &parts)
}

/// Analytic pixel areas of the torso patches (labels 1..=6) and of each
/// sleeve, valid for an unrotated figure with both arms in a grid cell that
/// maps to yaw 0 and pitch 0 (arms hanging straight down, clear of the
/// torso).
pub fn analytic_patch_areas(scene: &RigScene) -> [usize; PATCH_COUNT] {
    let base = scene.options.width.min(scene.options.height) as i64;
    let px = |n: i64| n * base / BASE_SIZE;
    let grow = PX_PER_CM * base / BASE_SIZE * scene.config.body_size_cm as i64;
    let half_w = px(TORSO_HALF_W) + grow / 2;
    let top = px(TORSO_TOP);
    let bottom = px(TORSO_BOTTOM) + grow;
    let mut edges = vec![top];
    for r in 1..TORSO_ROWS {
        edges.push(top + (bottom - top) * r / TORSO_ROWS);
    }
    edges.push(bottom);
    let mut areas = [0usize; PATCH_COUNT];
    for r in 0..TORSO_ROWS as usize {
        let rows = (edges[r + 1] - edges[r]) as usize;
        areas[2 * r] = rows * half_w as usize;
        areas[2 * r + 1] = rows * half_w as usize;
    }
    let len = px(ARM_LEN);
    let sleeve = (len / 2 + px(ARM_HALF_W)) * 2 * px(ARM_HALF_W);
    areas[6] = sleeve as usize;
    areas[7] = sleeve as usize;
    areas
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureRecord {
    #[serde(flatten)]
    pub entry: PlanEntry,
    pub frame: String,
    pub depth: String,
    pub gt_seg: String,
    pub gt_skin: String,
}

/// `capture.json`, written last; `complete` is false after a failed run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureSummary {
    pub complete: bool,
    pub frames_written: u64,
    pub total_frames: u64,
    pub plan: CapturePlanParams,
    pub garment: GarmentSpec,
    pub rig: RigOptions,
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SUMMARY_FILE: &str = "capture.json";

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_frame_files(root: &Path, scene: &RigScene, index: u64) -> Result<CaptureRecord> {
    let (frame, parts) = render_with_parts(scene);
    let (w, h) = frame.dims();
    let gt = GroundTruth::from_parts(w, h, &parts);
    let rec = CaptureRecord {
        entry: PlanEntry {
            index,
            config: scene.config,
        },
        frame: format!("frames/{index:06}.ppm"),
        depth: format!("depth/{index:06}.pgm"),
        gt_seg: format!("gt/{index:06}.seg.pgm"),
        gt_skin: format!("gt/{index:06}.skin.pgm"),
    };
    netpbm::write_ppm(root.join(&rec.frame), &frame.color)?;
    netpbm::write_depth(root.join(&rec.depth), &frame.depth)?;
    gt.segmentation.write_pgm(root.join(&rec.gt_seg))?;
    netpbm::write_mask(root.join(&rec.gt_skin), &gt.skin)?;
    Ok(rec)
}

/// Renders every frame of `plan` into `out_dir`.
///
/// Frames render in parallel; the manifest is written in plan order.
pub fn capture_dataset(
    plan: &CapturePlan,
    garment: &GarmentSpec,
    options: &RigOptions,
    out_dir: &Path,
) -> Result<CaptureSummary> {
    garment.validate()?;
    options.validate()?;
    for sub in ["frames", "depth", "gt"] {
        create_dir(&out_dir.join(sub))?;
    }
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let file = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut manifest = std::io::BufWriter::new(file);
    let mut summary = CaptureSummary {
        complete: false,
        frames_written: 0,
        total_frames: plan.total_frames(),
        plan: *plan.params(),
        garment: garment.clone(),
        rig: options.clone(),
    };

    const CHUNK: u64 = 64;
    let mut result = Ok(());
    'outer: for start in (0..plan.total_frames()).step_by(CHUNK as usize) {
        let end = (start + CHUNK).min(plan.total_frames());
        let records: Vec<Result<CaptureRecord>> = (start..end)
            .into_par_iter()
            .map(|index| {
                let scene = RigScene {
                    config: plan.config_at(index)?,
                    arm_grid: plan.params().arm_grid,
                    garment: garment.clone(),
                    options: options.clone(),
                };
                write_frame_files(out_dir, &scene, index)
            })
            .collect();
        for rec in records {
            let line = rec.and_then(|r| {
                let mut line = serde_json::to_string(&r).expect("record serializes");
                line.push('\n');
                manifest
                    .write_all(line.as_bytes())
                    .map_err(|e| Error::io(&manifest_path, e))
            });
            if let Err(e) = line {
                result = Err(e);
                break 'outer;
            }
            summary.frames_written += 1;
        }
    }
    manifest.flush().map_err(|e| Error::io(&manifest_path, e))?;
    summary.complete = result.is_ok();
    write_json(&out_dir.join(SUMMARY_FILE), &summary)?;
    result.map(|()| summary)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::json(path, e)))
        .collect()
}

/// A capture directory read back from disk.
#[derive(Clone, Debug)]
pub struct CaptureDataset {
    pub root: PathBuf,
    pub summary: CaptureSummary,
    pub records: Vec<CaptureRecord>,
}

impl CaptureDataset {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let summary_path = root.join(SUMMARY_FILE);
        let text = fs::read_to_string(&summary_path).map_err(|e| Error::io(&summary_path, e))?;
        let summary: CaptureSummary = serde_json::from_str(&text).map_err(|e| Error::json(&summary_path, e))?;
        let records = read_jsonl(&root.join(MANIFEST_FILE))?;
        Ok(Self { root, summary, records })
    }

    pub fn load_frame(&self, rec: &CaptureRecord) -> Result<RgbdFrame> {
        let color = netpbm::read_ppm(self.root.join(&rec.frame))?;
        let depth = netpbm::read_depth(self.root.join(&rec.depth))?;
        RgbdFrame::new(color, depth, Some(rec.entry.index))
    }
}
