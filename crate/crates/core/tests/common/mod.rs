#![allow(dead_code)]

use mirrorfit::imaging::{hsv_to_rgb, label_boundary_band, rgb_to_hsv};
use mirrorfit::rig::{ground_truth, render_frame, GroundTruth, Texture};
use mirrorfit::{
    build_plan, BodyConfiguration, CapturePlan, CapturePlanParams, GarmentSpec, RgbdFrame, RigScene, SegmentationMap,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn full_plan() -> CapturePlan {
    build_plan(CapturePlanParams::default()).unwrap()
}

/// Twelve frames: three angles, two yaw cells, one pitch cell.
pub fn tiny_params() -> CapturePlanParams {
    CapturePlanParams {
        rotation_min: -40,
        rotation_max: 40,
        rotation_step: 40,
        arm_grid: [2, 1],
        body_size_max: 20,
        body_size_step: 10,
    }
}

pub fn scene_at(plan: &CapturePlan, id: u64, garment: GarmentSpec) -> RigScene {
    RigScene::new(plan.config_at(id).unwrap(), plan.params().arm_grid, garment)
}

pub fn measurement_at(plan: &CapturePlan, id: u64) -> (RgbdFrame, GroundTruth) {
    let s = scene_at(plan, id, GarmentSpec::measurement());
    (render_frame(&s), ground_truth(&s))
}

pub fn striped_target() -> GarmentSpec {
    GarmentSpec::target([40, 90, 200], Texture::Stripes, 24)
}

pub fn front(size: u32) -> BodyConfiguration {
    let mut c = full_plan().config_at(0).unwrap();
    c.rotation_deg = 0;
    c.body_size_cm = size;
    c
}

/// Adds independent uniform noise in [-amp, amp] to every pixel's value.
pub fn value_jitter(frame: &RgbdFrame, amp: f32, seed: u64) -> RgbdFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = frame.clone();
    for p in out.color.as_raw_mut().chunks_exact_mut(3) {
        let mut c = rgb_to_hsv([p[0], p[1], p[2]]);
        c.v = (c.v + rng.random_range(-amp..=amp)).clamp(0.0, 1.0);
        p.copy_from_slice(&hsv_to_rgb(c));
    }
    out
}

/// Label agreement over pixels that are garment in either map, away from
/// any ground-truth label edge.
pub fn label_accuracy(truth: &SegmentationMap, got: &SegmentationMap, band: usize) -> f64 {
    let (w, h) = truth.dims();
    let skip = label_boundary_band(truth.labels(), w, h, band);
    let (mut n, mut ok) = (0usize, 0usize);
    for (i, (&t, &g)) in truth.labels().iter().zip(got.labels()).enumerate() {
        if skip.get_index(i) || (t == 0 && g == 0) {
            continue;
        }
        n += 1;
        ok += (t == g) as usize;
    }
    if n == 0 {
        1.0
    } else {
        ok as f64 / n as f64
    }
}

/// SHA-256 over every file under `root`, in path order, keyed by relative
/// path.
pub fn tree_digest(root: &std::path::Path) -> String {
    use sha2::{Digest, Sha256};
    fn walk(dir: &std::path::Path, out: &mut Vec<std::path::PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, out);
            } else {
                out.push(p);
            }
        }
    }
    let mut files = Vec::new();
    walk(root, &mut files);
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.strip_prefix(root).unwrap().to_string_lossy().as_bytes());
        h.update(std::fs::read(&f).unwrap());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
