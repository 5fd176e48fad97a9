//! Fixtures shared by the benchmarks.

use mirrorfit::rig::{render_frame, Texture};
use mirrorfit::{build_plan, CapturePlanParams, GarmentSpec, RgbdFrame, RigScene};

/// A measurement frame of the default plan.
pub fn measurement_frame(config_id: u64) -> RgbdFrame {
    scene(config_id, GarmentSpec::measurement())
}

/// A striped target frame of the default plan.
pub fn target_frame(config_id: u64) -> RgbdFrame {
    scene(config_id, GarmentSpec::target([40, 90, 200], Texture::Stripes, 24))
}

fn scene(config_id: u64, garment: GarmentSpec) -> RgbdFrame {
    let plan = build_plan(CapturePlanParams::default()).expect("default plan is valid");
    let config = plan.config_at(config_id).expect("id within plan");
    render_frame(&RigScene::new(config, plan.params().arm_grid, garment))
}
