//! Capture schedule for the actuated mannequin.
//!
//! Frames are ordered with arm combinations in the outer loop and the
//! rotation sweep in the inner loop. The body-size offset advances by one
//! step after every completed sweep and wraps around at the limit, so it is
//! a function of the sweep ordinal rather than a crossed factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid cell of one arm: `[yaw_idx, pitch_idx]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u8; 2]", into = "[u8; 2]")]
pub struct ArmPose {
    pub yaw_idx: u8,
    pub pitch_idx: u8,
}

impl From<[u8; 2]> for ArmPose {
    fn from([yaw_idx, pitch_idx]: [u8; 2]) -> Self {
        Self { yaw_idx, pitch_idx }
    }
}

impl From<ArmPose> for [u8; 2] {
    fn from(a: ArmPose) -> Self {
        [a.yaw_idx, a.pitch_idx]
    }
}

/// One mannequin state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BodyConfiguration {
    pub rotation_deg: i32,
    pub left_arm: ArmPose,
    pub right_arm: ArmPose,
    /// Applied to both width and height of the torso.
    pub body_size_cm: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapturePlanParams {
    pub rotation_min: i32,
    pub rotation_max: i32,
    pub rotation_step: u32,
    /// `[yaw rows, pitch cols]` of each arm's grid.
    pub arm_grid: [u32; 2],
    pub body_size_max: u32,
    pub body_size_step: u32,
}

impl Default for CapturePlanParams {
    fn default() -> Self {
        Self {
            rotation_min: -67,
            rotation_max: 67,
            rotation_step: 1,
            arm_grid: [5, 5],
            body_size_max: 20,
            body_size_step: 1,
        }
    }
}

impl CapturePlanParams {
    /// Reduced plan used for desk-scale runs: 10 degree steps, 3x3 arm grids.
    pub fn desk_scale() -> Self {
        Self {
            rotation_step: 10,
            arm_grid: [3, 3],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(format!("capture plan: {msg}")));
        if self.rotation_step == 0 {
            return bad("rotation_step must be positive");
        }
        if self.rotation_max < self.rotation_min {
            return bad("rotation_max below rotation_min");
        }
        if self.arm_grid.iter().any(|&d| d == 0 || d > 255) {
            return bad("arm grid dimensions must be in 1..=255");
        }
        if self.body_size_step == 0 {
            return bad("body_size_step must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CapturePlan {
    params: CapturePlanParams,
    angles_per_sweep: u64,
    arm_combo_count: u64,
    size_cycle: u64,
    total_frames: u64,
}

pub fn build_plan(p: CapturePlanParams) -> Result<CapturePlan> {
    p.validate()?;
    let angles_per_sweep = (p.rotation_max - p.rotation_min) as u64 / p.rotation_step as u64 + 1;
    let cells = p.arm_grid[0] as u64 * p.arm_grid[1] as u64;
    let arm_combo_count = cells * cells;
    Ok(CapturePlan {
        params: p,
        angles_per_sweep,
        arm_combo_count,
        size_cycle: (p.body_size_max / p.body_size_step) as u64 + 1,
        total_frames: angles_per_sweep * arm_combo_count,
    })
}

impl CapturePlan {
    pub fn params(&self) -> &CapturePlanParams {
        &self.params
    }

    pub fn angles_per_sweep(&self) -> u64 {
        self.angles_per_sweep
    }

    pub fn arm_combo_count(&self) -> u64 {
        self.arm_combo_count
    }

    /// Number of distinct body sizes cycled through.
    pub fn size_cycle(&self) -> u64 {
        self.size_cycle
    }

    pub fn total_frames(&self) -> u64 {
        self.total_frames
    }

    pub fn config_at(&self, index: u64) -> Result<BodyConfiguration> {
        if index >= self.total_frames {
            return Err(Error::OutOfRange {
                index,
                total: self.total_frames,
            });
        }
        let p = &self.params;
        let sweep = index / self.angles_per_sweep;
        let step_in_sweep = index % self.angles_per_sweep;
        let [rows, cols] = p.arm_grid.map(u64::from);
        // lexicographic (left_yaw, left_pitch, right_yaw, right_pitch)
        let rp = sweep % cols;
        let ry = (sweep / cols) % rows;
        let lp = (sweep / (cols * rows)) % cols;
        let ly = sweep / (cols * rows * cols);
        Ok(BodyConfiguration {
            rotation_deg: p.rotation_min + (step_in_sweep * p.rotation_step as u64) as i32,
            left_arm: ArmPose {
                yaw_idx: ly as u8,
                pitch_idx: lp as u8,
            },
            right_arm: ArmPose {
                yaw_idx: ry as u8,
                pitch_idx: rp as u8,
            },
            body_size_cm: ((sweep % self.size_cycle) * p.body_size_step as u64) as u32,
        })
    }

    pub fn iter(&self) -> PlanIter<'_> {
        PlanIter { plan: self, next: 0 }
    }
}

pub struct PlanIter<'a> {
    plan: &'a CapturePlan,
    next: u64,
}

impl Iterator for PlanIter<'_> {
    type Item = (u64, BodyConfiguration);

    fn next(&mut self) -> Option<Self::Item> {
        let i = self.next;
        let cfg = self.plan.config_at(i).ok()?;
        self.next += 1;
        Some((i, cfg))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.plan.total_frames - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PlanIter<'_> {}

/// One line of the `plan` JSON-lines output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub index: u64,
    #[serde(flatten)]
    pub config: BodyConfiguration,
}
