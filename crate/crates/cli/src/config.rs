//! The single JSON document configuring every subcommand.

use std::path::Path;

use mirrorfit::dataset::augment::AugmentConfig;
use mirrorfit::dataset::PostprocessConfig;
use mirrorfit::rig::Texture;
use mirrorfit::runtime::bench::BenchConfig;
use mirrorfit::translator::nn::DEFAULT_GRID;
use mirrorfit::{CapturePlanParams, GarmentSpec, PipelineConfig, RigOptions};
use serde::{Deserialize, Serialize};

use crate::Invalid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Garments {
    pub measurement: GarmentSpec,
    pub target: GarmentSpec,
}

impl Default for Garments {
    fn default() -> Self {
        Self {
            measurement: GarmentSpec::measurement(),
            target: GarmentSpec::target([40, 90, 200], Texture::Stripes, 24),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexConfig {
    pub grid_size: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalConfig {
    pub plan: CapturePlanParams,
    pub rig: RigOptions,
    pub garments: Garments,
    pub postprocess: PostprocessConfig,
    pub augment: AugmentConfig,
    /// Augmentation seed unless `--seed` overrides it.
    pub seed: u64,
    pub index: IndexConfig,
    pub pipeline: PipelineConfig,
    pub bench: BenchConfig,
}

impl GlobalConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Invalid(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> mirrorfit::Result<()> {
        self.plan.validate()?;
        self.rig.validate()?;
        self.garments.measurement.validate()?;
        self.garments.target.validate()?;
        self.postprocess.validate()?;
        self.augment.validate()?;
        self.pipeline.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = GlobalConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<GlobalConfig>(&text).unwrap(), cfg);
        assert_eq!(serde_json::from_str::<GlobalConfig>("{}").unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for doc in [
            r#"{"plann": {}}"#,
            r#"{"plan": {"rotation_stepp": 2}}"#,
            r#"{"pipeline": {"translator": {"kind": "recolor", "base": [1, 2, 3], "x": 1}}}"#,
            r#"{"garments": {"target": {"kind": "target", "base": [1, 2, 3], "shine": 1}}}"#,
        ] {
            assert!(serde_json::from_str::<GlobalConfig>(doc).is_err(), "{doc}");
        }
    }
}
