//! The single configuration document shared by every pipeline stage.

use serde::{Deserialize, Serialize};

use crate::heightmap::{FusionConfig, GridSpec};
use crate::optimizer::{CostWeights, FootGeometry, SearchParams};
use crate::retarget::RetargetConfig;
use crate::swing::SwingParams;
use crate::walksim::TimingConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MappingConfig {
    /// Sensor-local grid, in the local frame centered under the camera.
    pub local_grid: GridSpec,
    /// World grid the local maps are fused into.
    pub global_grid: GridSpec,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            local_grid: GridSpec::default(),
            global_grid: GridSpec::centered(400, 400, crate::heightmap::DEFAULT_RESOLUTION, 0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub retarget: RetargetConfig,
    pub fusion: FusionConfig,
    pub weights: CostWeights,
    pub foot: FootGeometry,
    pub search: SearchParams,
    pub swing: SwingParams,
    pub timing: TimingConfig,
    pub mapping: MappingConfig,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.retarget.validate()?;
        self.fusion.validate()?;
        self.weights.validate()?;
        self.foot.validate()?;
        self.search.validate()?;
        self.swing.validate()?;
        self.timing.validate()?;
        for (name, g) in [("local_grid", &self.mapping.local_grid), ("global_grid", &self.mapping.global_grid)] {
            if g.width == 0 || g.height == 0 || !(g.resolution > 0.0) {
                return Err(Error::InvalidConfig(format!("mapping.{name}: empty grid or non-positive resolution")));
            }
        }
        Ok(())
    }

    /// Parses and validates a JSON document; missing keys take defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(PipelineConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(PipelineConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_json(r#"{"sead": 3}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"timing": {"transfer_mim": 0.2}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"retarget": {"limits": {"max_strid": 0.5}}}"#).is_err());
    }

    #[test]
    fn partial_documents_merge_with_defaults() {
        let c = PipelineConfig::from_json(r#"{"seed": 9, "timing": {"transfer_min": 0.2}}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.timing.transfer_min, 0.2);
        assert_eq!(c.timing.transfer_max, 1.0);
        let c = PipelineConfig::from_json(r#"{"retarget": {"limits": {"max_stride": 0.5}}}"#).unwrap();
        assert_eq!(c.retarget.limits.max_stride, 0.5);
        assert_eq!(c.retarget.limits.max_yaw, 0.6);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(PipelineConfig::from_json(r#"{"timing": {"transfer_min": 2.0}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"swing": {"wp1_fraction": 0.3}}"#).is_err());
    }
}
