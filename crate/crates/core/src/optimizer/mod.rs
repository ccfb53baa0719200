//! Terrain-adaptive footstep adjustment: every pose on a regular
//! `(x, y, yaw)` grid around the commanded footstep is scored by a composite
//! cost (proximity, yaw, planarity, height change) and the minimum is kept.

pub mod planarity;
pub mod search;

use serde::{Deserialize, Serialize};

pub use planarity::{
    continuity_check, fit_plane, planarity_cost, sample_points, Continuity, PlaneFit, PlanarityReport,
};
pub use search::{
    optimize, total_cost, CandidateResult, CostBreakdown, SearchGrid, SearchParams, SearchSpec,
};

/// Robot foot sole size (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FootGeometry {
    pub length: f64,
    pub width: f64,
}

impl Default for FootGeometry {
    fn default() -> Self {
        Self {
            length: 0.25,
            width: 0.12,
        }
    }
}

impl FootGeometry {
    pub fn validate(&self) -> crate::Result<()> {
        if self.length > 0.0 && self.width > 0.0 {
            Ok(())
        } else {
            Err(crate::Error::InvalidConfig("foot dimensions must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostWeights {
    pub position: f64,
    pub yaw: f64,
    pub planarity: f64,
    pub height: f64,
    pub discontinuity: f64,
    /// Allowed |center − corner mean| before the sole counts as discontinuous (m).
    pub continuity_threshold: f64,
    /// Largest plane-fit residual tolerated without penalty (m).
    pub variance_limit: f64,
    /// Steepest fitted slope tolerated without penalty (rad).
    pub slope_limit: f64,
    pub variance_penalty: f64,
    pub slope_penalty: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            position: 10.0,
            yaw: 30.0,
            planarity: 100.0,
            height: 1.0,
            discontinuity: 50.0,
            continuity_threshold: 0.03,
            variance_limit: 0.05,
            slope_limit: 50f64.to_radians(),
            variance_penalty: 1.0,
            slope_penalty: 1.0,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [
            self.position,
            self.yaw,
            self.planarity,
            self.height,
            self.discontinuity,
            self.continuity_threshold,
            self.variance_limit,
            self.slope_limit,
            self.variance_penalty,
            self.slope_penalty,
        ];
        if all.iter().all(|w| *w >= 0.0 && w.is_finite()) {
            Ok(())
        } else {
            Err(crate::Error::InvalidConfig("cost weights must be non-negative".into()))
        }
    }
}
