use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::planarity::{planarity_cost, PlanarityReport};
use super::{CostWeights, FootGeometry};
use crate::geometry::{normalize_angle, FootstepCommand, Pose2};
use crate::heightmap::HeightMap;
use crate::{Error, Result};

/// Search-space shape, independent of the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchParams {
    /// Half-width of the square position window in foot lengths.
    pub radius_factor: f64,
    pub yaw_half_range: f64,
    pub linear_step: f64,
    pub yaw_step: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            radius_factor: 1.5,
            yaw_half_range: std::f64::consts::FRAC_PI_4,
            linear_step: 0.02,
            yaw_step: 5f64.to_radians(),
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.radius_factor, self.yaw_half_range, self.linear_step, self.yaw_step];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("search steps and ranges must be positive".into()))
        }
    }
}

/// A target pose plus the search window around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub center_x: f64,
    pub center_y: f64,
    pub center_yaw: f64,
    /// Terrain height the footstep is expected at.
    pub target_height: f64,
    pub params: SearchParams,
}

impl SearchSpec {
    /// Centers the search on `command`. The target height is the map height
    /// under it, or the command's own height over unknown terrain.
    pub fn for_footstep(command: &FootstepCommand, map: &HeightMap, params: SearchParams) -> Self {
        let under = map.lookup(command.x, command.y);
        Self {
            center_x: command.x,
            center_y: command.y,
            center_yaw: command.yaw,
            target_height: if under.is_finite() { under } else { command.height },
            params,
        }
    }

    pub fn target(&self) -> Pose2 {
        Pose2::new(self.center_x, self.center_y, self.center_yaw)
    }
}

/// Grid built outward from the target so the target itself is a candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    pub linear_half_count: usize,
    pub yaw_half_count: usize,
    pub linear_step: f64,
    pub yaw_step: f64,
}

// Keeps e.g. (π/4) / 5° from flooring to 8.
const COUNT_SLACK: f64 = 1e-9;

impl SearchGrid {
    pub fn new(params: &SearchParams, foot: &FootGeometry) -> Self {
        let radius = params.radius_factor * foot.length;
        Self {
            linear_half_count: (radius / params.linear_step + COUNT_SLACK).floor() as usize,
            yaw_half_count: (params.yaw_half_range / params.yaw_step + COUNT_SLACK).floor() as usize,
            linear_step: params.linear_step,
            yaw_step: params.yaw_step,
        }
    }

    pub fn linear_count(&self) -> usize {
        2 * self.linear_half_count + 1
    }

    pub fn yaw_count(&self) -> usize {
        2 * self.yaw_half_count + 1
    }

    pub fn len(&self) -> usize {
        self.linear_count() * self.linear_count() * self.yaw_count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed grid offsets `(kx, ky, kyaw)` of enumeration index `index`
    /// (x fastest, yaw slowest).
    pub fn offsets(&self, index: usize) -> (i64, i64, i64) {
        let n = self.linear_count();
        let ix = index % n;
        let iy = (index / n) % n;
        let it = index / (n * n);
        (
            ix as i64 - self.linear_half_count as i64,
            iy as i64 - self.linear_half_count as i64,
            it as i64 - self.yaw_half_count as i64,
        )
    }

    pub fn candidate(&self, target: &Pose2, index: usize) -> Pose2 {
        let (kx, ky, kt) = self.offsets(index);
        Pose2::new(
            target.x + kx as f64 * self.linear_step,
            target.y + ky as f64 * self.linear_step,
            target.yaw + kt as f64 * self.yaw_step,
        )
    }
}

/// Unweighted cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// `|x − x*| + |y − y*|`
    pub position: f64,
    /// Wrapped `|yaw − yaw*|`.
    pub yaw: f64,
    pub planarity: f64,
    /// `|z − z*|`
    pub height: f64,
}

impl CostBreakdown {
    pub fn weighted(&self, w: &CostWeights) -> f64 {
        w.position * self.position + w.yaw * self.yaw + w.planarity * self.planarity + w.height * self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub pose: Pose2,
    /// Map height at the pose center.
    pub height: f64,
    pub total_cost: f64,
    pub breakdown: CostBreakdown,
    pub feasible: bool,
    pub planarity: PlanarityReport,
}

impl CandidateResult {
    pub fn to_footstep(&self, side: crate::geometry::FootSide) -> FootstepCommand {
        FootstepCommand::new(side, self.pose, self.height)
    }
}

/// Composite cost of one candidate pose. Infeasible candidates (unknown
/// terrain) cost `+∞`.
pub fn total_cost(
    pose: &Pose2,
    spec: &SearchSpec,
    map: &HeightMap,
    foot: &FootGeometry,
    weights: &CostWeights,
) -> CandidateResult {
    let planarity = planarity_cost(pose, foot, map, weights);
    let height = map.lookup(pose.x, pose.y);
    let breakdown = CostBreakdown {
        position: (pose.x - spec.center_x).abs() + (pose.y - spec.center_y).abs(),
        yaw: normalize_angle(pose.yaw - spec.center_yaw).abs(),
        planarity: planarity.cost,
        height: (height - spec.target_height).abs(),
    };
    let total = breakdown.weighted(weights);
    let feasible = total.is_finite();
    CandidateResult {
        pose: *pose,
        height,
        total_cost: if feasible { total } else { f64::INFINITY },
        breakdown,
        feasible,
        planarity,
    }
}

/// Total order used to pick the winner: cost, then distance to the target,
/// then yaw offset, then enumeration index.
pub fn rank(a: &(usize, CandidateResult), b: &(usize, CandidateResult)) -> Ordering {
    a.1.total_cost
        .total_cmp(&b.1.total_cost)
        .then(a.1.breakdown.position.total_cmp(&b.1.breakdown.position))
        .then(a.1.breakdown.yaw.total_cmp(&b.1.breakdown.yaw))
        .then(a.0.cmp(&b.0))
}

/// Evaluates every grid candidate in parallel and returns the minimum under
/// [`rank`]. The result does not depend on how the work is scheduled.
pub fn optimize(
    spec: &SearchSpec,
    map: &HeightMap,
    foot: &FootGeometry,
    weights: &CostWeights,
) -> Result<CandidateResult> {
    let grid = SearchGrid::new(&spec.params, foot);
    let target = spec.target();
    let best = (0..grid.len())
        .into_par_iter()
        .map(|i| (i, total_cost(&grid.candidate(&target, i), spec, map, foot, weights)))
        .min_by(rank)
        .ok_or(Error::NoSteppableRegion)?;
    if best.1.feasible {
        Ok(best.1)
    } else {
        Err(Error::NoSteppableRegion)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heightmap::MapFrame;
    use crate::synthetic::Terrain;
    use approx::assert_abs_diff_eq;

    fn flat_spec() -> SearchSpec {
        SearchSpec {
            center_x: 0.0,
            center_y: 0.0,
            center_yaw: 0.0,
            target_height: 0.0,
            params: SearchParams::default(),
        }
    }

    #[test]
    fn cost_examples() {
        let map = Terrain::Flat { height: 0.0 }.map(101, 0.02);
        let (f, w, spec) = (FootGeometry::default(), CostWeights::default(), flat_spec());
        assert_eq!(total_cost(&Pose2::identity(), &spec, &map, &f, &w).total_cost, 0.0);
        let dx = total_cost(&Pose2::new(0.1, 0.0, 0.0), &spec, &map, &f, &w);
        assert_abs_diff_eq!(dx.total_cost, 1.0, epsilon = 1e-12);
        let dyaw = total_cost(&Pose2::new(0.0, 0.0, 0.1), &spec, &map, &f, &w);
        assert_abs_diff_eq!(dyaw.total_cost, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn yaw_offset_wraps() {
        let map = Terrain::Flat { height: 0.0 }.map(101, 0.02);
        let spec = SearchSpec { center_yaw: 3.1, ..flat_spec() };
        let r = total_cost(&Pose2::new(0.0, 0.0, -3.1), &spec, &map, &FootGeometry::default(), &CostWeights::default());
        assert_abs_diff_eq!(r.breakdown.yaw, 2.0 * std::f64::consts::PI - 6.2, epsilon = 1e-12);
    }

    #[test]
    fn default_grid_size() {
        let grid = SearchGrid::new(&SearchParams::default(), &FootGeometry::default());
        assert_eq!(grid.linear_count(), 37);
        assert_eq!(grid.yaw_count(), 19);
        assert_eq!(grid.len(), 37 * 37 * 19);
        let mid = grid.len() / 2;
        assert_eq!(grid.offsets(mid), (0, 0, 0));
        assert_eq!(grid.offsets(0), (-18, -18, -9));
    }

    #[test]
    fn flat_map_returns_target() {
        let map = Terrain::Flat { height: 0.3 }.map(101, 0.02);
        let spec = SearchSpec { target_height: 0.3, ..flat_spec() };
        let best = optimize(&spec, &map, &FootGeometry::default(), &CostWeights::default()).unwrap();
        assert_eq!(best.pose, Pose2::identity());
        assert_eq!(best.total_cost, 0.0);
        assert_eq!(best.height, 0.3);
    }

    #[test]
    fn unknown_map_has_no_steppable_region() {
        let map = HeightMap::new(101, 101, 0.02, -1.0, -1.0, MapFrame::World);
        assert_eq!(
            optimize(&flat_spec(), &map, &FootGeometry::default(), &CostWeights::default()),
            Err(Error::NoSteppableRegion)
        );
    }

    #[test]
    fn target_over_unknown_uses_command_height() {
        let map = HeightMap::new(5, 5, 0.02, 0.0, 0.0, MapFrame::World);
        let cmd = FootstepCommand::new(crate::geometry::FootSide::Left, Pose2::new(1.0, 1.0, 0.0), 0.42);
        assert_eq!(SearchSpec::for_footstep(&cmd, &map, SearchParams::default()).target_height, 0.42);
        let known = Terrain::Flat { height: 0.1 }.map(101, 0.02);
        let cmd = FootstepCommand { x: 0.0, y: 0.0, ..cmd };
        assert_eq!(SearchSpec::for_footstep(&cmd, &known, SearchParams::default()).target_height, 0.1);
    }

    #[test]
    fn step_edge_moves_onto_a_platform() {
        let map = Terrain::TwoLevel { edge_x: 0.01, low: 0.0, high: 0.15 }.map(101, 0.02);
        let spec = SearchSpec { target_height: 0.15, ..flat_spec() };
        let best = optimize(&spec, &map, &FootGeometry::default(), &CostWeights::default()).unwrap();
        assert!(best.planarity.continuous);
        let corners = crate::optimizer::sample_points(&best.pose, &FootGeometry::default());
        let levels: Vec<f64> = corners.iter().map(|p| map.lookup(p.x, p.y)).collect();
        assert!(levels.iter().all(|h| *h == levels[0]), "sole straddles the edge: {levels:?}");
    }
}
