use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::{CostWeights, FootGeometry};
use crate::geometry::Pose2;
use crate::heightmap::HeightMap;
use crate::{Error, Result};

/// Sole stencil: front-left, back-left, back-right, front-right, center.
/// Points 1 & 4 are the front pair, 2 & 3 the back pair.
pub fn sample_points(pose: &Pose2, foot: &FootGeometry) -> [Vector2<f64>; 5] {
    let (hx, hy) = (foot.length / 2.0, foot.width / 2.0);
    [
        pose.transform_point(Vector2::new(hx, hy)),
        pose.transform_point(Vector2::new(-hx, hy)),
        pose.transform_point(Vector2::new(-hx, -hy)),
        pose.transform_point(Vector2::new(hx, -hy)),
        pose.position(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Continuity {
    Continuous,
    Discontinuous { penalty: f64 },
}

/// Compares the center height against the mean of the front and back corner
/// pairs. Unknown heights make the sole discontinuous with infinite penalty.
pub fn continuity_check(h: &[f64; 5], weights: &CostWeights) -> Continuity {
    if h.iter().any(|v| v.is_nan()) {
        return Continuity::Discontinuous {
            penalty: f64::INFINITY,
        };
    }
    let front = (h[0] + h[3]) / 2.0;
    let back = (h[1] + h[2]) / 2.0;
    let mean = (front + back) / 2.0;
    if (h[4] - mean).abs() > weights.continuity_threshold {
        let spread: f64 = h[..4].iter().map(|c| (c - h[4]).abs()).sum();
        Continuity::Discontinuous {
            penalty: weights.discontinuity * spread,
        }
    } else {
        Continuity::Continuous
    }
}

/// Least-squares plane `z = alpha x + beta y + gamma` with residual metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mean_deviation: f64,
    pub max_deviation: f64,
    /// `atan(sqrt(alpha² + beta²))`.
    pub max_slope: f64,
}

impl PlaneFit {
    pub fn at(&self, x: f64, y: f64) -> f64 {
        self.alpha * x + self.beta * y + self.gamma
    }
}

/// Closed-form solution of the 3×3 normal equations (in centered
/// coordinates) for the five stencil points.
pub fn fit_plane(points: &[Vector3<f64>; 5]) -> Result<PlaneFit> {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let d = p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
        sxz += d.x * d.z;
        syz += d.y * d.z;
    }
    let det = sxx * syy - sxy * sxy;
    let scale = (sxx + syy) * (sxx + syy);
    if !(scale > 0.0) || det <= 1e-12 * scale {
        return Err(Error::DegenerateStencil);
    }
    let alpha = (sxz * syy - syz * sxy) / det;
    let beta = (syz * sxx - sxz * sxy) / det;
    let gamma = mean.z - alpha * mean.x - beta * mean.y;

    let mut fit = PlaneFit {
        alpha,
        beta,
        gamma,
        mean_deviation: 0.0,
        max_deviation: 0.0,
        max_slope: alpha.hypot(beta).atan(),
    };
    for p in points {
        let r = (p.z - fit.at(p.x, p.y)).abs();
        fit.mean_deviation += r / n;
        fit.max_deviation = fit.max_deviation.max(r);
    }
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarityReport {
    pub sample_heights: [f64; 5],
    pub continuous: bool,
    /// Present when the sole passed the continuity check.
    pub plane: Option<PlaneFit>,
    pub cost: f64,
}

/// Planarity cost of a sole placement. Heights come from the nearest map
/// cells and the plane is fitted at those cells' centers.
pub fn planarity_cost(pose: &Pose2, foot: &FootGeometry, map: &HeightMap, weights: &CostWeights) -> PlanarityReport {
    let points = sample_points(pose, foot);
    let mut heights = [f64::NAN; 5];
    let mut snapped = [Vector3::zeros(); 5];
    for (i, p) in points.iter().enumerate() {
        if let Some((ix, iy)) = map.cell_of(p.x, p.y) {
            let (cx, cy) = map.cell_center(ix, iy);
            heights[i] = map.get(ix, iy);
            snapped[i] = Vector3::new(cx, cy, heights[i]);
        }
    }
    match continuity_check(&heights, weights) {
        Continuity::Discontinuous { penalty } => PlanarityReport {
            sample_heights: heights,
            continuous: false,
            plane: None,
            cost: penalty,
        },
        Continuity::Continuous => match fit_plane(&snapped) {
            Ok(plane) => {
                let mut cost = plane.mean_deviation;
                if plane.max_slope > weights.slope_limit {
                    cost += weights.slope_penalty;
                }
                if plane.max_deviation > weights.variance_limit {
                    cost += weights.variance_penalty;
                }
                PlanarityReport {
                    sample_heights: heights,
                    continuous: true,
                    plane: Some(plane),
                    cost,
                }
            }
            // sole smaller than a cell: nothing to judge the terrain by
            Err(_) => PlanarityReport {
                sample_heights: heights,
                continuous: true,
                plane: None,
                cost: f64::INFINITY,
            },
        },
    }
}
