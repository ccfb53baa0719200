//! Swing-foot trajectories through two clearance waypoints.
//!
//! The waypoints sit at fixed fractions of the step in XY. Their heights add
//! the swing height to the start height, except that the first waypoint
//! leans toward the goal height when stepping up and the second leans toward
//! it when stepping down. A clamped cubic spline (zero velocity at lift-off
//! and touchdown) runs through the four points, with knot times proportional
//! to the waypoint fractions.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::normalize_angle;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwingParams {
    pub swing_height: f64,
    pub wp1_fraction: f64,
    pub wp2_fraction: f64,
    pub duration: f64,
    /// Height change that counts as stepping up or down (m).
    pub height_threshold: f64,
}

impl Default for SwingParams {
    fn default() -> Self {
        Self {
            swing_height: 0.1,
            wp1_fraction: 0.15,
            wp2_fraction: 0.85,
            duration: 0.65,
            height_threshold: 0.01,
        }
    }
}

impl SwingParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidSwing(m.to_string()));
        if (self.wp1_fraction + self.wp2_fraction - 1.0).abs() > 1e-12 {
            return fail("waypoint fractions must sum to 1");
        }
        if !(0.0 < self.wp1_fraction && self.wp1_fraction < self.wp2_fraction && self.wp2_fraction < 1.0) {
            return fail("waypoint fractions must satisfy 0 < wp1 < wp2 < 1");
        }
        if !(self.swing_height > 0.0) {
            return fail("swing height must be positive");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return fail("swing duration must be positive");
        }
        if !(self.height_threshold >= 0.0) {
            return fail("height threshold must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingSpec {
    pub initial: Vector3<f64>,
    pub goal: Vector3<f64>,
    pub initial_yaw: f64,
    pub goal_yaw: f64,
    pub params: SwingParams,
}

impl SwingSpec {
    pub fn new(initial: Vector3<f64>, goal: Vector3<f64>, params: SwingParams) -> Self {
        Self {
            initial,
            goal,
            initial_yaw: 0.0,
            goal_yaw: 0.0,
            params,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoints {
    pub wp1: Vector3<f64>,
    pub wp2: Vector3<f64>,
    /// The second waypoint ends up below the goal (a rise larger than the
    /// swing height); the foot will approach the goal from below.
    pub wp2_below_goal: bool,
}

pub fn compute_waypoints(spec: &SwingSpec) -> Waypoints {
    let p = &spec.params;
    let (start, goal) = (&spec.initial, &spec.goal);
    let up = if goal.z - start.z > p.height_threshold { 1.0 } else { 0.0 };
    let down = if start.z - goal.z > p.height_threshold { 1.0 } else { 0.0 };
    let lerp_xy = |a: f64| (1.0 - a) * start.xy() + a * goal.xy();

    let xy1 = lerp_xy(p.wp1_fraction);
    let xy2 = lerp_xy(p.wp2_fraction);
    let z1 = p.swing_height + (1.0 - up * p.wp1_fraction) * start.z + up * p.wp1_fraction * goal.z;
    let z2 = p.swing_height + (1.0 - down * p.wp2_fraction) * start.z + down * p.wp2_fraction * goal.z;
    Waypoints {
        wp1: Vector3::new(xy1.x, xy1.y, z1),
        wp2: Vector3::new(xy2.x, xy2.y, z2),
        wp2_below_goal: z2 < goal.z,
    }
}

/// `a + b s + c s² + d s³` per axis, with `s` measured from the segment start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Segment {
    start: f64,
    coeffs: [Vector3<f64>; 4],
}

impl Segment {
    fn position(&self, s: f64) -> Vector3<f64> {
        let [a, b, c, d] = self.coeffs;
        a + (b + (c + d * s) * s) * s
    }

    fn velocity(&self, s: f64) -> Vector3<f64> {
        let [_, b, c, d] = self.coeffs;
        b + (c * 2.0 + d * (3.0 * s)) * s
    }
}

/// Knot velocities of a C² cubic through `values` at `times` with zero end
/// velocities (tridiagonal solve).
fn clamped_knot_velocities(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut v = vec![0.0; n];
    if n < 3 {
        return v;
    }
    let h: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let m = n - 2;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for k in 0..m {
        let i = k + 1;
        lower[k] = h[i];
        diag[k] = 2.0 * (h[i - 1] + h[i]);
        upper[k] = h[i - 1];
        rhs[k] = 3.0 * (h[i] * delta[i - 1] / h[i - 1] + h[i - 1] * delta[i] / h[i]);
    }
    for k in 1..m {
        let w = lower[k] / diag[k - 1];
        diag[k] -= w * upper[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    v[m] = rhs[m - 1] / diag[m - 1];
    for k in (0..m - 1).rev() {
        v[k + 1] = (rhs[k] - upper[k] * v[k + 2]) / diag[k];
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwingTrajectory {
    pub knot_times: [f64; 4],
    pub knots: [Vector3<f64>; 4],
    pub duration: f64,
    pub initial_yaw: f64,
    pub goal_yaw: f64,
    pub wp2_below_goal: bool,
    segments: Vec<Segment>,
}

pub fn build_spline(spec: &SwingSpec, waypoints: &Waypoints) -> Result<SwingTrajectory> {
    spec.params.validate()?;
    let t_total = spec.params.duration;
    let times = [
        0.0,
        spec.params.wp1_fraction * t_total,
        spec.params.wp2_fraction * t_total,
        t_total,
    ];
    let knots = [spec.initial, waypoints.wp1, waypoints.wp2, spec.goal];
    let mut velocities = [Vector3::zeros(); 4];
    for axis in 0..3 {
        let values: Vec<f64> = knots.iter().map(|k| k[axis]).collect();
        for (i, v) in clamped_knot_velocities(&times, &values).into_iter().enumerate() {
            velocities[i][axis] = v;
        }
    }
    let segments = (0..3)
        .map(|i| {
            let h = times[i + 1] - times[i];
            let slope = (knots[i + 1] - knots[i]) / h;
            let (v0, v1) = (velocities[i], velocities[i + 1]);
            Segment {
                start: times[i],
                coeffs: [
                    knots[i],
                    v0,
                    (slope * 3.0 - v0 * 2.0 - v1) / h,
                    (v0 + v1 - slope * 2.0) / (h * h),
                ],
            }
        })
        .collect();
    Ok(SwingTrajectory {
        knot_times: times,
        knots,
        duration: t_total,
        initial_yaw: spec.initial_yaw,
        goal_yaw: spec.goal_yaw,
        wp2_below_goal: waypoints.wp2_below_goal,
        segments,
    })
}

/// Waypoints plus spline in one call.
pub fn plan_swing(spec: &SwingSpec) -> Result<SwingTrajectory> {
    build_spline(spec, &compute_waypoints(spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingSample {
    pub time: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub yaw: f64,
    /// The requested time was outside `[0, duration]` and was clamped.
    pub clamped: bool,
}

impl SwingTrajectory {
    fn segment_for(&self, t: f64) -> &Segment {
        let idx = self.segments.iter().rposition(|s| s.start <= t).unwrap_or(0);
        &self.segments[idx]
    }

    /// Position and velocity on segment `index` at absolute time `t`
    /// (used to compare one-sided limits at the knots).
    pub fn evaluate_on_segment(&self, index: usize, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let seg = &self.segments[index];
        (seg.position(t - seg.start), seg.velocity(t - seg.start))
    }

    pub fn sample(&self, t: f64) -> Result<SwingSample> {
        if t.is_nan() {
            return Err(Error::NanTime);
        }
        let clamped_t = t.clamp(0.0, self.duration);
        let seg = self.segment_for(clamped_t);
        let s = clamped_t - seg.start;
        let fraction = clamped_t / self.duration;
        Ok(SwingSample {
            time: clamped_t,
            position: seg.position(s),
            velocity: seg.velocity(s),
            yaw: normalize_angle(self.initial_yaw + fraction * normalize_angle(self.goal_yaw - self.initial_yaw)),
            clamped: clamped_t != t,
        })
    }
}
