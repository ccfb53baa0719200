//! Synthetic scenes and tracker streams with known ground truth, used by the
//! test suites and the CLI fixtures.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use rayon::prelude::*;

use crate::geometry::{FootSide, Pose3};
use crate::heightmap::{CameraIntrinsics, HeightMap, MapFrame};
use crate::retarget::TrackerSample;

fn from_axes(x: Vector3<f64>, y: Vector3<f64>, z: Vector3<f64>) -> UnitQuaternion<f64> {
    let m = Matrix3::from_columns(&[x, y, z]);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
}

/// Optical frame looking straight down from `(x, y, z)`; the top of the
/// image points along `heading`.
pub fn downward_camera(x: f64, y: f64, z: f64, heading: f64) -> Pose3 {
    let (s, c) = heading.sin_cos();
    let y_axis = Vector3::new(-c, -s, 0.0);
    let z_axis = Vector3::new(0.0, 0.0, -1.0);
    Pose3::new(Vector3::new(x, y, z), from_axes(y_axis.cross(&z_axis), y_axis, z_axis))
}

/// Optical frame facing `heading`, pitched down by `pitch` radians.
pub fn tilted_camera(x: f64, y: f64, z: f64, heading: f64, pitch: f64) -> Pose3 {
    let (sh, ch) = heading.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let z_axis = Vector3::new(cp * ch, cp * sh, -sp);
    let x_axis = Vector3::new(sh, -ch, 0.0);
    Pose3::new(Vector3::new(x, y, z), from_axes(x_axis, z_axis.cross(&x_axis), z_axis))
}

const MARCH_STEP: f64 = 1e-3;
const MAX_RANGE: f64 = 20.0;

/// Ray-casts a height field `terrain(x, y)` into a depth image (depth along
/// the optical axis). Pixels that never hit the terrain are NaN.
pub fn render_depth(
    pose: &Pose3,
    intr: &CameraIntrinsics,
    terrain: impl Fn(f64, f64) -> f64 + Sync,
) -> Vec<f32> {
    let hit = |depth: f64, dir: &Vector3<f64>| -> bool {
        let p = pose.position + dir * depth;
        p.z <= terrain(p.x, p.y)
    };
    (0..intr.width * intr.height)
        .into_par_iter()
        .map(|i| {
            let (u, v) = ((i % intr.width) as f64, (i / intr.width) as f64);
            let ray = Vector3::new((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
            let dir = pose.orientation * ray;
            let mut lo = 0.0;
            let mut hi = MARCH_STEP;
            while !hit(hi, &dir) {
                lo = hi;
                hi += MARCH_STEP;
                if hi > MAX_RANGE {
                    return f32::NAN;
                }
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if hit(mid, &dir) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (0.5 * (lo + hi)) as f32
        })
        .collect()
}

/// Terrain families used for randomized optimizer checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Terrain {
    Flat { height: f64 },
    /// `z = x tan(slope)`, rotated by `heading`.
    Ramp { slope: f64, heading: f64 },
    /// Upper platform for `x >= edge_x`.
    TwoLevel { edge_x: f64, low: f64, high: f64 },
}

impl Terrain {
    pub fn height(&self, x: f64, y: f64) -> f64 {
        match *self {
            Terrain::Flat { height } => height,
            Terrain::Ramp { slope, heading } => {
                let along = x * heading.cos() + y * heading.sin();
                along * slope.tan()
            }
            Terrain::TwoLevel { edge_x, low, high } => {
                if x >= edge_x {
                    high
                } else {
                    low
                }
            }
        }
    }

    /// World map of `size × size` cells centered on the origin.
    pub fn map(&self, size: usize, resolution: f64) -> HeightMap {
        let origin = -(size as f64 - 1.0) / 2.0 * resolution;
        HeightMap::from_fn(size, size, resolution, origin, origin, MapFrame::World, |x, y| {
            self.height(x, y)
        })
    }
}

/// One tracker reading tagged with the foot it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSample {
    pub side: FootSide,
    pub sample: TrackerSample,
}

/// Ground truth for one synthetic step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTruth {
    pub side: FootSide,
    pub lift_off: f64,
    pub touchdown: f64,
    pub start: Vector3<f64>,
    pub landing: Vector3<f64>,
}

impl StepTruth {
    pub fn displacement(&self) -> f64 {
        (self.landing.xy() - self.start.xy()).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkProfile {
    pub steps: usize,
    /// Foot displacement of every step after the first (the first is half).
    pub stride: f64,
    pub stance_width: f64,
    pub swing_time: f64,
    pub swing_height: f64,
    /// Both-feet-down pause after each step.
    pub pause: f64,
    pub rate: f64,
}

impl Default for WalkProfile {
    fn default() -> Self {
        Self {
            steps: 10,
            stride: 0.4,
            stance_width: 0.2,
            swing_time: 0.5,
            swing_height: 0.08,
            pause: 1.5,
            rate: 100.0,
        }
    }
}

/// Horizontal progress `3τ² − 2τ³` and lift `H sin(πτ)` over one swing.
fn swing_profile(tau: f64, duration: f64) -> (f64, f64, f64, f64) {
    let s = 3.0 * tau * tau - 2.0 * tau * tau * tau;
    let ds = (6.0 * tau - 6.0 * tau * tau) / duration;
    let lift = (std::f64::consts::PI * tau).sin();
    let dlift = std::f64::consts::PI * (std::f64::consts::PI * tau).cos() / duration;
    (s, ds, lift, dlift)
}

/// Straight walk along +x, alternating feet starting with the left, both
/// trackers sampled at `rate` (left sample first at equal times).
pub fn straight_walk(profile: &WalkProfile) -> (Vec<StreamSample>, Vec<StepTruth>) {
    let half = profile.stance_width / 2.0;
    let mut feet = [Vector3::new(0.0, half, 0.0), Vector3::new(0.0, -half, 0.0)];
    let dt = 1.0 / profile.rate;
    let period = profile.swing_time + profile.pause;
    let lead_in = profile.pause;
    let total = lead_in + period * profile.steps as f64;
    let n_samples = (total * profile.rate).round() as usize + 1;

    let mut truths = Vec::with_capacity(profile.steps);
    for k in 0..profile.steps {
        let slot = k % 2;
        let side = if slot == 0 { FootSide::Left } else { FootSide::Right };
        let travel = if k == 0 { profile.stride / 2.0 } else { profile.stride };
        let start = feet[slot];
        let landing = start + Vector3::new(travel, 0.0, 0.0);
        let lift_off = lead_in + period * k as f64;
        truths.push(StepTruth {
            side,
            lift_off,
            touchdown: lift_off + profile.swing_time,
            start,
            landing,
        });
        feet[slot] = landing;
    }

    let mut samples = Vec::with_capacity(2 * n_samples);
    for i in 0..n_samples {
        let t = i as f64 * dt;
        for (slot, side) in [(0, FootSide::Left), (1, FootSide::Right)] {
            // last step of this foot that lifted off at or before t
            let step = truths
                .iter()
                .filter(|s| s.side == side && s.lift_off <= t + 1e-12)
                .last();
            let (pos, vel) = match step {
                None => (Vector3::new(0.0, if slot == 0 { half } else { -half }, 0.0), Vector3::zeros()),
                Some(s) if t >= s.touchdown - 1e-12 => (s.landing, Vector3::zeros()),
                Some(s) => {
                    let tau = (t - s.lift_off) / profile.swing_time;
                    let (p, dp, l, dl) = swing_profile(tau, profile.swing_time);
                    let delta = s.landing - s.start;
                    let pos = s.start + delta * p + Vector3::new(0.0, 0.0, profile.swing_height * l);
                    let vel = delta * dp + Vector3::new(0.0, 0.0, profile.swing_height * dl);
                    (pos, vel)
                }
            };
            samples.push(StreamSample {
                side,
                sample: TrackerSample {
                    time: t,
                    pose: Pose3::from_position_yaw(pos, 0.0),
                    linear_velocity: vel,
                    yaw_rate: 0.0,
                },
            });
        }
    }
    (samples, truths)
}
