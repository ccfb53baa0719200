//! Planar and spatial poses, stance-frame transforms and the footstep safety clamp.

use std::f64::consts::PI;

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Planar pose: position in meters and yaw in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: normalize_angle(yaw),
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    /// Maps a point expressed in this pose's frame into the parent frame.
    pub fn transform_point(&self, local: Vector2<f64>) -> Vector2<f64> {
        let (s, c) = self.yaw.sin_cos();
        Vector2::new(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
        )
    }

    /// Maps a parent-frame point into this pose's frame.
    pub fn inverse_transform_point(&self, world: Vector2<f64>) -> Vector2<f64> {
        let (s, c) = self.yaw.sin_cos();
        let dx = world.x - self.x;
        let dy = world.y - self.y;
        Vector2::new(c * dx + s * dy, -s * dx + c * dy)
    }

    /// `self ∘ local`: interprets `local` as expressed in this frame.
    pub fn compose(&self, local: &Pose2) -> Pose2 {
        let p = self.transform_point(local.position());
        Pose2::new(p.x, p.y, self.yaw + local.yaw)
    }
}

/// Spatial pose of a tracker, camera or foot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose3 {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose3 {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_position_yaw(position: Vector3<f64>, yaw: f64) -> Self {
        Self::new(position, UnitQuaternion::from_euler_angles(0.0, 0.0, yaw))
    }

    /// Heading about world +z (Z-Y-X convention).
    pub fn yaw(&self) -> f64 {
        self.orientation.euler_angles().2
    }

    pub fn xy(&self) -> Vector2<f64> {
        self.position.xy()
    }

    /// Drops roll, pitch and height.
    pub fn to_pose2(&self) -> Pose2 {
        Pose2::new(self.position.x, self.position.y, self.yaw())
    }

    pub fn transform_point(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * local + self.position
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FootSide {
    Left,
    Right,
}

impl FootSide {
    pub fn opposite(self) -> Self {
        match self {
            FootSide::Left => FootSide::Right,
            FootSide::Right => FootSide::Left,
        }
    }

    /// +1 for the left foot, −1 for the right foot (+y is left in the stance frame).
    pub fn lateral_sign(self) -> f64 {
        match self {
            FootSide::Left => 1.0,
            FootSide::Right => -1.0,
        }
    }
}

/// Kinematic envelope applied to every teleoperated footstep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SafetyLimits {
    pub max_stride: f64,
    pub max_yaw: f64,
    pub min_lateral_separation: f64,
    pub max_inward_yaw: f64,
}

impl Default for SafetyLimits {
    fn default() -> Self {
        Self {
            max_stride: 0.60,
            max_yaw: 0.6,
            min_lateral_separation: 0.20,
            max_inward_yaw: 0.1,
        }
    }
}

/// Slack on the stride-norm test so that a saturated step is a fixed point of
/// the clamp despite rounding in the rescale.
const STRIDE_SLACK: f64 = 1e-12;

impl SafetyLimits {
    pub fn validate(&self) -> crate::Result<()> {
        let all_positive = [
            self.max_stride,
            self.max_yaw,
            self.min_lateral_separation,
            self.max_inward_yaw,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if all_positive {
            Ok(())
        } else {
            Err(crate::Error::InvalidConfig(
                "safety limits must be strictly positive".into(),
            ))
        }
    }

    /// Nominal landing spot of the swing foot in the stance frame.
    pub fn home(&self, side: FootSide) -> Vector2<f64> {
        Vector2::new(0.0, side.lateral_sign() * self.min_lateral_separation)
    }

    /// Allowed relative yaw interval for a swing foot on `side`. Inward rotation
    /// (toes toward the stance foot) is negative for the left foot.
    pub fn yaw_bounds(&self, side: FootSide) -> (f64, f64) {
        let inward = self.max_inward_yaw.min(self.max_yaw);
        match side {
            FootSide::Left => (-inward, self.max_yaw),
            FootSide::Right => (-self.max_yaw, inward),
        }
    }

    /// Displacement of a stance-frame footstep from the swing foot's home spot.
    pub fn stride_of(&self, candidate: &Pose2, side: FootSide) -> f64 {
        (candidate.position() - self.home(side)).norm()
    }

    /// Evaluates every clamp predicate directly.
    pub fn admits(&self, candidate: &Pose2, side: FootSide) -> bool {
        let lateral_ok = side.lateral_sign() * candidate.y >= self.min_lateral_separation;
        let stride_ok = self.stride_of(candidate, side) <= self.max_stride * (1.0 + STRIDE_SLACK);
        let (lo, hi) = self.yaw_bounds(side);
        lateral_ok && stride_ok && candidate.yaw >= lo && candidate.yaw <= hi
    }
}

/// Expresses a world pose in the frame of `stance`.
pub fn transform_to_stance_frame(point: &Pose2, stance: &Pose2) -> Pose2 {
    let p = stance.inverse_transform_point(point.position());
    Pose2::new(p.x, p.y, point.yaw - stance.yaw)
}

/// Inverse of [`transform_to_stance_frame`].
pub fn transform_from_stance_frame(local: &Pose2, stance: &Pose2) -> Pose2 {
    stance.compose(local)
}

/// Projects a stance-frame footstep into the feasible set: lateral half-plane,
/// then stride norm about the home spot, then relative yaw.
pub fn clamp_footstep(candidate: &Pose2, side: FootSide, limits: &SafetyLimits) -> Pose2 {
    let sign = side.lateral_sign();
    let mut x = candidate.x;
    let mut y = candidate.y;

    if sign * y < limits.min_lateral_separation {
        y = sign * limits.min_lateral_separation;
    }

    let home = limits.home(side);
    let offset = Vector2::new(x, y) - home;
    let stride = offset.norm();
    if stride > limits.max_stride * (1.0 + STRIDE_SLACK) {
        // Scaling toward the home spot keeps y on the feasible side.
        let scaled = offset * (limits.max_stride / stride);
        x = home.x + scaled.x;
        y = home.y + scaled.y;
        if sign * y < limits.min_lateral_separation {
            y = sign * limits.min_lateral_separation;
        }
    }

    let (lo, hi) = limits.yaw_bounds(side);
    let yaw = candidate.yaw.clamp(lo, hi);
    Pose2 { x, y, yaw }
}

/// A footstep handed to the robot controller (world frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootstepCommand {
    pub side: FootSide,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub height: f64,
}

impl FootstepCommand {
    pub fn new(side: FootSide, pose: Pose2, height: f64) -> Self {
        Self {
            side,
            x: pose.x,
            y: pose.y,
            yaw: pose.yaw,
            height,
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2 {
            x: self.x,
            y: self.y,
            yaw: self.yaw,
        }
    }
}
