//! Anticipatory retargeting of user foot-tracker motion into robot footsteps.
//!
//! Each foot runs a small state machine: a step starts once the tracker has
//! moved and lifted past thresholds relative to its rest pose, and finishes
//! once the tracker has been quiet for a number of samples. While stepping,
//! the stride and yaw estimates extrapolate the user's motion with the step's
//! average velocities and are pulled back toward the measured displacement as
//! the foot descends.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{
    clamp_footstep, normalize_angle, transform_from_stance_frame, transform_to_stance_frame, FootSide, FootstepCommand,
    Pose2, Pose3, SafetyLimits,
};
use crate::{Error, Result};

/// Displacements below this norm carry no direction.
pub const MIN_DIRECTION_NORM: f64 = 1e-6;
/// Peak lifts below this are treated as "never lifted" by the landing factor.
pub const MIN_PEAK_LIFT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerSample {
    pub time: f64,
    pub pose: Pose3,
    pub linear_velocity: Vector3<f64>,
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepPhase {
    Idle,
    Stepping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepEvent {
    None,
    Started,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetargetConfig {
    /// Horizontal displacement that arms a step (m).
    pub step_threshold: f64,
    /// Vertical lift that arms a step (m).
    pub lift_threshold: f64,
    /// Speed below which the foot counts as quiet (m/s).
    pub stability_threshold: f64,
    pub stability_iterations: u32,
    /// Robot step duration used for the remaining-time extrapolation (s).
    pub step_duration: f64,
    pub stride_gain: f64,
    pub yaw_gain: f64,
    pub limits: SafetyLimits,
}

impl Default for RetargetConfig {
    fn default() -> Self {
        Self {
            step_threshold: 0.04,
            lift_threshold: 0.01,
            stability_threshold: 0.05,
            stability_iterations: 10,
            step_duration: 0.8,
            stride_gain: 0.3,
            yaw_gain: 0.3,
            limits: SafetyLimits::default(),
        }
    }
}

impl RetargetConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.step_threshold,
            self.lift_threshold,
            self.stability_threshold,
            self.step_duration,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !positive || self.stability_iterations == 0 {
            return Err(Error::InvalidConfig(
                "retarget thresholds must be positive".into(),
            ));
        }
        for gain in [self.stride_gain, self.yaw_gain] {
            if !(gain > 0.0 && gain <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "proportional gain {gain} outside (0, 1]"
                )));
            }
        }
        self.limits.validate()
    }
}

/// Per-foot step bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepState {
    pub phase: StepPhase,
    pub side: FootSide,
    /// Rest pose the current (or next) step is measured from. `None` until
    /// the first sample arrives.
    pub initial_pose: Option<Pose3>,
    pub start_time: f64,
    /// Largest lift above the initial pose seen during this step.
    pub z_max: f64,
    pub avg_horizontal_velocity: f64,
    pub avg_yaw_rate: f64,
    pub quiet_iterations: u32,
    pub samples_in_step: u32,
    /// Foot has been seen moving down below its peak during this step.
    pub descending: bool,
    /// Set once the landing factor has reached zero; the step stays landed.
    pub landed: bool,
    landing_pose: Option<Pose3>,
}

impl StepState {
    pub fn new(side: FootSide) -> Self {
        Self {
            phase: StepPhase::Idle,
            side,
            initial_pose: None,
            start_time: 0.0,
            z_max: 0.0,
            avg_horizontal_velocity: 0.0,
            avg_yaw_rate: 0.0,
            quiet_iterations: 0,
            samples_in_step: 0,
            descending: false,
            landed: false,
            landing_pose: None,
        }
    }

    fn accumulate(&mut self, sample: &TrackerSample, lift: f64) {
        self.samples_in_step += 1;
        let n = f64::from(self.samples_in_step);
        let speed = sample.linear_velocity.xy().norm();
        self.avg_horizontal_velocity += (speed - self.avg_horizontal_velocity) / n;
        self.avg_yaw_rate += (sample.yaw_rate - self.avg_yaw_rate) / n;
        self.z_max = self.z_max.max(lift);
    }
}

/// Advances the step state machine by one sample.
pub fn detect_step_event(
    state: &mut StepState,
    sample: &TrackerSample,
    config: &RetargetConfig,
) -> StepEvent {
    if let Some(rest) = state.landing_pose.take() {
        state.initial_pose = Some(rest);
    }
    let Some(initial) = state.initial_pose else {
        state.initial_pose = Some(sample.pose);
        return StepEvent::None;
    };
    let displacement = (sample.pose.xy() - initial.xy()).norm();
    let lift = sample.pose.position.z - initial.position.z;

    match state.phase {
        StepPhase::Idle => {
            if displacement >= config.step_threshold && lift >= config.lift_threshold {
                state.phase = StepPhase::Stepping;
                state.start_time = sample.time;
                state.z_max = 0.0;
                state.avg_horizontal_velocity = 0.0;
                state.avg_yaw_rate = 0.0;
                state.quiet_iterations = 0;
                state.samples_in_step = 0;
                state.descending = false;
                state.landed = false;
                state.accumulate(sample, lift);
                StepEvent::Started
            } else {
                StepEvent::None
            }
        }
        StepPhase::Stepping => {
            state.accumulate(sample, lift);
            if sample.linear_velocity.norm() < config.stability_threshold {
                state.quiet_iterations += 1;
            } else {
                state.quiet_iterations = 0;
            }
            if state.quiet_iterations >= config.stability_iterations {
                state.phase = StepPhase::Idle;
                state.quiet_iterations = 0;
                state.landing_pose = Some(sample.pose);
                StepEvent::Finished
            } else {
                StepEvent::None
            }
        }
    }
}

/// Unit XY direction from `initial` to `current`, `None` for (near) zero motion.
pub fn instantaneous_direction(current: &Pose3, initial: &Pose3) -> Option<Vector2<f64>> {
    let delta = current.xy() - initial.xy();
    let norm = delta.norm();
    (norm >= MIN_DIRECTION_NORM).then(|| delta / norm)
}

/// Blend weight toward the extrapolated stride: 1 while the foot rises or
/// hovers, falling linearly with height as it descends.
pub fn landing_factor(z: f64, z_dot: f64, z_max: f64) -> f64 {
    if z_dot >= 0.0 || z_max < MIN_PEAK_LIFT {
        return 1.0;
    }
    (z / z_max).clamp(0.0, 1.0)
}

/// `measured + rate * remaining`, the extrapolated value if the foot keeps its average rate.
pub fn extrapolate(measured: f64, average_rate: f64, remaining: f64) -> f64 {
    measured + average_rate * remaining
}

pub fn blend(landing_factor: f64, raw: f64, measured: f64) -> f64 {
    landing_factor * raw + (1.0 - landing_factor) * measured
}

/// One proportional step toward `target`, with the target and the result
/// both clamped to `[lo, hi]`.
pub fn proportional_step(current: f64, target: f64, gain: f64, lo: f64, hi: f64) -> f64 {
    let target = target.clamp(lo, hi);
    (current + gain * (target - current)).clamp(lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrideEstimate {
    pub stride: f64,
    pub yaw: f64,
    pub direction: Option<Vector2<f64>>,
    pub landing_factor: f64,
}

impl Default for StrideEstimate {
    fn default() -> Self {
        Self {
            stride: 0.0,
            yaw: 0.0,
            direction: None,
            landing_factor: 1.0,
        }
    }
}

fn remaining_step_time(state: &StepState, sample: &TrackerSample, config: &RetargetConfig) -> f64 {
    (config.step_duration - (sample.time - state.start_time)).max(0.0)
}

fn current_landing_factor(state: &StepState, sample: &TrackerSample, initial: &Pose3) -> f64 {
    // after descending, a foot that stops going down has touched down
    if state.landed || (state.descending && sample.linear_velocity.z >= 0.0) {
        return 0.0;
    }
    let lift = sample.pose.position.z - initial.position.z;
    landing_factor(lift, sample.linear_velocity.z, state.z_max)
}

/// Updates stride length, direction and landing factor; the yaw is carried over.
pub fn stride_estimate_update(
    state: &StepState,
    sample: &TrackerSample,
    prev: &StrideEstimate,
    config: &RetargetConfig,
) -> StrideEstimate {
    let Some(initial) = state.initial_pose else {
        return *prev;
    };
    let measured = (sample.pose.xy() - initial.xy()).norm();
    let remaining = remaining_step_time(state, sample, config);
    let raw = extrapolate(measured, state.avg_horizontal_velocity, remaining);
    let lambda = current_landing_factor(state, sample, &initial);
    let blended = blend(lambda, raw, measured);
    let max_stride = config.limits.max_stride;
    StrideEstimate {
        stride: proportional_step(prev.stride, blended, config.stride_gain, 0.0, max_stride),
        yaw: prev.yaw,
        direction: instantaneous_direction(&sample.pose, &initial).or(prev.direction),
        landing_factor: lambda,
    }
}

/// Updates the relative yaw estimate with the same remaining time and landing
/// factor as the stride.
pub fn yaw_estimate_update(
    state: &StepState,
    sample: &TrackerSample,
    prev_yaw: f64,
    config: &RetargetConfig,
) -> f64 {
    let Some(initial) = state.initial_pose else {
        return prev_yaw;
    };
    let measured = normalize_angle(sample.pose.yaw() - initial.yaw());
    let remaining = remaining_step_time(state, sample, config);
    let raw = extrapolate(measured, state.avg_yaw_rate, remaining);
    let lambda = current_landing_factor(state, sample, &initial);
    let max_yaw = config.limits.max_yaw;
    proportional_step(prev_yaw, blend(lambda, raw, measured), config.yaw_gain, -max_yaw, max_yaw)
}

/// Turns the user-centric step estimate into a clamped world-frame footstep.
///
/// The swing foot's initial pose is expressed in the user's stance-foot frame,
/// offset by `stride * direction` and turned by the yaw estimate; that
/// relative pose is then clamped and placed next to the robot's stance foot.
pub fn compose_footstep(
    estimate: &StrideEstimate,
    swing_initial: &Pose3,
    user_stance: &Pose3,
    robot_stance: &Pose2,
    stance_height: f64,
    side: FootSide,
    limits: &SafetyLimits,
) -> Result<FootstepCommand> {
    let direction = estimate.direction.ok_or(Error::UndefinedDirection)?;
    let user_frame = user_stance.to_pose2();
    let start = transform_to_stance_frame(&swing_initial.to_pose2(), &user_frame);
    let (s, c) = user_frame.yaw.sin_cos();
    let local_direction = Vector2::new(
        c * direction.x + s * direction.y,
        -s * direction.x + c * direction.y,
    );
    let target = start.position() + estimate.stride * local_direction;
    let candidate = Pose2::new(target.x, target.y, start.yaw + estimate.yaw);
    let clamped = clamp_footstep(&candidate, side, limits);
    Ok(FootstepCommand::new(
        side,
        transform_from_stance_frame(&clamped, robot_stance),
        stance_height,
    ))
}

/// Output of one retargeting tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetargetUpdate {
    pub time: f64,
    pub side: FootSide,
    pub event: StepEvent,
    pub phase: StepPhase,
    /// Time the current step was detected, if a step is (or just was) active.
    pub step_start: Option<f64>,
    pub estimate: Option<StrideEstimate>,
    pub footstep: Option<FootstepCommand>,
}

/// Estimator for a single foot. Samples must arrive in time order.
#[derive(Debug, Clone)]
pub struct FootEstimator {
    state: StepState,
    estimate: StrideEstimate,
    last_time: Option<f64>,
}

impl FootEstimator {
    pub fn new(side: FootSide) -> Self {
        Self {
            state: StepState::new(side),
            estimate: StrideEstimate::default(),
            last_time: None,
        }
    }

    pub fn state(&self) -> &StepState {
        &self.state
    }

    pub fn estimate(&self) -> StrideEstimate {
        self.estimate
    }

    /// Returns the event and, while a step is active, the refreshed estimate.
    pub fn push(
        &mut self,
        sample: &TrackerSample,
        config: &RetargetConfig,
    ) -> Result<(StepEvent, Option<StrideEstimate>)> {
        if let Some(last) = self.last_time {
            if sample.time <= last || sample.time.is_nan() {
                return Err(Error::NonMonotonicTime {
                    last,
                    now: sample.time,
                });
            }
        }
        self.last_time = Some(sample.time);

        let event = detect_step_event(&mut self.state, sample, config);
        if event == StepEvent::Started {
            self.estimate = StrideEstimate::default();
        }
        let active = self.state.phase == StepPhase::Stepping || event == StepEvent::Finished;
        if !active {
            return Ok((event, None));
        }
        // On Finished the step's rest pose is still in place until the next sample.
        let mut next = stride_estimate_update(&self.state, sample, &self.estimate, config);
        next.yaw = yaw_estimate_update(&self.state, sample, self.estimate.yaw, config);
        if event == StepEvent::Finished {
            if let Some(initial) = self.state.initial_pose {
                // the foot is at rest: commit the measured step instead of the lagging estimate
                let limits = &config.limits;
                next.stride = (sample.pose.xy() - initial.xy()).norm().clamp(0.0, limits.max_stride);
                next.yaw = normalize_angle(sample.pose.yaw() - initial.yaw()).clamp(-limits.max_yaw, limits.max_yaw);
                next.landing_factor = 0.0;
            }
        }
        if next.landing_factor == 0.0 {
            self.state.landed = true;
        }
        if let Some(initial) = self.state.initial_pose {
            let lift = sample.pose.position.z - initial.position.z;
            if sample.linear_velocity.z < 0.0 && lift < self.state.z_max {
                self.state.descending = true;
            }
        }
        self.estimate = next;
        Ok((event, Some(next)))
    }
}

/// Two-foot retargeter that also tracks where the robot's feet are.
#[derive(Debug, Clone)]
pub struct Retargeter {
    config: RetargetConfig,
    left: FootEstimator,
    right: FootEstimator,
    user_feet: [Option<Pose3>; 2],
    robot_feet: [FootstepCommand; 2],
}

fn slot(side: FootSide) -> usize {
    match side {
        FootSide::Left => 0,
        FootSide::Right => 1,
    }
}

impl Retargeter {
    /// Robot starts with its feet at `(0, ±min_lateral_separation / 2)` facing +x.
    pub fn new(config: RetargetConfig) -> Self {
        let half = config.limits.min_lateral_separation / 2.0;
        Self {
            left: FootEstimator::new(FootSide::Left),
            right: FootEstimator::new(FootSide::Right),
            user_feet: [None, None],
            robot_feet: [
                FootstepCommand::new(FootSide::Left, Pose2::new(0.0, half, 0.0), 0.0),
                FootstepCommand::new(FootSide::Right, Pose2::new(0.0, -half, 0.0), 0.0),
            ],
            config,
        }
    }

    pub fn config(&self) -> &RetargetConfig {
        &self.config
    }

    pub fn robot_foot(&self, side: FootSide) -> FootstepCommand {
        self.robot_feet[slot(side)]
    }

    /// Overrides where the robot foot on `side` is taken to stand.
    pub fn set_robot_foot(&mut self, command: FootstepCommand) {
        self.robot_feet[slot(command.side)] = command;
    }

    pub fn estimator(&self, side: FootSide) -> &FootEstimator {
        match side {
            FootSide::Left => &self.left,
            FootSide::Right => &self.right,
        }
    }

    pub fn push(&mut self, side: FootSide, sample: &TrackerSample) -> Result<RetargetUpdate> {
        let config = self.config;
        let estimator = match side {
            FootSide::Left => &mut self.left,
            FootSide::Right => &mut self.right,
        };
        let step_initial = estimator.state.initial_pose;
        let (event, estimate) = estimator.push(sample, &config)?;
        let phase = estimator.state.phase;
        let step_start = estimate.map(|_| estimator.state.start_time);
        self.user_feet[slot(side)] = Some(sample.pose);

        let footstep = match estimate {
            Some(est) if est.direction.is_some() => {
                let swing_initial = step_initial.unwrap_or(sample.pose);
                let user_stance = self.user_feet[slot(side.opposite())].unwrap_or_else(|| {
                    // other tracker not seen yet: assume it stands at the home spot
                    let home = config.limits.home(side.opposite());
                    let heading = swing_initial.to_pose2();
                    let p = heading.transform_point(home);
                    Pose3::from_position_yaw(Vector3::new(p.x, p.y, swing_initial.position.z), heading.yaw)
                });
                let robot_stance = self.robot_feet[slot(side.opposite())];
                Some(compose_footstep(
                    &est,
                    &swing_initial,
                    &user_stance,
                    &robot_stance.pose(),
                    robot_stance.height,
                    side,
                    &config.limits,
                )?)
            }
            _ => None,
        };
        if event == StepEvent::Finished {
            if let Some(cmd) = footstep {
                self.robot_feet[slot(side)] = cmd;
            }
        }
        Ok(RetargetUpdate {
            time: sample.time,
            side,
            event,
            phase,
            step_start,
            estimate,
            footstep,
        })
    }
}
