//! Line-delimited JSON records exchanged by the command-line tools.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, FootSide, FootstepCommand, Pose3};
use crate::optimizer::CostBreakdown;
use crate::retarget::{RetargetUpdate, StepEvent, StepPhase, StrideEstimate, TrackerSample};
use crate::{Error, Result};

/// One tracker reading. Missing velocities are filled by backward
/// differences against the previous reading of the same foot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerRecord {
    pub t: f64,
    pub side: FootSide,
    pub position: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw_rate: Option<f64>,
}

impl TrackerRecord {
    pub fn from_sample(side: FootSide, s: &TrackerSample) -> Self {
        let p = s.pose.position;
        let v = s.linear_velocity;
        Self {
            t: s.time,
            side,
            position: [p.x, p.y, p.z],
            yaw: Some(s.pose.yaw()),
            velocity: Some([v.x, v.y, v.z]),
            yaw_rate: Some(s.yaw_rate),
        }
    }
}

/// Turns tracker records into samples, validating time order: strictly
/// increasing per foot, non-decreasing overall.
#[derive(Debug, Clone, Default)]
pub struct TrackerStream {
    last_global: Option<f64>,
    previous: [Option<TrackerSample>; 2],
}

fn slot(side: FootSide) -> usize {
    match side {
        FootSide::Left => 0,
        FootSide::Right => 1,
    }
}

impl TrackerStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accept(&mut self, record: &TrackerRecord) -> Result<TrackerSample> {
        let finite = record.t.is_finite()
            && record.position.iter().all(|v| v.is_finite())
            && record.yaw.is_none_or(f64::is_finite)
            && record.yaw_rate.is_none_or(f64::is_finite)
            && record.velocity.is_none_or(|v| v.iter().all(|c| c.is_finite()));
        if !finite {
            return Err(Error::InvalidConfig("tracker record contains a non-finite value".into()));
        }
        if let Some(last) = self.last_global {
            if record.t < last {
                return Err(Error::NonMonotonicTime { last, now: record.t });
            }
        }
        let prev = self.previous[slot(record.side)];
        if let Some(p) = prev {
            if record.t <= p.time {
                return Err(Error::NonMonotonicTime { last: p.time, now: record.t });
            }
        }
        let position = Vector3::from(record.position);
        let yaw = record.yaw.unwrap_or_else(|| prev.map_or(0.0, |p| p.pose.yaw()));
        let pose = Pose3::from_position_yaw(position, yaw);
        let linear_velocity = match (record.velocity, prev) {
            (Some(v), _) => Vector3::from(v),
            (None, Some(p)) => (position - p.pose.position) / (record.t - p.time),
            (None, None) => Vector3::zeros(),
        };
        let yaw_rate = match (record.yaw_rate, prev) {
            (Some(r), _) => r,
            (None, Some(p)) => normalize_angle(yaw - p.pose.yaw()) / (record.t - p.time),
            (None, None) => 0.0,
        };
        let sample = TrackerSample {
            time: record.t,
            pose,
            linear_velocity,
            yaw_rate,
        };
        self.last_global = Some(record.t);
        self.previous[slot(record.side)] = Some(sample);
        Ok(sample)
    }
}

/// Parses one JSON line, tagging errors with the 1-based line number.
pub fn parse_line<T: for<'de> Deserialize<'de>>(line: &str, number: usize) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::Parse {
        line: number,
        message: e.to_string(),
    })
}

/// Output of `retarget`: one record per processed sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetargetRecord {
    pub t: f64,
    pub side: FootSide,
    pub event: StepEvent,
    pub phase: StepPhase,
    pub step_start: Option<f64>,
    pub estimate: Option<StrideEstimate>,
    pub footstep: Option<FootstepCommand>,
}

impl From<&RetargetUpdate> for RetargetRecord {
    fn from(u: &RetargetUpdate) -> Self {
        Self {
            t: u.time,
            side: u.side,
            event: u.event,
            phase: u.phase,
            step_start: u.step_start,
            estimate: u.estimate,
            footstep: u.footstep,
        }
    }
}

/// Input to `adjust`: either a bare footstep or a retarget record carrying one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FootstepInput {
    Command(FootstepCommand),
    Retarget(RetargetRecord),
}

impl FootstepInput {
    pub fn footstep(&self) -> Option<FootstepCommand> {
        match self {
            FootstepInput::Command(c) => Some(*c),
            FootstepInput::Retarget(r) => r.footstep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustStatus {
    Ok,
    NoSteppableRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustRecord {
    pub status: AdjustStatus,
    pub input: FootstepCommand,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub footstep: Option<FootstepCommand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<CostBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_heights: Option<[Option<f64>; 5]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_slope: Option<f64>,
}

/// Machine-readable error record written to stderr by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}
