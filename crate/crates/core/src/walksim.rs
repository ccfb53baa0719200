//! Robot-side step timing: a standing / transfer / swing state machine
//! driven by an explicit caller clock.
//!
//! Transfer durations come from a stability score in `[0, 1]`: a score of 1
//! gives the fastest transfer, 0 the slowest. When no score has been
//! supplied for a step, one is drawn from a seeded generator so runs stay
//! reproducible.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{FootSide, FootstepCommand};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkPhase {
    Standing,
    Transfer,
    Swing,
}

impl WalkPhase {
    pub fn can_transition_to(self, next: WalkPhase) -> bool {
        matches!(
            (self, next),
            (WalkPhase::Standing, WalkPhase::Transfer)
                | (WalkPhase::Transfer, WalkPhase::Swing)
                | (WalkPhase::Swing, WalkPhase::Standing)
                | (WalkPhase::Swing, WalkPhase::Transfer)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    pub transfer_min: f64,
    pub transfer_max: f64,
    pub swing_duration: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            transfer_min: 0.15,
            transfer_max: 1.0,
            swing_duration: 0.65,
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.transfer_min > 0.0 && self.transfer_min <= self.transfer_max && self.transfer_max.is_finite()) {
            return Err(Error::InvalidConfig("timing: need 0 < transfer_min <= transfer_max".into()));
        }
        if !(self.swing_duration > 0.0 && self.swing_duration.is_finite()) {
            return Err(Error::InvalidConfig("timing: swing_duration must be positive".into()));
        }
        Ok(())
    }

    /// Affine map from stability score to transfer duration. Scores outside
    /// `[0, 1]` are clamped.
    pub fn transfer_for_score(&self, score: f64) -> f64 {
        let s = if score.is_nan() { 0.0 } else { score.clamp(0.0, 1.0) };
        let t = self.transfer_min + (1.0 - s) * (self.transfer_max - self.transfer_min);
        t.clamp(self.transfer_min, self.transfer_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncRecord {
    pub step: usize,
    pub side: FootSide,
    pub user_step_start: f64,
    pub command_sent: f64,
    pub transfer_start: f64,
    pub swing_start: f64,
    pub touchdown: f64,
    pub transfer_duration: f64,
    pub stability_score: f64,
    pub footstep: FootstepCommand,
}

impl SyncRecord {
    pub fn timestamps(&self) -> [f64; 5] {
        [
            self.user_step_start,
            self.command_sent,
            self.transfer_start,
            self.swing_start,
            self.touchdown,
        ]
    }
}

pub type SyncLog = Vec<SyncRecord>;

pub const CSV_HEADER: &str = "step,side,user_step_start,command_sent,transfer_start,swing_start,touchdown,transfer_duration,stability_score,x,y,yaw,height";

pub fn log_to_csv(log: &[SyncRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in log {
        let side = match r.side {
            FootSide::Left => "left",
            FootSide::Right => "right",
        };
        let f = &r.footstep;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            side,
            r.user_step_start,
            r.command_sent,
            r.transfer_start,
            r.swing_start,
            r.touchdown,
            r.transfer_duration,
            r.stability_score,
            f.x,
            f.y,
            f.yaw,
            f.height
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnqueueStatus {
    /// Robot was standing; transfer began.
    Started,
    /// Target of the step in progress was replaced.
    Replaced,
    /// Command belongs to a user step the robot already executed.
    AlreadyExecuted,
    /// Stored as the single pending command for after touchdown.
    Queued,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ActiveStep {
    target: FootstepCommand,
    user_step_start: f64,
    command_sent: f64,
    transfer_start: f64,
    transfer_duration: f64,
    stability_score: f64,
    swing_start: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PendingStep {
    target: FootstepCommand,
    user_step_start: f64,
    command_sent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub time: f64,
    pub from: WalkPhase,
    pub to: WalkPhase,
}

#[derive(Debug, Clone)]
pub struct WalkSim {
    timing: TimingConfig,
    rng: ChaCha8Rng,
    phase: WalkPhase,
    now: f64,
    active: Option<ActiveStep>,
    pending: Option<PendingStep>,
    next_score: Option<f64>,
    last_executed: Option<(FootSide, f64)>,
    log: SyncLog,
    transitions: Vec<Transition>,
}

impl WalkSim {
    pub fn new(timing: TimingConfig, seed: u64) -> Result<Self> {
        timing.validate()?;
        Ok(Self {
            timing,
            rng: ChaCha8Rng::seed_from_u64(seed),
            phase: WalkPhase::Standing,
            now: f64::NEG_INFINITY,
            active: None,
            pending: None,
            next_score: None,
            last_executed: None,
            log: Vec::new(),
            transitions: Vec::new(),
        })
    }

    pub fn phase(&self) -> WalkPhase {
        self.phase
    }

    pub fn timing(&self) -> &TimingConfig {
        &self.timing
    }

    pub fn log(&self) -> &[SyncRecord] {
        &self.log
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Side of the foot currently in transfer or swing.
    pub fn stepping_side(&self) -> Option<FootSide> {
        self.active.map(|a| a.target.side)
    }

    pub fn current_target(&self) -> Option<FootstepCommand> {
        self.active.map(|a| a.target)
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    /// Stability score used for the next transfer that begins.
    pub fn set_stability_score(&mut self, score: f64) {
        self.next_score = Some(score);
    }

    fn advance_clock(&mut self, now: f64) -> Result<()> {
        if now.is_nan() {
            return Err(Error::NanTime);
        }
        if now < self.now {
            return Err(Error::NonMonotonicTime { last: self.now, now });
        }
        self.now = now;
        Ok(())
    }

    fn transition(&mut self, time: f64, to: WalkPhase) {
        debug_assert!(self.phase.can_transition_to(to));
        self.transitions.push(Transition {
            time,
            from: self.phase,
            to,
        });
        self.phase = to;
    }

    fn begin_transfer(&mut self, at: f64, target: FootstepCommand, user_step_start: f64, command_sent: f64) {
        let score = match self.next_score.take() {
            Some(s) => s,
            None => self.rng.random::<f64>(),
        };
        self.active = Some(ActiveStep {
            target,
            user_step_start,
            command_sent,
            transfer_start: at,
            transfer_duration: self.timing.transfer_for_score(score),
            stability_score: score,
            swing_start: None,
        });
        self.transition(at, WalkPhase::Transfer);
    }

    /// Sends a footstep command for the user step that began at `user_step_start`.
    ///
    /// While a step is in progress, commands for the swinging side replace its
    /// target and commands for the support side are rejected.
    pub fn enqueue_footstep(
        &mut self,
        command: FootstepCommand,
        user_step_start: f64,
        now: f64,
    ) -> Result<EnqueueStatus> {
        self.tick(now)?;
        match self.active.as_mut() {
            None => {
                if self.last_executed == Some((command.side, user_step_start)) {
                    return Ok(EnqueueStatus::AlreadyExecuted);
                }
                self.begin_transfer(now, command, user_step_start, now);
                Ok(EnqueueStatus::Started)
            }
            Some(active) if active.target.side == command.side => {
                active.target = command;
                Ok(EnqueueStatus::Replaced)
            }
            Some(_) => Err(Error::SupportFootBusy(command.side)),
        }
    }

    /// Holds one command to start right after the current touchdown. A newer
    /// command overwrites it; the send time of the first command for the same
    /// user step is kept.
    pub fn queue_next(&mut self, command: FootstepCommand, user_step_start: f64, now: f64) -> Result<EnqueueStatus> {
        self.tick(now)?;
        if self.active.is_none() {
            return self.enqueue_footstep(command, user_step_start, now);
        }
        let command_sent = match self.pending {
            Some(p) if p.target.side == command.side && p.user_step_start == user_step_start => p.command_sent,
            _ => now,
        };
        self.pending = Some(PendingStep {
            target: command,
            user_step_start,
            command_sent,
        });
        Ok(EnqueueStatus::Queued)
    }

    /// Advances the clock, applying every transition that falls due at its
    /// exact event time.
    pub fn tick(&mut self, now: f64) -> Result<Vec<Transition>> {
        self.advance_clock(now)?;
        let first = self.transitions.len();
        loop {
            let Some(active) = self.active else { break };
            match self.phase {
                WalkPhase::Transfer => {
                    let due = active.transfer_start + active.transfer_duration;
                    if now < due {
                        break;
                    }
                    self.active = Some(ActiveStep {
                        swing_start: Some(due),
                        ..active
                    });
                    self.transition(due, WalkPhase::Swing);
                }
                WalkPhase::Swing => {
                    let swing_start = active.swing_start.expect("swing without start time");
                    let due = swing_start + self.timing.swing_duration;
                    if now < due {
                        break;
                    }
                    self.log.push(SyncRecord {
                        step: self.log.len(),
                        side: active.target.side,
                        user_step_start: active.user_step_start,
                        command_sent: active.command_sent,
                        transfer_start: active.transfer_start,
                        swing_start,
                        touchdown: due,
                        transfer_duration: active.transfer_duration,
                        stability_score: active.stability_score,
                        footstep: active.target,
                    });
                    self.last_executed = Some((active.target.side, active.user_step_start));
                    self.active = None;
                    match self.pending.take() {
                        Some(p) if self.last_executed != Some((p.target.side, p.user_step_start)) => {
                            self.begin_transfer(due, p.target, p.user_step_start, p.command_sent);
                        }
                        _ => self.transition(due, WalkPhase::Standing),
                    }
                }
                WalkPhase::Standing => break,
            }
        }
        Ok(self.transitions[first..].to_vec())
    }

    /// Runs the clock forward until every started and pending step has landed.
    pub fn finish(&mut self) -> Result<()> {
        while let Some(active) = self.active {
            let due = active.swing_start.unwrap_or(active.transfer_start + active.transfer_duration)
                + self.timing.swing_duration;
            self.tick(due.max(self.now))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLatency {
    pub step: usize,
    /// User step start to command send.
    pub command: f64,
    /// User step start to robot swing start.
    pub swing_start: f64,
    /// User step start to robot touchdown.
    pub touchdown: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncStats {
    pub steps: Vec<StepLatency>,
    pub mean_swing_start: f64,
    pub max_swing_start: f64,
    pub mean_touchdown: f64,
    pub max_touchdown: f64,
}

pub fn measure_sync(log: &[SyncRecord]) -> Result<SyncStats> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let steps: Vec<StepLatency> = log
        .iter()
        .map(|r| StepLatency {
            step: r.step,
            command: r.command_sent - r.user_step_start,
            swing_start: r.swing_start - r.user_step_start,
            touchdown: r.touchdown - r.user_step_start,
        })
        .collect();
    let n = steps.len() as f64;
    let fold = |f: fn(&StepLatency) -> f64| {
        let (sum, max) = steps
            .iter()
            .map(f)
            .fold((0.0, f64::NEG_INFINITY), |(s, m), v| (s + v, m.max(v)));
        (sum / n, max)
    };
    let (mean_swing_start, max_swing_start) = fold(|s| s.swing_start);
    let (mean_touchdown, max_touchdown) = fold(|s| s.touchdown);
    Ok(SyncStats {
        steps,
        mean_swing_start,
        max_swing_start,
        mean_touchdown,
        max_touchdown,
    })
}
