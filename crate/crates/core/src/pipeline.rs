//! End-to-end batch stages: depth frames to a world map, footstep
//! adjustment against a map, and scenario replay through retargeting and
//! the walk simulator.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::geometry::FootstepCommand;
use crate::heightmap::io::{decode_depth, DepthSidecar, PoseRecord};
use crate::heightmap::{extract_local, local_frame_pose, CameraIntrinsics, DepthFrame, GlobalMap, HeightMap};
use crate::optimizer::{optimize, SearchSpec};
use crate::records::{AdjustRecord, AdjustStatus, TrackerRecord, TrackerStream};
use crate::retarget::{Retargeter, StepEvent};
use crate::synthetic::StreamSample;
use crate::walksim::{measure_sync, SyncLog, SyncStats, WalkSim};
use crate::{Error, Result};

/// A depth frame loaded from disk together with the intrinsics that apply to it.
#[derive(Debug, Clone)]
pub struct LoadedFrame {
    pub name: String,
    pub frame: DepthFrame,
    pub intrinsics: CameraIntrinsics,
}

fn input_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("{}: {e}", path.display()))
}

/// Loads every `<name>.bin` in `dir` with its `<name>.json` sidecar, sorted by
/// `(timestamp, name)`. Poses from `poses` (keyed by frame name) override the
/// sidecar poses; `intrinsics` applies to frames whose sidecar has none.
pub fn load_depth_dir(
    dir: &Path,
    intrinsics: Option<&CameraIntrinsics>,
    poses: Option<&BTreeMap<String, PoseRecord>>,
) -> Result<Vec<LoadedFrame>> {
    let entries = std::fs::read_dir(dir).map_err(|e| input_error(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| input_error(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "bin") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                names.push(stem.to_string());
            }
        }
    }
    let mut frames = Vec::with_capacity(names.len());
    for name in names {
        let sidecar_path = dir.join(format!("{name}.json"));
        let text = std::fs::read_to_string(&sidecar_path).map_err(|e| input_error(&sidecar_path, e))?;
        let sidecar: DepthSidecar = serde_json::from_str(&text).map_err(|e| input_error(&sidecar_path, e))?;
        let intr = sidecar
            .intrinsics
            .or(intrinsics.copied())
            .ok_or_else(|| input_error(&sidecar_path, "no intrinsics in sidecar or on the command line"))?;
        intr.validate()?;
        let bin_path = dir.join(format!("{name}.bin"));
        let bytes = std::fs::read(&bin_path).map_err(|e| input_error(&bin_path, e))?;
        let pose = poses.and_then(|p| p.get(&name)).unwrap_or(&sidecar.camera_pose).to_pose()?;
        let frame = DepthFrame {
            timestamp: sidecar.timestamp,
            depth: decode_depth(&bytes)?,
            camera_pose: pose,
        };
        frame.check(&intr)?;
        frames.push(LoadedFrame {
            name,
            frame,
            intrinsics: intr,
        });
    }
    frames.sort_by(|a, b| a.frame.timestamp.total_cmp(&b.frame.timestamp).then_with(|| a.name.cmp(&b.name)));
    Ok(frames)
}

/// Fuses frames in order into the configured world grid and returns the
/// filtered map.
pub fn build_map(frames: &[LoadedFrame], config: &PipelineConfig) -> Result<HeightMap> {
    if frames.is_empty() {
        return Err(Error::InvalidInput("no depth frames to fuse".into()));
    }
    let g = &config.mapping.global_grid;
    let mut global = GlobalMap::new(g.width, g.height, g.resolution, g.origin_x, g.origin_y, config.fusion.clone());
    for f in frames {
        let local = extract_local(&f.frame, &f.intrinsics, &config.mapping.local_grid)?;
        global.integrate(&local, &local_frame_pose(&f.frame))?;
    }
    Ok(global.snapshot())
}

/// Moves `input` to the best nearby pose on `map`.
pub fn adjust_footstep(input: &FootstepCommand, map: &HeightMap, config: &PipelineConfig) -> AdjustRecord {
    let spec = SearchSpec::for_footstep(input, map, config.search);
    match optimize(&spec, map, &config.foot, &config.weights) {
        Ok(best) => {
            let plane = best.planarity.plane;
            AdjustRecord {
                status: AdjustStatus::Ok,
                input: *input,
                footstep: Some(best.to_footstep(input.side)),
                total_cost: Some(best.total_cost),
                breakdown: Some(best.breakdown),
                sample_heights: Some(best.planarity.sample_heights.map(|h| h.is_finite().then_some(h))),
                max_deviation: plane.map(|p| p.max_deviation),
                max_slope: plane.map(|p| p.max_slope),
            }
        }
        Err(_) => AdjustRecord {
            status: AdjustStatus::NoSteppableRegion,
            input: *input,
            footstep: None,
            total_cost: None,
            breakdown: None,
            sample_heights: None,
            max_deviation: None,
            max_slope: None,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ScenarioEvent {
    Tracker(TrackerRecord),
    /// Stability score for the next robot transfer.
    Stability { t: f64, score: f64 },
}

impl ScenarioEvent {
    pub fn time(&self) -> f64 {
        match self {
            ScenarioEvent::Tracker(r) => r.t,
            ScenarioEvent::Stability { t, .. } => *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Overrides the configuration seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// HM1 map to adjust footsteps against, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    /// Tracker events for a synthetic stream, with stability scores inserted
    /// just before the samples at the given times.
    pub fn from_stream(stream: &[StreamSample], scores: &[(f64, f64)]) -> Self {
        let mut events = Vec::with_capacity(stream.len() + scores.len());
        let mut pending = scores.iter().peekable();
        for s in stream {
            while let Some(&&(t, score)) = pending.peek() {
                if t > s.sample.time {
                    break;
                }
                events.push(ScenarioEvent::Stability { t, score });
                pending.next();
            }
            events.push(ScenarioEvent::Tracker(TrackerRecord::from_sample(s.side, &s.sample)));
        }
        events.extend(pending.map(|&(t, score)| ScenarioEvent::Stability { t, score }));
        Self {
            seed: None,
            map: None,
            events,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub log: SyncLog,
    /// `None` when no step was executed.
    pub stats: Option<SyncStats>,
    pub commands_sent: usize,
    pub commands_queued: usize,
    pub adjust_failures: usize,
}

/// Replays `scenario` through retargeting, optional terrain adjustment and
/// the walk simulator.
pub fn simulate(scenario: &Scenario, config: &PipelineConfig, map: Option<&HeightMap>) -> Result<SimulationOutput> {
    config.validate()?;
    let mut retargeter = Retargeter::new(config.retarget);
    let mut sim = WalkSim::new(config.timing, scenario.seed.unwrap_or(config.seed))?;
    let mut stream = TrackerStream::new();
    let mut last_time = f64::NEG_INFINITY;
    let (mut commands_sent, mut commands_queued, mut adjust_failures) = (0, 0, 0);

    for (i, event) in scenario.events.iter().enumerate() {
        let t = event.time();
        if !(t >= last_time) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("event time {t} precedes {last_time}"),
            });
        }
        last_time = t;
        sim.tick(t)?;
        let record = match event {
            ScenarioEvent::Stability { score, .. } => {
                sim.set_stability_score(*score);
                continue;
            }
            ScenarioEvent::Tracker(r) => r,
        };
        let sample = stream.accept(record).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let update = retargeter.push(record.side, &sample)?;
        let (Some(raw), Some(step_start)) = (update.footstep, update.step_start) else {
            continue;
        };
        let command = match map {
            Some(m) => {
                let adjusted = adjust_footstep(&raw, m, config);
                adjusted.footstep.unwrap_or_else(|| {
                    adjust_failures += 1;
                    raw
                })
            }
            None => raw,
        };
        if update.event == StepEvent::Finished {
            retargeter.set_robot_foot(command);
        }
        match sim.enqueue_footstep(command, step_start, t) {
            Ok(_) => commands_sent += 1,
            Err(Error::SupportFootBusy(_)) => {
                sim.queue_next(command, step_start, t)?;
                commands_queued += 1;
            }
            Err(e) => return Err(e),
        }
    }
    sim.finish()?;
    let log = sim.log().to_vec();
    let stats = measure_sync(&log).ok();
    Ok(SimulationOutput {
        log,
        stats,
        commands_sent,
        commands_queued,
        adjust_failures,
    })
}
