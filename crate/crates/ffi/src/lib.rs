//! C ABI over `footstep-core`.
//!
//! Objects are opaque handles created by `fs_*_new` and released by the
//! matching `fs_*_free`. Every fallible call returns an [`FsStatus`]; the
//! message for the most recent failure on the calling thread is available
//! from [`fs_last_error_message`]. Results are written through out-pointers
//! only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use footstep_core::config::PipelineConfig;
use footstep_core::geometry::{clamp_footstep, FootSide, FootstepCommand, Pose2, Pose3, SafetyLimits};
use footstep_core::heightmap::io::parse_hm1;
use footstep_core::heightmap::{HeightMap, MapFrame};
use footstep_core::nalgebra::Vector3;
use footstep_core::optimizer::{optimize, SearchSpec};
use footstep_core::retarget::{RetargetConfig, Retargeter, StepEvent, TrackerSample};
use footstep_core::swing::{plan_swing, SwingParams, SwingSpec, SwingTrajectory};
use footstep_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoSteppableRegion = 3,
    ParseError = 4,
    NonMonotonicTime = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsFootSide {
    Left = 0,
    Right = 1,
}

impl From<FsFootSide> for FootSide {
    fn from(side: FsFootSide) -> Self {
        match side {
            FsFootSide::Left => FootSide::Left,
            FsFootSide::Right => FootSide::Right,
        }
    }
}

impl From<FootSide> for FsFootSide {
    fn from(side: FootSide) -> Self {
        match side {
            FootSide::Left => FsFootSide::Left,
            FootSide::Right => FsFootSide::Right,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsPose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsFootstep {
    pub side: FsFootSide,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub height: f64,
}

impl From<FootstepCommand> for FsFootstep {
    fn from(c: FootstepCommand) -> Self {
        Self {
            side: c.side.into(),
            x: c.x,
            y: c.y,
            yaw: c.yaw,
            height: c.height,
        }
    }
}

impl From<&FsFootstep> for FootstepCommand {
    fn from(c: &FsFootstep) -> Self {
        FootstepCommand::new(c.side.into(), Pose2::new(c.x, c.y, c.yaw), c.height)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsSafetyLimits {
    pub max_stride: f64,
    pub max_yaw: f64,
    pub min_lateral_separation: f64,
    pub max_inward_yaw: f64,
}

impl From<&FsSafetyLimits> for SafetyLimits {
    fn from(l: &FsSafetyLimits) -> Self {
        SafetyLimits {
            max_stride: l.max_stride,
            max_yaw: l.max_yaw,
            min_lateral_separation: l.min_lateral_separation,
            max_inward_yaw: l.max_inward_yaw,
        }
    }
}

/// One tracker reading: world position, yaw, linear velocity and yaw rate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsTrackerSample {
    pub time: f64,
    pub position: [f64; 3],
    pub yaw: f64,
    pub velocity: [f64; 3],
    pub yaw_rate: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStepEvent {
    None = 0,
    Started = 1,
    Finished = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsRetargetOutput {
    pub event: FsStepEvent,
    /// Non-zero when `stride`, `yaw` and `landing_factor` are set.
    pub has_estimate: u8,
    pub stride: f64,
    pub yaw: f64,
    pub landing_factor: f64,
    /// Non-zero when `footstep` is set.
    pub has_footstep: u8,
    pub footstep: FsFootstep,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsSwingSample {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub yaw: f64,
    /// Non-zero when the requested time was clamped into the swing.
    pub clamped: u8,
}

/// Elevation grid (opaque).
pub struct FsHeightMap {
    inner: HeightMap,
}

/// Sampled swing trajectory (opaque).
pub struct FsSwing {
    inner: SwingTrajectory,
}

/// Two-foot step retargeter (opaque).
pub struct FsRetargeter {
    inner: Retargeter,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FsStatus {
    match err {
        Error::NoSteppableRegion => FsStatus::NoSteppableRegion,
        Error::Parse { .. } => FsStatus::ParseError,
        Error::NonMonotonicTime { .. } | Error::NanTime => FsStatus::NonMonotonicTime,
        _ => FsStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> FsStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn null(what: &str) -> FsStatus {
    set_error(format!("{what} is null"));
    FsStatus::NullPointer
}

fn guard(f: impl FnOnce() -> FsStatus) -> FsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            FsStatus::Panic
        }
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn fs_default_limits() -> FsSafetyLimits {
    let l = SafetyLimits::default();
    FsSafetyLimits {
        max_stride: l.max_stride,
        max_yaw: l.max_yaw,
        min_lateral_separation: l.min_lateral_separation,
        max_inward_yaw: l.max_inward_yaw,
    }
}

/// Clamps a stance-frame footstep for `side` into the safety envelope.
///
/// # Safety
/// `limits` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fs_clamp_footstep(
    limits: *const FsSafetyLimits,
    side: FsFootSide,
    candidate: FsPose2,
    out: *mut FsPose2,
) -> FsStatus {
    guard(|| {
        let (Some(limits), Some(out)) = (limits.as_ref(), out.as_mut()) else {
            return null("limits or out");
        };
        let limits = SafetyLimits::from(limits);
        if let Err(e) = limits.validate() {
            return fail(e);
        }
        if ![candidate.x, candidate.y, candidate.yaw].iter().all(|v| v.is_finite()) {
            return fail(Error::InvalidInput("candidate is not finite".into()));
        }
        let c = clamp_footstep(&Pose2::new(candidate.x, candidate.y, candidate.yaw), side.into(), &limits);
        *out = FsPose2 {
            x: c.x,
            y: c.y,
            yaw: c.yaw,
        };
        FsStatus::Ok
    })
}

/// Creates an all-unknown (NaN) world map with `width × height` cells.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_heightmap_new(
    width: usize,
    height: usize,
    resolution: f64,
    origin_x: f64,
    origin_y: f64,
    out: *mut *mut FsHeightMap,
) -> FsStatus {
    guard(|| {
        let Some(out) = out.as_mut() else {
            return null("out");
        };
        let map = HeightMap::new(width, height, resolution, origin_x, origin_y, MapFrame::World);
        if let Err(e) = map.validate() {
            return fail(e);
        }
        *out = Box::into_raw(Box::new(FsHeightMap { inner: map }));
        FsStatus::Ok
    })
}

/// Parses a map from HM1 text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_heightmap_from_hm1(text: *const c_char, out: *mut *mut FsHeightMap) -> FsStatus {
    guard(|| {
        if text.is_null() {
            return null("text");
        }
        let Some(out) = out.as_mut() else {
            return null("out");
        };
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(Error::InvalidInput("text is not UTF-8".into()));
        };
        match parse_hm1(text) {
            Ok(map) => {
                *out = Box::into_raw(Box::new(FsHeightMap { inner: map }));
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `map` must come from `fs_heightmap_new`/`fs_heightmap_from_hm1` and not be
/// used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fs_heightmap_free(map: *mut FsHeightMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// # Safety
/// `map` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_heightmap_set(map: *mut FsHeightMap, ix: usize, iy: usize, value: f64) -> FsStatus {
    guard(|| {
        let Some(map) = map.as_mut() else {
            return null("map");
        };
        if ix >= map.inner.width || iy >= map.inner.height {
            set_error(format!("cell ({ix}, {iy}) outside the map"));
            return FsStatus::OutOfRange;
        }
        map.inner.set(ix, iy, value);
        FsStatus::Ok
    })
}

/// # Safety
/// `map` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_heightmap_get(map: *const FsHeightMap, ix: usize, iy: usize, out: *mut f64) -> FsStatus {
    guard(|| {
        let (Some(map), Some(out)) = (map.as_ref(), out.as_mut()) else {
            return null("map or out");
        };
        if ix >= map.inner.width || iy >= map.inner.height {
            set_error(format!("cell ({ix}, {iy}) outside the map"));
            return FsStatus::OutOfRange;
        }
        *out = map.inner.get(ix, iy);
        FsStatus::Ok
    })
}

/// Moves `target` to the lowest-cost nearby pose on `map` using the default
/// weights, foot size and search window. `out_cost` may be null.
///
/// # Safety
/// `map` must be a live handle; `target` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fs_optimize_footstep(
    map: *const FsHeightMap,
    target: *const FsFootstep,
    out: *mut FsFootstep,
    out_cost: *mut f64,
) -> FsStatus {
    guard(|| {
        let (Some(map), Some(target), Some(out)) = (map.as_ref(), target.as_ref(), out.as_mut()) else {
            return null("map, target or out");
        };
        let config = PipelineConfig::default();
        let command = FootstepCommand::from(target);
        let spec = SearchSpec::for_footstep(&command, &map.inner, config.search);
        match optimize(&spec, &map.inner, &config.foot, &config.weights) {
            Ok(best) => {
                *out = best.to_footstep(command.side).into();
                if let Some(c) = out_cost.as_mut() {
                    *c = best.total_cost;
                }
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Plans a swing from `start` to `goal` (xyz) with the given clearance and
/// duration and default waypoint fractions.
///
/// # Safety
/// `start` and `goal` must point to three doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_swing_new(
    start: *const f64,
    goal: *const f64,
    swing_height: f64,
    duration: f64,
    out: *mut *mut FsSwing,
) -> FsStatus {
    guard(|| {
        if start.is_null() || goal.is_null() {
            return null("start or goal");
        }
        let Some(out) = out.as_mut() else {
            return null("out");
        };
        let s = std::slice::from_raw_parts(start, 3);
        let g = std::slice::from_raw_parts(goal, 3);
        let params = SwingParams {
            swing_height,
            duration,
            ..Default::default()
        };
        let spec = SwingSpec::new(Vector3::new(s[0], s[1], s[2]), Vector3::new(g[0], g[1], g[2]), params);
        match plan_swing(&spec) {
            Ok(traj) => {
                *out = Box::into_raw(Box::new(FsSwing { inner: traj }));
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `swing` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_swing_sample(swing: *const FsSwing, t: f64, out: *mut FsSwingSample) -> FsStatus {
    guard(|| {
        let (Some(swing), Some(out)) = (swing.as_ref(), out.as_mut()) else {
            return null("swing or out");
        };
        match swing.inner.sample(t) {
            Ok(s) => {
                *out = FsSwingSample {
                    position: s.position.into(),
                    velocity: s.velocity.into(),
                    yaw: s.yaw,
                    clamped: u8::from(s.clamped),
                };
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `swing` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_swing_duration(swing: *const FsSwing) -> f64 {
    swing.as_ref().map_or(f64::NAN, |s| s.inner.duration)
}

/// # Safety
/// `swing` must come from `fs_swing_new` and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn fs_swing_free(swing: *mut FsSwing) {
    if !swing.is_null() {
        drop(Box::from_raw(swing));
    }
}

/// Retargeter with default settings.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_retargeter_new(out: *mut *mut FsRetargeter) -> FsStatus {
    guard(|| {
        let Some(out) = out.as_mut() else {
            return null("out");
        };
        *out = Box::into_raw(Box::new(FsRetargeter {
            inner: Retargeter::new(RetargetConfig::default()),
        }));
        FsStatus::Ok
    })
}

/// Feeds one tracker sample. Times must increase strictly per foot.
///
/// # Safety
/// `retargeter` must be a live handle; `sample` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fs_retargeter_push(
    retargeter: *mut FsRetargeter,
    side: FsFootSide,
    sample: *const FsTrackerSample,
    out: *mut FsRetargetOutput,
) -> FsStatus {
    guard(|| {
        let (Some(r), Some(sample), Some(out)) = (retargeter.as_mut(), sample.as_ref(), out.as_mut()) else {
            return null("retargeter, sample or out");
        };
        let s = TrackerSample {
            time: sample.time,
            pose: Pose3::from_position_yaw(Vector3::from(sample.position), sample.yaw),
            linear_velocity: Vector3::from(sample.velocity),
            yaw_rate: sample.yaw_rate,
        };
        match r.inner.push(side.into(), &s) {
            Ok(u) => {
                let est = u.estimate.unwrap_or_default();
                let side_fs = FootstepCommand::new(side.into(), Pose2::identity(), 0.0);
                *out = FsRetargetOutput {
                    event: match u.event {
                        StepEvent::None => FsStepEvent::None,
                        StepEvent::Started => FsStepEvent::Started,
                        StepEvent::Finished => FsStepEvent::Finished,
                    },
                    has_estimate: u8::from(u.estimate.is_some()),
                    stride: est.stride,
                    yaw: est.yaw,
                    landing_factor: est.landing_factor,
                    has_footstep: u8::from(u.footstep.is_some()),
                    footstep: u.footstep.unwrap_or(side_fs).into(),
                };
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `retargeter` must come from `fs_retargeter_new` and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fs_retargeter_free(retargeter: *mut FsRetargeter) {
    if !retargeter.is_null() {
        drop(Box::from_raw(retargeter));
    }
}
