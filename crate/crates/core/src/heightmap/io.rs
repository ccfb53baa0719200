//! File formats: `HM1` text height maps and little-endian `f32` depth frames
//! with JSON sidecars.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::camera::CameraIntrinsics;
use super::extract::DepthFrame;
use super::{HeightMap, MapFrame};
use crate::geometry::Pose3;
use crate::{Error, Result};

/// Serializes a map as `HM1 <width> <height> <resolution> <origin_x> <origin_y>`
/// followed by one line per grid row (row 0 first). Values use the shortest
/// round-trip decimal form; unknown cells are `nan`.
pub fn write_hm1(map: &HeightMap) -> String {
    let mut out = String::with_capacity(map.heights.len() * 8 + 64);
    let _ = writeln!(
        out,
        "HM1 {} {} {} {} {}",
        map.width, map.height, map.resolution, map.origin_x, map.origin_y
    );
    for row in map.heights.chunks(map.width.max(1)).take(map.height) {
        let mut first = true;
        for &h in row {
            if !first {
                out.push(' ');
            }
            first = false;
            if h.is_nan() {
                out.push_str("nan");
            } else {
                let _ = write!(out, "{h}");
            }
        }
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    if token.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    token
        .parse::<f64>()
        .map_err(|e| parse_err(line, format!("bad number {token:?}: {e}")))
}

/// Parses an `HM1` document into a world-frame map.
pub fn parse_hm1(text: &str) -> Result<HeightMap> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty height map"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "HM1" {
        return Err(parse_err(1, "expected `HM1 <width> <height> <resolution> <origin_x> <origin_y>`"));
    }
    let width: usize = fields[1].parse().map_err(|_| parse_err(1, "bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| parse_err(1, "bad height"))?;
    let resolution = parse_f64(fields[3], 1)?;
    let origin_x = parse_f64(fields[4], 1)?;
    let origin_y = parse_f64(fields[5], 1)?;
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(parse_err(1, "resolution must be positive"));
    }

    let mut heights = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if rows == height {
            return Err(parse_err(line_no, "more rows than declared"));
        }
        let before = heights.len();
        for token in line.split_whitespace() {
            let h = parse_f64(token, line_no)?;
            if h.is_infinite() {
                return Err(parse_err(line_no, "infinite height"));
            }
            heights.push(h);
        }
        if heights.len() - before != width {
            return Err(parse_err(
                line_no,
                format!("expected {width} values, found {}", heights.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != height {
        return Err(parse_err(text.lines().count(), format!("expected {height} rows, found {rows}")));
    }
    Ok(HeightMap {
        origin_x,
        origin_y,
        resolution,
        width,
        height,
        heights,
        frame: MapFrame::World,
    })
}

pub fn read_hm1(path: &Path) -> anyhow::Result<HeightMap> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_hm1(&text)?)
}

/// Camera pose as stored in sidecars: position plus `[w, x, y, z]` quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
}

impl From<&Pose3> for PoseRecord {
    fn from(pose: &Pose3) -> Self {
        let q = pose.orientation.quaternion();
        Self {
            position: [pose.position.x, pose.position.y, pose.position.z],
            orientation: [q.w, q.i, q.j, q.k],
        }
    }
}

impl PoseRecord {
    pub fn to_pose(&self) -> Result<Pose3> {
        let [w, x, y, z] = self.orientation;
        let q = Quaternion::new(w, x, y, z);
        if !(q.norm() > 1e-9) || self.position.iter().chain(self.orientation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("invalid camera pose".into()));
        }
        Ok(Pose3::new(
            Vector3::from(self.position),
            UnitQuaternion::from_quaternion(q),
        ))
    }
}

/// JSON sidecar next to each `<name>.bin` depth frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSidecar {
    pub timestamp: f64,
    pub camera_pose: PoseRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<CameraIntrinsics>,
}

pub fn encode_depth(depth: &[f32]) -> Vec<u8> {
    depth.iter().flat_map(|d| d.to_le_bytes()).collect()
}

pub fn decode_depth(bytes: &[u8]) -> Result<Vec<f32>> {
    if bytes.len() % 4 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "depth payload of {} bytes is not a multiple of 4",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Writes `<dir>/<name>.bin` and `<dir>/<name>.json`.
pub fn write_depth_frame(
    dir: &Path,
    name: &str,
    frame: &DepthFrame,
    intrinsics: Option<&CameraIntrinsics>,
) -> anyhow::Result<()> {
    std::fs::write(dir.join(format!("{name}.bin")), encode_depth(&frame.depth))?;
    let sidecar = DepthSidecar {
        timestamp: frame.timestamp,
        camera_pose: PoseRecord::from(&frame.camera_pose),
        intrinsics: intrinsics.copied(),
    };
    std::fs::write(
        dir.join(format!("{name}.json")),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(())
}
