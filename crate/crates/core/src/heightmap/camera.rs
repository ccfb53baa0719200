use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pinhole intrinsics of a depth camera (optical frame: x right, y down, z forward).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        let focal_ok = self.fx > 0.0 && self.fy > 0.0;
        let center_ok = self.cx >= 0.0
            && self.cy >= 0.0
            && self.cx <= self.width as f64
            && self.cy <= self.height as f64;
        if focal_ok && center_ok && self.width > 0 && self.height > 0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid camera intrinsics {self:?}")))
        }
    }
}

/// Camera-frame point to pixel coordinates.
pub fn project(point: &Vector3<f64>, intr: &CameraIntrinsics) -> Result<(f64, f64)> {
    if !(point.z > 0.0) {
        return Err(Error::BehindCamera(point.z));
    }
    Ok((
        intr.fx * point.x / point.z + intr.cx,
        intr.fy * point.y / point.z + intr.cy,
    ))
}

/// Pixel coordinates plus depth back to a camera-frame point.
pub fn unproject(u: f64, v: f64, depth: f64, intr: &CameraIntrinsics) -> Result<Vector3<f64>> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(Error::InvalidDepth(depth));
    }
    Ok(Vector3::new(
        depth * (u - intr.cx) / intr.fx,
        depth * (v - intr.cy) / intr.fy,
        depth,
    ))
}
