use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::{project, unproject, CameraIntrinsics};
use super::{HeightMap, MapFrame};
use crate::geometry::{Pose2, Pose3};
use crate::{Error, Result};

/// Half-width of the square pixel window averaged around each projected cell.
pub const PIXEL_WINDOW_RADIUS: i64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub timestamp: f64,
    /// Row-major depths in meters; NaN marks invalid pixels.
    pub depth: Vec<f32>,
    /// Optical frame in world.
    pub camera_pose: Pose3,
}

impl DepthFrame {
    pub fn check(&self, intr: &CameraIntrinsics) -> Result<()> {
        if self.depth.len() != intr.width * intr.height {
            return Err(Error::DimensionMismatch(format!(
                "depth frame has {} pixels, intrinsics expect {}x{}",
                self.depth.len(),
                intr.width,
                intr.height
            )));
        }
        Ok(())
    }

    fn depth_at(&self, intr: &CameraIntrinsics, u: i64, v: i64) -> Option<f64> {
        if u < 0 || v < 0 || u >= intr.width as i64 || v >= intr.height as i64 {
            return None;
        }
        let d = f64::from(self.depth[v as usize * intr.width + u as usize]);
        (d > 0.0 && d.is_finite()).then_some(d)
    }
}

/// Local grid layout. Cell `(0, 0)` sits at `(origin_x, origin_y)` in the
/// yaw-aligned local frame; cells are projected into the image at
/// `reference_height` (world z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin_x: f64,
    pub origin_y: f64,
    #[serde(default)]
    pub reference_height: f64,
}

impl GridSpec {
    /// Grid of `width × height` cells centered on `(center_x, center_y)`.
    pub fn centered(width: usize, height: usize, resolution: f64, center_x: f64, center_y: f64) -> Self {
        Self {
            width,
            height,
            resolution,
            origin_x: center_x - (width as f64 - 1.0) / 2.0 * resolution,
            origin_y: center_y - (height as f64 - 1.0) / 2.0 * resolution,
            reference_height: 0.0,
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::centered(100, 100, super::DEFAULT_RESOLUTION, 0.0, 0.0)
    }
}

/// Heading of the sensor: the optical axis projected onto the ground plane,
/// or the image "up" direction when looking straight down.
pub fn sensor_heading(pose: &Pose3) -> f64 {
    let forward = pose.orientation * Vector3::z();
    if forward.xy().norm() > 1e-6 {
        return forward.y.atan2(forward.x);
    }
    let up = pose.orientation * -Vector3::y();
    up.y.atan2(up.x)
}

/// Pose of the yaw-aligned local frame in the world.
pub fn local_frame_pose(frame: &DepthFrame) -> Pose2 {
    let p = frame.camera_pose.position;
    Pose2::new(p.x, p.y, sensor_heading(&frame.camera_pose))
}

/// Builds a local elevation grid: each cell center is projected into the
/// image, the valid depth pixels in a 3×3 window are unprojected to world
/// points and the cell takes the mean of their heights. Cells are evaluated
/// independently.
pub fn extract_local(frame: &DepthFrame, intr: &CameraIntrinsics, grid: &GridSpec) -> Result<HeightMap> {
    frame.check(intr)?;
    let local_to_world = local_frame_pose(frame);
    let camera = frame.camera_pose;
    let inverse_rotation = camera.orientation.inverse();
    let mut map = HeightMap::new(
        grid.width,
        grid.height,
        grid.resolution,
        grid.origin_x,
        grid.origin_y,
        MapFrame::LocalYawAligned,
    );

    let cell_height = |index: usize| -> f64 {
        let (ix, iy) = (index % grid.width, index / grid.width);
        let local = Vector2::new(
            grid.origin_x + ix as f64 * grid.resolution,
            grid.origin_y + iy as f64 * grid.resolution,
        );
        let world = local_to_world.transform_point(local);
        let in_camera = inverse_rotation * (Vector3::new(world.x, world.y, grid.reference_height) - camera.position);
        let Ok((u, v)) = project(&in_camera, intr) else {
            return f64::NAN;
        };
        let (uc, vc) = (u.round() as i64, v.round() as i64);
        let mut sum = 0.0;
        let mut count = 0usize;
        for dv in -PIXEL_WINDOW_RADIUS..=PIXEL_WINDOW_RADIUS {
            for du in -PIXEL_WINDOW_RADIUS..=PIXEL_WINDOW_RADIUS {
                let (pu, pv) = (uc + du, vc + dv);
                let Some(depth) = frame.depth_at(intr, pu, pv) else {
                    continue;
                };
                let Ok(point) = unproject(pu as f64, pv as f64, depth, intr) else {
                    continue;
                };
                sum += camera.transform_point(&point).z;
                count += 1;
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    };

    map.heights
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, h)| *h = cell_height(i));
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{downward_camera, render_depth};
    use approx::assert_abs_diff_eq;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics { fx: 200.0, fy: 200.0, cx: 80.0, cy: 60.0, width: 160, height: 120 }
    }

    #[test]
    fn flat_floor_is_flat() {
        let k = intr();
        let frame = DepthFrame {
            timestamp: 0.0,
            depth: render_depth(&downward_camera(0.0, 0.0, 1.0, 0.0), &k, |_, _| 0.0),
            camera_pose: downward_camera(0.0, 0.0, 1.0, 0.0),
        };
        let grid = GridSpec::centered(20, 20, 0.02, 0.0, 0.0);
        let map = extract_local(&frame, &k, &grid).unwrap();
        assert_eq!(map.known_cells(), 400);
        for h in &map.heights {
            assert_abs_diff_eq!(*h, 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn invalid_frame_gives_unknown_map() {
        let k = intr();
        let frame = DepthFrame {
            timestamp: 0.0,
            depth: vec![f32::NAN; k.width * k.height],
            camera_pose: downward_camera(0.0, 0.0, 1.0, 0.0),
        };
        let map = extract_local(&frame, &k, &GridSpec::centered(10, 10, 0.02, 0.0, 0.0)).unwrap();
        assert_eq!(map.known_cells(), 0);
    }

    #[test]
    fn box_top_and_edges() {
        let k = intr();
        let in_box = |x: f64, y: f64| x.abs() <= 0.1 && y.abs() <= 0.1;
        let pose = downward_camera(0.0, 0.0, 1.0, 0.0);
        let frame = DepthFrame {
            timestamp: 0.0,
            depth: render_depth(&pose, &k, |x, y| if in_box(x, y) { 0.2 } else { 0.0 }),
            camera_pose: pose,
        };
        let mut grid = GridSpec::centered(21, 21, 0.02, 0.0, 0.0);
        grid.reference_height = 0.2;
        let map = extract_local(&frame, &k, &grid).unwrap();
        for iy in 0..21 {
            for ix in 0..21 {
                let (x, y) = map.cell_center(ix, iy);
                let h = map.get(ix, iy);
                if x.abs() <= 0.07 && y.abs() <= 0.07 {
                    assert_abs_diff_eq!(h, 0.2, epsilon = 1e-5);
                } else {
                    assert!((-1e-5..=0.2 + 1e-5).contains(&h), "cell ({x}, {y}) = {h}");
                }
            }
        }
    }

    #[test]
    fn mismatched_frame_is_rejected() {
        let frame = DepthFrame { timestamp: 0.0, depth: vec![1.0; 3], camera_pose: Pose3::identity() };
        assert!(matches!(
            extract_local(&frame, &intr(), &GridSpec::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn heading_of_tilted_and_downward_cameras() {
        let down = downward_camera(0.0, 0.0, 1.0, 0.7);
        assert_abs_diff_eq!(sensor_heading(&down), 0.7, epsilon = 1e-12);
        let tilted = crate::synthetic::tilted_camera(0.0, 0.0, 1.0, -0.4, 0.5);
        assert_abs_diff_eq!(sensor_heading(&tilted), -0.4, epsilon = 1e-12);
    }
}
