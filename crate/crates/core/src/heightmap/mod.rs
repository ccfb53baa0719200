//! Elevation grids built from depth frames and fused into a persistent world map.

pub mod camera;
pub mod extract;
pub mod fusion;
pub mod io;

use serde::{Deserialize, Serialize};

pub use camera::{project, unproject, CameraIntrinsics};
pub use extract::{extract_local, local_frame_pose, sensor_heading, DepthFrame, GridSpec};
pub use fusion::{fuse_global, postfilter, ExclusionRegion, FusionConfig, GlobalMap};

/// Default cell size (m).
pub const DEFAULT_RESOLUTION: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapFrame {
    /// Shares the world XY plane, rotated to the sensor heading.
    LocalYawAligned,
    World,
}

/// Uniform grid of heights. Cell `(ix, iy)` is centered at
/// `origin + (ix, iy) * resolution`; unknown cells are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    pub origin_x: f64,
    pub origin_y: f64,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub heights: Vec<f64>,
    pub frame: MapFrame,
}

impl HeightMap {
    /// All-unknown map.
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin_x: f64,
        origin_y: f64,
        frame: MapFrame,
    ) -> Self {
        Self {
            origin_x,
            origin_y,
            resolution,
            width,
            height,
            heights: vec![f64::NAN; width * height],
            frame,
        }
    }

    /// Map whose cells sample `f` at their centers.
    pub fn from_fn(
        width: usize,
        height: usize,
        resolution: f64,
        origin_x: f64,
        origin_y: f64,
        frame: MapFrame,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut map = Self::new(width, height, resolution, origin_x, origin_y, frame);
        for iy in 0..height {
            for ix in 0..width {
                let (x, y) = map.cell_center(ix, iy);
                map.heights[iy * width + ix] = f(x, y);
            }
        }
        map
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.heights[self.index(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, value: f64) {
        let i = self.index(ix, iy);
        self.heights[i] = value;
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin_x + ix as f64 * self.resolution,
            self.origin_y + iy as f64 * self.resolution,
        )
    }

    /// Nearest cell containing `(x, y)`, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.origin_x) / self.resolution).round();
        let fy = ((y - self.origin_y) / self.resolution).round();
        if !(fx >= 0.0 && fy >= 0.0) || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Nearest-cell height, NaN outside the grid.
    pub fn lookup(&self, x: f64, y: f64) -> f64 {
        self.cell_of(x, y)
            .map_or(f64::NAN, |(ix, iy)| self.get(ix, iy))
    }

    pub fn known_cells(&self) -> usize {
        self.heights.iter().filter(|h| !h.is_nan()).count()
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(crate::Error::InvalidConfig("map has no cells".into()));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(crate::Error::InvalidConfig("map resolution must be positive".into()));
        }
        if self.heights.len() != self.width * self.height {
            return Err(crate::Error::DimensionMismatch(format!(
                "{} heights for a {}x{} grid",
                self.heights.len(),
                self.width,
                self.height
            )));
        }
        if self.heights.iter().any(|h| h.is_infinite()) {
            return Err(crate::Error::InvalidConfig("map contains infinite heights".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lookup_outside_is_nan() {
        let map = HeightMap::from_fn(4, 3, 0.1, -0.1, 0.0, MapFrame::World, |x, _| x);
        assert!(map.lookup(-0.2, 0.0).is_nan());
        assert!(map.lookup(0.0, 0.26).is_nan());
        assert_eq!(map.lookup(0.0, 0.0), map.get(1, 0));
        assert_eq!(map.known_cells(), 12);
    }

    proptest! {
        #[test]
        fn cell_center_round_trip(ix in 0usize..500, iy in 0usize..500, ox in -10.0..10.0f64, oy in -10.0..10.0f64, res in 0.005..0.5f64) {
            let map = HeightMap::new(500, 500, res, ox, oy, MapFrame::World);
            let (x, y) = map.cell_center(ix, iy);
            prop_assert_eq!(map.cell_of(x, y), Some((ix, iy)));
        }
    }
}
