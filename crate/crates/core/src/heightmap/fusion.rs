use serde::{Deserialize, Serialize};

use super::{HeightMap, MapFrame};
use crate::geometry::Pose2;
use crate::{Error, Result};

/// World-frame rectangle whose cells are never updated (robot body).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionRegion {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl ExclusionRegion {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// Weight of the previous global value in the complementary blend.
    pub alpha: f64,
    /// Weight of the previous filtered value in the per-cell moving average.
    pub ema_alpha: f64,
    pub outlier_distance: f64,
    /// Half-width (cells) of the square neighborhood used by the outlier pass.
    pub neighborhood_radius: usize,
    pub exclusion_mask: Vec<ExclusionRegion>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            ema_alpha: 0.7,
            outlier_distance: 0.1,
            neighborhood_radius: 2,
            exclusion_mask: Vec::new(),
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |w: f64| (0.0..=1.0).contains(&w);
        if !unit(self.alpha) || !unit(self.ema_alpha) {
            return Err(Error::InvalidConfig("fusion weights must lie in [0, 1]".into()));
        }
        if self.neighborhood_radius < 1 || !(self.outlier_distance >= 0.0) {
            return Err(Error::InvalidConfig(
                "outlier filter needs radius >= 1 and a non-negative distance".into(),
            ));
        }
        Ok(())
    }

    pub fn excluded(&self, x: f64, y: f64) -> bool {
        self.exclusion_mask.iter().any(|r| r.contains(x, y))
    }
}

/// Blends a local map into the world map. Every world cell looks up its
/// nearest local cell; unknown priors adopt the measurement, known ones take
/// `alpha * prior + (1 - alpha) * measurement`. Returns the number of cells
/// written.
pub fn fuse_global(
    global: &mut HeightMap,
    local: &HeightMap,
    local_to_world: &Pose2,
    config: &FusionConfig,
) -> Result<usize> {
    if global.frame != MapFrame::World || local.frame != MapFrame::LocalYawAligned {
        return Err(Error::DimensionMismatch(
            "fusion expects a world map and a yaw-aligned local map".into(),
        ));
    }
    let mut updated = 0;
    for iy in 0..global.height {
        for ix in 0..global.width {
            let (x, y) = global.cell_center(ix, iy);
            if config.excluded(x, y) {
                continue;
            }
            let p = local_to_world.inverse_transform_point(nalgebra::Vector2::new(x, y));
            let measurement = local.lookup(p.x, p.y);
            if measurement.is_nan() {
                continue;
            }
            let prior = global.get(ix, iy);
            let value = if prior.is_nan() {
                measurement
            } else {
                config.alpha * prior + (1.0 - config.alpha) * measurement
            };
            global.set(ix, iy, value);
            updated += 1;
        }
    }
    Ok(updated)
}

/// Moving average against the previous filtered map followed by outlier
/// replacement: a cell further than `outlier_distance` from the mean of its
/// known neighbors takes that mean.
pub fn postfilter(current: &HeightMap, previous: Option<&HeightMap>, config: &FusionConfig) -> HeightMap {
    let mut smoothed = current.clone();
    if let Some(prev) = previous.filter(|p| p.heights.len() == current.heights.len()) {
        for (out, (&now, &before)) in smoothed
            .heights
            .iter_mut()
            .zip(current.heights.iter().zip(prev.heights.iter()))
        {
            *out = match (now.is_nan(), before.is_nan()) {
                (true, _) => before,
                (false, true) => now,
                (false, false) => config.ema_alpha * before + (1.0 - config.ema_alpha) * now,
            };
        }
    }

    let r = config.neighborhood_radius as i64;
    let mut filtered = smoothed.clone();
    for iy in 0..smoothed.height {
        for ix in 0..smoothed.width {
            let value = smoothed.get(ix, iy);
            if value.is_nan() {
                continue;
            }
            let mut sum = 0.0;
            let mut count = 0usize;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (ix as i64 + dx, iy as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= smoothed.width as i64 || ny >= smoothed.height as i64 {
                        continue;
                    }
                    let h = smoothed.get(nx as usize, ny as usize);
                    if !h.is_nan() {
                        sum += h;
                        count += 1;
                    }
                }
            }
            if count == 0 {
                continue;
            }
            let mean = sum / count as f64;
            if (value - mean).abs() > config.outlier_distance {
                filtered.set(ix, iy, mean);
            }
        }
    }
    filtered
}

/// Persistent world map: the raw fused grid plus its filtered view.
#[derive(Debug, Clone)]
pub struct GlobalMap {
    fused: HeightMap,
    filtered: Option<HeightMap>,
    config: FusionConfig,
}

impl GlobalMap {
    pub fn new(width: usize, height: usize, resolution: f64, origin_x: f64, origin_y: f64, config: FusionConfig) -> Self {
        Self {
            fused: HeightMap::new(width, height, resolution, origin_x, origin_y, MapFrame::World),
            filtered: None,
            config,
        }
    }

    pub fn integrate(&mut self, local: &HeightMap, local_to_world: &Pose2) -> Result<usize> {
        let n = fuse_global(&mut self.fused, local, local_to_world, &self.config)?;
        self.filtered = Some(postfilter(&self.fused, self.filtered.as_ref(), &self.config));
        Ok(n)
    }

    pub fn fused(&self) -> &HeightMap {
        &self.fused
    }

    /// Copy of the filtered map (the raw fused map before the first update).
    pub fn snapshot(&self) -> HeightMap {
        self.filtered.clone().unwrap_or_else(|| self.fused.clone())
    }
}
