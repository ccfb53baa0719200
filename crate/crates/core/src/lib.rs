//! Teleoperation footstep pipeline: retargeting user steps onto a humanoid,
//! fusing depth frames into elevation maps, adjusting footsteps to the
//! terrain by exhaustive parallel search, generating swing trajectories and
//! simulating the robot's step timing.

pub mod config;
pub mod error;
pub mod geometry;
pub mod heightmap;
pub mod optimizer;
pub mod pipeline;
pub mod records;
pub mod retarget;
pub mod swing;
pub mod synthetic;
pub mod walksim;

pub use error::{Error, Result};
pub use nalgebra;
