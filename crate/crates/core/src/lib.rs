//! Spatiotemporal trajectory tracking: lead/lag judgment against a timed
//! target, threshold-gated acceleration compensation, LQR lateral and
//! cascaded PID longitudinal control of a kinematic bicycle, and the error
//! analysis around it.

pub mod analysis;
pub mod common_clock;
pub mod compensation;
pub mod config;
pub mod controllers;
pub mod error;
pub mod geometry;
pub mod io;
pub mod leadlag;
pub mod pipeline;
pub mod simulation;
pub mod target;
pub mod vehicle;

pub use error::{Error, ErrorKind, Result};
pub use geometry::{Trajectory, TrajectoryPoint};
