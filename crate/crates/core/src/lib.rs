//! Multi-vehicle interaction at unsignalized intersections solved as a
//! weighted potential differential game via cyclic best-response dynamics.
//!
//! The crate provides the kinematic rollout, the shared four-term potential
//! with analytical gradients, Levenberg-Marquardt and projected-gradient
//! best-response backends, the cyclic fictitious-play outer loop with
//! epsilon-Nash certification, trajectory data ingestion and synthetic scene
//! generation, inverse weight calibration from demonstrations, and
//! trajectory-quality metrics with an IDM baseline.

pub mod best_response;
pub mod calibration;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod fictitious_play;
pub mod metrics;
pub mod potential;
pub mod scenario;
pub mod suite;

pub use error::{Error, Result};
