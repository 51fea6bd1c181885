//! Visual-tactile precision grasping for multi-fingered hands, simulated end to end.
//!
//! The pipeline has four stages, each in its own module:
//!
//! 1. [`preshape`] samples and refines an open-hand configuration near the object.
//! 2. [`contact`] solves for hand joints and auxiliary contact points that put every
//!    fingertip on the *estimated* object surface (bound-constrained Gauss-Newton with a
//!    self-collision projection line search).
//! 3. [`trajectory`] plans time-optimal, duration-equalized finger motions, and
//!    [`tactile`] executes them with a pressure-triggered closing controller that only
//!    touches the *true* object through the simulated fingertip sensor.
//! 4. [`grasp_eval`] scores the achieved contacts with a force-closure epsilon metric.
//!
//! [`harness`] composes the stages into seeded, reproducible experiments and
//! aggregates per-variant statistics. Geometry lives in [`sdf`], [`collision`] and
//! [`kinematics`].

pub mod check;
pub mod collision;
pub mod contact;
pub mod error;
pub mod grasp_eval;
pub mod harness;
pub mod kinematics;
pub mod optim;
pub mod preshape;
pub mod sdf;
pub mod tactile;
pub mod trajectory;

pub use error::{Error, Result};

/// 3-vector in meters (or a unit direction).
pub type Vec3 = nalgebra::Vector3<f64>;
/// Rigid transform.
pub type Pose = nalgebra::Isometry3<f64>;

/// Control and tactile sampling rate.
pub const CONTROL_RATE_HZ: f64 = 100.0;
