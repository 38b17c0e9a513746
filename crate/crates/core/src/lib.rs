//! Embodied policy-landscape toolkit for a two-sensor phototaxis robot.
//!
//! The robot is a square body with two light sensors at body-frame offsets
//! `ell1`, `ell2` and a two-weight contralateral controller `(w1, w2)`. This
//! crate holds everything that is pure computation:
//!
//! * [`dynamics`]: closed-form Euler simulation of the robot across start poses.
//! * [`landscape`]: binary success matrices over a weight grid, their overlap,
//!   and the learnability / interference-resistance metrics derived from it.
//! * [`optimize`]: four derivative-free policy trainers and the per-design
//!   training protocol.
//! * [`coopt`]: an epsilon-dominance archive MOEA co-optimizing sensor
//!   placement and weights.
//! * [`stats`]: Pearson correlation, Mann-Whitney U, dynamic time warping and
//!   the cross-environment sensor DTW score.
//!
//! The crate is `no_std` and needs only `alloc`. IO, parallel execution,
//! checkpointing and the command line live in the `morphoscape` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod coopt;
pub mod dynamics;
pub mod landscape;
pub mod math;
pub mod optimize;
pub mod rng;
pub mod stats;

pub use dynamics::{
    default_environments, evaluate, simulate, simulate_batch, simulate_many, Design, EnvEvaluation, EnvironmentSet,
    Policy, Pose, SimConfig, SimError, SimJob, SimResult, Vec2,
};
pub use landscape::{DesignMetrics, GridSpec, OverlapMatrix, SuccessMatrix};
pub use optimize::{Method, TrainRun};
