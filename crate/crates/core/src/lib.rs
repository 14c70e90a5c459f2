//! Collision-avoidance maneuver (CAM) optimization toolkit.
//!
//! The crate simulates multi-debris dangerous situations under two-body
//! (Keplerian) motion, screens them for close approaches, scores maneuver
//! outcomes with a piecewise-linear total reward, and searches for impulsive
//! avoidance maneuvers with grid-search and cross-entropy optimizers. A
//! benchmark harness sweeps situation sets and aggregates per-algorithm
//! metrics.
//!
//! Epochs are days past the J2000 epoch (mjd2000) throughout; positions are
//! meters and velocities meters per second in an inertial Earth-centered
//! frame.

// Validation deliberately writes `!(x > 0.0)` so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod conjunction;
pub mod consts;
pub mod fixtures;
pub mod generator;
pub mod optimize;
pub mod orbit;
pub mod reward;
pub mod session;

pub use conjunction::{
    collision_probability, find_conjunctions, total_collision_probability, Conjunction,
    ProbabilityModel, ScreeningConfig,
};
pub use generator::{construct_debris, generate_situation, generate_situations, GeneratorConfig};
pub use optimize::{
    cross_entropy, grid_search_baseline, grid_search_general, gs_ce, solve, Algorithm,
    CrossEntropyConfig, GridSearchConfig, Solution,
};
pub use orbit::{
    elements_to_state, orbit_frame, orbital_period, propagate, propagate_elements, solve_kepler,
    state_to_elements, OrbitalElements, StateVector,
};
pub use reward::{component_reward, total_reward, RewardBreakdown, RewardConfig};
pub use session::{
    apply_maneuver, deviations, run_session, DangerousSituation, Deviations, Maneuver,
    SessionContext, SessionResult, SpaceObject, Trajectory, Window,
};

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Kepler iteration did not converge (M = {mean_anomaly}, e = {eccentricity})")]
    KeplerNoConvergence {
        mean_anomaly: f64,
        eccentricity: f64,
    },

    #[error("unbound orbit: specific energy {energy} J/kg is not negative")]
    UnboundOrbit { energy: f64 },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("epoch mismatch: expected {expected}, got {actual} (mjd2000)")]
    EpochMismatch { expected: f64, actual: f64 },

    #[error("maneuver at {epoch} outside session window [{start}, {end}]")]
    ManeuverOutsideWindow { epoch: f64, start: f64, end: f64 },

    #[error("maneuvers must be sorted by epoch: {previous} then {current}")]
    UnsortedManeuvers { previous: f64, current: f64 },

    #[error("maneuver magnitude {magnitude} m/s exceeds limit {limit} m/s")]
    DvExceedsLimit { magnitude: f64, limit: f64 },

    #[error("maneuver timing interval is empty: first dangerous TCA {tca} leaves no room after window start {start}")]
    EmptyTimingWindow { tca: f64, start: f64 },

    #[error("unknown algorithm id {0:?}")]
    UnknownAlgorithm(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fixture checksum mismatch: expected {expected}, got {actual}")]
    ChecksumMismatch { expected: String, actual: String },
}

pub type Result<T> = std::result::Result<T, Error>;
