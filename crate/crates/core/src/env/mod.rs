//! The 5-lane circular highway.
//!
//! Lanes are numbered 1 (rightmost) to 5 (leftmost); moving left raises
//! the lane number. Positions are longitudinal and wrap on the road
//! circumference. One decision is taken per `dt` and a lane change
//! completes within one second.

mod observation;
mod reward;
mod vehicle;
mod world;

pub use observation::{
    bin_observation, encode_binned, encode_continuous, observe_bodies, BinnedObservation, Body,
    ContinuousObservation, Encoding, Neighbor, PosBin, RawObservation, Slot, VelBin,
    BINNED_INPUT_LEN, CONTINUOUS_INPUT_LEN, STATE_COUNT,
};
pub use reward::{compute_reward, reward_terms, RewardWeights};
pub use vehicle::{advance_kinematics, step_vehicle, Maneuver, VehicleState, LANE_CHANGE_SECONDS};
pub use world::{detect_crashes, init_world, SnapshotRow, StepReport, WorldState};

use crate::actions::Action;
use serde::{Deserialize, Serialize};

pub const LANES: i32 = 5;

/// Relative distance below which a neighbor is `close`.
pub const CLOSE_LIMIT: f64 = 11.0;
/// Relative distance from which a neighbor is `far`.
pub const FAR_LIMIT: f64 = 27.0;
/// Relative speed band treated as `stable`.
pub const STABLE_BAND: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("cannot place {requested} vehicles on a {road_length} m road (at most {capacity})")]
    CapacityExceeded {
        requested: usize,
        capacity: usize,
        road_length: f64,
    },
    #[error("at least one vehicle is required")]
    NoVehicles,
    #[error("unknown vehicle id {0}")]
    UnknownVehicle(u32),
    #[error("expected {expected} actions, got {got}")]
    ActionCount { expected: usize, got: usize },
}

/// Physical and sensing parameters of the highway.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub road_length: f64,
    pub lane_width: f64,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
    pub sensing_range: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub dt: f64,
    /// Bumper-to-bumper gap required at placement.
    pub min_gap: f64,
    /// Mean hard-deceleration magnitude used by the placement feasibility check.
    pub brake_decel: f64,
    pub reward_weights: RewardWeights,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            road_length: 600.0,
            lane_width: 3.7,
            vehicle_length: 5.0,
            vehicle_width: 2.0,
            sensing_range: 100.0,
            v_min: 0.0,
            v_max: 24.59,
            dt: 1.0,
            min_gap: 11.0,
            brake_decel: 3.5,
            reward_weights: RewardWeights::default(),
        }
    }
}

impl EnvConfig {
    /// Largest number of vehicles `init_world` accepts.
    pub fn capacity(&self) -> usize {
        let per_lane = libm::floor(self.road_length / (self.vehicle_length + self.min_gap));
        if per_lane <= 0.0 {
            0
        } else {
            per_lane as usize * LANES as usize
        }
    }
}

/// The hand-coded anchor policy: a reactive car follower that only looks at
/// the car ahead in its own lane and never changes lanes.
pub fn level0_policy(obs: &BinnedObservation) -> Action {
    use PosBin::*;
    use VelBin::*;
    match obs.bin(Slot::FrontSame) {
        (Close, Approaching) => Action::HardDecelerate,
        (Close, Stable) | (Nominal, Approaching) => Action::Decelerate,
        (Nominal, MovingAway) | (Far, _) => Action::Accelerate,
        _ => Action::Maintain,
    }
}
