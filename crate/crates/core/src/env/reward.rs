use super::observation::{observe_bodies, PosBin, Slot};
use super::world::{crashed_between, WorldState};
use super::{EnvConfig, EnvError};
use crate::actions::Action;
use serde::{Deserialize, Serialize};

/// Weights of the crash, speed, headway and effort terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub crash: f64,
    pub speed: f64,
    pub headway: f64,
    pub effort: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            crash: 500.0,
            speed: 10.0,
            headway: 2.0,
            effort: 1.0,
        }
    }
}

/// Weighted reward from its ingredients. `front` is the position bin of
/// the car ahead after the step (`Far` when there is none).
pub fn reward_terms(crashed: bool, speed: f64, front: PosBin, action: Action, cfg: &EnvConfig) -> f64 {
    let w = &cfg.reward_weights;
    let c = if crashed { -1.0 } else { 0.0 };
    let s = (speed - (cfg.v_max + cfg.v_min) / 2.0) / cfg.v_max;
    let d = match front {
        PosBin::Close => -1.0,
        PosBin::Nominal => 0.0,
        PosBin::Far => 1.0,
    };
    w.crash * c + w.speed * s + w.headway * d + w.effort * action.effort()
}

/// Reward collected by `ego_id` for taking `action` in `prev` and landing in `next`.
pub fn compute_reward(
    prev: &WorldState,
    action: Action,
    next: &WorldState,
    ego_id: u32,
    cfg: &EnvConfig,
) -> Result<f64, EnvError> {
    let ego = next.vehicle(ego_id).ok_or(EnvError::UnknownVehicle(ego_id))?;
    let crashed = crashed_between(prev, next).contains(&ego_id);
    let bodies = next.bodies();
    let me = bodies
        .iter()
        .find(|b| b.id == ego_id)
        .copied()
        .ok_or(EnvError::UnknownVehicle(ego_id))?;
    let obs = observe_bodies(&me, &bodies, Some(next.road_length), cfg.sensing_range);
    let front = obs
        .neighbor(Slot::FrontSame)
        .map(|n| PosBin::of(n.dx))
        .unwrap_or(PosBin::Far);
    Ok(reward_terms(crashed, ego.vx, front, action, cfg))
}
