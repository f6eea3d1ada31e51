//! The level-k hierarchy: level 0 is the rule-based car follower and each
//! level k is a Q-network trained against a field of level k-1 drivers.

use crate::actions::{AccelerationModel, Action};
use crate::dqn::{
    boltzmann_probabilities, run_dqn_training, sample_index, DqnError, Environment, QNetwork, TrainConfig,
    TrainingOutcome, Transition,
};
use crate::env::{
    advance_kinematics, bin_observation, init_world, level0_policy, reward_terms, Encoding, EnvConfig, EnvError, PosBin, RawObservation,
    Slot, WorldState,
};
use crate::ingest::TrajectoryRecord;
use crate::rng::{substream, SimRng, Stream};
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Highest level trained unless overridden.
pub const DEFAULT_MAX_LEVEL: u32 = 3;

/// Temperature at which trained policies act outside of training.
pub const EVALUATION_TEMPERATURE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LevelError {
    #[error("level {requested} needs level {missing}, which has not been trained")]
    MissingPrerequisite { requested: u32, missing: u32 },
    #[error("level {requested} exceeds the configured maximum {max}")]
    AboveMaxLevel { requested: u32, max: u32 },
    #[error("level 0 is the fixed rule-based policy")]
    LevelZeroIsFixed,
    #[error("registry already holds level {0}")]
    AlreadyRegistered(u32),
    #[error("a scenario needs at least 2 drivers, got {0}")]
    TooFewDrivers(usize),
    #[error("no policies to drive with")]
    NoPolicies,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Dqn(#[from] DqnError),
}

/// How a driver picks actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    /// The rule-based car follower.
    LevelZero,
    /// Every action with probability 1/7.
    Uniform,
    /// Boltzmann sampling over network Q-values.
    Network {
        net: QNetwork,
        encoding: Encoding,
        temperature: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyRef {
    pub level: u32,
    pub policy: Policy,
}

impl PolicyRef {
    pub fn level_zero() -> Self {
        PolicyRef {
            level: 0,
            policy: Policy::LevelZero,
        }
    }

    pub fn uniform() -> Self {
        PolicyRef {
            level: 0,
            policy: Policy::Uniform,
        }
    }

    pub fn network(level: u32, net: QNetwork, encoding: Encoding) -> Self {
        PolicyRef {
            level,
            policy: Policy::Network {
                net,
                encoding,
                temperature: EVALUATION_TEMPERATURE,
            },
        }
    }

    /// Action distribution in the situation `raw`.
    pub fn pdf(&self, raw: &RawObservation, env: &EnvConfig) -> Result<[f64; Action::COUNT], DqnError> {
        let mut p = [0.0; Action::COUNT];
        match &self.policy {
            Policy::LevelZero => p[level0_policy(&bin_observation(raw)).index()] = 1.0,
            Policy::Uniform => p = [1.0 / Action::COUNT as f64; Action::COUNT],
            Policy::Network {
                net,
                encoding,
                temperature,
            } => {
                let q = net.forward(&encoding.encode(raw, env))?;
                if q.len() != Action::COUNT {
                    return Err(DqnError::DimensionMismatch {
                        expected: Action::COUNT,
                        got: q.len(),
                    });
                }
                p.copy_from_slice(&boltzmann_probabilities(&q, *temperature));
            }
        }
        Ok(p)
    }

    pub fn act<R: Rng + ?Sized>(&self, raw: &RawObservation, env: &EnvConfig, rng: &mut R) -> Result<Action, DqnError> {
        match &self.policy {
            Policy::LevelZero => Ok(level0_policy(&bin_observation(raw))),
            _ => {
                let p = self.pdf(raw, env)?;
                Ok(Action::ALL[sample_index(&p, rng)])
            }
        }
    }
}

/// Append-only store of trained levels; level 0 is always present.
#[derive(Clone, Debug, PartialEq)]
pub struct Registry {
    levels: Vec<PolicyRef>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry {
            levels: vec![PolicyRef::level_zero()],
        }
    }
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn get(&self, level: u32) -> Option<&PolicyRef> {
        self.levels.get(level as usize)
    }

    /// Highest level held.
    pub fn top(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn insert(&mut self, policy: PolicyRef) -> Result<(), LevelError> {
        let next = self.levels.len() as u32;
        if policy.level == 0 {
            return Err(LevelError::LevelZeroIsFixed);
        }
        if policy.level < next {
            return Err(LevelError::AlreadyRegistered(policy.level));
        }
        if policy.level > next {
            return Err(LevelError::MissingPrerequisite {
                requested: policy.level,
                missing: next,
            });
        }
        self.levels.push(policy);
        Ok(())
    }
}

/// Everything a level-k training run needs besides the registry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelConfig {
    pub train: TrainConfig,
    pub env: EnvConfig,
    pub actions: AccelerationModel,
    pub max_level: u32,
}

impl Default for LevelConfig {
    fn default() -> Self {
        LevelConfig {
            train: TrainConfig::default(),
            env: EnvConfig::default(),
            actions: AccelerationModel::default(),
            max_level: DEFAULT_MAX_LEVEL,
        }
    }
}

/// Ego-centred episodic view of the highway with every other vehicle
/// driven by `field`. Vehicle 0 is the ego.
pub struct HighwayEnv<'a> {
    env: &'a EnvConfig,
    actions: &'a AccelerationModel,
    field: &'a PolicyRef,
    encoding: Encoding,
    schedule: Vec<(usize, usize)>,
    seed: u64,
    world: Option<WorldState>,
    accel_rng: SimRng,
    field_rng: SimRng,
    last_crashes: usize,
}

pub const EGO_ID: u32 = 0;

impl<'a> HighwayEnv<'a> {
    pub fn new(
        env: &'a EnvConfig,
        actions: &'a AccelerationModel,
        field: &'a PolicyRef,
        encoding: Encoding,
        schedule: Vec<(usize, usize)>,
        seed: u64,
    ) -> Self {
        HighwayEnv {
            env,
            actions,
            field,
            encoding,
            schedule,
            seed,
            world: None,
            accel_rng: substream(seed, Stream::Actions, 0),
            field_rng: substream(seed, Stream::Field, 0),
            last_crashes: 0,
        }
    }

    pub fn world(&self) -> Option<&WorldState> {
        self.world.as_ref()
    }

    /// Vehicles other than the ego involved in crashes on the last step.
    pub fn field_crashes(&self) -> usize {
        self.last_crashes
    }

    fn cars_at(&self, episode: usize) -> usize {
        self.schedule
            .iter()
            .filter(|(start, _)| *start <= episode)
            .max_by_key(|(start, _)| *start)
            .map(|(_, n)| *n)
            .unwrap_or(0)
    }

    /// Start episode `episode` and return the ego's raw observation.
    pub fn reset_raw(&mut self, episode: usize) -> Result<RawObservation, EnvError> {
        let n = self.cars_at(episode);
        let e = episode as u64;
        let world = init_world(n, self.env, &mut substream(self.seed, Stream::Placement, e))?;
        self.accel_rng = substream(self.seed, Stream::Actions, e);
        self.field_rng = substream(self.seed, Stream::Field, e);
        self.last_crashes = 0;
        let obs = world.observe(EGO_ID, self.env)?;
        self.world = Some(world);
        Ok(obs)
    }

    /// Advance every vehicle one decision with the ego taking `action`.
    /// Returns the ego's next observation, its reward and whether it crashed.
    pub fn step_raw(&mut self, action: Action) -> Result<(RawObservation, f64, bool), LevelError> {
        let world = self.world.as_mut().ok_or(EnvError::NoVehicles)?;
        let observations = world.observe_all(self.env);
        let mut chosen = Vec::with_capacity(observations.len());
        for (v, obs) in world.vehicles.iter().zip(&observations) {
            chosen.push(if v.id == EGO_ID {
                action
            } else {
                self.field.act(obs, self.env, &mut self.field_rng)?
            });
        }
        let accels: Vec<f64> = chosen.iter().map(|&a| self.actions.sample(a, &mut self.accel_rng)).collect();
        let report = world.advance(&chosen, &accels, self.env.dt)?;
        let crashed = report.crashed.contains(&EGO_ID);
        self.last_crashes = report.crashed.iter().filter(|&&id| id != EGO_ID).count();
        let next = world.observe(EGO_ID, self.env)?;
        let speed = world.vehicle(EGO_ID).map(|v| v.vx).unwrap_or(0.0);
        let front = next
            .neighbor(Slot::FrontSame)
            .map(|n| PosBin::of(n.dx))
            .unwrap_or(PosBin::Far);
        let reward = reward_terms(crashed, speed, front, action, self.env);
        Ok((next, reward, crashed))
    }
}

impl Environment for HighwayEnv<'_> {
    type Error = LevelError;

    fn input_len(&self) -> usize {
        self.encoding.input_len()
    }

    fn action_count(&self) -> usize {
        Action::COUNT
    }

    fn reset(&mut self, episode: usize) -> Result<Vec<f64>, LevelError> {
        let obs = self.reset_raw(episode)?;
        Ok(self.encoding.encode(&obs, self.env))
    }

    fn step(&mut self, action: usize) -> Result<Transition, LevelError> {
        let action = Action::from_index(action).ok_or(DqnError::ActionOutOfRange(action))?;
        let (next, reward, terminal) = self.step_raw(action)?;
        Ok(Transition {
            next_state: self.encoding.encode(&next, self.env),
            reward,
            terminal,
        })
    }

    fn population(&self) -> usize {
        self.world.as_ref().map(|w| w.vehicles.len()).unwrap_or(0)
    }
}

/// Seed of the level-`k` training run derived from the run seed.
pub fn level_seed(seed: u64, level: u32) -> u64 {
    use rand::RngCore;
    substream(seed, Stream::NetworkInit, 1000 + level as u64).next_u64()
}

/// Train level `k` against a field of level `k - 1` drivers.
pub fn train_level(
    k: u32,
    registry: &Registry,
    cfg: &LevelConfig,
    seed: u64,
) -> Result<(PolicyRef, TrainingOutcome), LevelError> {
    if k == 0 {
        return Err(LevelError::LevelZeroIsFixed);
    }
    if k > cfg.max_level {
        return Err(LevelError::AboveMaxLevel {
            requested: k,
            max: cfg.max_level,
        });
    }
    let field = registry.get(k - 1).ok_or(LevelError::MissingPrerequisite {
        requested: k,
        missing: k - 1,
    })?;
    let mut env = HighwayEnv::new(
        &cfg.env,
        &cfg.actions,
        field,
        cfg.train.encoding,
        cfg.train.car_schedule.clone(),
        level_seed(seed, k),
    );
    let outcome = run_dqn_training(&mut env, &cfg.train, level_seed(seed, k))?;
    let policy = PolicyRef::network(k, outcome.network.clone(), cfg.train.encoding);
    Ok((policy, outcome))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub crashed: bool,
    pub steps: usize,
    pub reward_sum: f64,
    /// Crashes among field vehicles only.
    pub field_crashes: usize,
}

/// One evaluation episode of `ego` among `n_d - 1` `field` drivers. All
/// randomness comes from `(seed, episode)`, so episodes can run in any
/// order or in parallel.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_episode(
    ego: &PolicyRef,
    field: &PolicyRef,
    n_d: usize,
    steps: usize,
    env: &EnvConfig,
    actions: &AccelerationModel,
    seed: u64,
    episode: usize,
) -> Result<EpisodeOutcome, LevelError> {
    if n_d < 2 {
        return Err(LevelError::TooFewDrivers(n_d));
    }
    let mut sim = HighwayEnv::new(env, actions, field, Encoding::Binned, vec![(0, n_d)], seed);
    let mut ego_rng = substream(seed, Stream::Evaluation, episode as u64);
    let mut obs = sim.reset_raw(episode)?;
    let mut out = EpisodeOutcome {
        crashed: false,
        steps: 0,
        reward_sum: 0.0,
        field_crashes: 0,
    };
    for _ in 0..steps {
        let action = ego.act(&obs, env, &mut ego_rng)?;
        let (next, reward, crashed) = sim.step_raw(action)?;
        out.steps += 1;
        out.reward_sum += reward;
        out.field_crashes += sim.field_crashes();
        obs = next;
        if crashed {
            out.crashed = true;
            break;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub n_d: usize,
    pub episodes: usize,
    pub crashes: usize,
    /// Crashes per episode.
    pub crash_rate: f64,
    /// Mean over episodes of the per-step ego reward.
    pub mean_reward: f64,
}

impl ScenarioResult {
    pub fn from_episodes(n_d: usize, episodes: &[EpisodeOutcome]) -> Self {
        let count = episodes.len();
        let crashes = episodes.iter().filter(|e| e.crashed).count();
        let per_step: f64 = episodes
            .iter()
            .map(|e| if e.steps > 0 { e.reward_sum / e.steps as f64 } else { 0.0 })
            .sum();
        ScenarioResult {
            n_d,
            episodes: count,
            crashes,
            crash_rate: if count > 0 { crashes as f64 / count as f64 } else { 0.0 },
            mean_reward: if count > 0 { per_step / count as f64 } else { 0.0 },
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate_scenario(
    ego: &PolicyRef,
    field: &PolicyRef,
    n_d: usize,
    episodes: usize,
    steps: usize,
    env: &EnvConfig,
    actions: &AccelerationModel,
    seed: u64,
) -> Result<ScenarioResult, LevelError> {
    if n_d < 2 {
        return Err(LevelError::TooFewDrivers(n_d));
    }
    let outcomes = (0..episodes)
        .map(|e| evaluate_episode(ego, field, n_d, steps, env, actions, seed, e))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScenarioResult::from_episodes(n_d, &outcomes))
}

/// A decision taken during a recorded rollout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoggedDecision {
    pub vehicle_id: u64,
    pub frame: i64,
    pub state: u64,
    pub action: Action,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rollout {
    /// Ordered by frame, then vehicle.
    pub records: Vec<TrajectoryRecord>,
    pub decisions: Vec<LoggedDecision>,
}

/// Drive `n_d` vehicles, vehicle i following `policies[i % len]`, for `steps` decisions and
/// record every vehicle `frames_per_step` times per decision. Between
/// decisions positions and speeds follow the same constant-acceleration
/// kinematics as the simulator; a lane change shows up in the frame that
/// ends it.
#[allow(clippy::too_many_arguments)]
pub fn record_rollout(
    policies: &[PolicyRef],
    n_d: usize,
    steps: usize,
    frames_per_step: usize,
    env: &EnvConfig,
    actions: &AccelerationModel,
    seed: u64,
) -> Result<Rollout, LevelError> {
    if policies.is_empty() {
        return Err(LevelError::NoPolicies);
    }
    let k = frames_per_step.max(1);
    let mut world = init_world(n_d, env, &mut substream(seed, Stream::Placement, 0))?;
    let mut act_rng = substream(seed, Stream::Synthetic, 0);
    let mut accel_rng = substream(seed, Stream::Actions, 0);
    let mut out = Rollout::default();
    let push_frame = |out: &mut Rollout, w: &WorldState, frame: i64| {
        for v in &w.vehicles {
            out.records.push(TrajectoryRecord {
                vehicle_id: v.id as u64,
                frame,
                local_y: v.x,
                lane: v.lane,
                v: v.vx,
            });
        }
    };
    for step in 0..steps {
        let frame0 = (step * k) as i64;
        let observations = world.observe_all(env);
        let mut chosen = Vec::with_capacity(observations.len());
        for (i, (v, obs)) in world.vehicles.iter().zip(&observations).enumerate() {
            let a = policies[i % policies.len()].act(obs, env, &mut act_rng)?;
            out.decisions.push(LoggedDecision {
                vehicle_id: v.id as u64,
                frame: frame0,
                state: bin_observation(obs).index(),
                action: a,
            });
            chosen.push(a);
        }
        let accels: Vec<f64> = chosen.iter().map(|&a| actions.sample(a, &mut accel_rng)).collect();
        let before = world.clone();
        world.advance(&chosen, &accels, env.dt)?;
        push_frame(&mut out, &before, frame0);
        for j in 1..k {
            let t = env.dt * j as f64 / k as f64;
            let mut mid = before.clone();
            for (m, after) in mid.vehicles.iter_mut().zip(&world.vehicles) {
                let (dx, v) = advance_kinematics(m.vx, after.accel, t, world.v_max);
                m.x = crate::rem_euclid(m.x + dx, world.road_length);
                m.vx = v;
            }
            push_frame(&mut out, &mid, frame0 + j as i64);
        }
    }
    push_frame(&mut out, &world, (steps * k) as i64);
    Ok(out)
}
