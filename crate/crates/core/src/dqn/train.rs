use super::adam::{Adam, AdamConfig};
use super::boltzmann::boltzmann_sample;
use super::network::{Activation, QNetwork};
use super::replay::ReplayMemory;
use super::{DqnError, Experience};
use crate::env::Encoding;
use crate::rng::{substream, Stream};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Hyperparameters of one DQN training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub steps: usize,
    pub batch_size: usize,
    /// Memory size from which minibatch updates start.
    pub warmup: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub t_initial: f64,
    pub t_floor: f64,
    /// Per-episode temperature factor; derived from `episodes` when unset
    /// so the temperature reaches `t_floor` on the last episode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_decay: Option<f64>,
    /// Environment steps between hard copies into the target network.
    pub target_sync: usize,
    pub memory_capacity: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub encoding: Encoding,
    /// `(episode, vehicle count)` pairs; a count applies from its episode on.
    pub car_schedule: Vec<(usize, usize)>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 5000,
            steps: 100,
            batch_size: 32,
            warmup: 32,
            learning_rate: 0.005,
            discount: 0.975,
            t_initial: 50.0,
            t_floor: 1.0,
            t_decay: None,
            target_sync: 100,
            memory_capacity: 2000,
            hidden: vec![64, 64],
            activation: Activation::Relu,
            encoding: Encoding::Binned,
            car_schedule: vec![(0, 125), (1300, 100), (3800, 125)],
        }
    }
}

impl TrainConfig {
    /// Vehicle count in force at `episode`.
    pub fn cars_at(&self, episode: usize) -> Option<usize> {
        self.car_schedule
            .iter()
            .filter(|(start, _)| *start <= episode)
            .max_by_key(|(start, _)| *start)
            .map(|(_, n)| *n)
    }
}

/// Factor `c` with `t_initial * c^episodes = t_floor` unless set explicitly.
pub fn temperature_decay(cfg: &TrainConfig) -> f64 {
    cfg.t_decay.unwrap_or_else(|| {
        let m = cfg.episodes.max(1) as f64;
        libm::pow(cfg.t_floor / cfg.t_initial, 1.0 / m)
    })
}

pub struct Transition {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
}

/// Episodic task seen from the learning agent.
pub trait Environment {
    type Error: From<DqnError>;

    fn input_len(&self) -> usize;

    fn action_count(&self) -> usize;

    /// Start episode `episode` and return the first encoded state.
    fn reset(&mut self, episode: usize) -> Result<Vec<f64>, Self::Error>;

    fn step(&mut self, action: usize) -> Result<Transition, Self::Error>;

    /// Number of agents in the current episode, for logging.
    fn population(&self) -> usize {
        1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    /// Mean reward per executed step.
    pub avg_reward: f64,
    pub temperature: f64,
    pub population: usize,
    pub steps: usize,
    pub crashed: bool,
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub network: QNetwork,
    pub history: Vec<EpisodeStats>,
    pub updates: u64,
}

/// One Adam step on a minibatch. Targets are `r + γ max_a' target(s', a')`,
/// or just `r` for terminal transitions. Returns the mean squared error
/// before the update.
pub fn train_minibatch(
    net: &mut QNetwork,
    target: &QNetwork,
    optimizer: &mut Adam,
    batch: &[&Experience],
    discount: f64,
) -> Result<f64, DqnError> {
    if batch.is_empty() {
        return Err(DqnError::EmptyBatch);
    }
    let mut targets = Vec::with_capacity(batch.len());
    for e in batch {
        let y = if e.terminal {
            e.reward
        } else {
            let next = target.forward(&e.next_state)?;
            e.reward + discount * next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        targets.push(y);
    }
    let inputs: Vec<&[f64]> = batch.iter().map(|e| e.state.as_slice()).collect();
    let actions: Vec<usize> = batch.iter().map(|e| e.action).collect();
    let (loss, grads) = net.loss_and_gradients(&inputs, &actions, &targets)?;
    optimizer.apply(net, &grads);
    Ok(loss)
}

/// Deep Q-learning with Boltzmann exploration and a replay memory.
pub fn run_dqn_training<E: Environment>(
    env: &mut E,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainingOutcome, E::Error> {
    let mut sizes = vec![env.input_len()];
    sizes.extend(cfg.hidden.iter().copied());
    sizes.push(env.action_count());
    let mut net = QNetwork::new(&sizes, cfg.activation, &mut substream(seed, Stream::NetworkInit, 0))?;
    let mut target = net.clone();
    let mut optimizer = Adam::new(
        &net,
        AdamConfig {
            learning_rate: cfg.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut memory = ReplayMemory::new(cfg.memory_capacity);
    let mut explore = substream(seed, Stream::Exploration, 0);
    let mut replay = substream(seed, Stream::Replay, 0);
    let decay = temperature_decay(cfg);

    let mut temperature = cfg.t_initial;
    let mut history = Vec::with_capacity(cfg.episodes);
    let mut updates = 0u64;
    let mut env_steps = 0usize;
    for episode in 0..cfg.episodes {
        let mut state = env.reset(episode)?;
        let mut total = 0.0;
        let mut steps = 0;
        let mut crashed = false;
        for _ in 0..cfg.steps {
            let q = net.forward(&state)?;
            let action = boltzmann_sample(&q, temperature, &mut explore);
            let t = env.step(action)?;
            total += t.reward;
            steps += 1;
            env_steps += 1;
            memory.push(Experience {
                state: core::mem::take(&mut state),
                action,
                reward: t.reward,
                next_state: t.next_state.clone(),
                terminal: t.terminal,
            });
            if memory.len() >= cfg.warmup.max(1) {
                let batch = memory.sample(cfg.batch_size, &mut replay);
                train_minibatch(&mut net, &target, &mut optimizer, &batch, cfg.discount)?;
                updates += 1;
            }
            if cfg.target_sync > 0 && env_steps.is_multiple_of(cfg.target_sync) {
                target = net.clone();
            }
            state = t.next_state;
            if t.terminal {
                crashed = true;
                break;
            }
        }
        history.push(EpisodeStats {
            episode,
            avg_reward: if steps > 0 { total / steps as f64 } else { 0.0 },
            temperature,
            population: env.population(),
            steps,
            crashed,
        });
        if temperature > cfg.t_floor {
            temperature = (temperature * decay).max(cfg.t_floor);
        }
    }
    Ok(TrainingOutcome {
        network: net,
        history,
        updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two states, two actions, deterministic transitions, never terminal.
    struct Chain {
        state: usize,
    }

    impl Chain {
        fn encode(s: usize) -> Vec<f64> {
            let mut v = vec![0.0; 2];
            v[s] = 1.0;
            v
        }
    }

    impl Environment for Chain {
        type Error = DqnError;
        fn input_len(&self) -> usize {
            2
        }
        fn action_count(&self) -> usize {
            2
        }
        fn reset(&mut self, _episode: usize) -> Result<Vec<f64>, DqnError> {
            self.state = 0;
            Ok(Chain::encode(0))
        }
        fn step(&mut self, action: usize) -> Result<Transition, DqnError> {
            let (next, reward) = match (self.state, action) {
                (0, 0) => (1, 1.0),
                (0, _) => (0, 0.0),
                (_, 0) => (0, 0.0),
                _ => (1, 2.0),
            };
            self.state = next;
            Ok(Transition {
                next_state: Chain::encode(next),
                reward,
                terminal: false,
            })
        }
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            episodes: 1,
            steps: 5,
            hidden: vec![4],
            ..TrainConfig::default()
        }
    }

    #[test]
    fn warmup_gates_updates() {
        let cfg = TrainConfig {
            warmup: 1_000_000,
            ..small_cfg()
        };
        let out = run_dqn_training(&mut Chain { state: 0 }, &cfg, 1).unwrap();
        assert_eq!(out.updates, 0);
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.history[0].steps, 5);
    }

    #[test]
    fn temperature_reaches_floor_on_schedule() {
        let cfg = TrainConfig {
            episodes: 300,
            ..TrainConfig::default()
        };
        let c = temperature_decay(&cfg);
        let end = 50.0 * libm::pow(c, 300.0);
        assert!((end - 1.0).abs() < 0.01);

        let cfg = TrainConfig {
            episodes: 40,
            steps: 1,
            warmup: 1_000_000,
            hidden: vec![2],
            ..TrainConfig::default()
        };
        let out = run_dqn_training(&mut Chain { state: 0 }, &cfg, 2).unwrap();
        assert_eq!(out.history[0].temperature, 50.0);
        let temps: Vec<f64> = out.history.iter().map(|h| h.temperature).collect();
        assert!(temps.windows(2).all(|w| w[1] < w[0]));
        assert!(temps[39] > 1.0 && temps[39] < 1.11);
    }

    #[test]
    fn terminal_targets_are_rewards() {
        let mut net = QNetwork::new(&[2, 3, 2], Activation::Relu, &mut substream(1, Stream::NetworkInit, 0)).unwrap();
        let target = QNetwork::new(&[2, 3, 2], Activation::Relu, &mut substream(2, Stream::NetworkInit, 0)).unwrap();
        let batch_owned = [
            Experience {
                state: vec![1.0, 0.0],
                action: 1,
                reward: -3.0,
                next_state: vec![0.5, 0.5],
                terminal: true,
            },
            Experience {
                state: vec![0.0, 1.0],
                action: 0,
                reward: 2.0,
                next_state: vec![0.1, 0.9],
                terminal: true,
            },
        ];
        let batch: Vec<&Experience> = batch_owned.iter().collect();
        let expected = {
            let inputs: Vec<&[f64]> = batch.iter().map(|e| e.state.as_slice()).collect();
            net.loss_and_gradients(&inputs, &[1, 0], &[-3.0, 2.0]).unwrap().0
        };
        let mut adam = Adam::new(&net, AdamConfig::default());
        let loss = train_minibatch(&mut net, &target, &mut adam, &batch, 0.975).unwrap();
        assert_eq!(loss, expected);
    }

    #[test]
    fn zero_discount_ignores_bootstrap() {
        let net0 = QNetwork::new(&[2, 3, 2], Activation::Relu, &mut substream(4, Stream::NetworkInit, 0)).unwrap();
        let target = QNetwork::new(&[2, 3, 2], Activation::Relu, &mut substream(5, Stream::NetworkInit, 0)).unwrap();
        let e = Experience {
            state: vec![1.0, 0.0],
            action: 0,
            reward: 1.5,
            next_state: vec![0.0, 1.0],
            terminal: false,
        };
        let expected = net0.loss_and_gradients(&[&e.state], &[0], &[1.5]).unwrap().0;
        let mut net = net0.clone();
        let mut adam = Adam::new(&net, AdamConfig::default());
        let loss = train_minibatch(&mut net, &target, &mut adam, &[&e], 0.0).unwrap();
        assert_eq!(loss, expected);
        assert_ne!(net, net0);
    }

    fn param_mut(net: &mut QNetwork, k: usize, bias: bool, i: usize) -> &mut f64 {
        let l = &mut net.layers_mut()[k];
        if bias {
            &mut l.biases[i]
        } else {
            &mut l.weights[i]
        }
    }

    /// Central finite differences of the minibatch loss on every parameter.
    fn max_gradient_error(net: &QNetwork, inputs: &[&[f64]], actions: &[usize], targets: &[f64]) -> f64 {
        let (_, grads) = net.loss_and_gradients(inputs, actions, targets).unwrap();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        let mut probe = net.clone();
        for k in 0..net.layers().len() {
            for bias in [false, true] {
                let count = if bias { net.layers()[k].biases.len() } else { net.layers()[k].weights.len() };
                for i in 0..count {
                    let original = *param_mut(&mut probe, k, bias, i);
                    *param_mut(&mut probe, k, bias, i) = original + eps;
                    let up = probe.loss_and_gradients(inputs, actions, targets).unwrap().0;
                    *param_mut(&mut probe, k, bias, i) = original - eps;
                    let down = probe.loss_and_gradients(inputs, actions, targets).unwrap().0;
                    *param_mut(&mut probe, k, bias, i) = original;
                    let numeric = (up - down) / (2.0 * eps);
                    let analytic = if bias { grads.layers[k].1[i] } else { grads.layers[k].0[i] };
                    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
                    worst = worst.max((analytic - numeric).abs() / scale);
                }
            }
        }
        worst
    }

    #[test]
    fn backprop_matches_finite_differences() {
        use rand::Rng;
        let mut rng = substream(11, Stream::Field, 0);
        for trial in 0..10 {
            let net = QNetwork::new(&[5, 6, 4, 3], Activation::Tanh, &mut substream(trial, Stream::NetworkInit, 0)).unwrap();
            let states: Vec<Vec<f64>> = (0..4).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let inputs: Vec<&[f64]> = states.iter().map(|v| v.as_slice()).collect();
            let actions: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
            let targets: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            assert!(max_gradient_error(&net, &inputs, &actions, &targets) < 1e-4);
        }
    }

    #[test]
    fn relu_backprop_away_from_kinks() {
        // inputs with all pre-activations well clear of zero keep the
        // finite difference on one side of every kink
        let net = QNetwork::new(&[3, 8, 8, 2], Activation::Relu, &mut substream(3, Stream::NetworkInit, 0)).unwrap();
        let candidates = [[0.3, -0.7, 0.9], [-0.5, 0.2, 0.4], [0.8, 0.8, -0.1], [0.1, -0.3, -0.9]];
        let clear = |x: &[f64]| {
            let mut h = x.to_vec();
            for layer in &net.layers()[..2] {
                let z: Vec<f64> = layer
                    .weights
                    .chunks(layer.inputs)
                    .zip(&layer.biases)
                    .map(|(row, b)| row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + b)
                    .collect();
                if z.iter().any(|v| v.abs() < 1e-3) {
                    return false;
                }
                h = z.iter().map(|v| v.max(0.0)).collect();
            }
            true
        };
        let inputs: Vec<&[f64]> = candidates.iter().map(|c| c.as_slice()).filter(|c| clear(c)).collect();
        assert!(!inputs.is_empty());
        let actions: Vec<usize> = (0..inputs.len()).map(|i| i % 2).collect();
        let targets: Vec<f64> = (0..inputs.len()).map(|i| i as f64 - 1.0).collect();
        assert!(max_gradient_error(&net, &inputs, &actions, &targets) < 1e-4);
    }

    /// Q* of the two-state chain by value iteration.
    fn chain_q_star(gamma: f64) -> [[f64; 2]; 2] {
        let mut q = [[0.0f64; 2]; 2];
        for _ in 0..10_000 {
            let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
            q = [[1.0 + gamma * v[1], gamma * v[0]], [gamma * v[0], 2.0 + gamma * v[1]]];
        }
        q
    }

    #[test]
    fn tabular_chain_converges_to_q_star() {
        let q_star = chain_q_star(0.9);
        assert!((q_star[1][1] - 20.0).abs() < 1e-9);
        assert!((q_star[0][0] - 19.0).abs() < 1e-9);
        let cfg = TrainConfig {
            episodes: 400,
            steps: 50,
            discount: 0.9,
            hidden: vec![16],
            activation: Activation::Tanh,
            target_sync: 50,
            ..TrainConfig::default()
        };
        let out = run_dqn_training(&mut Chain { state: 0 }, &cfg, 7).unwrap();
        for s in 0..2 {
            let q = out.network.forward(&Chain::encode(s)).unwrap();
            for a in 0..2 {
                let rel = (q[a] - q_star[s][a]).abs() / q_star[s][a];
                assert!(rel < 0.05, "Q({s},{a}) = {} vs {}", q[a], q_star[s][a]);
            }
        }
    }

    #[test]
    fn schedule_lookup() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.cars_at(0), Some(125));
        assert_eq!(cfg.cars_at(1299), Some(125));
        assert_eq!(cfg.cars_at(1300), Some(100));
        assert_eq!(cfg.cars_at(3799), Some(100));
        assert_eq!(cfg.cars_at(3800), Some(125));
    }
}
