//! Deep Q-learning from scratch: a dense network with hand-written
//! backpropagation, Adam, replay memory, Boltzmann exploration and a hard
//! synced target network.

mod adam;
mod boltzmann;
mod network;
mod replay;
mod train;

pub use adam::{Adam, AdamConfig};
pub use boltzmann::{boltzmann_probabilities, boltzmann_sample, sample_index};
pub use network::{Activation, DenseLayer, Gradients, QNetwork};
pub use replay::ReplayMemory;
pub use train::{
    run_dqn_training, temperature_decay, train_minibatch, EpisodeStats, Environment, TrainConfig, TrainingOutcome,
    Transition,
};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DqnError {
    #[error("input has {got} features, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("action index {0} is outside the network output")]
    ActionOutOfRange(usize),
    #[error("minibatch is empty")]
    EmptyBatch,
    #[error("layer shapes do not chain")]
    BadArchitecture,
}

/// One stored transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}
