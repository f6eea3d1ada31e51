//! Run configuration: one TOML file with a section per subsystem.

use crate::error::CliError;
use crate::ngsim::ColumnMap;
use levelk_core::dqn::TrainConfig;
use levelk_core::ingest::IngestConfig;
use levelk_core::levelk::{LevelConfig, DEFAULT_MAX_LEVEL};
use levelk_core::validate::DEFAULT_N_LIMIT;
use levelk_core::kstest::DEFAULT_ALPHA;
use levelk_core::{AccelerationModel, EnvConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Environment variable that overrides the configured seed.
pub const SEED_VAR: &str = "LEVELK_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub levels: LevelsSection,
    pub simulate: SimulateSection,
    pub validate: ValidateSection,
    pub train: TrainConfig,
    pub env: EnvConfig,
    pub actions: AccelerationModel,
    pub ingest: IngestSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            levels: LevelsSection::default(),
            simulate: SimulateSection::default(),
            validate: ValidateSection::default(),
            train: TrainConfig::default(),
            env: EnvConfig::default(),
            actions: AccelerationModel::default(),
            ingest: IngestSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelsSection {
    pub max_level: u32,
}

impl Default for LevelsSection {
    fn default() -> Self {
        LevelsSection {
            max_level: DEFAULT_MAX_LEVEL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub n_d: Vec<usize>,
    pub episodes: usize,
    pub steps: usize,
    /// Decisions recorded when writing trajectories.
    pub trajectory_steps: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            n_d: (75..=125).step_by(5).collect(),
            episodes: 100,
            steps: 100,
            trajectory_steps: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    pub n_limit: u64,
    pub alpha: f64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            n_limit: DEFAULT_N_LIMIT,
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub columns: ColumnMap,
    /// Positions and speeds are in feet and feet per second.
    pub feet: bool,
    /// Renumber lanes so lane 1 becomes lane 5; NGSIM counts from the left.
    pub mirror_lanes: bool,
    pub frame_dt: f64,
    pub decision_dt: f64,
    pub jump_threshold: f64,
    /// Set for data recorded on a circular road of this length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub road_length: Option<f64>,
}

impl Default for IngestSection {
    fn default() -> Self {
        let d = IngestConfig::default();
        IngestSection {
            columns: ColumnMap::default(),
            feet: false,
            mirror_lanes: false,
            frame_dt: d.frame_dt,
            decision_dt: d.decision_dt,
            jump_threshold: d.jump_threshold,
            road_length: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Missing(format!("config {}: {e}", p.display())))?;
                Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        if let Ok(s) = std::env::var(SEED_VAR) {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_VAR}={s:?} is not an unsigned integer")))?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn check(&self) -> Result<(), CliError> {
        let t = &self.train;
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(t.discount > 0.0 && t.discount < 1.0) {
            return bad("train.discount must lie in (0, 1)");
        }
        if t.t_floor < 1.0 || t.t_initial < t.t_floor {
            return bad("train temperatures need t_initial >= t_floor >= 1");
        }
        if let Some(c) = t.t_decay {
            if !(c > 0.0 && c < 1.0) {
                return bad("train.t_decay must lie in (0, 1)");
            }
        }
        if t.batch_size == 0 || t.memory_capacity == 0 || t.episodes == 0 || t.steps == 0 {
            return bad("train sizes must be positive");
        }
        if t.car_schedule.is_empty() || t.car_schedule.iter().any(|&(_, n)| n < 1) {
            return bad("train.car_schedule needs at least one entry with one car");
        }
        if self.env.road_length <= 0.0 || self.env.dt <= 0.0 {
            return bad("env.road_length and env.dt must be positive");
        }
        if self.validate.n_limit == 0 || !(self.validate.alpha > 0.0 && self.validate.alpha < 1.0) {
            return bad("validate needs n_limit >= 1 and alpha in (0, 1)");
        }
        if self.ingest.frame_dt <= 0.0 || self.ingest.decision_dt < self.ingest.frame_dt {
            return bad("ingest needs 0 < frame_dt <= decision_dt");
        }
        Ok(())
    }

    pub fn level_config(&self) -> LevelConfig {
        LevelConfig {
            train: self.train.clone(),
            env: self.env.clone(),
            actions: self.actions,
            max_level: self.levels.max_level,
        }
    }

    pub fn ingest_config(&self) -> IngestConfig {
        IngestConfig {
            frame_dt: self.ingest.frame_dt,
            jump_threshold: self.ingest.jump_threshold,
            decision_dt: self.ingest.decision_dt,
            road_length: self.ingest.road_length,
            sensing_range: self.env.sensing_range,
            actions: self.actions,
        }
    }

    /// Recorded frames per simulator decision.
    pub fn frames_per_step(&self) -> usize {
        ((self.env.dt / self.ingest.frame_dt).round() as usize).max(1)
    }
}
