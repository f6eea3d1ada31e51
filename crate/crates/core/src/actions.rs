//! The seven discrete driver actions and their continuous realization.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

/// Discrete driver choice. The discriminant is the stable index used in
/// network outputs, policy files and the K-S support ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Action {
    Maintain = 0,
    Accelerate = 1,
    Decelerate = 2,
    HardAccelerate = 3,
    HardDecelerate = 4,
    MoveLeft = 5,
    MoveRight = 6,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneChange {
    /// Towards higher lane numbers.
    Left,
    /// Towards lane 1.
    Right,
}

impl Action {
    pub const COUNT: usize = 7;

    pub const ALL: [Action; Action::COUNT] = [
        Action::Maintain,
        Action::Accelerate,
        Action::Decelerate,
        Action::HardAccelerate,
        Action::HardDecelerate,
        Action::MoveLeft,
        Action::MoveRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    pub fn lane_change(self) -> Option<LaneChange> {
        match self {
            Action::MoveLeft => Some(LaneChange::Left),
            Action::MoveRight => Some(LaneChange::Right),
            _ => None,
        }
    }

    /// Effort term of the reward.
    pub fn effort(self) -> f64 {
        match self {
            Action::Maintain => 0.0,
            Action::Accelerate | Action::Decelerate => -0.25,
            Action::HardAccelerate | Action::HardDecelerate => -0.5,
            Action::MoveLeft | Action::MoveRight => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Maintain => "maintain",
            Action::Accelerate => "accelerate",
            Action::Decelerate => "decelerate",
            Action::HardAccelerate => "hard_accelerate",
            Action::HardDecelerate => "hard_decelerate",
            Action::MoveLeft => "move_left",
            Action::MoveRight => "move_right",
        }
    }
}

/// Sampling distributions for the acceleration actions and the inverse
/// thresholds used to label observed accelerations.
///
/// Hard accelerations are `hard_mu - |N(0, hard_sigma)|`, clamped below at
/// `accel_hi`, so their support `[accel_hi, hard_mu]` sits just above the
/// uniform band of the plain accelerate action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AccelerationModel {
    pub maintain_sigma: f64,
    pub accel_lo: f64,
    pub accel_hi: f64,
    pub hard_mu: f64,
    pub hard_sigma: f64,
    /// Below this magnitude an observed acceleration is `maintain`.
    pub classify_lo: f64,
    /// At or above this magnitude an observed acceleration is a hard action.
    pub classify_hi: f64,
}

impl Default for AccelerationModel {
    fn default() -> Self {
        AccelerationModel {
            maintain_sigma: 0.0075,
            accel_lo: 0.5,
            accel_hi: 2.5,
            hard_mu: 3.5,
            hard_sigma: 0.3,
            classify_lo: 0.5,
            classify_hi: 2.5,
        }
    }
}

impl AccelerationModel {
    /// Realized acceleration (m/s²) for `action`. Lane changes keep the
    /// current speed and return 0.
    pub fn sample<R: Rng + ?Sized>(&self, action: Action, rng: &mut R) -> f64 {
        match action {
            Action::Maintain => match Normal::new(0.0, self.maintain_sigma) {
                Ok(normal) => normal.sample(rng),
                Err(_) => 0.0,
            },
            Action::Accelerate => self.uniform_magnitude(rng),
            Action::Decelerate => -self.uniform_magnitude(rng),
            Action::HardAccelerate => self.hard_magnitude(rng),
            Action::HardDecelerate => -self.hard_magnitude(rng),
            Action::MoveLeft | Action::MoveRight => 0.0,
        }
    }

    fn uniform_magnitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.accel_hi > self.accel_lo {
            rng.random_range(self.accel_lo..self.accel_hi)
        } else {
            self.accel_lo
        }
    }

    fn hard_magnitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        (self.hard_mu - libm::fabs(z) * self.hard_sigma).max(self.accel_hi)
    }

    /// Label an observed acceleration. A lane change dominates.
    pub fn classify(&self, accel: f64, lane_change: Option<LaneChange>) -> Action {
        match lane_change {
            Some(LaneChange::Left) => Action::MoveLeft,
            Some(LaneChange::Right) => Action::MoveRight,
            None => {
                let magnitude = libm::fabs(accel);
                if magnitude < self.classify_lo {
                    Action::Maintain
                } else if magnitude < self.classify_hi {
                    if accel > 0.0 {
                        Action::Accelerate
                    } else {
                        Action::Decelerate
                    }
                } else if accel > 0.0 {
                    Action::HardAccelerate
                } else {
                    Action::HardDecelerate
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use std::vec::Vec;

    fn draws(action: Action, n: usize, seed: u64) -> Vec<f64> {
        let model = AccelerationModel::default();
        let mut rng = substream(seed, Stream::Actions, action.index() as u64);
        (0..n).map(|_| model.sample(action, &mut rng)).collect()
    }

    #[test]
    fn index_roundtrip() {
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Action::from_index(i), Some(*a));
        }
        assert_eq!(Action::from_index(7), None);
    }

    #[test]
    fn maintain_mean_is_near_zero() {
        let xs = draws(Action::Maintain, 100_000, 1);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.001, "mean {mean}");
        let small = xs.iter().filter(|a| a.abs() < 0.04).count();
        assert!(small as f64 / xs.len() as f64 > 0.9999);
    }

    #[test]
    fn uniform_actions_stay_in_band() {
        for a in draws(Action::Accelerate, 20_000, 2) {
            assert!((0.5..=2.5).contains(&a));
        }
        for a in draws(Action::Decelerate, 20_000, 3) {
            assert!((-2.5..=-0.5).contains(&a));
        }
    }

    #[test]
    fn hard_decelerate_mean_matches_folded_normal() {
        let xs = draws(Action::HardDecelerate, 100_000, 4);
        assert!(xs.iter().all(|&a| a <= -2.5 && a >= -3.5));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        // -3.5 + 0.3 * sqrt(2 / pi)
        assert!((mean - (-3.260_638)).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn classification_thresholds() {
        let m = AccelerationModel::default();
        assert_eq!(m.classify(0.0, None), Action::Maintain);
        assert_eq!(m.classify(0.49, None), Action::Maintain);
        assert_eq!(m.classify(0.5, None), Action::Accelerate);
        assert_eq!(m.classify(1.7, None), Action::Accelerate);
        assert_eq!(m.classify(-1.2, None), Action::Decelerate);
        assert_eq!(m.classify(2.5, None), Action::HardAccelerate);
        assert_eq!(m.classify(-4.2, None), Action::HardDecelerate);
        assert_eq!(m.classify(3.0, Some(LaneChange::Left)), Action::MoveLeft);
        assert_eq!(m.classify(0.0, Some(LaneChange::Right)), Action::MoveRight);
    }

    #[test]
    fn sampled_actions_classify_back() {
        let m = AccelerationModel::default();
        for action in [
            Action::Accelerate,
            Action::Decelerate,
            Action::HardAccelerate,
            Action::HardDecelerate,
        ] {
            for a in draws(action, 50_000, 9) {
                assert_eq!(m.classify(a, None), action, "{a}");
            }
        }
        let kept = draws(Action::Maintain, 50_000, 10)
            .into_iter()
            .filter(|&a| m.classify(a, None) == Action::Maintain)
            .count();
        assert!(kept as f64 / 50_000.0 > 0.9999);
    }
}
