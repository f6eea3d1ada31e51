use super::{EnvConfig, CLOSE_LIMIT, FAR_LIMIT, LANES, STABLE_BAND};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// The nine neighbor positions an ego driver watches. Left means a higher
/// lane number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    FrontSame,
    FrontLeft,
    RearLeft,
    FrontRight,
    RearRight,
    FrontLeft2,
    RearLeft2,
    FrontRight2,
    RearRight2,
}

impl Slot {
    pub const ALL: [Slot; 9] = [
        Slot::FrontSame,
        Slot::FrontLeft,
        Slot::RearLeft,
        Slot::FrontRight,
        Slot::RearRight,
        Slot::FrontLeft2,
        Slot::RearLeft2,
        Slot::FrontRight2,
        Slot::RearRight2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_front(self) -> bool {
        matches!(
            self,
            Slot::FrontSame | Slot::FrontLeft | Slot::FrontRight | Slot::FrontLeft2 | Slot::FrontRight2
        )
    }

    /// Slot for a neighbor `lane_offset` lanes away, ahead or behind.
    fn locate(lane_offset: i32, ahead: bool) -> Option<Slot> {
        match (lane_offset, ahead) {
            (0, true) => Some(Slot::FrontSame),
            (0, false) => None,
            (1, true) => Some(Slot::FrontLeft),
            (1, false) => Some(Slot::RearLeft),
            (-1, true) => Some(Slot::FrontRight),
            (-1, false) => Some(Slot::RearRight),
            (2, true) => Some(Slot::FrontLeft2),
            (2, false) => Some(Slot::RearLeft2),
            (-2, true) => Some(Slot::FrontRight2),
            (-2, false) => Some(Slot::RearRight2),
            _ => None,
        }
    }
}

/// Relative view of one neighbor. `dx` is positive ahead; `dv` is negative
/// whenever the gap is closing, for front and rear neighbors alike.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub dx: f64,
    pub dv: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawObservation {
    pub own_lane: i32,
    pub neighbors: [Option<Neighbor>; 9],
}

impl RawObservation {
    pub fn empty(own_lane: i32) -> Self {
        RawObservation {
            own_lane,
            neighbors: [None; 9],
        }
    }

    pub fn neighbor(&self, slot: Slot) -> Option<Neighbor> {
        self.neighbors[slot.index()]
    }
}

/// Minimal kinematic view of a vehicle, shared by the simulator and the
/// trajectory reconstruction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Body {
    pub id: u32,
    pub x: f64,
    pub lane: i32,
    pub v: f64,
}

/// Ego-relative observation. `road_length` makes distances wrap (circular
/// road); `None` is a straight road section as in recorded data.
pub fn observe_bodies(
    ego: &Body,
    others: &[Body],
    road_length: Option<f64>,
    sensing_range: f64,
) -> RawObservation {
    let mut obs = RawObservation::empty(ego.lane);
    for other in others {
        if other.id == ego.id || !(1..=LANES).contains(&other.lane) {
            continue;
        }
        let offset = other.lane - ego.lane;
        if !(-2..=2).contains(&offset) {
            continue;
        }
        let dx = match road_length {
            Some(length) => {
                let ahead = crate::rem_euclid(other.x - ego.x, length);
                if ahead <= length / 2.0 {
                    ahead
                } else {
                    ahead - length
                }
            }
            None => other.x - ego.x,
        };
        if libm::fabs(dx) > sensing_range {
            continue;
        }
        let ahead = dx >= 0.0;
        let Some(slot) = Slot::locate(offset, ahead) else {
            continue;
        };
        let dv = if ahead { other.v - ego.v } else { ego.v - other.v };
        let current = &mut obs.neighbors[slot.index()];
        let closer = match current {
            Some(n) => libm::fabs(dx) < libm::fabs(n.dx),
            None => true,
        };
        if closer {
            *current = Some(Neighbor { dx, dv });
        }
    }
    obs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum PosBin {
    Close = 0,
    Nominal = 1,
    Far = 2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum VelBin {
    Approaching = 0,
    Stable = 1,
    MovingAway = 2,
}

impl PosBin {
    pub fn of(dx: f64) -> PosBin {
        let d = libm::fabs(dx);
        if d < CLOSE_LIMIT {
            PosBin::Close
        } else if d < FAR_LIMIT {
            PosBin::Nominal
        } else {
            PosBin::Far
        }
    }

    fn from_digit(d: u64) -> PosBin {
        match d {
            0 => PosBin::Close,
            1 => PosBin::Nominal,
            _ => PosBin::Far,
        }
    }
}

impl VelBin {
    pub fn of(dv: f64) -> VelBin {
        if dv < -STABLE_BAND {
            VelBin::Approaching
        } else if dv <= STABLE_BAND {
            VelBin::Stable
        } else {
            VelBin::MovingAway
        }
    }

    fn from_digit(d: u64) -> VelBin {
        match d {
            0 => VelBin::Approaching,
            1 => VelBin::Stable,
            _ => VelBin::MovingAway,
        }
    }
}

/// Number of distinct binned observations, 3^18 * 5.
pub const STATE_COUNT: u64 = 1_937_102_445;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinnedObservation {
    pub own_lane: i32,
    pub bins: [(PosBin, VelBin); 9],
}

impl BinnedObservation {
    /// Every neighbor absent.
    pub fn empty(own_lane: i32) -> Self {
        BinnedObservation {
            own_lane,
            bins: [(PosBin::Far, VelBin::MovingAway); 9],
        }
    }

    pub fn bin(&self, slot: Slot) -> (PosBin, VelBin) {
        self.bins[slot.index()]
    }

    /// Dense index in `[0, STATE_COUNT)`.
    pub fn index(&self) -> u64 {
        let mut digits = 0u64;
        for (pos, vel) in self.bins.iter().rev() {
            digits = digits * 9 + (*pos as u64) * 3 + *vel as u64;
        }
        let lane = (self.own_lane.clamp(1, LANES) - 1) as u64;
        digits * LANES as u64 + lane
    }

    pub fn from_index(index: u64) -> Option<Self> {
        if index >= STATE_COUNT {
            return None;
        }
        let own_lane = (index % LANES as u64) as i32 + 1;
        let mut rest = index / LANES as u64;
        let mut bins = [(PosBin::Far, VelBin::MovingAway); 9];
        for bin in bins.iter_mut() {
            let d = rest % 9;
            rest /= 9;
            *bin = (PosBin::from_digit(d / 3), VelBin::from_digit(d % 3));
        }
        Some(BinnedObservation { own_lane, bins })
    }
}

/// Discretize a raw observation. Absent neighbors read as far and moving away.
pub fn bin_observation(raw: &RawObservation) -> BinnedObservation {
    let mut out = BinnedObservation::empty(raw.own_lane);
    for (bin, neighbor) in out.bins.iter_mut().zip(raw.neighbors.iter()) {
        if let Some(n) = neighbor {
            *bin = (PosBin::of(n.dx), VelBin::of(n.dv));
        }
    }
    out
}

pub const BINNED_INPUT_LEN: usize = 9 * 6 + LANES as usize;
pub const CONTINUOUS_INPUT_LEN: usize = 9 * 2 + 1;

/// One-hot network input for a binned observation: a position triple and a
/// velocity triple per slot, then the lane.
pub fn encode_binned(b: &BinnedObservation) -> Vec<f64> {
    let mut out = alloc::vec![0.0; BINNED_INPUT_LEN];
    for (k, (pos, vel)) in b.bins.iter().enumerate() {
        out[k * 6 + *pos as usize] = 1.0;
        out[k * 6 + 3 + *vel as usize] = 1.0;
    }
    let lane = (b.own_lane.clamp(1, LANES) - 1) as usize;
    out[9 * 6 + lane] = 1.0;
    out
}

pub type ContinuousObservation = [f64; CONTINUOUS_INPUT_LEN];

/// Normalized features: `(dx / sensing_range, dv / v_max)` per slot, then
/// the lane mapped to `[0, 1]`. Absent neighbors saturate at the sensing
/// range with zero relative speed.
pub fn encode_continuous(raw: &RawObservation, cfg: &EnvConfig) -> ContinuousObservation {
    let mut out = [0.0; CONTINUOUS_INPUT_LEN];
    for (k, slot) in Slot::ALL.iter().enumerate() {
        let (dx, dv) = match raw.neighbors[k] {
            Some(n) => (n.dx, n.dv),
            None if slot.is_front() => (cfg.sensing_range, 0.0),
            None => (-cfg.sensing_range, 0.0),
        };
        out[2 * k] = (dx / cfg.sensing_range).clamp(-1.0, 1.0);
        out[2 * k + 1] = (dv / cfg.v_max).clamp(-1.0, 1.0);
    }
    out[18] = (raw.own_lane.clamp(1, LANES) - 1) as f64 / (LANES - 1) as f64;
    out
}

/// Which network input an observation is turned into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Binned,
    Continuous,
}

impl Encoding {
    pub fn input_len(self) -> usize {
        match self {
            Encoding::Binned => BINNED_INPUT_LEN,
            Encoding::Continuous => CONTINUOUS_INPUT_LEN,
        }
    }

    pub fn encode(self, raw: &RawObservation, cfg: &EnvConfig) -> Vec<f64> {
        match self {
            Encoding::Binned => encode_binned(&bin_observation(raw)),
            Encoding::Continuous => encode_continuous(raw, cfg).to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Binned => "binned",
            Encoding::Continuous => "continuous",
        }
    }
}
