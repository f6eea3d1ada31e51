use super::observation::{observe_bodies, Body, RawObservation};
use super::vehicle::{step_vehicle, Maneuver, VehicleState};
use super::{EnvConfig, EnvError, LANES};
use crate::actions::{Action, LaneChange};
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    /// Ordered by id; the ego, when there is one, is id 0.
    pub vehicles: Vec<VehicleState>,
    pub road_length: f64,
    pub lane_width: f64,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
    pub v_max: f64,
    pub time: f64,
}

/// Vehicles involved in a crash during one step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub crashed: BTreeSet<u32>,
}

/// One CSV-ready line of a world snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnapshotRow {
    pub time: f64,
    pub id: u32,
    pub x: f64,
    pub lane: i32,
    pub v_x: f64,
    pub accel: f64,
    pub maneuver: &'static str,
}

/// Place `n` vehicles at random with at least `min_gap` between bumpers in
/// every lane, and pick initial speeds so that each follower can still
/// avoid its leader by braking at `brake_decel`.
pub fn init_world<R: Rng + ?Sized>(n: usize, cfg: &EnvConfig, rng: &mut R) -> Result<WorldState, EnvError> {
    if n == 0 {
        return Err(EnvError::NoVehicles);
    }
    let capacity = cfg.capacity();
    if n > capacity {
        return Err(EnvError::CapacityExceeded {
            requested: n,
            capacity,
            road_length: cfg.road_length,
        });
    }
    let spacing = cfg.vehicle_length + cfg.min_gap;
    let per_lane = capacity / LANES as usize;

    let mut lanes: Vec<Vec<u32>> = (0..LANES).map(|_| Vec::new()).collect();
    for id in 0..n as u32 {
        let open: Vec<usize> = (0..LANES as usize).filter(|&l| lanes[l].len() < per_lane).collect();
        let lane = open[rng.random_range(0..open.len())];
        lanes[lane].push(id);
    }

    let mut vehicles = Vec::with_capacity(n);
    for (lane_idx, ids) in lanes.iter_mut().enumerate() {
        if ids.is_empty() {
            continue;
        }
        ids.shuffle(rng);
        let k = ids.len();
        let slack = (cfg.road_length - k as f64 * spacing).max(0.0);
        let mut offsets: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * slack).collect();
        offsets.sort_by(f64::total_cmp);
        let origin = rng.random::<f64>() * cfg.road_length;
        let mut speeds: Vec<f64> = (0..k)
            .map(|_| cfg.v_min + rng.random::<f64>() * (cfg.v_max - cfg.v_min))
            .collect();
        // consecutive cars in driving order; the last one follows the first around the ring
        let gaps: Vec<f64> = (0..k)
            .map(|i| {
                let centre = if i + 1 < k {
                    spacing + offsets[i + 1] - offsets[i]
                } else {
                    cfg.road_length - (k as f64 - 1.0) * spacing - offsets[k - 1] + offsets[0]
                };
                centre - cfg.vehicle_length
            })
            .collect();
        for _ in 0..4 * k + 4 {
            let mut changed = false;
            for i in (0..k).rev() {
                let leader = speeds[(i + 1) % k];
                let allowed = libm::sqrt(leader * leader + 2.0 * cfg.brake_decel * gaps[i].max(0.0));
                if k > 1 && speeds[i] > allowed {
                    speeds[i] = allowed;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for i in 0..k {
            let x = crate::rem_euclid(origin + offsets[i] + i as f64 * spacing, cfg.road_length);
            vehicles.push(VehicleState::new(ids[i], x, lane_idx as i32 + 1, speeds[i]));
        }
    }
    vehicles.sort_by_key(|v| v.id);
    Ok(WorldState {
        vehicles,
        road_length: cfg.road_length,
        lane_width: cfg.lane_width,
        vehicle_length: cfg.vehicle_length,
        vehicle_width: cfg.vehicle_width,
        v_max: cfg.v_max,
        time: 0.0,
    })
}

fn signed_gap(from: f64, to: f64, road_length: f64) -> f64 {
    let d = crate::rem_euclid(to - from, road_length);
    if d > road_length / 2.0 {
        d - road_length
    } else {
        d
    }
}

/// Vehicles whose bodies overlap, plus vehicles outside lanes 1..=5.
/// A lane-changing vehicle occupies both its source and target lane.
pub fn detect_crashes(w: &WorldState) -> BTreeSet<u32> {
    let mut crashed = BTreeSet::new();
    for (i, a) in w.vehicles.iter().enumerate() {
        if !(1..=LANES).contains(&a.lane) {
            crashed.insert(a.id);
        }
        for b in &w.vehicles[i + 1..] {
            if a.shares_lane_with(b) && libm::fabs(signed_gap(a.x, b.x, w.road_length)) < w.vehicle_length {
                crashed.insert(a.id);
                crashed.insert(b.id);
            }
        }
    }
    crashed
}

/// Crashes over a step: overlaps at its end, and same-lane pairs whose
/// order flipped during it (one drove through the other between samples).
pub(crate) fn crashed_between(prev: &WorldState, next: &WorldState) -> BTreeSet<u32> {
    let mut crashed = detect_crashes(next);
    let quarter = next.road_length / 4.0;
    for (i, a) in next.vehicles.iter().enumerate() {
        for (j, b) in next.vehicles.iter().enumerate().skip(i + 1) {
            if !a.shares_lane_with(b) {
                continue;
            }
            let (Some(a0), Some(b0)) = (prev.vehicles.get(i), prev.vehicles.get(j)) else {
                continue;
            };
            let before = signed_gap(a0.x, b0.x, prev.road_length);
            let after = signed_gap(a.x, b.x, next.road_length);
            if before * after < 0.0 && libm::fabs(before) < quarter && libm::fabs(after) < quarter {
                crashed.insert(a.id);
                crashed.insert(b.id);
            }
        }
    }
    crashed
}

impl WorldState {
    pub fn vehicle(&self, id: u32) -> Option<&VehicleState> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub fn bodies(&self) -> Vec<Body> {
        self.vehicles
            .iter()
            .map(|v| Body {
                id: v.id,
                x: v.x,
                lane: v.lane,
                v: v.vx,
            })
            .collect()
    }

    /// Raw observation of vehicle `ego_id`.
    pub fn observe(&self, ego_id: u32, cfg: &EnvConfig) -> Result<RawObservation, EnvError> {
        let bodies = self.bodies();
        let ego = bodies
            .iter()
            .find(|b| b.id == ego_id)
            .ok_or(EnvError::UnknownVehicle(ego_id))?;
        Ok(observe_bodies(ego, &bodies, Some(self.road_length), cfg.sensing_range))
    }

    /// Observations of every vehicle, in vehicle order.
    pub fn observe_all(&self, cfg: &EnvConfig) -> Vec<RawObservation> {
        let bodies = self.bodies();
        bodies
            .iter()
            .map(|b| observe_bodies(b, &bodies, Some(self.road_length), cfg.sensing_range))
            .collect()
    }

    /// Apply one decision per vehicle (in vehicle order) for `dt` seconds.
    /// `accels` are the realized accelerations; lane changes ignore theirs.
    pub fn advance(&mut self, actions: &[Action], accels: &[f64], dt: f64) -> Result<StepReport, EnvError> {
        let n = self.vehicles.len();
        if actions.len() != n || accels.len() != n {
            return Err(EnvError::ActionCount {
                expected: n,
                got: actions.len().min(accels.len()),
            });
        }
        for v in &mut self.vehicles {
            if v.maneuver.progress() >= 1.0 {
                v.maneuver = Maneuver::None;
            }
        }
        let prev = self.clone();
        for ((v, action), accel) in self.vehicles.iter_mut().zip(actions).zip(accels) {
            let a = match action.lane_change() {
                Some(LaneChange::Left) => {
                    v.maneuver = Maneuver::ChangingLeft { progress: 0.0 };
                    0.0
                }
                Some(LaneChange::Right) => {
                    v.maneuver = Maneuver::ChangingRight { progress: 0.0 };
                    0.0
                }
                None => *accel,
            };
            *v = step_vehicle(v, a, dt, self.road_length, self.v_max);
        }
        let crashed = crashed_between(&prev, self);
        // a vehicle that tried to leave the road stays on the edge lane
        for v in &mut self.vehicles {
            if !(1..=LANES).contains(&v.lane) {
                v.lane = v.lane.clamp(1, LANES);
                v.maneuver = Maneuver::None;
            }
        }
        self.time += dt;
        Ok(StepReport { crashed })
    }

    pub fn snapshot(&self) -> Vec<SnapshotRow> {
        self.vehicles
            .iter()
            .map(|v| SnapshotRow {
                time: self.time,
                id: v.id,
                x: v.x,
                lane: v.lane,
                v_x: v.vx,
                accel: v.accel,
                maneuver: v.maneuver.label(),
            })
            .collect()
    }
}
