use serde::{Deserialize, Serialize};

/// Duration of a lane change in seconds.
pub const LANE_CHANGE_SECONDS: f64 = 1.0;

/// Lane-change status. `progress` runs from 0 to 1; the lane number is
/// switched when it reaches 1, and the completed maneuver stays recorded
/// until the vehicle's next decision so crash checks see both lanes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maneuver {
    None,
    ChangingLeft { progress: f64 },
    ChangingRight { progress: f64 },
}

impl Maneuver {
    pub fn label(&self) -> &'static str {
        match self {
            Maneuver::None => "none",
            Maneuver::ChangingLeft { .. } => "changing_left",
            Maneuver::ChangingRight { .. } => "changing_right",
        }
    }

    pub fn progress(&self) -> f64 {
        match *self {
            Maneuver::None => 0.0,
            Maneuver::ChangingLeft { progress } | Maneuver::ChangingRight { progress } => progress,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: u32,
    pub x: f64,
    pub lane: i32,
    pub vx: f64,
    pub accel: f64,
    pub maneuver: Maneuver,
}

impl VehicleState {
    pub fn new(id: u32, x: f64, lane: i32, vx: f64) -> Self {
        VehicleState {
            id,
            x,
            lane,
            vx,
            accel: 0.0,
            maneuver: Maneuver::None,
        }
    }

    /// Lanes the vehicle body covers: both source and target while a lane
    /// change is in progress or was completed this step.
    pub fn occupied_lanes(&self) -> (i32, i32) {
        match self.maneuver {
            Maneuver::None => (self.lane, self.lane),
            Maneuver::ChangingLeft { progress } if progress < 1.0 => (self.lane, self.lane + 1),
            Maneuver::ChangingLeft { .. } => (self.lane - 1, self.lane),
            Maneuver::ChangingRight { progress } if progress < 1.0 => (self.lane - 1, self.lane),
            Maneuver::ChangingRight { .. } => (self.lane, self.lane + 1),
        }
    }

    pub fn shares_lane_with(&self, other: &VehicleState) -> bool {
        let (a0, a1) = self.occupied_lanes();
        let (b0, b1) = other.occupied_lanes();
        a0 <= b1 && b0 <= a1
    }
}

/// Displacement and final speed after `t` seconds at constant acceleration
/// `a`, starting at speed `v`. A braking vehicle stops instead of reversing
/// and an accelerating one holds `v_max` once it gets there.
pub fn advance_kinematics(v: f64, a: f64, t: f64, v_max: f64) -> (f64, f64) {
    let v_end = v + a * t;
    if a > 0.0 && v_end > v_max {
        let t_cap = ((v_max - v) / a).clamp(0.0, t);
        let dx = v * t_cap + 0.5 * a * t_cap * t_cap + v_max * (t - t_cap);
        (dx, v_max)
    } else if v_end >= 0.0 || a >= 0.0 {
        (v * t + 0.5 * a * t * t, v_end.max(0.0))
    } else {
        (v * v / (-2.0 * a), 0.0)
    }
}

pub(crate) fn wrap(x: f64, road_length: f64) -> f64 {
    let w = crate::rem_euclid(x, road_length);
    if w >= road_length {
        0.0
    } else {
        w
    }
}

/// Advance one vehicle by `dt` under realized acceleration `accel`.
pub fn step_vehicle(s: &VehicleState, accel: f64, dt: f64, road_length: f64, v_max: f64) -> VehicleState {
    let (dx, v) = advance_kinematics(s.vx, accel, dt, v_max);
    let mut next = *s;
    next.x = wrap(s.x + dx, road_length);
    next.vx = v;
    next.accel = accel;
    let step = dt / LANE_CHANGE_SECONDS;
    next.maneuver = match s.maneuver {
        Maneuver::None => Maneuver::None,
        Maneuver::ChangingLeft { progress } => {
            let p = progress + step;
            if progress < 1.0 && p >= 1.0 {
                next.lane += 1;
            }
            Maneuver::ChangingLeft { progress: p.min(1.0) }
        }
        Maneuver::ChangingRight { progress } => {
            let p = progress + step;
            if progress < 1.0 && p >= 1.0 {
                next.lane -= 1;
            }
            Maneuver::ChangingRight { progress: p.min(1.0) }
        }
    };
    next
}
