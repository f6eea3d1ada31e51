//! Trajectory cleaning and per-driver empirical policies.
//!
//! Recorded trajectories are grouped into contiguous per-vehicle tracks,
//! velocity glitches are interpolated away, accelerations are recomputed
//! with five-point stencils, and every vehicle's decisions are
//! reconstructed at a fixed decision period as (binned state, action)
//! pairs.

use crate::actions::{AccelerationModel, Action, LaneChange};
use crate::env::{bin_observation, observe_bodies, Body, RawObservation, LANES};
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub const FEET_TO_METERS: f64 = 0.3048;

/// Probability floor applied to every action of a stored pdf.
pub const PDF_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("series has {got} samples, at least {needed} are required")]
    TooShort { needed: usize, got: usize },
    #[error("no two consecutive samples are consistent")]
    AllSamplesBad,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub vehicle_id: u64,
    pub frame: i64,
    /// Longitudinal position, meters.
    pub local_y: f64,
    pub lane: i32,
    /// Speed, m/s.
    pub v: f64,
}

/// Contiguous run of one vehicle's frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub vehicle_id: u64,
    pub start_frame: i64,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub lane: Vec<i32>,
    /// Filled by [`clean_tracks`].
    pub a: Vec<f64>,
}

impl Track {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn end_frame(&self) -> i64 {
        self.start_frame + self.len() as i64 - 1
    }

    pub fn index_of(&self, frame: i64) -> Option<usize> {
        if frame < self.start_frame || frame > self.end_frame() {
            None
        } else {
            Some((frame - self.start_frame) as usize)
        }
    }
}

/// Group records by vehicle, order by frame and split at frame gaps.
/// Repeated frames keep the first record.
pub fn build_tracks(records: &[TrajectoryRecord]) -> Vec<Track> {
    let mut by_vehicle: BTreeMap<u64, Vec<&TrajectoryRecord>> = BTreeMap::new();
    for r in records {
        by_vehicle.entry(r.vehicle_id).or_default().push(r);
    }
    let mut tracks = Vec::new();
    for (id, mut rs) in by_vehicle {
        rs.sort_by_key(|r| r.frame);
        rs.dedup_by_key(|r| r.frame);
        let mut current: Option<Track> = None;
        for r in rs {
            if let Some(t) = current.as_mut() {
                if r.frame == t.end_frame() + 1 {
                    t.y.push(r.local_y);
                    t.v.push(r.v);
                    t.lane.push(r.lane);
                    continue;
                }
                tracks.push(current.take().unwrap());
            }
            current = Some(Track {
                vehicle_id: id,
                start_frame: r.frame,
                y: vec![r.local_y],
                v: vec![r.v],
                lane: vec![r.lane],
                a: Vec::new(),
            });
        }
        tracks.extend(current);
    }
    tracks
}

/// Lanes beyond the fifth are merged into the fifth.
pub fn clamp_lane(lane: i32) -> i32 {
    lane.min(LANES)
}

pub fn clamp_lanes(tracks: &mut [Track]) {
    for t in tracks {
        for l in &mut t.lane {
            *l = clamp_lane(*l);
        }
    }
}

/// Renumber lanes 1..5 right-to-left for data numbered left-to-right.
pub fn mirror_lanes(tracks: &mut [Track]) {
    for t in tracks {
        for l in &mut t.lane {
            *l = LANES + 1 - *l;
        }
    }
}

/// Replace samples whose implied acceleration from the last good sample
/// exceeds `threshold` by linear interpolation between the surrounding
/// good samples. Bad samples before the first or after the last good one
/// take that good value.
pub fn repair_velocities(v: &[f64], dt: f64, threshold: f64) -> Result<Vec<f64>, IngestError> {
    if v.len() < 4 {
        return Err(IngestError::TooShort { needed: 4, got: v.len() });
    }
    let jump = |a: f64, b: f64, steps: usize| libm::fabs(b - a) / (steps as f64 * dt) > threshold;
    let anchor = (0..v.len() - 1)
        .find(|&i| !jump(v[i], v[i + 1], 1))
        .ok_or(IngestError::AllSamplesBad)?;
    let mut good = vec![false; v.len()];
    good[anchor] = true;
    let mut last = anchor;
    for i in anchor + 1..v.len() {
        if !jump(v[last], v[i], i - last) {
            good[i] = true;
            last = i;
        }
    }
    let mut out = v.to_vec();
    for x in out.iter_mut().take(anchor) {
        *x = v[anchor];
    }
    let mut prev = anchor;
    for i in anchor + 1..v.len() {
        if good[i] {
            let span = (i - prev) as f64;
            for k in 1..i - prev {
                out[prev + k] = v[prev] + k as f64 * (v[i] - v[prev]) / span;
            }
            prev = i;
        }
    }
    for x in out.iter_mut().skip(prev + 1) {
        *x = v[prev];
    }
    Ok(out)
}

/// Five-point finite-difference derivative of `v` sampled every `dt`.
pub fn recompute_accelerations(v: &[f64], dt: f64) -> Result<Vec<f64>, IngestError> {
    let n = v.len();
    if n < 5 {
        return Err(IngestError::TooShort { needed: 5, got: n });
    }
    let h12 = 12.0 * dt;
    let mut a = vec![0.0; n];
    a[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / h12;
    a[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / h12;
    for i in 2..n - 2 {
        a[i] = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / h12;
    }
    a[n - 2] = (-v[n - 5] + 6.0 * v[n - 4] - 18.0 * v[n - 3] + 10.0 * v[n - 2] + 3.0 * v[n - 1]) / h12;
    a[n - 1] = (3.0 * v[n - 5] - 16.0 * v[n - 4] + 36.0 * v[n - 3] - 48.0 * v[n - 2] + 25.0 * v[n - 1]) / h12;
    Ok(a)
}

/// Parameters of trajectory cleaning and decision reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    /// Sampling period of the data, seconds.
    pub frame_dt: f64,
    /// Implied acceleration (m/s²) above which a velocity sample is bad.
    pub jump_threshold: f64,
    /// Decision period, seconds.
    pub decision_dt: f64,
    /// Circumference for data recorded on a circular road.
    pub road_length: Option<f64>,
    pub sensing_range: f64,
    pub actions: AccelerationModel,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            frame_dt: 0.1,
            jump_threshold: 10.0,
            decision_dt: 1.0,
            road_length: None,
            sensing_range: 100.0,
            actions: AccelerationModel::default(),
        }
    }
}

impl IngestConfig {
    pub fn frames_per_decision(&self) -> usize {
        (libm::round(self.decision_dt / self.frame_dt) as usize).max(1)
    }
}

/// Repair velocities and fill accelerations. Tracks that cannot be
/// cleaned are returned with the reason.
pub fn clean_tracks(tracks: Vec<Track>, cfg: &IngestConfig) -> (Vec<Track>, Vec<(u64, IngestError)>) {
    let mut kept = Vec::with_capacity(tracks.len());
    let mut dropped = Vec::new();
    for mut t in tracks {
        let result = repair_velocities(&t.v, cfg.frame_dt, cfg.jump_threshold)
            .and_then(|v| recompute_accelerations(&v, cfg.frame_dt).map(|a| (v, a)));
        match result {
            Ok((v, a)) => {
                t.v = v;
                t.a = a;
                kept.push(t);
            }
            Err(e) => dropped.push((t.vehicle_id, e)),
        }
    }
    (kept, dropped)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledStep {
    pub frame: i64,
    pub observation: RawObservation,
    pub state: u64,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriverSequence {
    pub driver_id: u64,
    pub steps: Vec<LabeledStep>,
}

/// Action realized by a track over `[i, i + k]`: a lane change if the lane
/// differs at the end, otherwise the class of the mean acceleration over
/// the frames whose stencils stay inside the interval.
fn label(track: &Track, i: usize, k: usize, model: &AccelerationModel) -> Action {
    let (start, end) = (track.lane[i], track.lane[i + k]);
    if end != start {
        let dir = if end > start { LaneChange::Left } else { LaneChange::Right };
        return model.classify(0.0, Some(dir));
    }
    let (lo, hi) = if k >= 4 { (i + 2, i + k - 2) } else { (i, i + k) };
    let mean = track.a[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
    model.classify(mean, None)
}

/// Every vehicle's observation and subsequent action at each decision
/// tick. Ticks fall on frames a whole decision period apart, counted from
/// the earliest frame in the data; a vehicle contributes a tick when it is
/// recorded at both its start and end.
pub fn reconstruct_states_actions(tracks: &[Track], cfg: &IngestConfig) -> Vec<DriverSequence> {
    let k = cfg.frames_per_decision();
    let mut per_driver: BTreeMap<u64, Vec<LabeledStep>> = BTreeMap::new();
    let Some(first) = tracks.iter().map(|t| t.start_frame).min() else {
        return Vec::new();
    };
    let last = tracks.iter().map(|t| t.end_frame()).max().unwrap_or(first);
    let mut frame = first;
    while frame + k as i64 <= last {
        let present: Vec<(usize, usize)> = tracks
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.a.is_empty())
            .filter_map(|(ti, t)| t.index_of(frame).map(|i| (ti, i)))
            .collect();
        let bodies: Vec<Body> = present
            .iter()
            .map(|&(ti, i)| Body {
                id: ti as u32,
                x: tracks[ti].y[i],
                lane: tracks[ti].lane[i],
                v: tracks[ti].v[i],
            })
            .collect();
        for (slot, &(ti, i)) in present.iter().enumerate() {
            let t = &tracks[ti];
            if i + k >= t.len() || !(1..=LANES).contains(&t.lane[i]) {
                continue;
            }
            let observation = observe_bodies(&bodies[slot], &bodies, cfg.road_length, cfg.sensing_range);
            let state = bin_observation(&observation).index();
            per_driver.entry(t.vehicle_id).or_default().push(LabeledStep {
                frame,
                observation,
                state,
                action: label(t, i, k, &cfg.actions),
            });
        }
        frame += k as i64;
    }
    per_driver
        .into_iter()
        .map(|(driver_id, steps)| DriverSequence { driver_id, steps })
        .collect()
}

/// Raise entries below `floor` to exactly `floor` and rescale the others
/// to fill the remaining mass, repeating until no entry falls below.
pub fn floor_and_normalize(p: &[f64], floor: f64) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    let mut q: Vec<f64> = if total > 0.0 {
        p.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / p.len() as f64; p.len()]
    };
    if floor * p.len() as f64 >= 1.0 {
        return vec![1.0 / p.len() as f64; p.len()];
    }
    let mut fixed = vec![false; q.len()];
    loop {
        let mut changed = false;
        for (v, f) in q.iter_mut().zip(fixed.iter_mut()) {
            if !*f && *v < floor {
                *f = true;
                changed = true;
            }
        }
        let pinned = fixed.iter().filter(|&&f| f).count() as f64;
        let free_mass: f64 = q.iter().zip(&fixed).filter(|(_, f)| !**f).map(|(v, _)| v).sum();
        let target = 1.0 - floor * pinned;
        for (v, f) in q.iter_mut().zip(&fixed) {
            *v = if *f { floor } else { *v * target / free_mass };
        }
        if !changed {
            return q;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    pub state_index: u64,
    pub visits: u64,
    pub counts: [u64; Action::COUNT],
    pub pdf: [f64; Action::COUNT],
    /// The continuous observations behind the visits.
    pub probes: Vec<RawObservation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPolicy {
    pub driver_id: u64,
    /// Ascending by state index.
    pub states: Vec<StateEntry>,
}

impl EmpiricalPolicy {
    pub fn state(&self, index: u64) -> Option<&StateEntry> {
        self.states
            .binary_search_by_key(&index, |s| s.state_index)
            .ok()
            .map(|i| &self.states[i])
    }
}

/// Action frequencies of every visited state, floored and renormalized.
pub fn build_empirical_policy(seq: &DriverSequence) -> EmpiricalPolicy {
    let mut states: BTreeMap<u64, StateEntry> = BTreeMap::new();
    for step in &seq.steps {
        let e = states.entry(step.state).or_insert_with(|| StateEntry {
            state_index: step.state,
            visits: 0,
            counts: [0; Action::COUNT],
            pdf: [0.0; Action::COUNT],
            probes: Vec::new(),
        });
        e.visits += 1;
        e.counts[step.action.index()] += 1;
        e.probes.push(step.observation);
    }
    for e in states.values_mut() {
        let freq: Vec<f64> = e.counts.iter().map(|&c| c as f64).collect();
        e.pdf.copy_from_slice(&floor_and_normalize(&freq, PDF_FLOOR));
    }
    EmpiricalPolicy {
        driver_id: seq.driver_id,
        states: states.into_values().collect(),
    }
}
