use levelk_core::env::LANES;
use levelk_core::ingest::{build_tracks, clean_tracks, reconstruct_states_actions, IngestConfig};
use levelk_core::levelk::{record_rollout, PolicyRef};
use levelk_core::{AccelerationModel, Action, EnvConfig};
use std::collections::BTreeMap;

fn realized(action: Action, v0: f64, v1: f64, lane: i32, env: &EnvConfig) -> bool {
    match action {
        Action::MoveLeft => lane < LANES,
        Action::MoveRight => lane > 1,
        // neither end of the step may sit on a speed limit
        _ => v0 > 0.0 && v1 > 0.0 && v0 < env.v_max && v1 < env.v_max,
    }
}

#[test]
fn ingest_recovers_realized_simulator_decisions() {
    let env = EnvConfig {
        road_length: 200.0,
        ..EnvConfig::default()
    };
    let actions = AccelerationModel::default();
    let cfg = IngestConfig {
        road_length: Some(env.road_length),
        ..IngestConfig::default()
    };
    let rollout = record_rollout(&[PolicyRef::uniform()], 20, 60, 10, &env, &actions, 4).unwrap();
    let speeds: BTreeMap<(u64, i64), (f64, i32)> = rollout
        .records
        .iter()
        .map(|r| ((r.vehicle_id, r.frame), (r.v, r.lane)))
        .collect();
    let logged: BTreeMap<(u64, i64), _> = rollout.decisions.iter().map(|d| ((d.vehicle_id, d.frame), *d)).collect();

    let (tracks, dropped) = clean_tracks(build_tracks(&rollout.records), &cfg);
    assert!(dropped.is_empty());
    let sequences = reconstruct_states_actions(&tracks, &cfg);
    assert_eq!(sequences.len(), 20);

    let (mut checked, mut non_maintain) = (0, 0);
    for seq in &sequences {
        assert_eq!(seq.steps.len(), 60);
        for step in &seq.steps {
            let d = logged[&(seq.driver_id, step.frame)];
            assert_eq!(step.state, d.state);
            let (v0, lane) = speeds[&(seq.driver_id, step.frame)];
            let (v1, _) = speeds[&(seq.driver_id, step.frame + 10)];
            if realized(d.action, v0, v1, lane, &env) {
                assert_eq!(step.action, d.action, "driver {} frame {}", seq.driver_id, step.frame);
                checked += 1;
                non_maintain += usize::from(d.action != Action::Maintain);
            }
        }
    }
    assert!(checked > 600, "{checked}");
    assert!(non_maintain > 500, "{non_maintain}");
}

#[test]
fn rollout_is_reproducible_and_sampled_at_ten_hertz() {
    let env = EnvConfig::default();
    let actions = AccelerationModel::default();
    let a = record_rollout(&[PolicyRef::level_zero()], 5, 8, 10, &env, &actions, 9).unwrap();
    let b = record_rollout(&[PolicyRef::level_zero()], 5, 8, 10, &env, &actions, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.len(), 5 * 81);
    assert_eq!(a.decisions.len(), 5 * 8);
    assert_eq!(a.records.last().unwrap().frame, 80);
}
