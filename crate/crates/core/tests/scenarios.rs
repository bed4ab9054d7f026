//! Hand-derived episode outcomes. Each expected fraction is worked out from
//! the terminal table in data/default.toml.

use neo_core::config::Model;
use neo_core::harness::{accuracy, run_episode, run_matrix, EpisodeOptions, Scenario, SensorGroup};
use neo_core::observation::CategorySet;
use neo_core::personalization::PreferenceStore;
use neo_core::{EpisodeLog, OccupationChannel};

fn episode(o: &str, d: &str, g: &str) -> EpisodeLog {
    let model = Model::default_model();
    let sc = Scenario {
        occupation: o.into(),
        disruption: d.into(),
        group: g.parse().unwrap(),
    };
    let opts = EpisodeOptions {
        seed: 0,
        trial: 0,
        dropout: 0.0,
    };
    run_episode(
        &model,
        &sc,
        PreferenceStore::new(model.config.preferences),
        opts,
    )
    .unwrap()
    .0
}

#[test]
fn pc_movie_with_pose_only_reads_as_idle() {
    // hands-consuming +, visual-screen/page -, speaking -, auditory unknown: 1/3
    let log = episode("O10", "D2", "S3");
    let r = &log.records[0];
    assert!(r.observed);
    assert!((r.fraction - 1.0 / 3.0).abs() < 1e-12);
    assert!(!r.occupied);
    assert_eq!(accuracy(&log), Some(0.0));
}

#[test]
fn pc_movie_with_all_sensors_is_occupied() {
    // hands +, speaking -, visual-window + (entertainment), auditory-media-window +: 3/4
    let log = episode("O10", "D2", "S10");
    let r = &log.records[0];
    assert!((r.fraction - 0.75).abs() < 1e-12);
    assert!(r.channels.contains(OccupationChannel::Hands));
    assert_eq!(r.decision.action_label(), "bring-water");
    assert_eq!(r.decision.context.as_ref().unwrap().conflict, "hands");
}

#[test]
fn vr_game_battery_needs_virtual_environment() {
    // VU alone: controller, hmd visual and hmd auditory positive, but the battery is a VE fact
    let log = episode("O2", "D5", "S2");
    assert!(!log.records[0].observed);
    assert_eq!(accuracy(&log), Some(0.0));
    let log = episode("O2", "D5", "S4");
    let r = &log.records[0];
    assert!(r.observed && r.occupied);
    assert_eq!(
        r.decision.context.as_ref().unwrap().conflict,
        "hands+visual"
    );
    assert_eq!(accuracy(&log), Some(1.0));
}

#[test]
fn interview_fatigue_tracked_from_pose() {
    let log = episode("O6", "D3", "S7");
    let r = &log.records[0];
    assert_eq!(r.tick, 50);
    assert_eq!(r.decision.action_label(), "break-reminder");
    assert_eq!(r.decision.context.as_ref().unwrap().conflict, "visual");
}

#[test]
fn resting_user_gets_no_action_in_every_group() {
    for d in ["D1", "D2", "D3", "D4", "D5", "D6"] {
        for g in SensorGroup::all_standard() {
            let log = episode("O13", d, &g.label);
            assert_eq!(log.ground_truth, "no-action");
            assert_eq!(accuracy(&log), Some(1.0), "{d} {}", g.label);
        }
    }
}

#[test]
fn spilled_water_never_parsed() {
    let log = episode("O8", "D6", "S10");
    let r = &log.records[0];
    assert!(r.observed && r.occupied);
    assert!(r.decision.context.is_none());
    assert_eq!(log.ground_truth, "cleanup");
    assert_eq!(accuracy(&log), Some(0.0));
}

#[test]
fn one_decision_per_disruption_occurrence() {
    let model = Model::default_model();
    let m = run_matrix(&model, &SensorGroup::all_standard(), 0).unwrap();
    assert!(m.cells.iter().all(|c| c.decisions == 1));
}

/// Accuracy never drops when a category is added, checked on every pair of
/// nested category subsets.
#[test]
fn monotone_over_all_nested_subsets() {
    let model = Model::default_model();
    let groups: Vec<SensorGroup> = (1u8..16)
        .map(|b| SensorGroup::custom(CategorySet::from_bits(b)))
        .collect();
    let m = run_matrix(&model, &groups, 0).unwrap();
    let mut pairs = 0;
    for s in &groups {
        for t in &groups {
            if !s.categories.is_subset(t.categories) {
                continue;
            }
            pairs += 1;
            for d in &model.disruptions {
                for o in &model.occupations {
                    let a = m.accuracy(&d.disruption.id, &o.id, &s.label).unwrap();
                    let b = m.accuracy(&d.disruption.id, &o.id, &t.label).unwrap();
                    assert!(
                        b >= a,
                        "{} {}: {}={a} > {}={b}",
                        d.disruption.id,
                        o.id,
                        s.label,
                        t.label
                    );
                }
            }
        }
    }
    // 3^4 - 2^4 ordered pairs of non-empty nested subsets
    assert_eq!(pairs, 65);
}
