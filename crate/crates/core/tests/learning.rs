use neo_core::config::{Config, FeedbackPolicy, Model};
use neo_core::harness::run_learning;
use neo_core::personalization::{
    sigmoid, FeedbackSign, Personality, PreferenceStore, SimulatedUser,
};

fn logits(p: Personality, policy: FeedbackPolicy) -> Vec<f64> {
    let model = Model::default_model();
    run_learning(&model, &SimulatedUser::builtin(p), 10, policy, None)
        .unwrap()
        .points
        .iter()
        .map(|pt| pt.logit)
        .collect()
}

#[test]
fn logit_trajectories_every_round() {
    use FeedbackPolicy::EveryRound;
    assert_eq!(
        logits(Personality::A, EveryRound),
        [1.0, 0.0, -1.0, -2.0, -3.0, -4.0, -5.0, -6.0, -6.0, -6.0]
    );
    assert_eq!(
        logits(Personality::B, EveryRound),
        [1.0, 0.0, -1.0, -2.0, -2.0, -2.0, -2.0, -2.0, -1.0, 0.0]
    );
    assert_eq!(
        logits(Personality::C, EveryRound),
        [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 6.0, 6.0, 6.0, 6.0]
    );
}

#[test]
fn probabilities_follow_logits() {
    let model = Model::default_model();
    let t = run_learning(
        &model,
        &SimulatedUser::builtin(Personality::B),
        10,
        FeedbackPolicy::EveryRound,
        None,
    )
    .unwrap();
    for p in &t.points {
        assert!((p.probability - sigmoid(p.logit)).abs() < 1e-15);
        assert_eq!(p.acted, p.probability >= 0.5);
    }
    let key = t.context.unwrap();
    assert_eq!(key.action, "receive-visitor");
    // last round's positive feedback is applied to the returned store
    assert_eq!(t.store.logit(&key), Some(1.0));
}

#[test]
fn acted_only_freezes_once_agent_declines() {
    use FeedbackPolicy::ActedOnly;
    // rounds 1 and 2 act (0.731, 0.5) and are punished; from round 3 the
    // agent declines, so no further feedback arrives
    assert_eq!(
        logits(Personality::A, ActedOnly),
        [1.0, 0.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0]
    );
    let b = logits(Personality::B, ActedOnly);
    assert!(b[2..].iter().all(|&z| z == -1.0));
    // C acts every round either way
    assert_eq!(
        logits(Personality::C, ActedOnly),
        logits(Personality::C, FeedbackPolicy::EveryRound)
    );
}

#[test]
fn configured_policy_is_default_every_round() {
    assert_eq!(
        Config::embedded().learning.feedback_policy,
        FeedbackPolicy::EveryRound
    );
}

#[test]
fn stored_preferences_carry_over() {
    let model = Model::default_model();
    let user = SimulatedUser {
        label: "x".into(),
        schedule: vec![FeedbackSign::Negative; 3],
    };
    let first = run_learning(&model, &user, 3, FeedbackPolicy::EveryRound, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prefs.toml");
    first.store.save(&path).unwrap();
    let loaded = PreferenceStore::load(&path).unwrap();
    assert_eq!(loaded, first.store);
    let second = run_learning(&model, &user, 3, FeedbackPolicy::EveryRound, Some(loaded)).unwrap();
    assert_eq!(second.points[0].logit, -2.0);
}

#[test]
fn schedule_shorter_than_rounds_is_an_error() {
    let model = Model::default_model();
    let user = SimulatedUser {
        label: "x".into(),
        schedule: vec![FeedbackSign::Positive; 2],
    };
    assert!(run_learning(&model, &user, 3, FeedbackPolicy::EveryRound, None).is_err());
}
