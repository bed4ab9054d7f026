use neo_core::aog::{prune_evidence, vote_occupation, Evidence, TerminalState, VoteParams};
use neo_core::config::{Config, Model};
use neo_core::harness::{run_episode, EpisodeOptions, Scenario};
use neo_core::observation::NeedSet;
use neo_core::personalization::PreferenceStore;
use proptest::prelude::*;

fn state() -> impl Strategy<Value = TerminalState> {
    prop_oneof![
        Just(TerminalState::Unknown),
        Just(TerminalState::Negative),
        Just(TerminalState::Positive)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn vote_fraction_and_threshold(states in proptest::collection::vec(state(), 22), w in 0.1f64..5.0, theta in 0.05f64..0.95) {
        let model = Model::default_model();
        let mut ev = Evidence::default();
        for ((_, t), s) in model.aog.terminals().zip(&states) {
            ev.states.insert(t.id.clone(), *s);
            ev.confidence.insert(t.id.clone(), 1.0);
        }
        let pt = prune_evidence(&model.aog, &ev, &NeedSet::new());
        // one ballot per user component
        prop_assert_eq!(pt.votes().len(), 4);
        let params = VoteParams::new(w, theta).unwrap();
        let p = vote_occupation(&pt, params);
        prop_assert!((0.0..=1.0).contains(&p.fraction));
        prop_assert_eq!(p.occupied, p.positive + p.negative > 0 && p.fraction >= theta);
        let expect = if p.positive + p.negative == 0 { 0.0 } else { p.positive as f64 / (p.positive as f64 + w * p.negative as f64) };
        prop_assert!((p.fraction - expect).abs() < 1e-12);
        // positives outrank everything at an Or-node
        let any_pos = pt.votes().iter().any(|v| v.state == TerminalState::Positive);
        prop_assert_eq!(any_pos, !p.channels.is_empty());
    }

    #[test]
    fn dropout_episodes_replay_exactly(seed in any::<u64>(), q in 0.0f64..0.6, o in 1usize..14, d in 1usize..7) {
        let model = Model::default_model();
        let sc = Scenario { occupation: format!("O{o}"), disruption: format!("D{d}"), group: "S10".parse().unwrap() };
        let opts = EpisodeOptions { seed, trial: 0, dropout: q };
        let run = || run_episode(&model, &sc, PreferenceStore::new(model.config.preferences), opts).unwrap().0;
        let a = run();
        prop_assert_eq!(&a, &run());
        prop_assert!(!a.records.is_empty());
        for r in &a.records {
            prop_assert!((r.decision.joint - r.decision.factors.joint()).abs() <= 1e-12);
        }
    }

    #[test]
    fn period_choice_keeps_default_answers(period in 2u64..60) {
        let mut cfg = Config::embedded();
        cfg.engine.period_ms = period;
        let model = Model::from_config(cfg).unwrap();
        let sc = Scenario { occupation: "O1".into(), disruption: "D1".into(), group: "S10".parse().unwrap() };
        let opts = EpisodeOptions { seed: 0, trial: 0, dropout: 0.0 };
        let log = run_episode(&model, &sc, PreferenceStore::new(model.config.preferences), opts).unwrap().0;
        prop_assert_eq!(log.records.len(), 1);
        prop_assert_eq!(log.records[0].decision.action_label(), "receive-visitor");
    }
}
