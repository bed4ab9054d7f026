//! Simulation harness: scripted episodes over the occupation x disruption x
//! sensor-group test set, the accuracy matrix, and preference learning runs.

mod report;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{DisruptionCase, FeedbackPolicy, Model, Occupation};
use crate::decision::{ActuatorRegistry, ContextKey, NO_ACTION};
use crate::engine::{DecisionRecord, Engine};
use crate::error::{Error, Result};
use crate::observation::{
    step_sensors, CategorySet, Need, ObservationCategory, PhysioState, Segment, SensorScript,
};
use crate::personalization::{simulated_feedback, FeedbackSign, PreferenceStore, SimulatedUser};

pub use report::{
    log_file_name, render_matrix_summary, write_logs, write_matrix_csv, write_matrix_reports,
    write_trajectory_csv,
};

const MINUTE_MS: u64 = 60_000;

/// A set of observation categories the engine is allowed to see.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensorGroup {
    pub label: String,
    pub categories: CategorySet,
}

impl SensorGroup {
    const STANDARD: [&'static [ObservationCategory]; 10] = {
        use ObservationCategory::*;
        [
            &[PE],
            &[VU],
            &[PU],
            &[VU, VE],
            &[PE, VU],
            &[PU, PE],
            &[PU, VU, VE],
            &[PU, PE, VU],
            &[PU, PE, VE],
            &[PE, PU, VE, VU],
        ]
    };

    /// Group `S<n>` for `n` in 1..=10.
    pub fn standard(n: usize) -> Option<SensorGroup> {
        let cats = Self::STANDARD.get(n.checked_sub(1)?)?;
        Some(SensorGroup {
            label: format!("S{n}"),
            categories: cats.iter().copied().collect(),
        })
    }

    pub fn all_standard() -> Vec<SensorGroup> {
        (1..=10).filter_map(Self::standard).collect()
    }

    pub fn custom(categories: CategorySet) -> SensorGroup {
        SensorGroup {
            label: categories.to_string(),
            categories,
        }
    }
}

impl fmt::Display for SensorGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl FromStr for SensorGroup {
    type Err = Error;

    /// `S1`..`S10`, or a category list such as `PU-VE`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(n) = s.strip_prefix('S').or_else(|| s.strip_prefix('s')) {
            let n: usize = n
                .parse()
                .map_err(|_| Error::config(format!("unknown sensor group `{s}`")))?;
            return Self::standard(n)
                .ok_or_else(|| Error::config(format!("unknown sensor group `{s}`")));
        }
        let cats: CategorySet = s
            .parse()
            .map_err(|_| Error::config(format!("unknown sensor group `{s}`")))?;
        if cats == CategorySet::EMPTY {
            return Err(Error::config("a sensor group needs at least one category"));
        }
        Ok(Self::custom(cats))
    }
}

/// Parses a comma-separated group list; `S<a>..S<b>` expands to a range.
pub fn parse_groups(spec: &str) -> Result<Vec<SensorGroup>> {
    let mut out: Vec<SensorGroup> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let expanded = match item.split_once("..") {
            Some((a, b)) => {
                let bound = |x: &str| -> Result<usize> {
                    x.trim()
                        .trim_start_matches(['S', 's'])
                        .parse()
                        .map_err(|_| Error::config(format!("bad group range `{item}`")))
                };
                let (lo, hi) = (bound(a)?, bound(b)?);
                if lo == 0 || hi > 10 || lo > hi {
                    return Err(Error::config(format!("bad group range `{item}`")));
                }
                (lo..=hi).filter_map(SensorGroup::standard).collect()
            }
            None => vec![item.parse()?],
        };
        for g in expanded {
            if !out.contains(&g) {
                out.push(g);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::config("no sensor groups given"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub occupation: String,
    pub disruption: String,
    pub group: SensorGroup,
}

/// Every (disruption, occupation, group) cell in that nesting order.
pub fn build_test_set(model: &Model, groups: &[SensorGroup]) -> Vec<Scenario> {
    let mut out =
        Vec::with_capacity(model.disruptions.len() * model.occupations.len() * groups.len());
    for d in &model.disruptions {
        for o in &model.occupations {
            for g in groups {
                out.push(Scenario {
                    occupation: o.id.clone(),
                    disruption: d.disruption.id.clone(),
                    group: g.clone(),
                });
            }
        }
    }
    out
}

/// The correct response: the canonical assist whenever the user is busy,
/// no action when idle.
pub fn ground_truth(occupation: &Occupation, case: &DisruptionCase) -> String {
    if occupation.occupied {
        case.disruption.assist.clone()
    } else {
        NO_ACTION.to_owned()
    }
}

fn lookup<'m>(
    model: &'m Model,
    scenario: &Scenario,
) -> Result<(&'m Occupation, &'m DisruptionCase)> {
    let o = model
        .occupation(&scenario.occupation)
        .ok_or_else(|| Error::config(format!("unknown occupation `{}`", scenario.occupation)))?;
    let d = model
        .disruption(&scenario.disruption)
        .ok_or_else(|| Error::config(format!("unknown disruption `{}`", scenario.disruption)))?;
    Ok((o, d))
}

/// Sensor schedule for one episode: baseline and occupation facts throughout,
/// disruption overlay facts during the disruption window.
pub fn build_script(model: &Model, scenario: &Scenario) -> Result<SensorScript> {
    let (occ, case) = lookup(model, scenario)?;
    let h = &model.config.harness;
    let (on, off) = (h.onset_tick, h.onset_tick + h.window_ticks);
    let mut segments = Vec::new();
    for (idx, sensor) in model.registry.sensors().iter().enumerate() {
        let of_sensor = |facts: &[crate::observation::Fact]| {
            facts
                .iter()
                .find(|f| {
                    model
                        .registry
                        .sensor_of(&f.id)
                        .is_some_and(|s| s.id == sensor.id)
                })
                .cloned()
        };
        let base = of_sensor(&occ.facts).or_else(|| of_sensor(&model.baseline));
        let overlay = of_sensor(&case.overlay);
        let mut push = |from: u32, to: u32, fact: &crate::observation::Fact| {
            if from < to {
                segments.push(Segment {
                    sensor: sensor.id.clone(),
                    sensor_index: idx,
                    from,
                    to,
                    fact: fact.clone(),
                });
            }
        };
        match (&base, &overlay) {
            (base, Some(ov)) => {
                if let Some(b) = base {
                    push(0, on, b);
                }
                push(on, off, ov);
                if let Some(b) = base {
                    push(off, h.episode_ticks, b);
                }
            }
            (Some(b), None) => push(0, h.episode_ticks, b),
            (None, None) => {}
        }
    }
    Ok(SensorScript {
        start_ms: model.start_ms(),
        period_ms: model.period_ms(),
        duration: h.episode_ticks,
        segments,
    })
}

/// Physiological timers at episode start. A disruption's onset need is
/// aligned so that it becomes active in the onset tick's period.
pub fn initial_physio(model: &Model, case: &DisruptionCase) -> PhysioState {
    let p = &model.config.physio;
    let t = model.thresholds;
    let start = model.start_ms();
    let onset = start + u64::from(model.config.harness.onset_tick) * model.period_ms();
    let mut drink = start.saturating_sub(p.drink_ago_min * MINUTE_MS);
    let mut eat = start.saturating_sub(p.eat_ago_min * MINUTE_MS);
    let mut work = start.saturating_sub(p.work_ago_min * MINUTE_MS);
    match case.onset_need {
        Some(Need::Thirst) => drink = onset.saturating_sub(t.thirst_ms),
        Some(Need::Hunger) => eat = onset.saturating_sub(t.hunger_ms),
        Some(Need::Fatigue) => work = onset.saturating_sub(t.fatigue_work_ms),
        None => {}
    }
    PhysioState::new(drink, eat, work, t)
}

/// Everything that happened in one episode, restricted to the scripted
/// disruption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub disruption: String,
    pub occupation: String,
    pub group: String,
    pub trial: u32,
    pub ground_truth: String,
    pub records: Vec<DecisionRecord>,
}

impl EpisodeLog {
    pub fn correct(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.decision.action_label() == self.ground_truth)
            .count()
    }
}

/// Fraction of decisions matching the ground truth; `None` without decisions.
pub fn accuracy(log: &EpisodeLog) -> Option<f64> {
    if log.records.is_empty() {
        return None;
    }
    Some(log.correct() as f64 / log.records.len() as f64)
}

/// Per-episode random stream, independent of cell evaluation order.
pub fn episode_seed(seed: u64, cell: usize, trial: u32) -> u64 {
    let mut z =
        seed ^ (cell as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ u64::from(trial).rotate_left(32);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOptions {
    pub seed: u64,
    pub trial: u32,
    pub dropout: f64,
}

/// Runs one scripted episode with the given preference store and returns
/// the log together with the updated store.
pub fn run_episode(
    model: &Model,
    scenario: &Scenario,
    prefs: PreferenceStore,
    opts: EpisodeOptions,
) -> Result<(EpisodeLog, PreferenceStore)> {
    run_episode_with(
        model,
        scenario,
        prefs,
        opts,
        ActuatorRegistry::with_mocks().0,
    )
}

pub fn run_episode_with(
    model: &Model,
    scenario: &Scenario,
    prefs: PreferenceStore,
    opts: EpisodeOptions,
    actuators: ActuatorRegistry,
) -> Result<(EpisodeLog, PreferenceStore)> {
    let (occ, case) = lookup(model, scenario)?;
    let script = build_script(model, scenario)?;
    let mut engine = Engine::new(model, initial_physio(model, case), prefs, actuators)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let h = &model.config.harness;
    let window_end = h.onset_tick + h.window_ticks;
    let mut records = Vec::new();
    for tick in 0..script.duration {
        for r in step_sensors(&script, tick, scenario.group.categories) {
            if opts.dropout > 0.0 && rng.gen::<f64>() < opts.dropout {
                continue;
            }
            engine.ingest(&r)?;
        }
        let decided = engine.tick(tick, script.edge(tick))?;
        records.extend(
            decided
                .into_iter()
                .filter(|r| r.disruption == case.disruption.id),
        );
        if tick + 1 == window_end && records.is_empty() {
            records.push(engine.decide_unobserved(tick, &case.disruption)?);
        }
    }
    let log = EpisodeLog {
        disruption: case.disruption.id.clone(),
        occupation: occ.id.clone(),
        group: scenario.group.label.clone(),
        trial: opts.trial,
        ground_truth: ground_truth(occ, case),
        records,
    };
    Ok((log, engine.into_preferences()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub disruption: String,
    pub occupation: String,
    pub group: String,
    pub accuracy: Option<f64>,
    pub decisions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyMatrix {
    pub groups: Vec<SensorGroup>,
    pub cells: Vec<MatrixCell>,
    pub logs: Vec<EpisodeLog>,
}

impl AccuracyMatrix {
    pub fn get(&self, disruption: &str, occupation: &str, group: &str) -> Option<&MatrixCell> {
        self.cells
            .iter()
            .find(|c| c.disruption == disruption && c.occupation == occupation && c.group == group)
    }

    pub fn accuracy(&self, disruption: &str, occupation: &str, group: &str) -> Option<f64> {
        self.get(disruption, occupation, group)
            .and_then(|c| c.accuracy)
    }

    /// Mean accuracy over a group's non-empty cells.
    pub fn group_mean(&self, group: &str) -> Option<f64> {
        let vals: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.group == group)
            .filter_map(|c| c.accuracy)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Evaluates every cell of the test set with fresh preferences.
pub fn run_matrix(model: &Model, groups: &[SensorGroup], seed: u64) -> Result<AccuracyMatrix> {
    let h = &model.config.harness;
    let mut cells = Vec::new();
    let mut logs = Vec::new();
    for (idx, scenario) in build_test_set(model, groups).iter().enumerate() {
        let (mut correct, mut n) = (0usize, 0usize);
        for trial in 0..h.trials {
            let opts = EpisodeOptions {
                seed: episode_seed(seed, idx, trial),
                trial,
                dropout: h.dropout,
            };
            let prefs = PreferenceStore::new(model.config.preferences);
            let (log, _) = run_episode(model, scenario, prefs, opts)?;
            correct += log.correct();
            n += log.records.len();
            logs.push(log);
        }
        cells.push(MatrixCell {
            disruption: scenario.disruption.clone(),
            occupation: scenario.occupation.clone(),
            group: scenario.group.label.clone(),
            accuracy: (n > 0).then(|| correct as f64 / n as f64),
            decisions: n,
        });
    }
    Ok(AccuracyMatrix {
        groups: groups.to_vec(),
        cells,
        logs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub round: usize,
    /// Action probability the agent used this round.
    pub probability: f64,
    pub logit: f64,
    pub feedback: FeedbackSign,
    pub acted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningTrajectory {
    pub user: String,
    pub policy: FeedbackPolicy,
    pub context: Option<ContextKey>,
    pub points: Vec<TrajectoryPoint>,
    pub store: PreferenceStore,
}

impl LearningTrajectory {
    pub fn probabilities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.probability).collect()
    }
}

/// Replays the learning scenario for `rounds` rounds with one persistent
/// preference store, applying the simulated user's feedback per `policy`.
pub fn run_learning(
    model: &Model,
    user: &SimulatedUser,
    rounds: usize,
    policy: FeedbackPolicy,
    store: Option<PreferenceStore>,
) -> Result<LearningTrajectory> {
    let l = &model.config.learning;
    let scenario = Scenario {
        occupation: l.occupation.clone(),
        disruption: l.disruption.clone(),
        group: l.group.parse()?,
    };
    let mut prefs = store.unwrap_or_else(|| PreferenceStore::new(model.config.preferences));
    let mut points = Vec::with_capacity(rounds);
    let mut context = None;
    for round in 1..=rounds {
        let feedback = simulated_feedback(user, round)?;
        let opts = EpisodeOptions {
            seed: episode_seed(0, round, 0),
            trial: 0,
            dropout: 0.0,
        };
        let (log, next) = run_episode(model, &scenario, prefs, opts)?;
        prefs = next;
        let rec = log.records.first();
        let ctx = rec.and_then(|r| r.decision.context.clone());
        let acted = rec.is_some_and(|r| r.decision.acted());
        let probability = rec.map_or(0.0, |r| r.decision.factors.p_action);
        let logit = ctx
            .as_ref()
            .map_or(model.config.preferences.initial_logit, |k| {
                prefs.logit_or_initial(k)
            });
        if let Some(k) = &ctx {
            if policy == FeedbackPolicy::EveryRound || acted {
                prefs.feedback(k, feedback);
            }
            context.get_or_insert_with(|| k.clone());
        }
        points.push(TrajectoryPoint {
            round,
            probability,
            logit,
            feedback,
            acted,
        });
    }
    Ok(LearningTrajectory {
        user: user.label.clone(),
        policy,
        context,
        points,
        store: prefs,
    })
}
