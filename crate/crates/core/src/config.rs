//! Configuration tables and the validated model built from them.
//!
//! The crate ships a complete default in `data/default.toml`. User files are
//! merged over it (tables key by key, arrays replaced), so a file that only
//! sets `[harness] dropout = 0.1` is a valid configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::aog::{AogDef, AogGraph, ChannelSet, OccupationChannel, VoteParams};
use crate::decision::{ActionCatalog, ActionDef, Disruption, Trigger};
use crate::error::{Error, Result};
use crate::harness::SensorGroup;
use crate::observation::{
    ActivityMap, Fact, FactDef, Need, ObservationCategory, PhysioThresholds, Registry, SensorDef,
};
use crate::personalization::PreferenceParams;

pub const DEFAULT_TOML: &str = include_str!("../data/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EngineConfig {
    pub period_ms: u64,
    pub start_time_ms: u64,
    pub vote_weight: f64,
    pub occupation_threshold: f64,
    pub action_threshold: f64,
    #[serde(default)]
    pub sensor_confidence: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PhysioConfig {
    pub thirst_min: u64,
    pub hunger_min: u64,
    pub fatigue_work_min: u64,
    pub fatigue_vr_min: u64,
    pub drink_ago_min: u64,
    pub eat_ago_min: u64,
    pub work_ago_min: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct HarnessConfig {
    pub trials: u32,
    pub dropout: f64,
    pub episode_ticks: u32,
    pub onset_tick: u32,
    pub window_ticks: u32,
}

/// When the simulated user's feedback is applied during learning runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackPolicy {
    /// After every round, whether or not the agent acted.
    EveryRound,
    /// Only after rounds in which the agent acted.
    ActedOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct LearningConfig {
    pub occupation: String,
    pub disruption: String,
    pub group: String,
    pub feedback_policy: FeedbackPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DisruptionDef {
    pub id: String,
    pub name: String,
    pub category: ObservationCategory,
    pub demands: Vec<OccupationChannel>,
    #[serde(default = "yes")]
    pub parseable: bool,
    pub trigger: Trigger,
    pub assist: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overlay: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset_need: Option<Need>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OccupationDef {
    pub id: String,
    pub name: String,
    /// Ground truth: false for idle states, where no action is correct.
    #[serde(default = "yes")]
    pub occupied: bool,
    pub facts: Vec<String>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Config {
    pub baseline_facts: Vec<String>,
    pub engine: EngineConfig,
    pub preferences: PreferenceParams,
    pub physio: PhysioConfig,
    pub harness: HarnessConfig,
    pub learning: LearningConfig,
    pub mappings: ActivityMap,
    pub sensors: Vec<SensorDef>,
    pub facts: Vec<FactDef>,
    pub aog: AogDef,
    pub actions: Vec<ActionDef>,
    pub disruptions: Vec<DisruptionDef>,
    pub occupations: Vec<OccupationDef>,
}

impl Config {
    /// The shipped default configuration.
    pub fn embedded() -> Config {
        toml::from_str(DEFAULT_TOML).expect("embedded default configuration is valid")
    }

    /// Parses a user file merged over the embedded default.
    pub fn from_toml_str(text: &str) -> Result<Config> {
        let mut base: toml::Table = toml::from_str(DEFAULT_TOML).expect("embedded default parses");
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        merge(&mut base, user);
        toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

/// Recursive table merge; non-table values (including arrays) replace.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Command-line style overrides applied after loading.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub period_ms: Option<u64>,
    pub dropout: Option<f64>,
    pub trials: Option<u32>,
    pub vote_weight: Option<f64>,
    pub occupation_threshold: Option<f64>,
    pub action_threshold: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut Config) {
        if let Some(v) = self.period_ms {
            cfg.engine.period_ms = v;
        }
        if let Some(v) = self.dropout {
            cfg.harness.dropout = v;
        }
        if let Some(v) = self.trials {
            cfg.harness.trials = v;
        }
        if let Some(v) = self.vote_weight {
            cfg.engine.vote_weight = v;
        }
        if let Some(v) = self.occupation_threshold {
            cfg.engine.occupation_threshold = v;
        }
        if let Some(v) = self.action_threshold {
            cfg.engine.action_threshold = v;
        }
    }
}

/// A disruption with the script that stages it.
#[derive(Debug, Clone, PartialEq)]
pub struct DisruptionCase {
    pub disruption: Disruption,
    /// Facts shown for the disruption window, replacing the baseline per sensor.
    pub overlay: Vec<Fact>,
    /// Need whose timer is aligned to cross its threshold at onset.
    pub onset_need: Option<Need>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Occupation {
    pub id: String,
    pub name: String,
    pub occupied: bool,
    pub facts: Vec<Fact>,
}

/// Everything the engine and harness need, resolved and cross-checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: Config,
    pub registry: Registry,
    pub aog: AogGraph,
    pub catalog: ActionCatalog,
    pub disruptions: Vec<DisruptionCase>,
    pub occupations: Vec<Occupation>,
    pub baseline: Vec<Fact>,
    pub vote: VoteParams,
    pub thresholds: PhysioThresholds,
}

impl Model {
    pub fn from_config(config: Config) -> Result<Model> {
        let e = &config.engine;
        if e.period_ms == 0 {
            return Err(Error::config("engine.period-ms must be positive"));
        }
        if !(e.action_threshold > 0.0 && e.action_threshold <= 1.0) {
            return Err(Error::config("engine.action-threshold must lie in (0, 1]"));
        }
        let vote = VoteParams::new(e.vote_weight, e.occupation_threshold)?;
        config.preferences.validate()?;
        let p = &config.physio;
        let thresholds = PhysioThresholds::from_minutes(
            p.thirst_min,
            p.hunger_min,
            p.fatigue_work_min,
            p.fatigue_vr_min,
        )?;

        let h = &config.harness;
        if h.trials == 0 {
            return Err(Error::config("harness.trials must be at least 1"));
        }
        if !(0.0..1.0).contains(&h.dropout) {
            return Err(Error::config("harness.dropout must lie in [0, 1)"));
        }
        if h.onset_tick == 0
            || h.window_ticks == 0
            || h.onset_tick + h.window_ticks > h.episode_ticks
        {
            return Err(Error::config(
                "harness ticks must satisfy 0 < onset-tick, 0 < window-ticks, onset-tick + window-ticks <= episode-ticks",
            ));
        }

        let registry = Registry::new(config.sensors.clone(), config.facts.clone())?;
        for (sensor, c) in &e.sensor_confidence {
            if registry.sensor(sensor).is_none() {
                return Err(Error::config(format!(
                    "sensor-confidence for unknown sensor `{sensor}`"
                )));
            }
            if !(*c > 0.0 && *c <= 1.0) {
                return Err(Error::config(format!(
                    "sensor-confidence for `{sensor}` must lie in (0, 1]"
                )));
            }
        }
        let aog = AogGraph::from_def(&config.aog, &registry, &config.mappings)?
            .with_confidence(e.sensor_confidence.clone());
        let catalog = ActionCatalog::new(config.actions.clone())?;

        let baseline = parse_facts(&registry, &config.baseline_facts, "baseline-facts")?;

        let mut seen = BTreeSet::new();
        let mut occupations = Vec::new();
        for o in &config.occupations {
            if !seen.insert(o.id.clone()) {
                return Err(Error::config(format!("duplicate occupation `{}`", o.id)));
            }
            occupations.push(Occupation {
                id: o.id.clone(),
                name: o.name.clone(),
                occupied: o.occupied,
                facts: parse_facts(&registry, &o.facts, &format!("occupation {}", o.id))?,
            });
        }

        let mut seen = BTreeSet::new();
        let mut disruptions = Vec::new();
        for d in &config.disruptions {
            if !seen.insert(d.id.clone()) {
                return Err(Error::config(format!("duplicate disruption `{}`", d.id)));
            }
            let ctx = format!("disruption {}", d.id);
            match &d.trigger {
                Trigger::Need { .. } => {
                    if !matches!(
                        d.category,
                        ObservationCategory::PU | ObservationCategory::VU
                    ) {
                        return Err(Error::config(format!(
                            "{ctx}: need triggers are user-side observations"
                        )));
                    }
                }
                Trigger::Fact(m) => {
                    registry.check_matcher(m, &ctx)?;
                    let cat = registry.sensor_of(&m.fact).map(|s| s.category);
                    if cat != Some(d.category) {
                        return Err(Error::config(format!(
                            "{ctx}: trigger fact `{}` is not a {} observation",
                            m.fact, d.category
                        )));
                    }
                }
            }
            if d.parseable && !catalog.contains(&d.assist) {
                return Err(Error::config(format!(
                    "{ctx}: assist `{}` has no action bundle",
                    d.assist
                )));
            }
            if !d.parseable && catalog.contains(&d.assist) {
                return Err(Error::config(format!(
                    "{ctx}: unparseable disruptions must not map to a registered action"
                )));
            }
            if d.demands.is_empty() {
                return Err(Error::config(format!("{ctx}: empty channel demand")));
            }
            disruptions.push(DisruptionCase {
                disruption: Disruption {
                    id: d.id.clone(),
                    name: d.name.clone(),
                    category: d.category,
                    demands: d.demands.iter().copied().collect::<ChannelSet>(),
                    parseable: d.parseable,
                    trigger: d.trigger.clone(),
                    assist: d.assist.clone(),
                },
                overlay: parse_facts(&registry, &d.overlay, &ctx)?,
                onset_need: d.onset_need,
            });
        }

        let l = &config.learning;
        if !occupations.iter().any(|o| o.id == l.occupation) {
            return Err(Error::config(format!(
                "learning.occupation `{}` is not defined",
                l.occupation
            )));
        }
        if !disruptions.iter().any(|d| d.disruption.id == l.disruption) {
            return Err(Error::config(format!(
                "learning.disruption `{}` is not defined",
                l.disruption
            )));
        }
        l.group.parse::<SensorGroup>()?;

        Ok(Model {
            config,
            registry,
            aog,
            catalog,
            disruptions,
            occupations,
            baseline,
            vote,
            thresholds,
        })
    }

    /// The validated embedded default.
    pub fn default_model() -> Model {
        static DEFAULT: OnceLock<Model> = OnceLock::new();
        DEFAULT
            .get_or_init(|| {
                Model::from_config(Config::embedded()).expect("embedded default validates")
            })
            .clone()
    }

    pub fn disruption(&self, id: &str) -> Option<&DisruptionCase> {
        self.disruptions.iter().find(|d| d.disruption.id == id)
    }

    pub fn occupation(&self, id: &str) -> Option<&Occupation> {
        self.occupations.iter().find(|o| o.id == id)
    }

    pub fn period_ms(&self) -> u64 {
        self.config.engine.period_ms
    }

    /// Episode start rounded down onto the clock grid.
    pub fn start_ms(&self) -> u64 {
        let p = self.period_ms();
        self.config.engine.start_time_ms / p * p
    }

    pub fn action_threshold(&self) -> f64 {
        self.config.engine.action_threshold
    }
}

/// Parses fact specs, allowing at most one fact per sensor.
fn parse_facts(registry: &Registry, specs: &[String], ctx: &str) -> Result<Vec<Fact>> {
    let mut sensors = BTreeSet::new();
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let fact = registry
            .parse_fact(spec)
            .map_err(|e| Error::config(format!("{ctx}: {e}")))?;
        let sensor = &registry.sensor_of(&fact.id).expect("registered").id;
        if !sensors.insert(sensor.clone()) {
            return Err(Error::config(format!(
                "{ctx}: two facts for sensor `{sensor}`"
            )));
        }
        out.push(fact);
    }
    Ok(out)
}
