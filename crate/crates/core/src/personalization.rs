//! Per-context action preferences moving in fixed logit steps along a
//! sigmoid, plus the scripted users of the learning experiment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decision::ContextKey;
use crate::error::{Error, Result};

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PreferenceParams {
    pub step: f64,
    pub initial_logit: f64,
    pub min_logit: f64,
    pub max_logit: f64,
}

impl PreferenceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config(format!(
                "preference step must be > 0, got {}",
                self.step
            )));
        }
        if self.min_logit >= self.max_logit
            || !self.min_logit.is_finite()
            || !self.max_logit.is_finite()
        {
            return Err(Error::config(
                "preference bounds must satisfy min-logit < max-logit",
            ));
        }
        if !(self.min_logit..=self.max_logit).contains(&self.initial_logit) {
            return Err(Error::config(
                "initial-logit must lie within the logit bounds",
            ));
        }
        Ok(())
    }

    fn clamp(&self, z: f64) -> f64 {
        z.clamp(self.min_logit, self.max_logit)
    }
}

impl Default for PreferenceParams {
    fn default() -> Self {
        PreferenceParams {
            step: 1.0,
            initial_logit: 1.0,
            min_logit: -6.0,
            max_logit: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackSign {
    Positive,
    Neutral,
    Negative,
}

impl FeedbackSign {
    pub fn sign(self) -> f64 {
        match self {
            FeedbackSign::Positive => 1.0,
            FeedbackSign::Neutral => 0.0,
            FeedbackSign::Negative => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackSign::Positive => "positive",
            FeedbackSign::Neutral => "neutral",
            FeedbackSign::Negative => "negative",
        }
    }
}

impl fmt::Display for FeedbackSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceStore {
    params: PreferenceParams,
    logits: BTreeMap<ContextKey, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoreFile {
    params: PreferenceParams,
    #[serde(default)]
    entries: Vec<StoreEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoreEntry {
    action: String,
    conflict: String,
    logit: f64,
}

impl PreferenceStore {
    pub fn new(params: PreferenceParams) -> Self {
        PreferenceStore {
            params,
            logits: BTreeMap::new(),
        }
    }

    pub fn params(&self) -> &PreferenceParams {
        &self.params
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContextKey, f64)> {
        self.logits.iter().map(|(k, z)| (k, *z))
    }

    /// Creates the context at the initial logit if missing.
    pub fn ensure(&mut self, key: &ContextKey) -> f64 {
        *self
            .logits
            .entry(key.clone())
            .or_insert(self.params.initial_logit)
    }

    pub fn logit(&self, key: &ContextKey) -> Option<f64> {
        self.logits.get(key).copied()
    }

    pub fn logit_or_initial(&self, key: &ContextKey) -> f64 {
        self.logit(key).unwrap_or(self.params.initial_logit)
    }

    pub fn set_logit(&mut self, key: &ContextKey, z: f64) {
        self.logits.insert(key.clone(), self.params.clamp(z));
    }

    pub fn action_probability(&self, key: &ContextKey) -> f64 {
        sigmoid(self.logit_or_initial(key))
    }

    /// Moves the logit one step in the feedback's direction, stopping at
    /// the bounds. Returns the new logit.
    pub fn feedback(&mut self, key: &ContextKey, sign: FeedbackSign) -> f64 {
        let z = self.logit_or_initial(key) + self.params.step * sign.sign();
        let z = self.params.clamp(z);
        self.logits.insert(key.clone(), z);
        z
    }

    pub fn to_toml(&self) -> String {
        let file = StoreFile {
            params: self.params,
            entries: self
                .logits
                .iter()
                .map(|(k, z)| StoreEntry {
                    action: k.action.clone(),
                    conflict: k.conflict.clone(),
                    logit: *z,
                })
                .collect(),
        };
        toml::to_string(&file).expect("store serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: StoreFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        file.params.validate()?;
        let mut store = PreferenceStore::new(file.params);
        for e in file.entries {
            store.set_logit(&ContextKey::new(e.action, e.conflict), e.logit);
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Personality {
    A,
    B,
    C,
}

impl FromStr for Personality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Personality::A),
            "B" | "b" => Ok(Personality::B),
            "C" | "c" => Ok(Personality::C),
            other => Err(Error::config(format!(
                "unknown simulated user `{other}` (expected A, B or C)"
            ))),
        }
    }
}

/// A scripted user: one feedback sign per round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatedUser {
    pub label: String,
    pub schedule: Vec<FeedbackSign>,
}

impl SimulatedUser {
    /// A is always annoyed, C always satisfied, B annoyed for three rounds,
    /// neutral for four, then satisfied for three.
    pub fn builtin(p: Personality) -> Self {
        use FeedbackSign::*;
        let (label, schedule) = match p {
            Personality::A => ("A", vec![Negative; 10]),
            Personality::B => {
                let mut s = vec![Negative; 3];
                s.extend([Neutral; 4]);
                s.extend([Positive; 3]);
                ("B", s)
            }
            Personality::C => ("C", vec![Positive; 10]),
        };
        SimulatedUser {
            label: label.to_owned(),
            schedule,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let user: SimulatedUser = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if user.schedule.is_empty() {
            return Err(Error::config("feedback schedule is empty"));
        }
        Ok(user)
    }

    pub fn rounds(&self) -> usize {
        self.schedule.len()
    }
}

/// Feedback for `round` (1-based).
pub fn simulated_feedback(user: &SimulatedUser, round: usize) -> Result<FeedbackSign> {
    if round == 0 || round > user.schedule.len() {
        return Err(Error::RoundOutOfRange {
            round,
            len: user.schedule.len(),
        });
    }
    Ok(user.schedule[round - 1])
}
