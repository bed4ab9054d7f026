use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Fact, PoseLabel, HMD_FACT};
use crate::error::{Error, Result};

const MINUTE_MS: u64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Need {
    Thirst,
    Hunger,
    Fatigue,
}

impl fmt::Display for Need {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Need::Thirst => "thirst",
            Need::Hunger => "hunger",
            Need::Fatigue => "fatigue",
        })
    }
}

pub type NeedSet = BTreeSet<Need>;

/// Activation intervals, in milliseconds. A need is active only when its
/// interval strictly exceeds the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhysioThresholds {
    pub thirst_ms: u64,
    pub hunger_ms: u64,
    pub fatigue_work_ms: u64,
    pub fatigue_vr_ms: u64,
}

impl PhysioThresholds {
    pub fn from_minutes(thirst: u64, hunger: u64, work: u64, vr: u64) -> Result<Self> {
        let t = PhysioThresholds {
            thirst_ms: thirst * MINUTE_MS,
            hunger_ms: hunger * MINUTE_MS,
            fatigue_work_ms: work * MINUTE_MS,
            fatigue_vr_ms: vr * MINUTE_MS,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thirst_ms == 0
            || self.hunger_ms == 0
            || self.fatigue_work_ms == 0
            || self.fatigue_vr_ms == 0
        {
            return Err(Error::config(
                "physiological thresholds must be strictly positive",
            ));
        }
        Ok(())
    }
}

impl Default for PhysioThresholds {
    fn default() -> Self {
        PhysioThresholds::from_minutes(30, 180, 120, 20).expect("positive defaults")
    }
}

/// Timers behind thirst, hunger and fatigue. Flags are always derived from
/// the timestamps at query time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhysioState {
    pub last_drink: u64,
    pub last_eat: u64,
    pub work_start: u64,
    pub vr_session_start: Option<u64>,
    pub thresholds: PhysioThresholds,
    /// Latest timestamp applied; updates must not go behind it.
    clock: u64,
}

impl PhysioState {
    pub fn new(
        last_drink: u64,
        last_eat: u64,
        work_start: u64,
        thresholds: PhysioThresholds,
    ) -> Self {
        PhysioState {
            last_drink,
            last_eat,
            work_start,
            vr_session_start: None,
            thresholds,
            clock: last_drink.max(last_eat).max(work_start),
        }
    }

    pub fn with_vr_session(mut self, start: u64) -> Self {
        self.vr_session_start = Some(start);
        self.clock = self.clock.max(start);
        self
    }

    pub fn update(&mut self, fact: &Fact, now: u64) -> Result<()> {
        if now < self.clock {
            return Err(Error::ClockRegression {
                now,
                stored: self.clock,
            });
        }
        self.clock = now;
        match fact.pose() {
            Some(PoseLabel::Drinking) => self.last_drink = now,
            Some(PoseLabel::Eating) => self.last_eat = now,
            Some(PoseLabel::Resting) => self.work_start = now,
            _ => {}
        }
        if fact.id == HMD_FACT {
            match fact.flag() {
                Some(true) => {
                    self.vr_session_start.get_or_insert(now);
                }
                Some(false) => self.vr_session_start = None,
                None => {}
            }
        }
        Ok(())
    }

    fn exceeds(since: u64, now: u64, threshold: u64) -> bool {
        now.saturating_sub(since) > threshold
    }

    pub fn thirsty(&self, now: u64) -> bool {
        Self::exceeds(self.last_drink, now, self.thresholds.thirst_ms)
    }

    pub fn hungry(&self, now: u64) -> bool {
        Self::exceeds(self.last_eat, now, self.thresholds.hunger_ms)
    }

    pub fn work_fatigued(&self, now: u64) -> bool {
        Self::exceeds(self.work_start, now, self.thresholds.fatigue_work_ms)
    }

    pub fn vr_fatigued(&self, now: u64) -> bool {
        self.vr_session_start
            .is_some_and(|start| Self::exceeds(start, now, self.thresholds.fatigue_vr_ms))
    }

    pub fn flags(&self, now: u64) -> NeedSet {
        let mut set = NeedSet::new();
        if self.thirsty(now) {
            set.insert(Need::Thirst);
        }
        if self.hungry(now) {
            set.insert(Need::Hunger);
        }
        if self.work_fatigued(now) || self.vr_fatigued(now) {
            set.insert(Need::Fatigue);
        }
        set
    }
}

pub fn update_physio(state: &PhysioState, fact: &Fact, now: u64) -> Result<PhysioState> {
    let mut next = state.clone();
    next.update(fact, now)?;
    Ok(next)
}

pub fn physio_flags(state: &PhysioState, now: u64) -> NeedSet {
    state.flags(now)
}
