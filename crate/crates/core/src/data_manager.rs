//! Clock-aligned fusion of heterogeneous sensor readings.
//!
//! Readings are folded into one slot per registered sensor. On each clock
//! edge the manager marks sensors that stayed silent for the previous full
//! period as inactive, and hands a snapshot downstream only when some slot's
//! status or fact changed since the last snapshot it emitted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::observation::{Fact, SensorReading};

pub const DEFAULT_PERIOD_MS: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotStatus {
    Active,
    Inactive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorSlot {
    pub sensor: String,
    pub last_reading: Option<Fact>,
    /// Timestamp of the newest reading seen, if any.
    pub last_seen: Option<u64>,
    pub status: SlotStatus,
    #[serde(skip)]
    newest: Option<(u64, u64)>,
}

impl SensorSlot {
    fn new(sensor: String) -> Self {
        SensorSlot {
            sensor,
            last_reading: None,
            last_seen: None,
            status: SlotStatus::Inactive,
            newest: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == SlotStatus::Active
    }

    /// Fact visible to the parser: present only while the slot is active.
    pub fn live_fact(&self) -> Option<&Fact> {
        if self.is_active() {
            self.last_reading.as_ref()
        } else {
            None
        }
    }

    fn same_state(&self, other: &SensorSlot) -> bool {
        self.status == other.status && self.last_reading == other.last_reading
    }
}

/// Per-sensor state as of one clock edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedSnapshot {
    pub tick: u64,
    pub period: u64,
    pub slots: BTreeMap<String, SensorSlot>,
}

impl AlignedSnapshot {
    pub fn time_ms(&self) -> u64 {
        self.tick * self.period
    }

    pub fn slot(&self, sensor: &str) -> Option<&SensorSlot> {
        self.slots.get(sensor)
    }

    pub fn is_active(&self, sensor: &str) -> bool {
        self.slot(sensor).is_some_and(SensorSlot::is_active)
    }

    /// State equality ignoring tick and last-seen bookkeeping.
    pub fn same_state(&self, other: &AlignedSnapshot) -> bool {
        self.slots.len() == other.slots.len()
            && self
                .slots
                .iter()
                .zip(other.slots.iter())
                .all(|((ka, a), (kb, b))| ka == kb && a.same_state(b))
    }

    /// Short stable digest of slot statuses and facts.
    pub fn digest(&self) -> String {
        let mut canon = String::new();
        for (id, slot) in &self.slots {
            let fact = slot
                .last_reading
                .as_ref()
                .map(ToString::to_string)
                .unwrap_or_default();
            let _ = writeln!(canon, "{id}|{:?}|{fact}", slot.status);
        }
        let hash = Sha256::digest(canon.as_bytes());
        hash.iter()
            .take(8)
            .fold(String::with_capacity(16), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}

#[derive(Debug, Clone)]
pub struct DataManager {
    period: u64,
    slots: BTreeMap<String, SensorSlot>,
    last_edge: Option<u64>,
    last_emitted: Option<AlignedSnapshot>,
}

impl DataManager {
    pub fn new<I, S>(sensors: I, period: u64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if period == 0 {
            return Err(Error::config("clock period must be positive"));
        }
        let slots = sensors
            .into_iter()
            .map(|s| {
                let id = s.into();
                (id.clone(), SensorSlot::new(id))
            })
            .collect();
        Ok(DataManager {
            period,
            slots,
            last_edge: None,
            last_emitted: None,
        })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn ingest(&mut self, reading: &SensorReading) -> Result<()> {
        let slot = self
            .slots
            .get_mut(&reading.sensor)
            .ok_or_else(|| Error::UnregisteredSensor(reading.sensor.clone()))?;
        let key = (reading.timestamp, reading.sequence);
        if slot.newest.is_none_or(|newest| key > newest) {
            slot.newest = Some(key);
            slot.last_reading = Some(reading.fact.clone());
        }
        slot.last_seen = Some(
            slot.last_seen
                .map_or(reading.timestamp, |t| t.max(reading.timestamp)),
        );
        Ok(())
    }

    /// Evaluates the clock edge at `now`. Returns a snapshot only when the
    /// state differs from the last one emitted (the first edge always emits).
    pub fn tick(&mut self, now: u64) -> Result<Option<AlignedSnapshot>> {
        if !now.is_multiple_of(self.period) {
            return Err(Error::OffGrid {
                now,
                period: self.period,
            });
        }
        if let Some(prev) = self.last_edge {
            if now <= prev {
                return Err(Error::ClockRegression { now, stored: prev });
            }
        }
        self.last_edge = Some(now);
        let window_start = now.saturating_sub(self.period);
        for slot in self.slots.values_mut() {
            slot.status = match slot.last_seen {
                Some(t) if t >= window_start => SlotStatus::Active,
                _ => SlotStatus::Inactive,
            };
        }
        let snapshot = AlignedSnapshot {
            tick: now / self.period,
            period: self.period,
            slots: self.slots.clone(),
        };
        let changed = self
            .last_emitted
            .as_ref()
            .is_none_or(|prev| !prev.same_state(&snapshot));
        if changed {
            self.last_emitted = Some(snapshot.clone());
            Ok(Some(snapshot))
        } else {
            Ok(None)
        }
    }

    pub fn last_snapshot(&self) -> Option<&AlignedSnapshot> {
        self.last_emitted.as_ref()
    }
}

/// Thread-safe handle: several producers may ingest while one consumer ticks.
#[derive(Debug, Clone)]
pub struct SharedDataManager {
    inner: Arc<Mutex<DataManager>>,
}

impl SharedDataManager {
    pub fn new(manager: DataManager) -> Self {
        SharedDataManager {
            inner: Arc::new(Mutex::new(manager)),
        }
    }

    pub fn ingest(&self, reading: &SensorReading) -> Result<()> {
        self.inner
            .lock()
            .expect("data manager lock poisoned")
            .ingest(reading)
    }

    pub fn tick(&self, now: u64) -> Result<Option<AlignedSnapshot>> {
        self.inner
            .lock()
            .expect("data manager lock poisoned")
            .tick(now)
    }
}
