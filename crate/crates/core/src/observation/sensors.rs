//! Scripted stand-ins for the physical and virtual sensors.

use serde::{Deserialize, Serialize};

use super::{CategorySet, Fact, SensorReading};

/// A fact that a sensor reports on every tick in `from..to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub sensor: String,
    /// Index of the sensor in registry order; sets the in-period offset.
    pub sensor_index: usize,
    pub from: u32,
    pub to: u32,
    pub fact: Fact,
}

/// Tick-indexed schedule of facts for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorScript {
    pub start_ms: u64,
    pub period_ms: u64,
    pub duration: u32,
    /// Emission order within a tick follows segment order.
    pub segments: Vec<Segment>,
}

impl SensorScript {
    /// Millisecond timestamp of a reading emitted at `tick`. Always lands
    /// strictly inside the period that ends at the next clock edge.
    pub fn timestamp(&self, tick: u32, sensor_index: usize) -> u64 {
        let offset = if self.period_ms > 1 {
            1 + (sensor_index as u64) % (self.period_ms - 1)
        } else {
            0
        };
        self.start_ms + u64::from(tick) * self.period_ms + offset
    }

    /// Clock edge that closes `tick`'s period.
    pub fn edge(&self, tick: u32) -> u64 {
        self.start_ms + (u64::from(tick) + 1) * self.period_ms
    }
}

/// Readings due at `tick` from sensors whose category is in `group`.
/// Out-of-group facts are dropped, as if the sensor were not installed.
/// Ticks outside the script produce nothing.
pub fn step_sensors(script: &SensorScript, tick: u32, group: CategorySet) -> Vec<SensorReading> {
    if tick >= script.duration {
        return Vec::new();
    }
    let mut out: Vec<SensorReading> = Vec::new();
    for seg in &script.segments {
        if tick < seg.from || tick >= seg.to || !group.contains(seg.fact.category) {
            continue;
        }
        let k = out.iter().filter(|r| r.sensor == seg.sensor).count() as u64;
        out.push(SensorReading {
            sensor: seg.sensor.clone(),
            category: seg.fact.category,
            timestamp: script.timestamp(tick, seg.sensor_index),
            sequence: u64::from(tick) * 64 + k,
            fact: seg.fact.clone(),
        });
    }
    out
}
