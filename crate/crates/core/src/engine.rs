//! Per-tick pipeline: readings -> data manager -> AOG parse -> occupation
//! vote -> conflict detection -> decision -> dispatch.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::aog::{prune, vote_occupation, ChannelSet, OccupationProfile, ParseTree};
use crate::config::Model;
use crate::data_manager::{AlignedSnapshot, DataManager};
use crate::decision::{
    decide, detect_conflict, ActionDecision, ActuatorRegistry, Dispatcher, Disruption,
};
use crate::error::Result;
use crate::observation::{Fact, Need, NeedSet, PhysioState, SensorReading, HMD_FACT, POSE_FACT};
use crate::personalization::PreferenceStore;

/// One decision with the observation that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub tick: u32,
    /// Clock edge at which the decision was taken.
    pub time_ms: u64,
    pub disruption: String,
    pub observed: bool,
    pub occupied: bool,
    pub fraction: f64,
    pub channels: ChannelSet,
    pub snapshot: String,
    pub decision: ActionDecision,
}

pub struct Engine<'m> {
    model: &'m Model,
    dm: DataManager,
    physio: PhysioState,
    pending_physio: Vec<(u64, u64, Fact)>,
    prefs: PreferenceStore,
    dispatcher: Dispatcher,
    actuators: ActuatorRegistry,
    latched: BTreeSet<String>,
    needs: NeedSet,
    now: u64,
    pose_sensor: Option<String>,
    hmd_sensor: Option<String>,
}

impl<'m> Engine<'m> {
    pub fn new(
        model: &'m Model,
        physio: PhysioState,
        prefs: PreferenceStore,
        actuators: ActuatorRegistry,
    ) -> Result<Self> {
        let dm = DataManager::new(
            model.registry.sensors().iter().map(|s| s.id.clone()),
            model.period_ms(),
        )?;
        Ok(Engine {
            model,
            dm,
            physio,
            pending_physio: Vec::new(),
            prefs,
            dispatcher: Dispatcher::new(model.catalog.clone()),
            actuators,
            latched: BTreeSet::new(),
            needs: NeedSet::new(),
            now: 0,
            pose_sensor: model.registry.sensor_of(POSE_FACT).map(|s| s.id.clone()),
            hmd_sensor: model.registry.sensor_of(HMD_FACT).map(|s| s.id.clone()),
        })
    }

    pub fn ingest(&mut self, reading: &SensorReading) -> Result<()> {
        self.dm.ingest(reading)?;
        if reading.fact.id == POSE_FACT || reading.fact.id == HMD_FACT {
            self.pending_physio
                .push((reading.timestamp, reading.sequence, reading.fact.clone()));
        }
        Ok(())
    }

    /// Closes the period ending at `now` and returns any decisions taken.
    pub fn tick(&mut self, tick: u32, now: u64) -> Result<Vec<DecisionRecord>> {
        let mut pending = std::mem::take(&mut self.pending_physio);
        pending.sort_by_key(|p| (p.0, p.1));
        for (ts, _, fact) in &pending {
            self.physio.update(fact, *ts)?;
        }

        let emitted = self.dm.tick(now)?.is_some();
        self.now = now;
        let needs = self.observed_needs(now);
        if !emitted && needs == self.needs {
            return Ok(Vec::new());
        }
        self.needs = needs;
        let snapshot = self
            .dm
            .last_snapshot()
            .expect("first tick always emits")
            .clone();
        let pt = prune(&self.model.aog, &snapshot, &self.needs);
        let profile = vote_occupation(&pt, self.model.vote);

        let mut out = Vec::new();
        for case in &self.model.disruptions {
            let d = &case.disruption;
            let observed = d.is_observed(&snapshot, &self.needs, self.model.aog.activity());
            if !observed {
                self.latched.remove(&d.id);
                continue;
            }
            if !self.latched.insert(d.id.clone()) {
                continue;
            }
            out.push(self.decide_one(tick, &snapshot, &pt, &profile, d, true)?);
        }
        Ok(out)
    }

    /// Records a decision for a disruption that was never observed.
    pub fn decide_unobserved(
        &mut self,
        tick: u32,
        disruption: &Disruption,
    ) -> Result<DecisionRecord> {
        let snapshot = self.dm.last_snapshot().expect("engine has ticked").clone();
        let pt = prune(&self.model.aog, &snapshot, &self.needs);
        let profile = vote_occupation(&pt, self.model.vote);
        self.decide_one(tick, &snapshot, &pt, &profile, disruption, false)
    }

    fn decide_one(
        &mut self,
        tick: u32,
        snapshot: &AlignedSnapshot,
        pt: &ParseTree,
        profile: &OccupationProfile,
        d: &Disruption,
        observed: bool,
    ) -> Result<DecisionRecord> {
        let conflict = detect_conflict(profile, d, observed);
        let mut decision = decide(
            pt,
            d,
            conflict.as_ref(),
            &mut self.prefs,
            self.model.action_threshold(),
        );
        decision.commands = self.dispatcher.dispatch(&decision, &self.actuators)?;
        Ok(DecisionRecord {
            tick,
            time_ms: self.now,
            disruption: d.id.clone(),
            observed,
            occupied: profile.occupied,
            fraction: profile.fraction,
            channels: profile.channels,
            snapshot: snapshot.digest(),
            decision,
        })
    }

    /// Physiological needs whose evidence reaches the engine: the timers run
    /// regardless, but a need only counts while its feeding sensor is live.
    fn observed_needs(&self, now: u64) -> NeedSet {
        let live = |s: &Option<String>| s.as_deref().is_some_and(|id| self.dm_active(id));
        let pose = live(&self.pose_sensor);
        let hmd = live(&self.hmd_sensor);
        let mut needs = NeedSet::new();
        if pose && self.physio.thirsty(now) {
            needs.insert(Need::Thirst);
        }
        if pose && self.physio.hungry(now) {
            needs.insert(Need::Hunger);
        }
        if (pose && self.physio.work_fatigued(now)) || (hmd && self.physio.vr_fatigued(now)) {
            needs.insert(Need::Fatigue);
        }
        needs
    }

    fn dm_active(&self, sensor: &str) -> bool {
        self.dm.last_snapshot().is_some_and(|s| s.is_active(sensor))
    }

    pub fn preferences(&self) -> &PreferenceStore {
        &self.prefs
    }

    pub fn into_preferences(self) -> PreferenceStore {
        self.prefs
    }

    pub fn physio(&self) -> &PhysioState {
        &self.physio
    }

    pub fn snapshot(&self) -> Option<&AlignedSnapshot> {
        self.dm.last_snapshot()
    }
}
