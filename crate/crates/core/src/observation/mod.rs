//! Observation vocabulary shared by every stage of the pipeline.
//!
//! Perception is symbolic: a sensor never emits pixels or audio, only a
//! [`Fact`] drawn from a closed registry. Each sensor belongs to exactly one
//! [`ObservationCategory`], and every fact inherits the category of the
//! sensor that produces it.

mod physio;
mod sensors;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use physio::{physio_flags, update_physio, Need, NeedSet, PhysioState, PhysioThresholds};
pub use sensors::{step_sensors, Segment, SensorScript};

/// Fact id carrying the user's pose label.
pub const POSE_FACT: &str = "pose";
/// Fact id carrying HMD activity; drives the VR session timer.
pub const HMD_FACT: &str = "hmd-activity";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObservationCategory {
    /// Physical environment.
    PE,
    /// Physical user.
    PU,
    /// Virtual environment.
    VE,
    /// Virtual user.
    VU,
}

impl ObservationCategory {
    pub const ALL: [ObservationCategory; 4] = [Self::PE, Self::PU, Self::VE, Self::VU];

    fn bit(self) -> u8 {
        match self {
            Self::PE => 1,
            Self::PU => 2,
            Self::VE => 4,
            Self::VU => 8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PE => "PE",
            Self::PU => "PU",
            Self::VE => "VE",
            Self::VU => "VU",
        }
    }

    pub fn is_physical(self) -> bool {
        matches!(self, Self::PE | Self::PU)
    }
}

impl fmt::Display for ObservationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObservationCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "PE" => Ok(Self::PE),
            "PU" => Ok(Self::PU),
            "VE" => Ok(Self::VE),
            "VU" => Ok(Self::VU),
            other => Err(Error::config(format!(
                "unknown observation category `{other}`"
            ))),
        }
    }
}

/// A subset of the four observation categories.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(try_from = "String", into = "String")]
pub struct CategorySet(u8);

impl CategorySet {
    pub const EMPTY: CategorySet = CategorySet(0);
    pub const ALL: CategorySet = CategorySet(0b1111);

    pub fn from_bits(bits: u8) -> Self {
        CategorySet(bits & 0b1111)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, cat: ObservationCategory) -> bool {
        self.0 & cat.bit() != 0
    }

    pub fn insert(&mut self, cat: ObservationCategory) {
        self.0 |= cat.bit();
    }

    pub fn is_subset(self, other: CategorySet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = ObservationCategory> {
        ObservationCategory::ALL
            .into_iter()
            .filter(move |c| self.contains(*c))
    }
}

impl FromIterator<ObservationCategory> for CategorySet {
    fn from_iter<I: IntoIterator<Item = ObservationCategory>>(iter: I) -> Self {
        let mut set = CategorySet::EMPTY;
        for c in iter {
            set.insert(c);
        }
        set
    }
}

impl fmt::Display for CategorySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return f.write_str("none");
        }
        let parts: Vec<&str> = self.iter().map(ObservationCategory::as_str).collect();
        f.write_str(&parts.join("-"))
    }
}

impl TryFrom<String> for CategorySet {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CategorySet> for String {
    fn from(c: CategorySet) -> String {
        c.to_string()
    }
}

impl FromStr for CategorySet {
    type Err = Error;

    /// Parses `PU-VE` style lists; `none` is the empty set.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "none" {
            return Ok(CategorySet::EMPTY);
        }
        s.split(['-', '+']).map(str::parse).collect()
    }
}

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($label => Ok($name::$variant),)+
                    other => Err(Error::config(format!(
                        concat!("unknown ", stringify!($name), " `{}`"), other
                    ))),
                }
            }
        }
    };
}

label_enum!(
    /// The nine pose classes reported by the user-facing camera.
    PoseLabel {
        UsingDevice => "using-device",
        UsingKeyboard => "using-keyboard",
        UsingMouse => "using-mouse",
        Writing => "writing",
        Reading => "reading",
        UsingMobileDevice => "using-mobile-device",
        Resting => "resting",
        Drinking => "drinking",
        Eating => "eating",
    }
);

label_enum!(
    /// Coarse class of the focused PC window or VR scene.
    ActivityClass {
        Work => "work",
        Entertainment => "entertainment",
        Others => "others",
    }
);

label_enum!(
    Environment {
        Pc => "pc",
        Vr => "vr",
    }
);

/// Window/scene id to [`ActivityClass`] lookup. Unregistered ids map to
/// [`ActivityClass::Others`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityMap {
    #[serde(default)]
    pub pc: BTreeMap<String, ActivityClass>,
    #[serde(default)]
    pub vr: BTreeMap<String, ActivityClass>,
}

impl ActivityMap {
    pub fn map_activity(&self, env: Environment, id: &str) -> ActivityClass {
        let table = match env {
            Environment::Pc => &self.pc,
            Environment::Vr => &self.vr,
        };
        table.get(id).copied().unwrap_or(ActivityClass::Others)
    }
}

/// Free-function form of [`ActivityMap::map_activity`].
pub fn map_activity(map: &ActivityMap, env: Environment, id: &str) -> ActivityClass {
    map.map_activity(env, id)
}

/// Payload domain of a registered fact id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadKind {
    None,
    Pose,
    Flag,
    Percent,
    PcWindow,
    VrScene,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Payload {
    None,
    Pose(PoseLabel),
    Flag(bool),
    Percent(u8),
    Window(String),
    Scene(String),
}

impl Payload {
    fn kind(&self) -> PayloadKind {
        match self {
            Payload::None => PayloadKind::None,
            Payload::Pose(_) => PayloadKind::Pose,
            Payload::Flag(_) => PayloadKind::Flag,
            Payload::Percent(_) => PayloadKind::Percent,
            Payload::Window(_) => PayloadKind::PcWindow,
            Payload::Scene(_) => PayloadKind::VrScene,
        }
    }
}

/// One symbolic observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fact {
    pub id: String,
    pub category: ObservationCategory,
    pub payload: Payload,
}

impl Fact {
    /// Label used by matchers: the pose name, `true`/`false`, the activity
    /// class of a window or scene, or the percent value.
    pub fn value_label(&self, map: &ActivityMap) -> Option<String> {
        match &self.payload {
            Payload::None => None,
            Payload::Pose(p) => Some(p.as_str().to_owned()),
            Payload::Flag(b) => Some(b.to_string()),
            Payload::Percent(v) => Some(v.to_string()),
            Payload::Window(id) => Some(map.map_activity(Environment::Pc, id).as_str().to_owned()),
            Payload::Scene(id) => Some(map.map_activity(Environment::Vr, id).as_str().to_owned()),
        }
    }

    pub fn pose(&self) -> Option<PoseLabel> {
        match self.payload {
            Payload::Pose(p) => Some(p),
            _ => None,
        }
    }

    pub fn flag(&self) -> Option<bool> {
        match self.payload {
            Payload::Flag(b) => Some(b),
            _ => None,
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.payload {
            Payload::None => write!(f, "{}", self.id),
            Payload::Pose(p) => write!(f, "{}={p}", self.id),
            Payload::Flag(b) => write!(f, "{}={b}", self.id),
            Payload::Percent(v) => write!(f, "{}={v}", self.id),
            Payload::Window(w) | Payload::Scene(w) => write!(f, "{}={w}", self.id),
        }
    }
}

/// One timestamped reading from one sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorReading {
    pub sensor: String,
    pub category: ObservationCategory,
    /// Virtual time in milliseconds.
    pub timestamp: u64,
    /// Strictly increasing per sensor.
    pub sequence: u64,
    pub fact: Fact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorDef {
    pub id: String,
    pub category: ObservationCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactDef {
    pub id: String,
    pub sensor: String,
    pub payload: PayloadKind,
}

/// Predicate over a fact: matching id, then either a value list (empty
/// means any value) or a `below` bound for percent payloads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactMatcher {
    pub fact: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub below: Option<u8>,
}

impl FactMatcher {
    pub fn new(fact: impl Into<String>) -> Self {
        FactMatcher {
            fact: fact.into(),
            values: Vec::new(),
            below: None,
        }
    }

    pub fn with_values<I, S>(mut self, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.values = values.into_iter().map(Into::into).collect();
        self
    }

    pub fn matches(&self, fact: &Fact, map: &ActivityMap) -> bool {
        if fact.id != self.fact {
            return false;
        }
        if let Some(bound) = self.below {
            return matches!(fact.payload, Payload::Percent(v) if v < bound);
        }
        if self.values.is_empty() {
            return true;
        }
        fact.value_label(map)
            .is_some_and(|label| self.values.contains(&label))
    }
}

/// Closed registry of sensors and the fact ids they emit.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    sensors: Vec<SensorDef>,
    facts: BTreeMap<String, FactDef>,
}

impl Registry {
    pub fn new(sensors: Vec<SensorDef>, facts: Vec<FactDef>) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (i, s) in sensors.iter().enumerate() {
            if seen.insert(s.id.clone(), i).is_some() {
                return Err(Error::config(format!("duplicate sensor `{}`", s.id)));
            }
        }
        let mut table = BTreeMap::new();
        for f in facts {
            if !seen.contains_key(&f.sensor) {
                return Err(Error::config(format!(
                    "fact `{}` bound to unknown sensor `{}`",
                    f.id, f.sensor
                )));
            }
            if table.contains_key(&f.id) {
                return Err(Error::config(format!("duplicate fact `{}`", f.id)));
            }
            table.insert(f.id.clone(), f);
        }
        Ok(Registry {
            sensors,
            facts: table,
        })
    }

    pub fn sensors(&self) -> &[SensorDef] {
        &self.sensors
    }

    pub fn sensor(&self, id: &str) -> Option<&SensorDef> {
        self.sensors.iter().find(|s| s.id == id)
    }

    pub fn sensor_index(&self, id: &str) -> Option<usize> {
        self.sensors.iter().position(|s| s.id == id)
    }

    pub fn fact_def(&self, id: &str) -> Option<&FactDef> {
        self.facts.get(id)
    }

    pub fn facts(&self) -> impl Iterator<Item = &FactDef> {
        self.facts.values()
    }

    /// Sensor that emits `fact_id`.
    pub fn sensor_of(&self, fact_id: &str) -> Option<&SensorDef> {
        self.facts.get(fact_id).and_then(|f| self.sensor(&f.sensor))
    }

    /// Builds a fact, checking the id and payload domain.
    pub fn fact(&self, id: &str, payload: Payload) -> Result<Fact> {
        let def = self
            .facts
            .get(id)
            .ok_or_else(|| Error::config(format!("unknown fact id `{id}`")))?;
        if payload.kind() != def.payload {
            return Err(Error::config(format!(
                "fact `{id}` expects a {:?} payload, got {:?}",
                def.payload,
                payload.kind()
            )));
        }
        let category = self
            .sensor(&def.sensor)
            .map(|s| s.category)
            .expect("validated");
        Ok(Fact {
            id: id.to_owned(),
            category,
            payload,
        })
    }

    /// Parses `id` or `id=value`.
    pub fn parse_fact(&self, spec: &str) -> Result<Fact> {
        let (id, value) = match spec.split_once('=') {
            Some((id, v)) => (id.trim(), Some(v.trim())),
            None => (spec.trim(), None),
        };
        let def = self
            .facts
            .get(id)
            .ok_or_else(|| Error::config(format!("unknown fact id `{id}` in `{spec}`")))?;
        let need_value =
            || value.ok_or_else(|| Error::config(format!("fact `{id}` needs a value in `{spec}`")));
        let payload = match def.payload {
            PayloadKind::None => {
                if value.is_some() {
                    return Err(Error::config(format!("fact `{id}` takes no value")));
                }
                Payload::None
            }
            PayloadKind::Pose => Payload::Pose(need_value()?.parse()?),
            PayloadKind::Flag => Payload::Flag(match need_value()? {
                "true" => true,
                "false" => false,
                other => return Err(Error::config(format!("bad flag `{other}` for `{id}`"))),
            }),
            PayloadKind::Percent => {
                let v: u8 = need_value()?
                    .parse()
                    .map_err(|_| Error::config(format!("bad percent in `{spec}`")))?;
                if v > 100 {
                    return Err(Error::config(format!("percent out of range in `{spec}`")));
                }
                Payload::Percent(v)
            }
            PayloadKind::PcWindow => Payload::Window(need_value()?.to_owned()),
            PayloadKind::VrScene => Payload::Scene(need_value()?.to_owned()),
        };
        self.fact(id, payload)
    }

    pub fn check_matcher(&self, m: &FactMatcher, context: &str) -> Result<()> {
        let def = self
            .fact_def(&m.fact)
            .ok_or_else(|| Error::config(format!("{context}: unknown fact id `{}`", m.fact)))?;
        if m.below.is_some() && def.payload != PayloadKind::Percent {
            return Err(Error::config(format!(
                "{context}: `below` needs a percent fact, `{}` is not",
                m.fact
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> ActivityMap {
        let mut m = ActivityMap::default();
        m.pc.insert("online-meeting-app".into(), ActivityClass::Work);
        m.pc.insert("media-player".into(), ActivityClass::Entertainment);
        m.vr.insert("vr-game".into(), ActivityClass::Entertainment);
        m
    }

    #[test]
    fn activity_mapping() {
        let m = map();
        assert_eq!(
            m.map_activity(Environment::Pc, "online-meeting-app"),
            ActivityClass::Work
        );
        assert_eq!(
            m.map_activity(Environment::Vr, "vr-game"),
            ActivityClass::Entertainment
        );
        assert_eq!(
            m.map_activity(Environment::Pc, "unknown-id-xyz"),
            ActivityClass::Others
        );
        // tables are per environment
        assert_eq!(
            m.map_activity(Environment::Pc, "vr-game"),
            ActivityClass::Others
        );
    }

    #[test]
    fn category_set_parse_and_display() {
        let s: CategorySet = "PU-VU-VE".parse().unwrap();
        assert_eq!(s.to_string(), "PU-VE-VU");
        assert!(!s.contains(ObservationCategory::PE));
        assert!(s.is_subset(CategorySet::ALL));
        assert!(!CategorySet::ALL.is_subset(s));
        assert!("XX".parse::<CategorySet>().is_err());
    }

    #[test]
    fn nine_poses() {
        assert_eq!(PoseLabel::ALL.len(), 9);
        for p in PoseLabel::ALL {
            assert_eq!(p.as_str().parse::<PoseLabel>().unwrap(), *p);
        }
    }

    fn registry() -> Registry {
        Registry::new(
            vec![
                SensorDef {
                    id: "cam".into(),
                    category: ObservationCategory::PU,
                },
                SensorDef {
                    id: "bat".into(),
                    category: ObservationCategory::VE,
                },
            ],
            vec![
                FactDef {
                    id: "pose".into(),
                    sensor: "cam".into(),
                    payload: PayloadKind::Pose,
                },
                FactDef {
                    id: "battery-level".into(),
                    sensor: "bat".into(),
                    payload: PayloadKind::Percent,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn parse_fact_checks_domain() {
        let r = registry();
        let f = r.parse_fact("pose=reading").unwrap();
        assert_eq!(f.category, ObservationCategory::PU);
        assert_eq!(f.pose(), Some(PoseLabel::Reading));
        assert!(r.parse_fact("pose=flying").is_err());
        assert!(r.parse_fact("pose").is_err());
        assert!(r.parse_fact("battery-level=101").is_err());
        assert!(r.parse_fact("nope=1").is_err());
    }

    #[test]
    fn matcher_below_and_values() {
        let r = registry();
        let m = map();
        let low = FactMatcher {
            fact: "battery-level".into(),
            values: vec![],
            below: Some(20),
        };
        assert!(low.matches(&r.parse_fact("battery-level=12").unwrap(), &m));
        assert!(!low.matches(&r.parse_fact("battery-level=20").unwrap(), &m));
        let typing = FactMatcher::new("pose").with_values(["using-keyboard", "using-mouse"]);
        assert!(typing.matches(&r.parse_fact("pose=using-mouse").unwrap(), &m));
        assert!(!typing.matches(&r.parse_fact("pose=resting").unwrap(), &m));
    }
}
