//! Conflict detection and the factorised action probability
//! `P(A, C, pt) = P(A | C, pt) · P(C | pt) · P(pt)`.

mod dispatch;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::aog::{ChannelSet, OccupationProfile, ParseTree};
use crate::data_manager::AlignedSnapshot;
use crate::observation::{ActivityMap, FactMatcher, Need, NeedSet, ObservationCategory};
use crate::personalization::PreferenceStore;

pub use dispatch::{
    dispatch, ActionCatalog, ActionCommand, ActionDef, Actuator, ActuatorRegistry, CommandChannel,
    CommandTemplate, Dispatcher, MockActuator,
};

pub const NO_ACTION: &str = "no-action";

/// What makes a disruption visible to the decision module.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Trigger {
    /// A physiological need raised from the timers.
    Need { need: Need },
    /// A fact present in a live slot.
    Fact(FactMatcher),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disruption {
    pub id: String,
    pub name: String,
    pub category: ObservationCategory,
    pub demands: ChannelSet,
    /// False for disruptions the parser cannot interpret (hard problems).
    pub parseable: bool,
    pub trigger: Trigger,
    /// Canonical assist action id.
    pub assist: String,
}

impl Disruption {
    pub fn is_observed(
        &self,
        snapshot: &AlignedSnapshot,
        needs: &NeedSet,
        map: &ActivityMap,
    ) -> bool {
        match &self.trigger {
            Trigger::Need { need } => needs.contains(need),
            Trigger::Fact(m) => snapshot
                .slots
                .values()
                .filter_map(|s| s.live_fact())
                .any(|f| m.matches(f, map)),
        }
    }
}

/// Preference context: the action that would resolve a conflict and the
/// channels it overlaps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContextKey {
    pub action: String,
    pub conflict: String,
}

impl ContextKey {
    pub fn new(action: impl Into<String>, conflict: impl Into<String>) -> Self {
        ContextKey {
            action: action.into(),
            conflict: conflict.into(),
        }
    }
}

impl fmt::Display for ContextKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.action, self.conflict)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub disruption: String,
    pub overlap: ChannelSet,
    pub context: ContextKey,
}

pub fn detect_conflict(
    profile: &OccupationProfile,
    disruption: &Disruption,
    observed: bool,
) -> Option<Conflict> {
    if !(observed && disruption.parseable && profile.occupied) {
        return None;
    }
    let overlap = profile.channels.intersection(disruption.demands);
    if overlap.is_empty() {
        return None;
    }
    Some(Conflict {
        disruption: disruption.id.clone(),
        overlap,
        context: ContextKey::new(disruption.assist.clone(), overlap.to_string()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    /// P(pt): confidence of the parse.
    pub p_pt: f64,
    /// P(C | pt): 1 when a conflict was found.
    pub p_conflict: f64,
    /// P(A | C, pt): learned preference, 0 without a conflict context.
    pub p_action: f64,
}

impl Factors {
    pub fn joint(&self) -> f64 {
        self.p_action * self.p_conflict * self.p_pt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDecision {
    pub disruption: String,
    /// `None` means no action.
    pub action: Option<String>,
    pub factors: Factors,
    pub joint: f64,
    pub context: Option<ContextKey>,
    pub commands: Vec<ActionCommand>,
}

impl ActionDecision {
    pub fn action_label(&self) -> &str {
        self.action.as_deref().unwrap_or(NO_ACTION)
    }

    pub fn acted(&self) -> bool {
        self.action.is_some()
    }
}

/// Evaluates the action probability and takes the canonical assist when
/// the joint probability reaches `action_threshold`. Missing preference
/// contexts are created at the store's initial logit.
pub fn decide(
    pt: &ParseTree,
    disruption: &Disruption,
    conflict: Option<&Conflict>,
    prefs: &mut PreferenceStore,
    action_threshold: f64,
) -> ActionDecision {
    let p_pt = pt.confidence();
    let (p_conflict, p_action, context) = match conflict {
        Some(c) => {
            prefs.ensure(&c.context);
            (
                1.0,
                prefs.action_probability(&c.context),
                Some(c.context.clone()),
            )
        }
        None => (0.0, 0.0, None),
    };
    let factors = Factors {
        p_pt,
        p_conflict,
        p_action,
    };
    let joint = factors.joint();
    let action =
        (conflict.is_some() && joint >= action_threshold).then(|| disruption.assist.clone());
    ActionDecision {
        disruption: disruption.id.clone(),
        action,
        factors,
        joint,
        context,
        commands: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aog::{vote_occupation, OccupationChannel, TerminalState, Vote, VoteParams};
    use crate::personalization::PreferenceParams;

    fn channels(cs: &[OccupationChannel]) -> ChannelSet {
        cs.iter().copied().collect()
    }

    fn d1() -> Disruption {
        Disruption {
            id: "D1".into(),
            name: "Visitor knocks at the door".into(),
            category: ObservationCategory::PE,
            demands: channels(&[OccupationChannel::Auditory, OccupationChannel::Hands]),
            parseable: true,
            trigger: Trigger::Fact(FactMatcher::new("visitor-at-door")),
            assist: "receive-visitor".into(),
        }
    }

    fn tree(positive: &[OccupationChannel], negative: usize) -> ParseTree {
        let mut votes: Vec<Vote> = positive
            .iter()
            .enumerate()
            .map(|(i, c)| Vote {
                terminal: format!("p{i}"),
                state: TerminalState::Positive,
                channels: channels(&[*c]),
                confidence: 1.0,
            })
            .collect();
        votes.extend((0..negative).map(|i| Vote {
            terminal: format!("n{i}"),
            state: TerminalState::Negative,
            channels: channels(&[OccupationChannel::Hands]),
            confidence: 1.0,
        }));
        ParseTree::from_votes(votes)
    }

    use OccupationChannel::*;

    #[test]
    fn vr_meeting_conflicts_with_visitor() {
        // O1: visual, auditory and speaking (plus hands from the device pose)
        let pt = tree(&[Visual, Auditory, Speaking, Hands], 0);
        let profile = vote_occupation(&pt, VoteParams::default());
        let c = detect_conflict(&profile, &d1(), true).expect("conflict");
        assert!(c.overlap.contains(Auditory));
        assert_eq!(
            c.context,
            ContextKey::new("receive-visitor", "hands+auditory")
        );
    }

    #[test]
    fn unobserved_or_idle_means_no_conflict() {
        let busy = vote_occupation(&tree(&[Visual, Auditory], 0), VoteParams::default());
        assert!(detect_conflict(&busy, &d1(), false).is_none());
        let resting = vote_occupation(&tree(&[], 4), VoteParams::default());
        assert!(detect_conflict(&resting, &d1(), true).is_none());
    }

    #[test]
    fn unparseable_never_conflicts() {
        let mut d6 = d1();
        d6.parseable = false;
        let busy = vote_occupation(&tree(&[Hands, Visual], 0), VoteParams::default());
        assert!(detect_conflict(&busy, &d6, true).is_none());
    }

    #[test]
    fn no_conflict_is_no_action() {
        let mut prefs = PreferenceStore::new(PreferenceParams::default());
        let d = decide(&tree(&[Visual], 0), &d1(), None, &mut prefs, 0.5);
        assert_eq!(d.action_label(), NO_ACTION);
        assert_eq!(d.joint, 0.0);
        assert!(prefs.is_empty());
    }

    #[test]
    fn fresh_preferences_take_assist() {
        let pt = tree(&[Visual, Auditory, Hands], 0);
        let profile = vote_occupation(&pt, VoteParams::default());
        let c = detect_conflict(&profile, &d1(), true).unwrap();
        let mut prefs = PreferenceStore::new(PreferenceParams::default());
        let d = decide(&pt, &d1(), Some(&c), &mut prefs, 0.5);
        // sigmoid(1) = 0.7310585786300049
        assert!((d.factors.p_action - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert_eq!(d.action.as_deref(), Some("receive-visitor"));
        assert_eq!(prefs.logit(&c.context), Some(1.0));
    }

    #[test]
    fn low_preference_declines() {
        let pt = tree(&[Visual, Auditory, Hands], 0);
        let profile = vote_occupation(&pt, VoteParams::default());
        let c = detect_conflict(&profile, &d1(), true).unwrap();
        let mut prefs = PreferenceStore::new(PreferenceParams::default());
        prefs.set_logit(&c.context, -1.0);
        let d = decide(&pt, &d1(), Some(&c), &mut prefs, 0.5);
        assert!(!d.acted());
        assert!(d.joint > 0.0 && d.joint < 0.5);
    }
}
