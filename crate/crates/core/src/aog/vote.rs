use std::fmt;

use serde::{Deserialize, Serialize};

use super::parse::{ParseTree, TerminalState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OccupationChannel {
    Hands,
    Speaking,
    Visual,
    Auditory,
}

impl OccupationChannel {
    pub const ALL: [OccupationChannel; 4] =
        [Self::Hands, Self::Speaking, Self::Visual, Self::Auditory];

    /// Hands and speaking are input channels; visual and auditory are output.
    pub fn is_input(self) -> bool {
        matches!(self, Self::Hands | Self::Speaking)
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hands => "hands",
            Self::Speaking => "speaking",
            Self::Visual => "visual",
            Self::Auditory => "auditory",
        }
    }
}

impl fmt::Display for OccupationChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(from = "Vec<OccupationChannel>", into = "Vec<OccupationChannel>")]
pub struct ChannelSet(u8);

impl ChannelSet {
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, c: OccupationChannel) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn insert(&mut self, c: OccupationChannel) {
        self.0 |= c.bit();
    }

    pub fn union(self, other: ChannelSet) -> ChannelSet {
        ChannelSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ChannelSet) -> ChannelSet {
        ChannelSet(self.0 & other.0)
    }

    pub fn is_subset(self, other: ChannelSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = OccupationChannel> {
        OccupationChannel::ALL
            .into_iter()
            .filter(move |c| self.contains(*c))
    }
}

impl FromIterator<OccupationChannel> for ChannelSet {
    fn from_iter<I: IntoIterator<Item = OccupationChannel>>(iter: I) -> Self {
        let mut s = ChannelSet::default();
        for c in iter {
            s.insert(c);
        }
        s
    }
}

impl From<Vec<OccupationChannel>> for ChannelSet {
    fn from(v: Vec<OccupationChannel>) -> Self {
        v.into_iter().collect()
    }
}

impl From<ChannelSet> for Vec<OccupationChannel> {
    fn from(s: ChannelSet) -> Self {
        s.iter().collect()
    }
}

impl fmt::Display for ChannelSet {
    /// `hands+auditory` style, in canonical channel order; `none` if empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let parts: Vec<&str> = self.iter().map(OccupationChannel::as_str).collect();
        f.write_str(&parts.join("+"))
    }
}

/// Vote weight `w` and occupation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteParams {
    pub weight: f64,
    pub threshold: f64,
}

impl VoteParams {
    pub fn new(weight: f64, threshold: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::config(format!(
                "vote weight must be > 0, got {weight}"
            )));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::config(format!(
                "occupation threshold must lie in (0,1), got {threshold}"
            )));
        }
        Ok(VoteParams { weight, threshold })
    }
}

impl Default for VoteParams {
    fn default() -> Self {
        VoteParams {
            weight: 1.0,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationProfile {
    /// Channels with at least one positive selected terminal.
    pub channels: ChannelSet,
    pub occupied: bool,
    pub fraction: f64,
    pub positive: usize,
    pub negative: usize,
    pub params: VoteParams,
}

/// Weighted vote of the selected terminals:
/// `positive / (positive + w * negative)`, unknown terminals abstaining.
/// With no votes the fraction is 0 and the user counts as unoccupied.
pub fn vote_occupation(pt: &ParseTree, params: VoteParams) -> OccupationProfile {
    let mut positive = 0usize;
    let mut negative = 0usize;
    let mut channels = ChannelSet::default();
    for v in pt.votes() {
        match v.state {
            TerminalState::Positive => {
                positive += 1;
                channels = channels.union(v.channels);
            }
            TerminalState::Negative => negative += 1,
            TerminalState::Unknown => {}
        }
    }
    let denom = positive as f64 + params.weight * negative as f64;
    let fraction = if positive + negative == 0 {
        0.0
    } else {
        positive as f64 / denom
    };
    OccupationProfile {
        channels,
        occupied: positive + negative > 0 && fraction >= params.threshold,
        fraction,
        positive,
        negative,
        params,
    }
}
