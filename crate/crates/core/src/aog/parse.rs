use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AogGraph, ChannelSet, NodeKind};
use crate::data_manager::AlignedSnapshot;
use crate::observation::NeedSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalState {
    Unknown,
    Negative,
    Positive,
}

/// Terminal states and confidences prior to pruning.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub states: BTreeMap<String, TerminalState>,
    pub confidence: BTreeMap<String, f64>,
}

impl Evidence {
    /// Reads every terminal's slot: positive if the live fact satisfies the
    /// terminal's predicate, negative if the slot is live with some other
    /// fact, unknown if the sensor is inactive or absent.
    pub fn from_snapshot(aog: &AogGraph, snapshot: &AlignedSnapshot) -> Self {
        let mut ev = Evidence::default();
        for (_, node) in aog.terminals() {
            let binding = node.binding.as_ref().expect("terminal binding");
            let state = match snapshot.slot(&binding.sensor).and_then(|s| s.live_fact()) {
                Some(fact) if binding.matcher.matches(fact, aog.activity()) => {
                    TerminalState::Positive
                }
                Some(_) => TerminalState::Negative,
                None => TerminalState::Unknown,
            };
            ev.states.insert(node.id.clone(), state);
            ev.confidence
                .insert(node.id.clone(), aog.confidence_of(&binding.sensor));
        }
        ev
    }

    fn state(&self, id: &str) -> TerminalState {
        self.states
            .get(id)
            .copied()
            .unwrap_or(TerminalState::Unknown)
    }
}

/// A selected terminal's ballot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub terminal: String,
    pub state: TerminalState,
    pub channels: ChannelSet,
    pub confidence: f64,
}

/// The pruned graph for one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseTree {
    selected: BTreeSet<String>,
    evidence: Evidence,
    votes: Vec<Vote>,
    needs: NeedSet,
}

impl ParseTree {
    /// A tree consisting of exactly these ballots; used by tests and by
    /// callers that synthesise parses without a graph.
    pub fn from_votes(votes: Vec<Vote>) -> Self {
        let mut evidence = Evidence::default();
        for v in &votes {
            evidence.states.insert(v.terminal.clone(), v.state);
            evidence.confidence.insert(v.terminal.clone(), v.confidence);
        }
        ParseTree {
            selected: votes.iter().map(|v| v.terminal.clone()).collect(),
            evidence,
            votes,
            needs: NeedSet::new(),
        }
    }

    pub fn with_needs(mut self, needs: NeedSet) -> Self {
        self.needs = needs;
        self
    }

    pub fn votes(&self) -> &[Vote] {
        &self.votes
    }

    pub fn needs(&self) -> &NeedSet {
        &self.needs
    }

    pub fn is_selected(&self, id: &str) -> bool {
        self.selected.contains(id)
    }

    pub fn selected(&self) -> impl Iterator<Item = &str> {
        self.selected.iter().map(String::as_str)
    }

    pub fn state(&self, terminal: &str) -> TerminalState {
        self.evidence.state(terminal)
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    /// Product of the confidences of every selected terminal that holds
    /// evidence. Abstaining terminals contribute nothing.
    pub fn confidence(&self) -> f64 {
        self.votes
            .iter()
            .filter(|v| v.state != TerminalState::Unknown)
            .map(|v| v.confidence)
            .product()
    }

    pub fn positive_terminals(&self) -> impl Iterator<Item = &str> {
        self.votes
            .iter()
            .filter(|v| v.state == TerminalState::Positive)
            .map(|v| v.terminal.as_str())
    }
}

/// Prunes the graph against a snapshot.
pub fn prune(aog: &AogGraph, snapshot: &AlignedSnapshot, needs: &NeedSet) -> ParseTree {
    prune_evidence(aog, &Evidence::from_snapshot(aog, snapshot), needs)
}

/// Prunes the graph against precomputed terminal evidence. And-nodes keep
/// every child; Or-nodes keep the child whose best selected terminal ranks
/// highest (positive, then negative, then unknown), earliest child on ties.
pub fn prune_evidence(aog: &AogGraph, evidence: &Evidence, needs: &NeedSet) -> ParseTree {
    let n = aog.nodes().len();
    let mut rank: Vec<Option<TerminalState>> = vec![None; n];
    let root = aog.root();
    node_rank(aog, evidence, root, &mut rank);

    let mut selected = BTreeSet::new();
    let mut votes = Vec::new();
    let mut stack = vec![root];
    let mut visited = vec![false; n];
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut visited[i], true) {
            continue;
        }
        let node = aog.node(i);
        selected.insert(node.id.clone());
        match node.kind {
            NodeKind::Terminal => {
                let binding = node.binding.as_ref().expect("terminal binding");
                if !binding.channels.is_empty() {
                    votes.push(Vote {
                        terminal: node.id.clone(),
                        state: evidence.state(&node.id),
                        channels: binding.channels,
                        confidence: evidence.confidence.get(&node.id).copied().unwrap_or(1.0),
                    });
                }
            }
            NodeKind::And => stack.extend(node.children.iter().rev().copied()),
            NodeKind::Or => {
                let best = node
                    .children
                    .iter()
                    .copied()
                    .fold(None::<usize>, |best, c| match best {
                        Some(b) if rank[b] >= rank[c] => Some(b),
                        _ => Some(c),
                    })
                    .expect("or-node has children");
                stack.push(best);
            }
        }
    }
    votes.sort_by(|a, b| a.terminal.cmp(&b.terminal));
    ParseTree {
        selected,
        evidence: evidence.clone(),
        votes,
        needs: needs.clone(),
    }
}

fn node_rank(
    aog: &AogGraph,
    evidence: &Evidence,
    i: usize,
    memo: &mut [Option<TerminalState>],
) -> TerminalState {
    if let Some(r) = memo[i] {
        return r;
    }
    let node = aog.node(i);
    let r = match node.kind {
        NodeKind::Terminal => evidence.state(&node.id),
        // an And keeps all children, an Or keeps its best; both surface the max
        NodeKind::And | NodeKind::Or => node
            .children
            .iter()
            .map(|&c| node_rank(aog, evidence, c, memo))
            .max()
            .unwrap_or(TerminalState::Unknown),
    };
    memo[i] = Some(r);
    r
}
