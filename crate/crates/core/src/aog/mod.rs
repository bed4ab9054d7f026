//! And-Or graph of joint observation.
//!
//! The root And-node joins a user half and an environment half. Terminals
//! are bound to a fact predicate and optionally tagged with occupation
//! channels; only channel-tagged terminals vote on occupation. The graph is
//! data: the canonical instance lives in `data/default.toml` and alternatives
//! can be loaded through the same table format.

mod parse;
mod vote;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observation::{ActivityMap, FactMatcher, Registry};

pub use parse::{prune, prune_evidence, Evidence, ParseTree, TerminalState, Vote};
pub use vote::{vote_occupation, ChannelSet, OccupationChannel, OccupationProfile, VoteParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    And,
    Or,
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    User,
    Environment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvTag {
    Physical,
    Virtual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalBinding {
    pub matcher: FactMatcher,
    /// Sensor whose slot supplies the evidence.
    pub sensor: String,
    pub channels: ChannelSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AogNode {
    pub id: String,
    pub kind: NodeKind,
    pub children: Vec<usize>,
    pub side: Side,
    pub env_tag: Option<EnvTag>,
    pub binding: Option<TerminalBinding>,
}

impl AogNode {
    pub fn is_terminal(&self) -> bool {
        self.kind == NodeKind::Terminal
    }
}

/// Table form of an AOG, as stored in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AogDef {
    pub root: String,
    pub user: String,
    pub environment: String,
    pub nodes: Vec<NodeDef>,
    pub terminals: Vec<TerminalDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDef {
    pub id: String,
    pub kind: NodeKind,
    pub children: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalDef {
    pub id: String,
    pub fact: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub below: Option<u8>,
    #[serde(default)]
    pub channels: Vec<OccupationChannel>,
}

impl TerminalDef {
    pub fn matcher(&self) -> FactMatcher {
        FactMatcher {
            fact: self.fact.clone(),
            values: self.values.clone(),
            below: self.below,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AogGraph {
    nodes: Vec<AogNode>,
    index: BTreeMap<String, usize>,
    root: usize,
    user: usize,
    environment: usize,
    activity: ActivityMap,
    confidence: BTreeMap<String, f64>,
}

impl AogGraph {
    /// Resolves and validates a table-form graph against the fact registry.
    pub fn from_def(def: &AogDef, registry: &Registry, activity: &ActivityMap) -> Result<Self> {
        let mut index = BTreeMap::new();
        let mut nodes = Vec::new();
        for n in &def.nodes {
            if n.kind == NodeKind::Terminal {
                return Err(Error::config(format!(
                    "node `{}`: terminals belong in the terminal table",
                    n.id
                )));
            }
            if n.children.is_empty() {
                return Err(Error::config(format!(
                    "non-terminal `{}` has no children",
                    n.id
                )));
            }
            push_node(&mut index, &mut nodes, &n.id, n.kind, None)?;
        }
        for t in &def.terminals {
            let matcher = t.matcher();
            registry.check_matcher(&matcher, &format!("terminal `{}`", t.id))?;
            let sensor = registry.sensor_of(&matcher.fact).expect("checked");
            let binding = TerminalBinding {
                matcher,
                sensor: sensor.id.clone(),
                channels: t.channels.iter().copied().collect(),
            };
            let tag = if sensor.category.is_physical() {
                EnvTag::Physical
            } else {
                EnvTag::Virtual
            };
            let i = push_node(
                &mut index,
                &mut nodes,
                &t.id,
                NodeKind::Terminal,
                Some(binding),
            )?;
            nodes[i].env_tag = Some(tag);
        }
        for (i, n) in def.nodes.iter().enumerate() {
            let mut children = Vec::with_capacity(n.children.len());
            for c in &n.children {
                let ci = *index.get(c).ok_or_else(|| {
                    Error::config(format!("node `{}` references unknown child `{c}`", n.id))
                })?;
                children.push(ci);
            }
            nodes[i].children = children;
        }
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::config(format!("unknown AOG node `{id}`")))
        };
        let root = lookup(&def.root)?;
        let user = lookup(&def.user)?;
        let environment = lookup(&def.environment)?;
        if nodes[root].kind != NodeKind::And || nodes[root].children != [user, environment] {
            return Err(Error::config(
                "AOG root must be an And-node whose children are the user and environment halves",
            ));
        }
        let mut graph = AogGraph {
            nodes,
            index,
            root,
            user,
            environment,
            activity: activity.clone(),
            confidence: BTreeMap::new(),
        };
        graph.check_acyclic()?;
        graph.assign_sides()?;
        Ok(graph)
    }

    /// Per-sensor evidence confidence; sensors not listed are fully trusted.
    pub fn with_confidence(mut self, confidence: BTreeMap<String, f64>) -> Self {
        self.confidence = confidence;
        self
    }

    fn check_acyclic(&self) -> Result<()> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; self.nodes.len()];
        fn visit(g: &AogGraph, i: usize, mark: &mut [u8]) -> Result<()> {
            match mark[i] {
                1 => {
                    return Err(Error::config(format!(
                        "AOG cycle through `{}`",
                        g.nodes[i].id
                    )))
                }
                2 => return Ok(()),
                _ => {}
            }
            mark[i] = 1;
            for &c in &g.nodes[i].children {
                visit(g, c, mark)?;
            }
            mark[i] = 2;
            Ok(())
        }
        visit(self, self.root, &mut mark)?;
        if let Some(i) = mark.iter().position(|m| *m == 0) {
            return Err(Error::config(format!(
                "AOG node `{}` is unreachable from the root",
                self.nodes[i].id
            )));
        }
        Ok(())
    }

    fn assign_sides(&mut self) -> Result<()> {
        let mut side: Vec<Option<Side>> = vec![None; self.nodes.len()];
        for (start, s) in [
            (self.user, Side::User),
            (self.environment, Side::Environment),
        ] {
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                match side[i] {
                    Some(prev) if prev == s => continue,
                    Some(_) => {
                        return Err(Error::config(format!(
                            "AOG node `{}` is shared by both halves",
                            self.nodes[i].id
                        )))
                    }
                    None => side[i] = Some(s),
                }
                stack.extend(self.nodes[i].children.iter().copied());
            }
        }
        for (i, n) in self.nodes.iter_mut().enumerate() {
            // the root itself is the only node on neither side
            n.side = side[i].unwrap_or(Side::User);
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[AogNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &AogNode {
        &self.nodes[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&AogNode> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn user_half(&self) -> usize {
        self.user
    }

    pub fn environment_half(&self) -> usize {
        self.environment
    }

    pub fn activity(&self) -> &ActivityMap {
        &self.activity
    }

    pub fn confidence_of(&self, sensor: &str) -> f64 {
        self.confidence.get(sensor).copied().unwrap_or(1.0)
    }

    pub fn terminals(&self) -> impl Iterator<Item = (usize, &AogNode)> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_terminal())
    }

    /// Occupation components directly under the user half.
    pub fn user_components(&self) -> impl Iterator<Item = &AogNode> {
        self.nodes[self.user]
            .children
            .iter()
            .map(|&c| &self.nodes[c])
    }
}

fn push_node(
    index: &mut BTreeMap<String, usize>,
    nodes: &mut Vec<AogNode>,
    id: &str,
    kind: NodeKind,
    binding: Option<TerminalBinding>,
) -> Result<usize> {
    if index.contains_key(id) {
        return Err(Error::config(format!("duplicate AOG node `{id}`")));
    }
    let i = nodes.len();
    index.insert(id.to_owned(), i);
    nodes.push(AogNode {
        id: id.to_owned(),
        kind,
        children: Vec::new(),
        side: Side::User,
        env_tag: None,
        binding,
    });
    Ok(i)
}

/// The canonical graph shipped with the crate.
pub fn build_default_aog() -> AogGraph {
    crate::config::Model::default_model().aog
}
