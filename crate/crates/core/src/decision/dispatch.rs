use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::ActionDecision;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandChannel {
    Graphical,
    VirtualEmbodied,
    PhysicalEmbodied,
    Auditory,
}

impl CommandChannel {
    pub const ALL: [CommandChannel; 4] = [
        Self::Graphical,
        Self::VirtualEmbodied,
        Self::PhysicalEmbodied,
        Self::Auditory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Graphical => "graphical",
            Self::VirtualEmbodied => "virtual-embodied",
            Self::PhysicalEmbodied => "physical-embodied",
            Self::Auditory => "auditory",
        }
    }
}

impl fmt::Display for CommandChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCommand {
    pub channel: CommandChannel,
    pub payload: String,
    /// Links a physical delivery to the virtual counterpart rendered for it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<String>,
}

/// One command of an action bundle. A `counterpart` on a physical-embodied
/// command expands into a paired virtual-embodied render.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandTemplate {
    pub channel: CommandChannel,
    pub payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterpart: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDef {
    pub id: String,
    pub commands: Vec<CommandTemplate>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionCatalog {
    actions: BTreeMap<String, ActionDef>,
}

impl ActionCatalog {
    pub fn new(defs: Vec<ActionDef>) -> Result<Self> {
        let mut actions = BTreeMap::new();
        for def in defs {
            for t in &def.commands {
                if t.counterpart.is_some() && t.channel != CommandChannel::PhysicalEmbodied {
                    return Err(Error::config(format!(
                        "action `{}`: only physical-embodied commands take a counterpart",
                        def.id
                    )));
                }
            }
            if actions.insert(def.id.clone(), def.clone()).is_some() {
                return Err(Error::config(format!("duplicate action `{}`", def.id)));
            }
        }
        Ok(ActionCatalog { actions })
    }

    pub fn get(&self, id: &str) -> Option<&ActionDef> {
        self.actions.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.actions.contains_key(id)
    }
}

pub trait Actuator: Send + Sync {
    fn execute(&self, command: &ActionCommand);
}

/// Records every command it receives.
#[derive(Debug, Default)]
pub struct MockActuator {
    log: Mutex<Vec<ActionCommand>>,
}

impl MockActuator {
    pub fn commands(&self) -> Vec<ActionCommand> {
        self.log.lock().expect("actuator log poisoned").clone()
    }
}

impl Actuator for MockActuator {
    fn execute(&self, command: &ActionCommand) {
        self.log
            .lock()
            .expect("actuator log poisoned")
            .push(command.clone());
    }
}

#[derive(Clone, Default)]
pub struct ActuatorRegistry {
    actuators: BTreeMap<CommandChannel, Arc<dyn Actuator>>,
}

impl fmt::Debug for ActuatorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.actuators.keys()).finish()
    }
}

impl ActuatorRegistry {
    pub fn register(&mut self, channel: CommandChannel, actuator: Arc<dyn Actuator>) {
        self.actuators.insert(channel, actuator);
    }

    /// A registry with one mock per channel, plus handles for inspection.
    pub fn with_mocks() -> (Self, BTreeMap<CommandChannel, Arc<MockActuator>>) {
        let mut reg = ActuatorRegistry::default();
        let mut mocks = BTreeMap::new();
        for ch in CommandChannel::ALL {
            let m = Arc::new(MockActuator::default());
            reg.register(ch, m.clone());
            mocks.insert(ch, m);
        }
        (reg, mocks)
    }

    pub fn get(&self, channel: CommandChannel) -> Option<&Arc<dyn Actuator>> {
        self.actuators.get(&channel)
    }
}

/// Expands decisions into command bundles and sends them to actuators.
#[derive(Debug, Clone)]
pub struct Dispatcher {
    catalog: ActionCatalog,
    next_pairing: u64,
}

impl Dispatcher {
    pub fn new(catalog: ActionCatalog) -> Self {
        Dispatcher {
            catalog,
            next_pairing: 0,
        }
    }

    pub fn dispatch(
        &mut self,
        decision: &ActionDecision,
        registry: &ActuatorRegistry,
    ) -> Result<Vec<ActionCommand>> {
        let Some(action) = decision.action.as_deref() else {
            return Ok(Vec::new());
        };
        let def = self
            .catalog
            .get(action)
            .ok_or_else(|| Error::config(format!("no command bundle for action `{action}`")))?;
        let mut bundle = Vec::new();
        for t in &def.commands {
            match &t.counterpart {
                Some(render) => {
                    self.next_pairing += 1;
                    let pairing = format!("{action}#{}", self.next_pairing);
                    bundle.push(ActionCommand {
                        channel: t.channel,
                        payload: t.payload.clone(),
                        pairing: Some(pairing.clone()),
                    });
                    bundle.push(ActionCommand {
                        channel: CommandChannel::VirtualEmbodied,
                        payload: render.clone(),
                        pairing: Some(pairing),
                    });
                }
                None => bundle.push(ActionCommand {
                    channel: t.channel,
                    payload: t.payload.clone(),
                    pairing: None,
                }),
            }
        }
        for cmd in &bundle {
            if registry.get(cmd.channel).is_none() {
                return Err(Error::MissingActuator(cmd.channel.to_string()));
            }
        }
        for cmd in &bundle {
            registry.get(cmd.channel).expect("checked").execute(cmd);
        }
        Ok(bundle)
    }
}

/// One-shot dispatch with a fresh pairing counter.
pub fn dispatch(
    decision: &ActionDecision,
    catalog: &ActionCatalog,
    registry: &ActuatorRegistry,
) -> Result<Vec<ActionCommand>> {
    Dispatcher::new(catalog.clone()).dispatch(decision, registry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Model;
    use crate::decision::Factors;

    fn decision(action: Option<&str>) -> ActionDecision {
        ActionDecision {
            disruption: "Dx".into(),
            action: action.map(str::to_owned),
            factors: Factors {
                p_pt: 1.0,
                p_conflict: 1.0,
                p_action: 0.7,
            },
            joint: 0.7,
            context: None,
            commands: vec![],
        }
    }

    fn assert_perfect_matching(cmds: &[ActionCommand]) {
        let mut phys = BTreeMap::new();
        let mut virt = BTreeMap::new();
        for c in cmds {
            if let Some(p) = &c.pairing {
                match c.channel {
                    CommandChannel::PhysicalEmbodied => *phys.entry(p.clone()).or_insert(0) += 1,
                    CommandChannel::VirtualEmbodied => *virt.entry(p.clone()).or_insert(0) += 1,
                    _ => panic!("pairing on {:?}", c.channel),
                }
            }
        }
        assert_eq!(phys, virt);
        assert!(phys.values().all(|&n| n == 1));
    }

    #[test]
    fn no_action_dispatches_nothing() {
        let model = Model::default_model();
        let (reg, mocks) = ActuatorRegistry::with_mocks();
        assert!(dispatch(&decision(None), &model.catalog, &reg)
            .unwrap()
            .is_empty());
        assert!(mocks.values().all(|m| m.commands().is_empty()));
    }

    #[test]
    fn bring_water_is_paired() {
        let model = Model::default_model();
        let (reg, mocks) = ActuatorRegistry::with_mocks();
        let cmds = dispatch(&decision(Some("bring-water")), &model.catalog, &reg).unwrap();
        assert_eq!(cmds.len(), 2);
        assert_eq!(cmds[0].channel, CommandChannel::PhysicalEmbodied);
        assert_eq!(cmds[0].payload, "bring-water");
        assert_eq!(cmds[1].channel, CommandChannel::VirtualEmbodied);
        assert_eq!(cmds[1].payload, "render-virtual-water");
        assert_eq!(cmds[0].pairing, cmds[1].pairing);
        assert_eq!(mocks[&CommandChannel::VirtualEmbodied].commands().len(), 1);
    }

    #[test]
    fn battery_is_graphical_only() {
        let model = Model::default_model();
        let (reg, _) = ActuatorRegistry::with_mocks();
        let cmds = dispatch(
            &decision(Some("battery-notification")),
            &model.catalog,
            &reg,
        )
        .unwrap();
        assert_eq!(cmds.len(), 1);
        assert_eq!(cmds[0].channel, CommandChannel::Graphical);
        assert_eq!(cmds[0].payload, "battery-low");
    }

    #[test]
    fn receive_visitor_bundle() {
        let model = Model::default_model();
        let (reg, _) = ActuatorRegistry::with_mocks();
        let cmds = dispatch(&decision(Some("receive-visitor")), &model.catalog, &reg).unwrap();
        let chans: Vec<_> = cmds.iter().map(|c| c.channel).collect();
        assert_eq!(
            chans,
            [
                CommandChannel::PhysicalEmbodied,
                CommandChannel::Graphical,
                CommandChannel::Auditory
            ]
        );
    }

    #[test]
    fn every_bundle_pairs_perfectly() {
        let model = Model::default_model();
        let (reg, _) = ActuatorRegistry::with_mocks();
        let mut d = Dispatcher::new(model.catalog.clone());
        let mut all = Vec::new();
        for a in [
            "receive-visitor",
            "bring-water",
            "break-reminder",
            "bring-phone",
            "battery-notification",
            "bring-water",
        ] {
            let cmds = d.dispatch(&decision(Some(a)), &reg).unwrap();
            assert_perfect_matching(&cmds);
            all.extend(cmds);
        }
        // pairing ids stay unique across bundles
        assert_perfect_matching(&all);
    }

    #[test]
    fn missing_channel_named_in_error() {
        let model = Model::default_model();
        let mut reg = ActuatorRegistry::default();
        reg.register(
            CommandChannel::PhysicalEmbodied,
            Arc::new(MockActuator::default()),
        );
        let err = dispatch(&decision(Some("bring-water")), &model.catalog, &reg).unwrap_err();
        assert!(
            matches!(err, Error::MissingActuator(ref c) if c == "virtual-embodied"),
            "{err}"
        );
    }
}
