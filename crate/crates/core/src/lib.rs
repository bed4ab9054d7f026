//! Joint observation of user and environment state in mixed reality, and
//! the decision engine that handles disruptions on the user's behalf.
//!
//! The pipeline runs once per clock period:
//!
//! 1. sensors push [`SensorReading`]s into the [`DataManager`];
//! 2. each clock edge yields an [`AlignedSnapshot`] when state changed;
//! 3. the snapshot is pruned against the And-Or graph into a [`ParseTree`];
//! 4. channel-tagged terminals vote on occupation;
//! 5. observed disruptions that overlap the occupied channels are conflicts,
//!    and the learned preference decides whether to act.

pub mod aog;
pub mod config;
pub mod data_manager;
pub mod decision;
pub mod engine;
pub mod error;
pub mod harness;
pub mod observation;
pub mod personalization;

pub use aog::{
    build_default_aog, prune, vote_occupation, AogGraph, ChannelSet, OccupationChannel,
    OccupationProfile, ParseTree, TerminalState, VoteParams,
};
pub use config::{Config, FeedbackPolicy, Model, Overrides};
pub use data_manager::{AlignedSnapshot, DataManager, SensorSlot, SlotStatus, DEFAULT_PERIOD_MS};
pub use decision::{
    decide, detect_conflict, dispatch, ActionCommand, ActionDecision, ActuatorRegistry,
    CommandChannel, Conflict, ContextKey, Disruption, Factors, NO_ACTION,
};
pub use engine::{DecisionRecord, Engine};
pub use error::{Error, Result};
pub use harness::{
    accuracy, build_test_set, parse_groups, run_episode, run_learning, run_matrix, AccuracyMatrix,
    EpisodeLog, Scenario, SensorGroup,
};
pub use observation::{
    CategorySet, Fact, Need, NeedSet, ObservationCategory, PhysioState, Registry, SensorReading,
};
pub use personalization::{
    sigmoid, FeedbackSign, Personality, PreferenceParams, PreferenceStore, SimulatedUser,
};
