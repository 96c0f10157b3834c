//! Collective perception in a grid world.
//!
//! A swarm of agents explores a black-and-white grid, senses cell colours,
//! exchanges binary opinions with neighbours and fuses them into a running
//! quorum value `γ` until each agent commits to a decision about which
//! colour is in the majority.

pub mod agent;
pub mod behavior;
pub mod engine;
pub mod environment;
pub mod fusion;
pub mod harness;
pub mod metrics;
pub mod navigation;
pub mod seed;

pub use agent::{AgentState, Commitment, Heading, Role};
pub use behavior::{Activity, BroadcastPolicy, CommitPolicy};
pub use engine::{
    initialize, run_episode, run_episode_traced, AgentRecord, EngineError, EpisodeResult,
    ScenarioConfig, SimulationState, STEPS_PER_MINUTE,
};
pub use environment::{
    generate_environment, white_cell_count, CellColor, DistributionKind, EnvironmentError,
    GridEnvironment, Opinion,
};
pub use fusion::{fuse, FusionError, WeightingKind, WeightingMethod};
pub use metrics::{episode_metrics, BroadcastTally, EpisodeMetrics, MetricsError};
pub use navigation::NavigationPolicy;
