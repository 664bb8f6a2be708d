//! Discrete-time multi-lane microsimulator: road and route model, vehicle
//! stepping, built-in uncontrolled drivers, scenario generators, crash and
//! route-miss detection, and episode metrics.

pub mod network;
pub mod observe;
pub mod runner;
pub mod scenario;
pub mod world;

pub use network::{LaneLink, NetworkSpec, RoadNetwork, Section, Topology};
pub use observe::{build_observation, observation_len};
pub use runner::{run_episode, EpisodeMetrics, EpisodeReport, TraceRow};
pub use scenario::{
    make_scenario, BrakingZone, InflowSpec, ObservationConfig, RouteChoice, ScenarioConfig,
    ScenarioKind, Spawn,
};
pub use world::{Ahead, Behind, CrashEvent, DriverKind, SimError, Vehicle, World};
