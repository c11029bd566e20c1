//! Simulation and analysis toolkit for federated social platforms.
//!
//! The crate models an ecosystem of autonomous systems, instances, users,
//! follower links and toots, and provides:
//!
//! * [`graph`]: the user-level social graph, the induced instance-level
//!   federation graph, degree distributions and weak connectivity metrics.
//! * [`synth`]: seeded generation of skewed synthetic ecosystems.
//! * [`resilience`]: targeted user, instance and AS removal experiments.
//! * [`replication`]: toot placement strategies and availability under failures.
//! * [`uptime`]: downtime, outage and AS-wide outage analytics over probe timelines.
//! * [`stats`]: descriptive concentration, hosting and homophily statistics.
//! * [`ingest`] and [`experiment`]: CSV dataset loading/export and experiment
//!   orchestration used by the `fedisim` command-line tool.

pub mod ecosystem;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod ingest;
pub mod replication;
pub mod resilience;
pub mod stats;
pub mod synth;
pub mod uptime;

pub mod report;
#[cfg(test)]
mod test_fixtures;
mod unionfind;

pub use ecosystem::{AutonomousSystem, Ecosystem, EcosystemBuilder, Instance, Toot, User};
pub use error::{Error, Result};
pub use graph::{FederationGraph, SocialGraph};
