//! Optimal placement of electric-vehicle charging stations in road
//! networks.
//!
//! The crate models a road network as a directed graph of junctions with
//! per-node charging demand, home-charging availability and estate cost.
//! A charging plan assigns each junction at most one station holding a
//! vector of charger counts by type. Plans are scored by a utility model
//! that trades the coverage benefit of the installed infrastructure
//! against the drivers' travel, charging and queueing time, with M/D/1
//! waiting times and a hard budget, charger-bound and stability
//! constraint set.
//!
//! On top of the model sit:
//! - an episodic placement environment with five discrete actions
//!   ([`env`]),
//! - a from-scratch deep Q-learning agent with experience replay and a
//!   target network ([`agent`]),
//! - five deterministic baselines ([`baselines`]),
//! - metric computation, comparison tables and GeoJSON export
//!   ([`report`]).
//!
//! See the `chargeplan` binary for the command-line workflow.

pub mod agent;
pub mod baselines;
pub mod config;
pub mod env;
mod error;
pub mod netdata;
pub mod planner;
pub mod report;
pub mod utility;

pub use config::Settings;
pub use env::{Action, Environment, Observation};
pub use error::{Error, Result};
pub use netdata::{BoundingBox, DemandProfile, Node, NodeId, RoadNetwork, TripEndpointSet};
pub use report::PlanMetrics;
pub use utility::{
    ChargerCatalog, ChargingPlan, ChargingStation, FeasibilityReport, UtilityParams,
};
