//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

use crate::netdata::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    /// Row numbers count data rows starting at 1; the header is row 0.
    #[error("{path}, row {row}: {message}")]
    InvalidRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("duplicate node id {id} (row {row})")]
    DuplicateNodeId { id: NodeId, row: usize },

    #[error("unknown node id {id} (row {row})")]
    UnknownNodeId { id: NodeId, row: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("bounding box does not cover the network (node {id} lies outside)")]
    NodeOutsideBbox { id: NodeId },

    #[error("station at node {node} holds no chargers; a plan requires at least one")]
    EmptyStation { node: NodeId },

    #[error("no station at node {node} in this plan")]
    StationNotInPlan { node: NodeId },

    #[error("assignment is undefined for an empty charging plan")]
    EmptyPlan,

    #[error("station at node {node} has zero capacity; its service rate is undefined")]
    ZeroCapacity { node: NodeId },

    #[error("station at node {node} is unstable: utilization {utilization} >= 1")]
    Unstable { node: NodeId, utilization: f64 },

    #[error("initial charging plan is infeasible: {reason}")]
    InfeasibleInitialPlan { reason: String },

    #[error("step() called on a finished episode")]
    EpisodeDone,

    #[error("training aborted at update {step}: loss is not finite")]
    NonFiniteLoss { step: usize },

    #[error("charger configuration table is empty")]
    EmptyConfigTable,

    #[error("station file declares {found} charger types but the catalog has {expected}")]
    CatalogMismatch { expected: usize, found: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("policy checkpoint error: {0}")]
    Checkpoint(String),

    #[error("reference model `{0}` is not among the compared models")]
    MissingReference(String),
}
