//! Crate-wide error type.

use crate::dmg::NodeId;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("loop enumeration set spans more than one strongly connected component")]
    SccBoundViolation,
    #[error("cannot marginalize input node `{0}`")]
    InputMarginalization(NodeId),
    #[error("node identifier `{0}` already exists")]
    NameCollision(NodeId),
    #[error("latent node `{0}` present; marginalize latents first")]
    LatentInQuery(NodeId),
    #[error("graph has {nodes} nodes, exceeding the limit of {max}")]
    GraphTooLarge { nodes: usize, max: usize },
    #[error("malformed query: {0}")]
    MalformedQuery(String),
    #[error("malformed role specification: {0}")]
    MalformedSpec(String),
    #[error("role populated that the requested special case forbids: {0}")]
    CaseMismatch(String),
    #[error("candidate pool has {pool} nodes, exceeding the limit of {max}")]
    PoolTooLarge { pool: usize, max: usize },
    #[error("target set must be non-empty")]
    EmptyTarget,
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("singular conditioning block: {0}")]
    SingularConditioning(String),
    #[error("state space of {states} assignments exceeds the limit of {max}")]
    StateSpaceTooLarge { states: u128, max: u128 },
    #[error("no mechanism registered for loop {{{0}}}")]
    MissingSubLoopMechanism(String),
    #[error("conditioning on a zero-probability event: {0}")]
    DomainGap(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
