//! Causal reasoning on directed mixed graphs with cycles, latent
//! confounders, and input nodes.
//!
//! The crate decides sigma- and d-separation, checks the three rules of
//! causal calculus, verifies adjustment criteria (including selection bias),
//! and runs a generalized ID algorithm that emits symbolic estimands. An
//! embedded SCM engine with a linear-Gaussian and a finite-discrete family
//! provides exact numerical oracles for every graphical claim.

pub mod adjustment;
pub mod calculus;
pub mod corpus;
pub mod dmg;
pub mod error;
pub mod identify;
pub mod scm;
pub mod separation;

pub use dmg::{node_set, Dmg, NodeId, NodeKind, NodeSet, SccPartition};
pub use error::{Error, Result};
pub use separation::{
    d_separated, oracle_separated, oracle_witness, separated, sigma_separated, Notion,
    SeparationQuery,
};
