//! Exact structural-causal-model semantics in two tractable families.
//!
//! [`LinearScm`] gives closed-form Gaussian laws for cyclic linear models;
//! [`DiscreteScm`] enumerates finite models with explicit per-loop
//! mechanisms. Both serve as numerical ground truth for the graphical
//! criteria in the rest of the crate.

mod discrete;
mod linear;
mod table;

pub use discrete::{
    obs_value, CompatibilityViolation, DiscreteJoint, DiscreteScm, Mechanism, MAX_REGISTERED_LOOPS,
    MAX_STATE_SPACE,
};
pub use linear::{condition_gaussian, partial_correlation, LinearScm, CI_TOLERANCE};
pub use table::Table;
