//! Analysis of chemical reaction networks as input-output systems.
//!
//! The crate simulates mass-action dynamics (detailed-balance and general),
//! computes the adaptation metrics Sensitivity and inverse Precision from the
//! linearized relaxation operator, enumerates elementary vectors of the
//! stoichiometric subspace and its orthogonal complement in exact rational
//! arithmetic, evaluates the sharp combinatorial bound on maximal inverse
//! Precision with certificates, and synthesizes stationary states that
//! approach that bound.
//!
//! Entry points:
//! - [`network::parse_network`] reads the reaction DSL.
//! - [`dynamics`] integrates the nonlinear ODE and solves stationary states.
//! - [`linearized`] builds the relaxation operator and measures S and P⁻¹.
//! - [`matroid`] enumerates elementary vectors and certifies max P⁻¹.
//! - [`synthesis`] constructs near-optimal stationary states.
//! - [`bounds`] checks the structural bounds and runs property suites.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod linearized;
pub mod matroid;
pub mod network;
mod par;
pub mod rational;
pub mod report;
pub mod synthesis;

pub use error::CrnError;
pub use network::{Network, Reaction, Species, StoichMatrix};
pub use rational::Rat;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, CrnError>;
