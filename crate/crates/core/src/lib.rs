//! Geometric deficiency of quantum resources relative to maximal resource states.
//!
//! The deficiency of a state `rho` is `1 - max_sigma F(sigma, rho)`, where `sigma`
//! ranges over the maximal resource states: uniform-modulus superpositions for
//! coherence, maximally entangled states for entanglement.
//!
//! Modules:
//! - [`qcore`]: complex linear algebra and quantum state primitives
//! - [`coherence`]: coherence deficiency (closed forms, phase ascent, grid oracle)
//! - [`entanglement`]: entanglement deficiency (Schmidt formula, unitary power iteration)
//! - [`freeops`]: free operations and monotonicity harnesses
//! - [`discrimination`]: subchannel discrimination games
//! - [`formats`]: JSON interchange for states, channels and strategies

pub mod coherence;
pub mod discrimination;
pub mod entanglement;
pub mod error;
pub mod formats;
pub mod freeops;
pub mod qcore;
pub mod result;

pub use error::{Error, Result};
pub use qcore::{BipartiteState, CMatrix, CVector, DensityOperator, PureState, SchmidtData};
pub use result::{DeficiencyResult, Method};
