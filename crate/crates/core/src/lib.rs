//! Quantum information toolkit.
//!
//! State-vector and density-matrix simulation on a dense complex matrix
//! kernel, projective and POVM measurement, the three-qubit bit-flip code,
//! entropies and related information measures, and simulations of standard
//! two-party protocols (BB84, E91, dense coding, teleportation, CHSH).
//!
//! Qubit 0 is the leftmost tensor factor and the most significant bit of a
//! basis index. Every stochastic routine takes an explicit RNG; see [`rng`].

pub mod cli;
pub mod error;
pub mod linalg;
pub mod qcircuit;
pub mod qecc;
pub mod qinfo;
pub mod protocols;
pub mod qmeasure;
pub mod qstate;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
