//! Exact fidelities, heralding probabilities and analytic bounds for multi-photon subtraction
//! from pure zero-mean multimode Gaussian states, with a truncated Fock-space oracle.

pub mod cli;
pub mod error;
pub mod fidelity;
pub mod fock;
pub mod gaussian_state;
pub mod linalg;
pub mod moment;
pub mod subtraction;
pub mod targets;

pub use error::{Error, Result};
pub use fidelity::{fidelity_exact, FidelityEvaluator, FidelityReport};
pub use gaussian_state::GaussianState;
pub use subtraction::{success_probability, SubtractionSpec};
pub use targets::{BinaryPhaseTarget, ParityClass, TargetKind};
