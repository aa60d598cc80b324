//! Adiabatic elimination for composite open quantum systems.
//!
//! A fast, dissipative subsystem A is coupled weakly to a slow subsystem B.
//! The crate computes the reduced generator `L_s` and the assignment map `K`
//! order by order, applies gauge transformations, and decides complete
//! positivity and Lindblad form of the results. Two reference models are
//! provided: a dispersively coupled qudit ([`dispersive`]) and a
//! Jaynes-Cummings qubit coupled to a thermal damped oscillator ([`jc`]).

pub mod cp;
pub mod dispersive;
pub mod elimination;
pub mod error;
pub mod jc;
pub mod linalg;
pub mod ops;
pub mod random;
pub mod spectral;
pub mod superop;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::C64;
pub use spectral::{Lindbladian, SpectralData, SteadyState};
pub use superop::{ChoiMatrix, Factor, LinearMap, Operator, SuperOp, VecOp};
