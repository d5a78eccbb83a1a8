//! Truncated-Fock-space simulation of detuned Kerr-cat qubits.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cnot;
pub mod error;
pub mod fockspace;
pub mod hamiltonians;
pub mod propagate;
pub mod sparse;
pub mod states;
pub mod units;

pub use error::{DcatError, Result};
pub use fockspace::{FockOperator, StateVector, C64};
