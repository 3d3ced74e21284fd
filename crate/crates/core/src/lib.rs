//! Probe density matrix, entanglement and Bell observables for two-beam
//! electro-optic sampling of the THz vacuum and thermal fields.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod config;
pub mod constants;
pub mod elements;
pub mod error;
pub mod exec;
pub mod fock;
pub mod kernels;
pub mod materials;
pub mod observables;
pub mod oracles;
pub mod quadrature;
pub mod scan;
pub mod units;

pub use error::{Error, Result};
