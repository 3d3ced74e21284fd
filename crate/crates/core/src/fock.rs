//! Truncated Fock-space operator algebra for the two probe modes.
//!
//! The six-dimensional probe basis is embedded in a product space with
//! [`LEVELS`] levels per mode, large enough that a† acting on any basis
//! state stays representable.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::elements::{basis, ProbeState};

pub const LEVELS: usize = 4;
pub const DIM: usize = LEVELS * LEVELS;

pub type Operator = DMatrix<Complex64>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Product-space index of |n1, n2⟩.
pub fn index(n1: usize, n2: usize) -> usize {
    n1 * LEVELS + n2
}

/// Single-mode annihilation operator on `LEVELS` levels.
pub fn annihilation() -> Operator {
    let mut a = Operator::zeros(LEVELS, LEVELS);
    for n in 1..LEVELS {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

pub fn identity(levels: usize) -> Operator {
    Operator::identity(levels, levels)
}

/// Annihilation operators (a₁, a₂) on the two-mode space.
pub fn two_mode_annihilation() -> (Operator, Operator) {
    let a = annihilation();
    let id = identity(LEVELS);
    (a.kronecker(&id), id.kronecker(&a))
}

/// Embed the six-dimensional probe state into the product space.
pub fn embed(state: &ProbeState) -> Operator {
    let mut rho = Operator::zeros(DIM, DIM);
    for (i, &(a1, a2)) in basis::OCCUPATIONS.iter().enumerate() {
        for (j, &(b1, b2)) in basis::OCCUPATIONS.iter().enumerate() {
            rho[(index(a1, a2), index(b1, b2))] = state.rho[(i, j)];
        }
    }
    rho
}

/// ⟨O⟩ = Tr(ρ O).
pub fn expectation(rho: &Operator, op: &Operator) -> Complex64 {
    (rho * op).trace()
}

/// Partial transpose over the second mode.
pub fn partial_transpose_second(rho: &Operator) -> Operator {
    let mut out = Operator::zeros(DIM, DIM);
    for n1 in 0..LEVELS {
        for n2 in 0..LEVELS {
            for m1 in 0..LEVELS {
                for m2 in 0..LEVELS {
                    out[(index(n1, m2), index(m1, n2))] = rho[(index(n1, n2), index(m1, m2))];
                }
            }
        }
    }
    out
}

/// Reduced single-mode state of mode 1 or 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub rho: Operator,
}

impl ModeState {
    pub fn vacuum() -> Self {
        let mut rho = Operator::zeros(LEVELS, LEVELS);
        rho[(0, 0)] = c(1.0);
        ModeState { rho }
    }

    /// ⟨a†a⟩.
    pub fn number(&self) -> f64 {
        let a = annihilation();
        expectation(&self.rho, &(a.adjoint() * &a)).re
    }

    /// ⟨a a⟩.
    pub fn pair(&self) -> Complex64 {
        let a = annihilation();
        expectation(&self.rho, &(&a * &a))
    }

    /// ⟨a⟩.
    pub fn amplitude(&self) -> Complex64 {
        expectation(&self.rho, &annihilation())
    }
}

pub fn reduced_mode(state: &ProbeState, mode: u8) -> ModeState {
    let full = embed(state);
    let mut rho = Operator::zeros(LEVELS, LEVELS);
    for n in 0..LEVELS {
        for m in 0..LEVELS {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..LEVELS {
                acc += if mode == 1 {
                    full[(index(n, k), index(m, k))]
                } else {
                    full[(index(k, n), index(k, m))]
                };
            }
            rho[(n, m)] = acc;
        }
    }
    ModeState { rho }
}
