//! Physical constants in SI units (CODATA 2018 exact / recommended values).

/// SI constants used by every kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Speed of light in vacuum (m/s).
    pub c: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Vacuum permeability (H/m).
    pub mu0: f64,
    /// Boltzmann constant (J/K).
    pub kb: f64,
}

pub const SI: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    c: 299_792_458.0,
    eps0: 8.854_187_812_8e-12,
    mu0: 1.256_637_062_12e-6,
    kb: 1.380_649e-23,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        SI
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwell_relation_holds() {
        let k = SI.mu0 * SI.eps0 * SI.c * SI.c;
        assert!((k - 1.0).abs() < 1e-12, "mu0 eps0 c^2 = {k}");
    }
}
