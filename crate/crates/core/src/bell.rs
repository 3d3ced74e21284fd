//! CHSH-type Bell functional built from EOS correlations with a weak local
//! oscillator, and its optimization over wave-plate settings.
//!
//! The correlator is taken in the closed form
//! G = 2 N_LO Re[P₁* P₂ L12 + P₁ P₂ M] / (N_LO² + N_LO L11 + X),
//! which assumes a single detected frequency (monochromatic filter).

use std::f64::consts::{FRAC_PI_2, PI};

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use num_complex::Complex64;

use crate::elements::ProbeMatrixElements;
use crate::kernels::{invert_phase, WavePlateSetting};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellSettings {
    pub theta1: WavePlateSetting,
    pub theta1_prime: WavePlateSetting,
    pub theta2: WavePlateSetting,
    pub theta2_prime: WavePlateSetting,
    /// Local-oscillator photon number.
    pub n_lo: f64,
}

/// Which denominator bookkeeping to use for the finite local oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Denominator {
    /// N_LO² + N_LO L11 + X.
    SignalMode,
    /// N_LO² + N_LO (L11 + L22) + X.
    BothModes,
}

fn denominator(e: &ProbeMatrixElements, n_lo: f64, kind: Denominator) -> f64 {
    match kind {
        Denominator::SignalMode => n_lo * n_lo + n_lo * e.l11 + e.x,
        Denominator::BothModes => n_lo * n_lo + n_lo * (e.l11 + e.l22) + e.x,
    }
}

fn correlator(e: &ProbeMatrixElements, p1: Complex64, p2: Complex64, n_lo: f64, kind: Denominator) -> f64 {
    2.0 * n_lo * (p1.conj() * p2 * e.l12 + p1 * p2 * e.m).re / denominator(e, n_lo, kind)
}

fn chsh(e: &ProbeMatrixElements, p: [Complex64; 4], n_lo: f64, kind: Denominator) -> f64 {
    let [a, ap, b, bp] = p;
    let g = |x, y| correlator(e, x, y, n_lo, kind);
    (g(a, b) - g(a, bp) + g(ap, b) + g(ap, bp)).abs()
}

fn phases(s: &BellSettings) -> [Complex64; 4] {
    [
        s.theta1.phase(),
        s.theta1_prime.phase(),
        s.theta2.phase(),
        s.theta2_prime.phase(),
    ]
}

fn check(s: &BellSettings) -> Result<()> {
    if !(s.n_lo > 0.0 && s.n_lo.is_finite()) {
        return Err(Error::validation("n_lo", "must be > 0"));
    }
    for w in [s.theta1, s.theta1_prime, s.theta2, s.theta2_prime] {
        WavePlateSetting::new(w.theta, w.sign)?;
    }
    Ok(())
}

/// Single correlator G_{Θ1Θ2}.
pub fn bell_correlator(e: &ProbeMatrixElements, s1: &WavePlateSetting, s2: &WavePlateSetting, n_lo: f64) -> f64 {
    correlator(e, s1.phase(), s2.phase(), n_lo, Denominator::SignalMode)
}

/// B = |G(Θ1,Θ2) - G(Θ1,Θ2′) + G(Θ1′,Θ2) + G(Θ1′,Θ2′)|.
pub fn bell_value(e: &ProbeMatrixElements, s: &BellSettings) -> Result<f64> {
    bell_value_with(e, s, Denominator::SignalMode)
}

pub fn bell_value_with(e: &ProbeMatrixElements, s: &BellSettings, kind: Denominator) -> Result<f64> {
    check(s)?;
    Ok(chsh(e, phases(s), s.n_lo, kind))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellOptimum {
    pub b_max: f64,
    pub settings: BellSettings,
    /// B at the same settings with [`Denominator::BothModes`].
    pub b_both_modes: f64,
}

/// Grid of wave-plate angles used for the coarse search.
pub const GRID_ANGLES: usize = 8;
/// Simplex iteration cap for the refinement.
pub const REFINE_ITERATIONS: u64 = 500;

struct Refine<'a> {
    e: &'a ProbeMatrixElements,
    n_lo: f64,
}

impl CostFunction for Refine<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, phi: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let p = [0, 1, 2, 3].map(|k| Complex64::from_polar(1.0, phi[k]));
        Ok(-chsh(self.e, p, self.n_lo, Denominator::SignalMode))
    }
}

/// Maximize B over the four settings: exhaustive grid (GRID_ANGLES values of
/// θ times both signs per setting), then Nelder-Mead on the four detection
/// phases starting from the best grid point. Deterministic.
pub fn bell_optimize(e: &ProbeMatrixElements, n_lo: f64) -> Result<BellOptimum> {
    if !(n_lo > 0.0 && n_lo.is_finite()) {
        return Err(Error::validation("n_lo", "must be > 0"));
    }
    let mut grid = Vec::with_capacity(2 * GRID_ANGLES);
    for sign in [1.0, -1.0] {
        for k in 0..GRID_ANGLES {
            let theta = FRAC_PI_2 + PI * k as f64 / (GRID_ANGLES - 1) as f64;
            grid.push(WavePlateSetting::new(theta, sign)?.phase());
        }
    }
    let mut best = (f64::NEG_INFINITY, [0usize; 4]);
    for a in 0..grid.len() {
        for ap in 0..grid.len() {
            for b in 0..grid.len() {
                for bp in 0..grid.len() {
                    let v = chsh(e, [grid[a], grid[ap], grid[b], grid[bp]], n_lo, Denominator::SignalMode);
                    if v > best.0 {
                        best = (v, [a, ap, b, bp]);
                    }
                }
            }
        }
    }
    let start: Vec<f64> = best.1.iter().map(|&k| grid[k].arg()).collect();
    let mut simplex = vec![start.clone()];
    for k in 0..4 {
        let mut v = start.clone();
        v[k] += 0.2;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-14)
        .map_err(|err| Error::Precondition(err.to_string()))?;
    let res = Executor::new(Refine { e, n_lo }, solver)
        .configure(|state| state.max_iters(REFINE_ITERATIONS))
        .run()
        .map_err(|err| Error::Precondition(err.to_string()))?;
    let state = res.state();
    let (phi, value) = match &state.best_param {
        Some(p) if -state.best_cost >= best.0 => (p.clone(), -state.best_cost),
        _ => (start, best.0),
    };
    let to_setting = |x: f64| invert_phase(Complex64::from_polar(1.0, x));
    let settings = BellSettings {
        theta1: to_setting(phi[0])?,
        theta1_prime: to_setting(phi[1])?,
        theta2: to_setting(phi[2])?,
        theta2_prime: to_setting(phi[3])?,
        n_lo,
    };
    Ok(BellOptimum {
        b_max: value,
        settings,
        b_both_modes: bell_value_with(e, &settings, Denominator::BothModes)?,
    })
}
