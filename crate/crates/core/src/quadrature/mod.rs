//! Adaptive quadrature (Gauss-Kronrod 10/21 with global error control) and
//! the Bessel functions needed by the angular reduction.

mod bessel;
mod gauss_kronrod;
mod value;

pub use bessel::{bessel_j, bessel_j0, bessel_j2, bessel_pair};
pub use value::{CVec, QuadValue};

use num_complex::Complex64;

use crate::exec::Exec;
use crate::{Error, Result};
use gauss_kronrod::Panel;

pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_ABS_TOL: f64 = 1e-14;
pub const DEFAULT_NODES_PER_PERIOD: usize = 10;

/// Errors below this multiple of ∫|f| are rounding noise and count as
/// converged (the per-panel estimate is floored at 50·eps·∫|f|).
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Outcome of one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResult<T = Complex64> {
    pub value: T,
    /// Largest per-component error estimate.
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Configurable adaptive integrator.
///
/// The sum of per-panel error estimates of each component must fall below
/// `max(rel_tol·|I_k|, abs_tol, rel_tol·1e-4·max_j |I_j|)`, or reach the
/// rounding floor. The relative-to-largest term keeps tiny components of a
/// vector integrand from dominating the work.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub exec: Exec,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator {
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            max_subdivisions: 4000,
            exec: Exec::Sequential,
        }
    }
}

impl Integrator {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Integrator {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    /// Integrate over consecutive intervals given by sorted `points`
    /// (at least two, first and last are the limits).
    pub fn integrate_points<T, F>(&self, f: F, points: &[f64]) -> Result<IntegrationResult<T>>
    where
        T: QuadValue,
        F: Fn(f64) -> T + Sync + Send,
    {
        if points.len() < 2 {
            return Err(Error::Precondition("integration needs at least two points".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Precondition("tolerances must be positive".into()));
        }
        for w in points.windows(2) {
            if !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::Precondition(format!(
                    "integration limits must be finite and increasing, got {} and {}",
                    w[0], w[1]
                )));
            }
        }
        let intervals: Vec<(f64, f64)> = points.windows(2).map(|w| (w[0], w[1])).collect();
        let mut panels = self.eval_panels(&f, &intervals)?;
        let mut evaluations = panels.len() * gauss_kronrod::NODES;
        let dims = panels[0].value.dims();

        let mut subdivisions = 0;
        loop {
            let total = sum_values(&panels);
            let errs = sum_errors(&panels, dims);
            let largest = (0..dims).map(|k| total.magnitude(k)).fold(0.0, f64::max);
            let tol: Vec<f64> = (0..dims)
                .map(|k| {
                    let abs_integral: f64 = panels.iter().map(|p| p.abs_integrals[k]).sum();
                    (self.rel_tol * total.magnitude(k))
                        .max(self.abs_tol)
                        .max(self.rel_tol * 1e-4 * largest)
                        .max(ROUNDING_FLOOR * abs_integral)
                })
                .collect();
            let error_estimate = errs.iter().cloned().fold(0.0, f64::max);
            if errs.iter().zip(&tol).all(|(e, t)| e <= t) {
                return Ok(IntegrationResult {
                    value: total,
                    error_estimate,
                    evaluations,
                });
            }
            if subdivisions >= self.max_subdivisions {
                return Err(Error::NonConvergence {
                    a: points[0],
                    b: points[points.len() - 1],
                    subdivisions,
                    value: total.magnitude(0),
                    error_estimate,
                });
            }

            // Bisect the panel contributing most to the worst component.
            let mut worst = 0;
            let mut worst_score = f64::NEG_INFINITY;
            for (i, p) in panels.iter().enumerate() {
                let score = p.errors.iter().zip(&tol).map(|(e, t)| e / t).fold(0.0, f64::max);
                if score > worst_score {
                    worst_score = score;
                    worst = i;
                }
            }
            let (a, b) = (panels[worst].a, panels[worst].b);
            let mid = 0.5 * (a + b);
            if !(a < mid && mid < b) {
                return Err(Error::NonConvergence {
                    a,
                    b,
                    subdivisions,
                    value: total.magnitude(0),
                    error_estimate,
                });
            }
            let children = self.eval_panels(&f, &[(a, mid), (mid, b)])?;
            evaluations += 2 * gauss_kronrod::NODES;
            panels.splice(worst..=worst, children);
            subdivisions += 1;
        }
    }

    /// Integrate over `[a, b]` starting from `n` equal panels.
    pub fn integrate_panels<T, F>(&self, f: F, a: f64, b: f64, n: usize) -> Result<IntegrationResult<T>>
    where
        T: QuadValue,
        F: Fn(f64) -> T + Sync + Send,
    {
        self.integrate_points(f, &uniform_points(a, b, n.max(1)))
    }

    /// Integrate over `[a, b]` with panels no longer than a fraction of the
    /// oscillation period, so that each period carries at least
    /// `nodes_per_period` nodes of the 21-point rule.
    pub fn integrate_oscillatory<T, F>(
        &self,
        f: F,
        a: f64,
        b: f64,
        period_hint: f64,
        nodes_per_period: usize,
    ) -> Result<IntegrationResult<T>>
    where
        T: QuadValue,
        F: Fn(f64) -> T + Sync + Send,
    {
        let n = oscillation_panel_count(a, b, period_hint, nodes_per_period)?;
        self.integrate_panels(f, a, b, n)
    }

    fn eval_panels<T, F>(&self, f: &F, intervals: &[(f64, f64)]) -> Result<Vec<Panel<T>>>
    where
        T: QuadValue,
        F: Fn(f64) -> T + Sync + Send,
    {
        let xs: Vec<f64> = intervals
            .iter()
            .flat_map(|&(a, b)| gauss_kronrod::nodes(a, b))
            .collect();
        let fx = self.exec.map(&xs, |&x| f(x));
        let mut out = Vec::with_capacity(intervals.len());
        for (i, &(a, b)) in intervals.iter().enumerate() {
            let chunk = &fx[i * gauss_kronrod::NODES..(i + 1) * gauss_kronrod::NODES];
            if let Some(j) = chunk.iter().position(|v| !v.is_finite()) {
                return Err(Error::Precondition(format!(
                    "integrand is not finite at x = {:e}",
                    xs[i * gauss_kronrod::NODES + j]
                )));
            }
            out.push(gauss_kronrod::apply(a, b, chunk));
        }
        Ok(out)
    }
}

fn sum_values<T: QuadValue>(panels: &[Panel<T>]) -> T {
    panels.iter().fold(T::zero(), |acc, p| acc + p.value)
}

fn sum_errors<T: QuadValue>(panels: &[Panel<T>], dims: usize) -> Vec<f64> {
    let mut errs = vec![0.0; dims];
    for p in panels {
        for (e, pe) in errs.iter_mut().zip(&p.errors) {
            *e += pe;
        }
    }
    errs
}

/// `n + 1` equally spaced points from `a` to `b` (endpoints exact).
pub fn uniform_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    let mut pts: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    pts.push(b);
    pts
}

/// Number of panels needed on `[a, b]` for `nodes_per_period` nodes per
/// period. An infinite period gives a single panel.
pub fn oscillation_panel_count(a: f64, b: f64, period_hint: f64, nodes_per_period: usize) -> Result<usize> {
    if !(period_hint > 0.0) {
        return Err(Error::Precondition("period_hint must be positive".into()));
    }
    if nodes_per_period == 0 {
        return Err(Error::Precondition("nodes_per_period must be positive".into()));
    }
    if period_hint.is_infinite() {
        return Ok(1);
    }
    let max_len = period_hint * gauss_kronrod::NODES as f64 / nodes_per_period as f64;
    Ok(((b - a) / max_len).ceil().max(1.0) as usize)
}

/// Adaptive integration of a complex integrand on `[a, b]` at the given
/// tolerances.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<IntegrationResult>
where
    F: Fn(f64) -> Complex64 + Sync + Send,
{
    if !(a < b) {
        return Err(Error::Precondition(format!("need a < b, got [{a}, {b}]")));
    }
    Integrator::new(rel_tol, abs_tol).integrate_points(f, &[a, b])
}

/// Panelized integration of an oscillatory complex integrand, followed by
/// adaptive refinement, at the default tolerances.
pub fn oscillation_panels<F>(
    f: F,
    a: f64,
    b: f64,
    period_hint: f64,
    nodes_per_period: usize,
) -> Result<IntegrationResult>
where
    F: Fn(f64) -> Complex64 + Sync + Send,
{
    if !(a < b) {
        return Err(Error::Precondition(format!("need a < b, got [{a}, {b}]")));
    }
    Integrator::default().integrate_oscillatory(f, a, b, period_hint, nodes_per_period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn square() {
        let r = integrate_adaptive(|x| c(x * x), 0.0, 1.0, 1e-10, 1e-14).unwrap();
        assert!((r.value.re - 1.0 / 3.0).abs() < 1e-14);
        assert!(r.error_estimate >= 0.0);
    }

    #[test]
    fn gaussian_half_line() {
        // e^{-x^2} is below 1e-16 past x = 6.1, so truncation is harmless.
        let r = integrate_adaptive(|x| c((-x * x).exp()), 0.0, 7.0, 1e-12, 1e-15).unwrap();
        assert!((r.value.re - PI.sqrt() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn cosine_cancellation() {
        let r = integrate_adaptive(|x| c(x.cos()), 0.0, 40.0 * PI, 1e-8, 1e-12).unwrap();
        assert!(r.value.norm() < 1e-10, "{}", r.value);
    }

    #[test]
    fn complex_exponential_period() {
        let r = oscillation_panels(|x| Complex64::new(0.0, x).exp(), 0.0, 2.0 * PI, 2.0 * PI, 10).unwrap();
        assert!(r.value.norm() < 1e-12);
    }

    #[test]
    fn infinite_period_is_plain_adaptive() {
        let f = |x: f64| c((3.0 * x).sin() * x);
        let a = oscillation_panels(f, 0.0, 2.0, f64::INFINITY, 10).unwrap();
        let b = integrate_adaptive(f, 0.0, 2.0, DEFAULT_REL_TOL, DEFAULT_ABS_TOL).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn bessel_integral_against_trapezoid() {
        let fast = oscillation_panels(|x| c(bessel_j0(x)), 0.0, 100.0, 2.0 * PI, 10).unwrap();
        // Dense trapezoid with endpoint correction; J0 is smooth, so the
        // error is O(h^4) after the correction term.
        let n = 200_000;
        let h = 100.0 / n as f64;
        let mut s = 0.5 * (bessel_j0(0.0) + bessel_j0(100.0));
        for i in 1..n {
            s += bessel_j0(i as f64 * h);
        }
        s *= h;
        // J0' = -J1 vanishes at 0; J1(100) = -0.077145352014112158
        s -= h * h / 12.0 * (0.077_145_352_014_112_16 - 0.0);
        assert!((fast.value.re - s).abs() < 1e-9, "{} vs {}", fast.value.re, s);
    }

    #[test]
    fn vector_integrand_per_component() {
        let r = Integrator::default()
            .integrate_points(
                |x: f64| CVec([c(x), c(x * x), Complex64::new(0.0, x.exp())]),
                &[0.0, 0.5, 1.0],
            )
            .unwrap();
        assert!((r.value.0[0].re - 0.5).abs() < 1e-12);
        assert!((r.value.0[1].re - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.value.0[2].im - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = Integrator::new(1e-12, 1e-300)
            .with_max_subdivisions(5)
            .integrate_points(|x: f64| 1.0 / x.sqrt(), &[1e-300, 1.0]);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn rejects_bad_limits() {
        assert!(integrate_adaptive(c, 1.0, 0.0, 1e-6, 1e-14).is_err());
        assert!(oscillation_panels(c, 0.0, 1.0, -1.0, 10).is_err());
    }

    #[test]
    fn deterministic_and_exec_independent() {
        let f = |x: f64| Complex64::new((x * 7.0).sin() / (1.0 + x * x), (x).cos() * (-x).exp());
        let a = Integrator::default().integrate_points(f, &[0.0, 10.0]).unwrap();
        let b = Integrator::default().integrate_points(f, &[0.0, 10.0]).unwrap();
        let c = Integrator::default()
            .with_exec(Exec::Parallel)
            .integrate_points(f, &[0.0, 10.0])
            .unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.value, c.value);
        assert_eq!(a.evaluations, c.evaluations);
    }

    #[test]
    fn linearity() {
        let f = |x: f64| c(x.sin().powi(2) * (-0.3 * x).exp());
        let g = |x: f64| c((2.0 * x).cos() / (1.0 + x));
        let (alpha, beta) = (1.7, -0.4);
        let integ = Integrator::new(1e-10, 1e-14);
        let fi = integ.integrate_points(f, &[0.0, 20.0]).unwrap();
        let gi = integ.integrate_points(g, &[0.0, 20.0]).unwrap();
        let hi = integ
            .integrate_points(|x| f(x) * alpha + g(x) * beta, &[0.0, 20.0])
            .unwrap();
        let combined = fi.value * alpha + gi.value * beta;
        let tol = alpha.abs() * fi.error_estimate + beta.abs() * gi.error_estimate + hi.error_estimate;
        assert!((hi.value - combined).norm() <= tol.max(1e-12));
    }

    /// Twenty integrals with known values; the reported error must bound the
    /// actual error in at least 19 of them.
    #[test]
    fn error_honesty() {
        type Case = (Box<dyn Fn(f64) -> f64 + Sync + Send>, f64, f64, f64);
        let e = std::f64::consts::E;
        let cases: Vec<Case> = vec![
            (Box::new(|x| x.powi(3)), 0.0, 2.0, 4.0),
            (Box::new(|x| x.exp()), 0.0, 1.0, e - 1.0),
            (Box::new(|x| x.sin()), 0.0, PI, 2.0),
            (Box::new(|x| 1.0 / (1.0 + x * x)), 0.0, 1.0, PI / 4.0),
            (Box::new(|x| x.sqrt()), 0.0, 1.0, 2.0 / 3.0),
            (Box::new(|x| 1.0 / x.sqrt()), 1e-300, 1.0, 2.0),
            (Box::new(|x| x.ln()), 1e-300, 1.0, -1.0),
            (Box::new(|x| (-x).exp()), 0.0, 50.0, 1.0 - (-50f64).exp()),
            (Box::new(|x| x.cos().powi(2)), 0.0, 2.0 * PI, PI),
            (Box::new(|x| (10.0 * x).sin() * x), 0.0, PI, -PI / 10.0),
            (Box::new(|x| 1.0 / (1.0 + 25.0 * x * x)), -1.0, 1.0, 0.4 * 5f64.atan()),
            (Box::new(|x| x.abs()), -1.0, 2.0, 2.5),
            (Box::new(|x| (x * x).exp()), 0.0, 1.0, 1.462_651_745_907_181_6),
            (Box::new(|x| x.powf(0.25)), 0.0, 1.0, 0.8),
            (Box::new(|x| 1.0 / (x + 0.01)), 0.0, 1.0, (101f64).ln()),
            (Box::new(|x| (100.0 * x).cos()), 0.0, 1.0, 100f64.sin() / 100.0),
            (
                Box::new(|x| x * (-x * x).exp()),
                0.0,
                10.0,
                0.5 * (1.0 - (-100f64).exp()),
            ),
            (Box::new(|x| 1.0 / (x * x + 1e-4)), -1.0, 1.0, 200.0 * 100f64.atan()),
            (Box::new(|x| x.tanh()), 0.0, 3.0, 3f64.cosh().ln()),
            (
                Box::new(|x| (x.sin()).exp()),
                0.0,
                2.0 * PI,
                2.0 * PI * 1.266_065_877_752_008_4,
            ),
        ];
        let integ = Integrator::new(1e-8, 1e-14);
        let mut honest = 0;
        for (f, a, b, exact) in &cases {
            let r = integ.integrate_points(f, &[*a, *b]).unwrap();
            if (r.value - exact).abs() <= r.error_estimate {
                honest += 1;
            }
        }
        assert!(honest >= 19, "honest in {honest}/20");
    }
}
