//! Physical outputs derived from the probe state: negativity, witness,
//! EOS correlation signals and single-beam statistics.
//!
//! Signal operators are evaluated by operator algebra on the truncated Fock
//! space ([`crate::fock`]); closed forms are used for quantities that are
//! defined through the density-matrix elements directly.

use num_complex::Complex64;

use crate::elements::{assemble_state, ProbeMatrixElements, ProbeState};
use crate::fock::{self, ModeState};
use crate::kernels::{invert_phase, WavePlateSetting};
use crate::{Error, Result};

/// Scale at which reduced-unit elements are placed before a state is built
/// (largest second-order entry).
pub const PERTURBATIVE_SCALE: f64 = 1e-6;

/// Scale used for the witness budget, where single-beam photon numbers carry
/// X ∝ scale² corrections relative to L11.
pub const WITNESS_SCALE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativityReport {
    pub negativity: f64,
    pub e1: f64,
    pub m_bar: Complex64,
    pub l11_bar: f64,
    /// Re m̄ / |m̄|: 1 for genuine, 0 for communication-assisted harvesting.
    pub phi_m: f64,
}

/// Leading-order negativity max(0, |m̄| - l̄11) with m̄ = m - l1 l2 and
/// l̄11 = l11 - |l1|².
pub fn negativity(e: &ProbeMatrixElements) -> NegativityReport {
    let m_bar = e.m - e.l1 * e.l2;
    let l11_bar = e.l11 - e.l1.norm_sqr();
    let e1 = m_bar.norm() - l11_bar;
    let phi_m = if m_bar.norm() > 0.0 {
        m_bar.re / m_bar.norm()
    } else {
        0.0
    };
    NegativityReport {
        negativity: e1.max(0.0),
        e1,
        m_bar,
        l11_bar,
        phi_m,
    }
}

/// Sum of |negative eigenvalues| of the partial transpose over mode 2.
pub fn negativity_oracle(state: &ProbeState) -> f64 {
    let pt = fock::partial_transpose_second(&fock::embed(state));
    let eig = nalgebra::SymmetricEigen::new(pt);
    eig.eigenvalues.iter().filter(|&&v| v < 0.0).map(|v| -v).sum()
}

/// State built from elements rescaled to [`PERTURBATIVE_SCALE`], with the
/// factor λ applied. Observables linear in the elements divide by λ.
pub fn perturbative_state(e: &ProbeMatrixElements) -> Result<(ProbeState, f64)> {
    perturbative_state_at(e, PERTURBATIVE_SCALE)
}

pub fn perturbative_state_at(e: &ProbeMatrixElements, scale: f64) -> Result<(ProbeState, f64)> {
    let (scaled, lambda) = e.perturbative(scale);
    Ok((assemble_state(&scaled)?, lambda))
}

fn require_field_free(e: &ProbeMatrixElements) -> Result<()> {
    if e.l1 != Complex64::new(0.0, 0.0) || e.l2 != Complex64::new(0.0, 0.0) {
        return Err(Error::Precondition(
            "requires a state with vanishing mean field (l1 = l2 = 0)".into(),
        ));
    }
    Ok(())
}

/// ⟨W⟩ = l11 - |m|; negative values witness entanglement.
pub fn witness_expectation(e: &ProbeMatrixElements) -> Result<f64> {
    require_field_free(e)?;
    Ok(e.l11 - e.m.norm())
}

/// Connected two-beam correlation (⟨S₁S₂⟩ - ⟨S₁⟩⟨S₂⟩)/N_d² with
/// S_i = √N_d (i P_i a_i - i P_i* a_i†).
pub fn two_beam_correlation(state: &ProbeState, s1: &WavePlateSetting, s2: &WavePlateSetting, n_d: f64) -> f64 {
    let rho = fock::embed(state);
    let (a1, a2) = fock::two_mode_annihilation();
    let i = Complex64::new(0.0, 1.0);
    let signal = |a: &fock::Operator, p: Complex64| {
        (a * (i * p) - a.adjoint() * (i * p.conj())) * Complex64::new(n_d.sqrt(), 0.0)
    };
    let op1 = signal(&a1, s1.phase());
    let op2 = signal(&a2, s2.phase());
    let joint = fock::expectation(&rho, &(&op1 * &op2));
    let mean1 = fock::expectation(&rho, &op1);
    let mean2 = fock::expectation(&rho, &op2);
    (joint - mean1 * mean2).re / (n_d * n_d)
}

/// Two-beam correlation of a reduced-unit element set, evaluated on the
/// perturbatively rescaled state and returned in the elements' units.
pub fn correlation_from_elements(e: &ProbeMatrixElements, s1: &WavePlateSetting, s2: &WavePlateSetting) -> Result<f64> {
    let (state, lambda) = perturbative_state(e)?;
    Ok(two_beam_correlation(&state, s1, s2, 1.0) / lambda)
}

/// Closed form of the quarter-wave correlation,
/// (2/N_d)(Re[M + L12] - 2 L1 L2), with L_i real.
pub fn quarter_wave_correlation_closed_form(e: &ProbeMatrixElements, n_d: f64) -> f64 {
    2.0 / n_d * ((e.m + e.l12).re - 2.0 * (e.l1 * e.l2).re)
}

/// ⟨S_i⟩ for the quarter-wave setting (P = i): -2√N_d Re l_i, which with
/// l_i = -½√(C N_d) ∫Ē²⟨E⟩ is √C N_d ∫Ē²⟨E⟩.
pub fn mean_signal(e: &ProbeMatrixElements, beam: u8, n_d: f64) -> Result<f64> {
    let l = match beam {
        1 => e.l1,
        2 => e.l2,
        _ => return Err(Error::Precondition(format!("beam must be 1 or 2, got {beam}"))),
    };
    Ok(-2.0 * n_d.sqrt() * l.re)
}

fn mode_signal(p: Complex64, n_d: f64) -> fock::Operator {
    let a = fock::annihilation();
    let i = Complex64::new(0.0, 1.0);
    (&a * (i * p) - a.adjoint() * (i * p.conj())) * Complex64::new(n_d.sqrt(), 0.0)
}

/// ΔS² = ⟨S²⟩ - ⟨S⟩² of one beam.
pub fn single_beam_variance(mode: &ModeState, setting: &WavePlateSetting, n_d: f64) -> f64 {
    let s = mode_signal(setting.phase(), n_d);
    let second = fock::expectation(&mode.rho, &(&s * &s)).re;
    let mean = fock::expectation(&mode.rho, &s).re;
    second - mean * mean
}

/// Shot-noise-free single-beam correlation after a T = 1/√2, R = i/√2
/// splitter:
/// (1/N_d)(P_R* P_T ⟨a†a⟩ - P_R P_T ⟨aa⟩ + c.c.).
pub fn shot_noise_removed(
    mode: &ModeState,
    reflected: &WavePlateSetting,
    transmitted: &WavePlateSetting,
    n_d: f64,
) -> f64 {
    let (pr, pt) = (reflected.phase(), transmitted.phase());
    let z = pr.conj() * pt * mode.number() - pr * pt * mode.pair();
    2.0 * z.re / n_d
}

/// Measurement record realizing the witness from two-beam correlations at
/// P(Θ) = e^{-iα/2}, P(Θ′) = i e^{-iα/2} (α = arg m) and the shot-noise-free
/// single-beam signals at the quarter- and half-wave settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessBudget {
    pub theta: WavePlateSetting,
    pub theta_prime: WavePlateSetting,
    pub g_theta: f64,
    pub g_theta_prime: f64,
    /// G^SB_{π/2,π/2} + G^SB_{π,π} per beam (= 4⟨a_i†a_i⟩/N_d).
    pub single_beam: [f64; 2],
    /// (N_d/4)(G_ΘΘ - G_Θ′Θ′) + (N_d/8)Σ_i single_beam[i].
    pub value: f64,
}

/// Witness assembled from simulated measurements on the state of `e`
/// (in the elements' units; the LO photon number cancels).
pub fn witness_budget(e: &ProbeMatrixElements, n_d: f64) -> Result<WitnessBudget> {
    require_field_free(e)?;
    if e.m.norm() == 0.0 {
        return Err(Error::Precondition("m = 0: the witness phase is undefined".into()));
    }
    if !(n_d > 0.0) {
        return Err(Error::validation("n_d", "must be > 0"));
    }
    let (state, lambda) = perturbative_state_at(e, WITNESS_SCALE)?;
    let half_alpha = Complex64::from_polar(1.0, -0.5 * e.m.arg());
    let theta = invert_phase(half_alpha)?;
    let theta_prime = invert_phase(Complex64::new(0.0, 1.0) * half_alpha)?;
    let g_theta = two_beam_correlation(&state, &theta, &theta, n_d) / lambda;
    let g_theta_prime = two_beam_correlation(&state, &theta_prime, &theta_prime, n_d) / lambda;
    let quarter = WavePlateSetting::quarter();
    let half = WavePlateSetting::half();
    let mut single_beam = [0.0; 2];
    for (k, beam) in [1u8, 2].into_iter().enumerate() {
        let mode = fock::reduced_mode(&state, beam);
        single_beam[k] = (shot_noise_removed(&mode, &quarter, &quarter, n_d)
            + shot_noise_removed(&mode, &half, &half, n_d))
            / lambda;
    }
    let value = n_d / 4.0 * (g_theta - g_theta_prime) + n_d / 8.0 * (single_beam[0] + single_beam[1]);
    Ok(WitnessBudget {
        theta,
        theta_prime,
        g_theta,
        g_theta_prime,
        single_beam,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::x_fourth_order;
    use crate::oracles::random_density_matrix;

    fn elements(l11: f64, m: Complex64, l12: Complex64) -> ProbeMatrixElements {
        let mut e = ProbeMatrixElements {
            l11,
            l22: l11,
            m,
            l12,
            ..Default::default()
        };
        e.x = x_fourth_order(&e);
        e
    }

    #[test]
    fn closed_form_examples() {
        let r = negativity(&elements(0.1, Complex64::new(0.2, 0.0), Complex64::new(0.0, 0.0)));
        assert!((r.negativity - 0.1).abs() < 1e-15);
        assert_eq!(r.phi_m, 1.0);
        let r = negativity(&elements(0.3, Complex64::new(0.0, 0.2), Complex64::new(0.0, 0.0)));
        assert_eq!(r.negativity, 0.0);
        assert!(r.phi_m.abs() < 1e-15);
    }

    #[test]
    fn oracle_matches_closed_form() {
        assert_eq!(negativity_oracle(&ProbeState::vacuum()), 0.0);
        let e = elements(1e-4, Complex64::new(3e-4, 0.0), Complex64::new(0.0, 0.0));
        let n = negativity_oracle(&assemble_state(&e).unwrap());
        assert!((n - 2e-4).abs() < 1e-7, "{n}");
    }

    #[test]
    fn mixture_of_vacuum_and_pair_is_separable() {
        let mut state = ProbeState::vacuum();
        state.rho[(0, 0)] = Complex64::new(0.5, 0.0);
        state.rho[(3, 3)] = Complex64::new(0.5, 0.0);
        assert!(negativity_oracle(&state) < 1e-15);
    }

    #[test]
    fn witness_tracks_negativity() {
        for (l11, m) in [(0.1, 0.2), (0.3, 0.2), (0.05, 0.05001)] {
            let e = elements(l11, Complex64::from_polar(m, 0.7), Complex64::new(0.02, 0.01));
            let w = witness_expectation(&e).unwrap();
            assert_eq!(w < 0.0, negativity(&e).negativity > 0.0);
            assert!((w + negativity(&e).e1).abs() < 1e-15);
        }
        let mut e = elements(0.1, Complex64::new(0.2, 0.0), Complex64::new(0.0, 0.0));
        e.l1 = Complex64::new(0.1, 0.0);
        assert!(witness_expectation(&e).is_err());
    }

    #[test]
    fn witness_budget_reproduces_expectation() {
        for phase in [0.0, 0.4, 2.0, -2.9] {
            let e = elements(0.3, Complex64::from_polar(0.5, phase), Complex64::from_polar(0.25, 1.1));
            let b = witness_budget(&e, 7.0).unwrap();
            let w = witness_expectation(&e).unwrap();
            assert!((b.value - w).abs() < 1e-8 * e.m.norm(), "{} vs {}", b.value, w);
            assert!((b.single_beam[0] * 7.0 / 4.0 - e.l11).abs() < 1e-8);
        }
        let real = witness_budget(&elements(0.1, Complex64::new(0.3, 0.0), Complex64::new(0.0, 0.0)), 1.0).unwrap();
        assert!((real.theta.theta - std::f64::consts::PI).abs() < 1e-12 && real.theta.sign == 1.0);
    }

    #[test]
    fn correlation_properties() {
        assert_eq!(
            two_beam_correlation(
                &ProbeState::vacuum(),
                &WavePlateSetting::quarter(),
                &WavePlateSetting::half(),
                3.0
            ),
            0.0
        );
        let e = elements(1e-4, Complex64::new(2e-5, -7e-5), Complex64::new(4e-5, 3e-5));
        let state = assemble_state(&e).unwrap();
        let s1 = WavePlateSetting::new(2.0, 1.0).unwrap();
        let s2 = WavePlateSetting::new(3.7, -1.0).unwrap();
        let flipped = |s: &WavePlateSetting| WavePlateSetting::new(s.theta, -s.sign).unwrap();
        assert!((flipped(&s1).phase() + s1.phase()).norm() < 1e-12);
        let g = two_beam_correlation(&state, &s1, &s2, 2.0);
        let gf = two_beam_correlation(&state, &flipped(&s1), &flipped(&s2), 2.0);
        assert!((g - gf).abs() < 1e-15);
        // Quarter-wave: -2Re[P1P2 M] + 2Re[P1P2* L12] with P = i.
        let q = WavePlateSetting::quarter();
        let g = two_beam_correlation(&state, &q, &q, 1.0);
        assert!((g - 2.0 * (e.m.re + e.l12.re)).abs() < 1e-15);
        assert!((g - quarter_wave_correlation_closed_form(&e, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn correlation_is_linear_in_connected_moments_for_field_free_states() {
        let a = elements(1e-4, Complex64::new(2e-5, 1e-5), Complex64::new(3e-5, 0.0));
        let b = elements(2e-4, Complex64::new(-1e-5, 4e-5), Complex64::new(0.0, 5e-5));
        let (sa, sb) = (assemble_state(&a).unwrap(), assemble_state(&b).unwrap());
        let mix = ProbeState {
            rho: sa.rho * Complex64::new(0.3, 0.0) + sb.rho * Complex64::new(0.7, 0.0),
        };
        let s1 = WavePlateSetting::new(2.4, 1.0).unwrap();
        let s2 = WavePlateSetting::half();
        let g = |s: &ProbeState| two_beam_correlation(s, &s1, &s2, 1.0);
        assert!((g(&mix) - (0.3 * g(&sa) + 0.7 * g(&sb))).abs() < 1e-15);
    }

    #[test]
    fn single_beam_identities() {
        let vac = ModeState::vacuum();
        assert!((single_beam_variance(&vac, &WavePlateSetting::quarter(), 5.0) - 5.0).abs() < 1e-14);
        assert_eq!(
            shot_noise_removed(&vac, &WavePlateSetting::quarter(), &WavePlateSetting::half(), 5.0),
            0.0
        );
        let (q, h) = (WavePlateSetting::quarter(), WavePlateSetting::half());
        for seed in 0..20 {
            let state = ProbeState {
                rho: random_density_matrix(seed),
            };
            for beam in [1, 2] {
                let mode = fock::reduced_mode(&state, beam);
                let n = mode.number();
                let sb = shot_noise_removed(&mode, &q, &q, 3.0) + shot_noise_removed(&mode, &h, &h, 3.0);
                assert!((sb - 4.0 * n / 3.0).abs() < 1e-12);
                let var = single_beam_variance(&mode, &q, 3.0) + single_beam_variance(&mode, &h, 3.0);
                let expected = 2.0 * 3.0 + 4.0 * 3.0 * (n - mode.amplitude().norm_sqr());
                assert!((var - expected).abs() < 1e-12);
            }
        }
    }
}
