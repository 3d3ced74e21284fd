use std::f64::consts::PI;

use harvest_core::bell::{bell_value, BellSettings};
use harvest_core::config::{ExperimentConfig, SpectralFilter};
use harvest_core::elements::{displace, x_fourth_order, ProbeMatrixElements};
use harvest_core::kernels::{invert_phase, WavePlateSetting};
use harvest_core::observables::{negativity, negativity_oracle, perturbative_state};
use harvest_core::oracles::bell_max_closed_form;
use harvest_core::scan::{ScanSpec, SweepParam};
use num_complex::Complex64;
use proptest::prelude::*;

fn setting() -> impl Strategy<Value = WavePlateSetting> {
    (PI / 2.0..=1.5 * PI, any::<bool>())
        .prop_map(|(t, s)| WavePlateSetting::new(t, if s { 1.0 } else { -1.0 }).unwrap())
}

fn complex(max: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max, -PI..PI).prop_map(|(r, a)| Complex64::from_polar(r, a))
}

/// Field-free element sets with l11 = l22 ≥ |l12|.
fn elements() -> impl Strategy<Value = ProbeMatrixElements> {
    (complex(1.0), complex(2.0), complex(1.0), 0.0..1.0).prop_map(|(l12, m, k, extra)| {
        let mut e = ProbeMatrixElements {
            l11: l12.norm() + extra,
            l12,
            m,
            k11: k,
            k22: k,
            ..Default::default()
        };
        e.l22 = e.l11;
        e.x = x_fourth_order(&e);
        e
    })
}

proptest! {
    #[test]
    fn phase_inverts(s in setting()) {
        let p = s.phase();
        prop_assert!((p.norm() - 1.0).abs() < 1e-12);
        let back = invert_phase(p).unwrap();
        prop_assert!((back.phase() - p).norm() < 1e-9);
    }

    #[test]
    fn closed_form_negativity_matches_partial_transpose(e in elements()) {
        let (state, lambda) = perturbative_state(&e).unwrap();
        let scaled = e.scaled(lambda);
        let diff = (negativity(&scaled).negativity - negativity_oracle(&state)).abs();
        prop_assert!(diff <= 1e-10_f64.max(10.0 * scaled.magnitude().powi(2)), "diff {diff:e}");
        prop_assert!(state.check(1e-12).is_ok());
    }

    #[test]
    fn negativity_ignores_displacement(e in elements(), l1 in complex(1.0), l2 in complex(1.0)) {
        let d = displace(&e, l1, l2);
        let (a, b) = (negativity(&e), negativity(&d));
        prop_assert!((a.e1 - b.e1).abs() < 1e-12);
        prop_assert!((a.phi_m - b.phi_m).abs() < 1e-9 || e.m.norm() < 1e-6);
    }

    #[test]
    fn bell_value_bounded_by_closed_form(e in elements(), a in setting(), ap in setting(), b in setting(), bp in setting()) {
        prop_assume!(e.m.norm() > 1e-3);
        let n_lo = e.m.norm();
        let s = BellSettings { theta1: a, theta1_prime: ap, theta2: b, theta2_prime: bp, n_lo };
        let v = bell_value(&e, &s).unwrap();
        prop_assert!(v <= bell_max_closed_form(&e, n_lo) + 1e-12);
        prop_assert!(v <= 2.0 * 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn sweep_values_are_ordered(start in -50.0f64..50.0, span in 1e-3..100.0, count in 2usize..60, log in any::<bool>()) {
        let start = if log { start.abs() + 1e-3 } else { start };
        let spec = ScanSpec { param: SweepParam::Dr, start, stop: start + span, count, log };
        let v = spec.values();
        prop_assert_eq!(v.len(), count);
        prop_assert_eq!(v[0], start);
        prop_assert_eq!(v[count - 1], start + span);
        prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn config_round_trips(dr in 0.0..500.0, dt in -300.0..300.0, t in 0.0..400.0, sigmas in 0.5..4.0) {
        let mut cfg = ExperimentConfig::baseline();
        cfg.beam_separation = dr * 1e-6;
        cfg.time_delay = dt * 1e-15;
        cfg.temperature = t;
        cfg.filter = SpectralFilter::Band { omega_min: cfg.central_frequency + sigmas * cfg.sigma_omega(), omega_max: f64::INFINITY };
        let back = cfg.to_file().resolve(None).unwrap();
        prop_assert!((back.beam_separation - cfg.beam_separation).abs() <= 1e-12 * cfg.beam_separation.abs().max(1e-12));
        prop_assert!((back.time_delay - cfg.time_delay).abs() <= 1e-27);
        prop_assert_eq!(back.temperature, cfg.temperature);
        match (back.filter, cfg.filter) {
            (SpectralFilter::Band { omega_min: a, .. }, SpectralFilter::Band { omega_min: b, .. }) => {
                prop_assert!((a - b).abs() <= 1e-12 * b)
            }
            _ => prop_assert!(false, "filter kind changed"),
        }
    }
}
