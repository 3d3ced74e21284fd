//! Bessel functions of the first kind, orders 0 and 2, for real arguments.
//!
//! Ascending series below 8, Miller backward recurrence up to 30, Hankel
//! asymptotic expansion beyond. Absolute accuracy is better than 1e-13 on
//! [0, 1e4].

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::{Error, Result};

const SERIES_MAX: f64 = 8.0;
const RECURRENCE_MAX: f64 = 30.0;

/// J_n(x) for n in {0, 2}. Both are even functions, so negative `x` is
/// accepted.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    match order {
        0 => Ok(bessel_j0(x)),
        2 => Ok(bessel_j2(x)),
        _ => Err(Error::Precondition(format!(
            "Bessel order {order} not supported (only 0 and 2)"
        ))),
    }
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_pair(x.abs()).0
}

pub fn bessel_j2(x: f64) -> f64 {
    bessel_pair(x.abs()).1
}

/// (J0(x), J2(x)) sharing work where the method allows it.
pub fn bessel_pair(x: f64) -> (f64, f64) {
    debug_assert!(x >= 0.0);
    if x <= SERIES_MAX {
        (series(0, x), series(2, x))
    } else if x <= RECURRENCE_MAX {
        miller(x)
    } else {
        (hankel(0, x), hankel(2, x))
    }
}

fn series(n: u32, x: f64) -> f64 {
    let y = -0.25 * x * x;
    let mut term = (0.5 * x).powi(n as i32) / (1..=n).product::<u32>() as f64;
    let mut sum: f64 = term;
    for k in 1..200 {
        term *= y / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalized with
/// J0 + 2 Σ J_{2k} = 1.
fn miller(x: f64) -> (f64, f64) {
    let mut start = (x + 20.0 + 10.0 * x.sqrt()) as usize;
    start += start % 2;
    let mut next = 0.0;
    let mut cur: f64 = 1e-30;
    let mut norm = 0.0;
    let (mut j0, mut j2) = (0.0, 0.0);
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        let idx = k - 1;
        if idx == 2 {
            j2 = cur;
        }
        if idx == 0 {
            j0 = cur;
        } else if idx % 2 == 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
            j2 *= 1e-250;
        }
    }
    norm += j0;
    (j0 / norm, j2 / norm)
}

fn hankel(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a: f64 = 1.0; // a_k(n) / x^k
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if a.abs() > last {
            break; // series started to diverge
        }
        last = a.abs();
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
        let kk = (k + 1) as f64;
        a *= (mu - (2.0 * kk - 1.0).powi(2)) / (kk * 8.0 * x);
    }
    let chi = x - (n as f64) * FRAC_PI_2 - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Integrator;

    fn integral_def(n: i32, x: f64) -> f64 {
        // J_n(x) = (1/pi) ∫_0^pi cos(n phi - x sin phi) dphi
        let r = Integrator::new(1e-14, 1e-16)
            .integrate_panels(|p: f64| (n as f64 * p - x * p.sin()).cos(), 0.0, PI, 8 + x as usize)
            .unwrap();
        r.value / PI
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j2(0.0), 0.0);
    }

    #[test]
    fn matches_integral_definition() {
        for &x in &[0.5, 1.0, 5.0, 20.0, 7.9, 8.1, 29.9, 30.1, 55.0, 300.0] {
            assert!((bessel_j0(x) - integral_def(0, x)).abs() < 1e-12, "J0({x})");
            assert!((bessel_j2(x) - integral_def(2, x)).abs() < 1e-12, "J2({x})");
        }
    }

    #[test]
    fn recurrence_identity() {
        // J0 + J2 = (2/x) J1, and J1 = -J0'; check J0 + J2 = -(2/x) J0'
        for i in 1..400 {
            let x = 0.05 + i as f64 * 0.37;
            let h = 1e-4;
            let d = (bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h);
            assert!((bessel_j0(x) + bessel_j2(x) + 2.0 / x * d).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn known_values() {
        // First zero of J0 and tabulated values.
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-14);
        assert!((bessel_j0(10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-14);
        assert!((bessel_j2(10.0) - 0.254_630_313_685_120_6).abs() < 1e-14);
        assert!((bessel_j0(100.0) - 0.019_985_850_304_223_12).abs() < 1e-14);
        assert!((bessel_j0(1e4) - (-0.007_096_160_353_388_801)).abs() < 1e-12);
    }

    #[test]
    fn bounded_by_one() {
        for i in 0..10_000 {
            let x = i as f64 * 1.0001;
            assert!(bessel_j0(x).abs() <= 1.0);
            assert!(bessel_j2(x).abs() <= 1.0);
        }
    }

    #[test]
    fn unsupported_order() {
        assert!(bessel_j(1, 1.0).is_err());
        assert_eq!(bessel_j(0, 3.0).unwrap(), bessel_j0(3.0));
    }
}
