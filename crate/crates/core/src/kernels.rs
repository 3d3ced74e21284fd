//! Closed-form kernels of the element integrals: spectral autocorrelation,
//! thermal occupation, vacuum mode density, the longitudinal propagation
//! factor Π, the transverse kernel R and its angular reduction, and the
//! ellipsometry phase.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex64;

use crate::config::{ExperimentConfig, SpectralFilter};
use crate::constants::SI;
use crate::quadrature::{bessel_pair, Integrator};
use crate::{Error, Result};

pub use crate::config::detection_efficiency;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Envelope ratio below which integrands are truncated.
pub const TRUNCATION: f64 = 1e-12;

// ----------------------------------------------------------------------------
// Spectral autocorrelation

/// Gaussian laser spectrum E(ω) ∝ exp(-τ²(|ω|-ω_c)²/4) seen through a filter.
#[derive(Debug, Clone, Copy)]
pub struct Spectrum {
    tau: f64,
    omega_c: f64,
    filter: SpectralFilter,
    /// ∫ E² over the window, for band filters.
    norm: f64,
}

impl Spectrum {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Self::from_parts(cfg.pulse_duration, cfg.central_frequency, cfg.filter)
    }

    pub fn from_parts(tau: f64, omega_c: f64, filter: SpectralFilter) -> Result<Self> {
        let mut s = Spectrum {
            tau,
            omega_c,
            filter,
            norm: 1.0,
        };
        match filter {
            SpectralFilter::Full => {}
            SpectralFilter::Band { omega_min, omega_max } => {
                s.norm = s.band_overlap(omega_min, omega_max, 0.0)?;
                if !(s.norm > 1e-250) {
                    return Err(Error::Precondition("filter window contains no laser spectrum".into()));
                }
            }
            SpectralFilter::Monochromatic { omega_d, .. } => {
                if (omega_d - omega_c).abs() > 8.0 * 2.0 / tau {
                    return Err(Error::Precondition(format!(
                        "detected frequency {omega_d:e} rad/s is more than 8 sigma_omega from the laser center"
                    )));
                }
            }
        }
        Ok(s)
    }

    pub fn filter(&self) -> SpectralFilter {
        self.filter
    }

    fn log_envelope(&self, omega: f64) -> f64 {
        let d = omega.abs() - self.omega_c;
        -self.tau * self.tau * d * d / 4.0
    }

    /// ∫_lo^hi E(ω)E(ω+Ω) dω up to the normalization of E.
    fn band_overlap(&self, lo: f64, hi: f64, omega: f64) -> Result<f64> {
        // The product peaks at ω = ω_c - Ω/2 with width ~1/τ.
        let center = self.omega_c - 0.5 * omega;
        let reach = 40.0 / self.tau;
        let a = lo.max(center - reach);
        let b = hi.min(center + reach);
        if !(a < b) {
            return Ok(0.0);
        }
        let mut pts = vec![a];
        if a < center && center < b {
            pts.push(center);
        }
        pts.push(b);
        let r = Integrator::new(1e-12, 1e-300).integrate_points(
            |w: f64| (self.log_envelope(w) + self.log_envelope(w + omega)).exp(),
            &pts,
        )?;
        Ok(r.value)
    }

    /// f(Ω), the normalized overlap of the detected spectrum with itself
    /// shifted by Ω.
    pub fn f(&self, omega: f64) -> Result<f64> {
        match self.filter {
            SpectralFilter::Full => Ok((-self.tau * self.tau * omega * omega / 8.0).exp()),
            SpectralFilter::Band { omega_min, omega_max } => {
                Ok(self.band_overlap(omega_min, omega_max, omega)? / self.norm)
            }
            SpectralFilter::Monochromatic { omega_d, .. } => {
                Ok((self.log_envelope(omega_d + omega) - self.log_envelope(omega_d)).exp())
            }
        }
    }

    /// Upper Ω limit beyond which every weight f²(±Ω), f(Ω)f(-Ω) stays
    /// below [`TRUNCATION`] of its peak. For the unfiltered spectrum this is
    /// (2/τ)√(ln 10¹²); filtered spectra can shift the weights outward.
    pub fn omega_max(&self) -> Result<f64> {
        let base = 2.0 / self.tau * (1.0 / TRUNCATION).ln().sqrt();
        if let SpectralFilter::Full = self.filter {
            return Ok(base);
        }
        let step = 0.05 * 2.0 / self.tau;
        let weight = |w: f64| -> Result<f64> {
            let (a, b) = (self.f(w)?, self.f(-w)?);
            Ok((a * a).max(b * b).max((a * b).abs()))
        };
        let mut peak: f64 = 0.0;
        let mut last_significant = 0.0;
        let mut w = 0.0;
        // Weights are Gaussian-like in Ω; walk until they have decayed well
        // past the largest value seen.
        loop {
            let v = weight(w)?;
            peak = peak.max(v);
            if v >= TRUNCATION * peak {
                last_significant = w;
            }
            if w > base && w > last_significant + 10.0 * step && v < TRUNCATION * peak * 1e-3 {
                break;
            }
            if w > 100.0 * base {
                break;
            }
            w += step;
        }
        Ok(base.max(last_significant + step))
    }
}

pub fn spectral_autocorrelation(cfg: &ExperimentConfig, omega: f64) -> Result<f64> {
    Spectrum::new(cfg)?.f(omega)
}

/// Error-function form of the band-filter autocorrelation (valid while the
/// spectrum at negative frequencies is negligible).
pub fn band_autocorrelation_closed_form(tau: f64, omega_c: f64, omega_min: f64, omega_max: f64, omega: f64) -> f64 {
    let window = |shift: f64| {
        let lo = tau * (omega_min - omega_c + shift) / SQRT_2;
        let hi = if omega_max.is_finite() {
            tau * (omega_max - omega_c + shift) / SQRT_2
        } else {
            f64::INFINITY
        };
        // erfc(lo) - erfc(hi), computed on the side that avoids cancellation.
        if lo > 0.0 {
            libm::erfc(lo) - if hi.is_finite() { libm::erfc(hi) } else { 0.0 }
        } else {
            let upper = if hi.is_finite() { libm::erf(hi) } else { 1.0 };
            upper - libm::erf(lo)
        }
    };
    (-tau * tau * omega * omega / 8.0).exp() * window(0.5 * omega) / window(0.0)
}

// ----------------------------------------------------------------------------
// Thermal occupation and vacuum mode density

/// Bose occupation 1/(e^{ħΩ/k_BT} - 1); zero at T = 0.
pub fn thermal_occupation(temperature: f64, omega: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = SI.hbar * omega / (SI.kb * temperature);
    if x > 700.0 {
        return 0.0;
    }
    1.0 / x.exp_m1()
}

/// E²_vac = ħ n Ω³ / (2π² ε₀ c³) for a given complex index.
pub fn vacuum_mode_density_with_index(n: Complex64, omega: f64) -> Complex64 {
    n * (SI.hbar * omega.powi(3) / (2.0 * PI * PI * SI.eps0 * SI.c.powi(3)))
}

pub fn vacuum_mode_density(cfg: &ExperimentConfig, omega: f64) -> Result<Complex64> {
    let n = cfg.material.refractive_index(omega)?;
    Ok(vacuum_mode_density_with_index(n, omega))
}

// ----------------------------------------------------------------------------
// Longitudinal propagation factor

/// T(s) = i/s + (1 - e^{iLs})/(L s²), with the series
/// L Σ_k (iLs)^k/(k+2)! near s = 0.
fn half_factor(s: Complex64, length: f64) -> Complex64 {
    let x = s * length;
    if x.norm() < 1e-4 {
        let ix = I * x;
        // 1/2 + ix/6 + (ix)²/24 + (ix)³/120 + (ix)⁴/720
        let series = 0.5 + ix * (1.0 / 6.0 + ix * (1.0 / 24.0 + ix * (1.0 / 120.0 + ix / 720.0)));
        return series * length;
    }
    I / s - expm1(I * x) / (s * s * length)
}

/// e^z - 1 without cancellation for small |z|.
fn expm1(z: Complex64) -> Complex64 {
    let (sin_h, cos_h) = (0.5 * z.im).sin_cos();
    let e = z.re.exp();
    Complex64::new(
        z.re.exp_m1() * (z.im).cos() - 2.0 * sin_h * sin_h,
        e * 2.0 * sin_h * cos_h,
    )
}

/// Π(q_z, Ω): the double z-integral over the crystal of
/// e^{-iΩn_g(z-z')/c} e^{iq_z|z-z'|}/q_z, divided by L².
pub fn propagation_factor(q_z: Complex64, omega: f64, length: f64, group_index: f64) -> Result<Complex64> {
    if q_z.norm() == 0.0 {
        return Err(Error::Precondition("propagation factor needs q_z != 0".into()));
    }
    let a = omega * group_index / SI.c;
    Ok(pi_unchecked(q_z, a, length))
}

#[inline]
fn pi_unchecked(q_z: Complex64, a: f64, length: f64) -> Complex64 {
    (half_factor(q_z + a, length) + half_factor(q_z - a, length)) / (q_z * length)
}

/// q_z = √(q_c² - q²) on the branch Im q_z ≥ 0 (Re q_z ≥ 0 on ties).
pub fn longitudinal_wavevector(q_c: Complex64, q_parallel_sq: f64) -> Complex64 {
    crate::materials::principal_index(q_c * q_c - q_parallel_sq)
}

// ----------------------------------------------------------------------------
// Transverse kernel

/// Per-Ω data shared by all q evaluations.
#[derive(Debug, Clone, Copy)]
pub struct KernelContext {
    pub omega: f64,
    pub n: Complex64,
    /// q(Ω) = n(Ω)Ω/c.
    pub q_c: Complex64,
    pub e2_vac: Complex64,
    pub f_pos: f64,
    pub f_neg: f64,
    pub n_thermal: f64,
    length: f64,
    phase_match: f64,
    waist_sq: f64,
    inv_qc_sq: Complex64,
    /// E²_vac / (4π Re q_c).
    prefactor: Complex64,
}

impl KernelContext {
    pub fn new(cfg: &ExperimentConfig, spectrum: &Spectrum, omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::Precondition(format!("kernel needs Omega > 0, got {omega}")));
        }
        let n = cfg.material.refractive_index(omega)?;
        let q_c = n * omega / SI.c;
        if q_c.re == 0.0 {
            return Err(Error::Precondition(format!(
                "Re q(Omega) = 0 at Omega = {omega:e}: unphysical material"
            )));
        }
        let e2_vac = vacuum_mode_density_with_index(n, omega);
        Ok(KernelContext {
            omega,
            n,
            q_c,
            e2_vac,
            f_pos: spectrum.f(omega)?,
            f_neg: spectrum.f(-omega)?,
            n_thermal: thermal_occupation(cfg.temperature, omega),
            length: cfg.crystal_length,
            phase_match: omega * cfg.group_index / SI.c,
            waist_sq: cfg.beam_waist * cfg.beam_waist,
            inv_qc_sq: 1.0 / (q_c * q_c),
            prefactor: e2_vac / (4.0 * PI * q_c.re),
        })
    }

    /// A(q): every factor of R that does not depend on the direction of q∥.
    #[inline]
    pub fn amplitude(&self, q: f64) -> Complex64 {
        let q2 = q * q;
        let q_z = longitudinal_wavevector(self.q_c, q2);
        if q_z.norm() == 0.0 {
            // Integrable branch point, hit only on an exact node.
            return Complex64::new(0.0, 0.0);
        }
        self.prefactor * (-q2 * self.waist_sq / 4.0).exp() * pi_unchecked(q_z, self.phase_match, self.length)
    }

    /// R(q∥, Ω).
    pub fn transverse(&self, q_x: f64, q_y: f64) -> Complex64 {
        let q2 = q_x * q_x + q_y * q_y;
        self.amplitude(q2.sqrt()) * (1.0 - q_x * q_x * self.inv_qc_sq)
    }

    /// ∫dφ e^{iq_yδr} R, times q: q·A·[2πJ₀ - (q²/q_c²)π(J₀+J₂)].
    #[inline]
    pub fn radial(&self, q: f64, separation: f64) -> Complex64 {
        let (j0, j2) = bessel_pair((q * separation).abs());
        let a = self.amplitude(q);
        q * a * (2.0 * PI * j0 - q * q * self.inv_qc_sq * PI * (j0 + j2))
    }

    /// Same reduction applied to Re R: q·[2πJ₀ Re A - q²π(J₀+J₂) Re(A/q_c²)].
    #[inline]
    pub fn radial_re(&self, q: f64, separation: f64) -> f64 {
        let (j0, j2) = bessel_pair((q * separation).abs());
        let a = self.amplitude(q);
        q * (2.0 * PI * j0 * a.re - q * q * PI * (j0 + j2) * (a * self.inv_qc_sq).re)
    }

    /// Radial kernels for the element integrals, sharing one evaluation of
    /// A(q): [Re-kernel at δr = 0, Re-kernel at δr, full kernel at δr, full
    /// kernel at δr = 0].
    #[inline]
    pub fn radial_set(&self, q: f64, separation: f64) -> [Complex64; 4] {
        let (j0, j2) = bessel_pair((q * separation).abs());
        let a = self.amplitude(q);
        let b = a * self.inv_qc_sq;
        let q2 = q * q;
        let re0 = q * (2.0 * PI * a.re - q2 * PI * b.re);
        let re_d = q * (2.0 * PI * j0 * a.re - q2 * PI * (j0 + j2) * b.re);
        let full_d = q * (2.0 * PI * j0 * a - q2 * PI * (j0 + j2) * b);
        let full0 = q * (2.0 * PI * a - q2 * PI * b);
        [re0.into(), re_d.into(), full_d, full0]
    }
}

pub fn transverse_kernel(q_x: f64, q_y: f64, omega: f64, cfg: &ExperimentConfig) -> Result<Complex64> {
    let ctx = KernelContext::new(cfg, &Spectrum::new(cfg)?, omega)?;
    Ok(ctx.transverse(q_x, q_y))
}

pub fn angular_reduced_kernel(q: f64, omega: f64, separation: f64, cfg: &ExperimentConfig) -> Result<Complex64> {
    if q < 0.0 {
        return Err(Error::Precondition("radial wavenumber must be >= 0".into()));
    }
    let ctx = KernelContext::new(cfg, &Spectrum::new(cfg)?, omega)?;
    Ok(ctx.radial(q, separation))
}

// ----------------------------------------------------------------------------
// Ellipsometry phase

/// Wave-plate phase shift θ ∈ [π/2, 3π/2] and the sign of the fast-axis
/// angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePlateSetting {
    pub theta: f64,
    pub sign: f64,
}

impl WavePlateSetting {
    pub fn new(theta: f64, sign: f64) -> Result<Self> {
        let eps = 1e-12;
        if !(theta >= PI / 2.0 - eps && theta <= 1.5 * PI + eps) {
            return Err(Error::Precondition(format!("theta = {theta} outside [pi/2, 3pi/2]")));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::Precondition(format!("sign must be +1 or -1, got {sign}")));
        }
        Ok(WavePlateSetting { theta, sign })
    }

    /// Quarter-wave setting (π/2, +1), P = i.
    pub fn quarter() -> Self {
        WavePlateSetting {
            theta: PI / 2.0,
            sign: 1.0,
        }
    }

    /// Half-wave setting (π, +1), P = 1.
    pub fn half() -> Self {
        WavePlateSetting { theta: PI, sign: 1.0 }
    }

    /// P(Θ) = s[√(-cos θ) + i√2 cos(θ/2)].
    pub fn phase(&self) -> Complex64 {
        let u = (self.theta / 2.0).cos();
        // √(-cos θ) = √(1 - 2u²); clamp rounding at θ = π/2, 3π/2.
        let re = (1.0 - 2.0 * u * u).max(0.0).sqrt();
        Complex64::new(re, SQRT_2 * u) * self.sign
    }
}

/// Detection phase of a wave-plate setting (unit modulus).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionPhase(pub Complex64);

pub fn ellipsometry_phase(setting: &WavePlateSetting) -> Result<DetectionPhase> {
    let checked = WavePlateSetting::new(setting.theta, setting.sign)?;
    Ok(DetectionPhase(checked.phase()))
}

/// Setting whose phase is `target` (|target| = 1).
pub fn invert_phase(target: Complex64) -> Result<WavePlateSetting> {
    if (target.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("|P| must be 1, got {}", target.norm())));
    }
    let sign = if target.re < 0.0 { -1.0 } else { 1.0 };
    let u = (target.im / (sign * SQRT_2)).clamp(-FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    Ok(WavePlateSetting {
        theta: 2.0 * u.acos(),
        sign,
    })
}
