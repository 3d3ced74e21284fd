//! Reduced-density-matrix entries for vacuum, thermal and coherent THz
//! states, and assembly of the 6×6 probe state.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::RwLock;

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::config::{ExperimentConfig, SpectralFilter};
use crate::constants::SI;
use crate::exec::Exec;
use crate::kernels::{KernelContext, Spectrum, TRUNCATION};
use crate::quadrature::{CVec, Integrator};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Entries of the probe density matrix (units of C·N_d unless a physical
/// scale is configured).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProbeMatrixElements {
    pub l1: Complex64,
    pub l2: Complex64,
    pub l11: f64,
    pub l22: f64,
    pub l12: Complex64,
    pub m: Complex64,
    pub k11: Complex64,
    pub k22: Complex64,
    pub x: f64,
}

impl ProbeMatrixElements {
    /// Multiply every second-order entry by `lambda` (first-order entries by
    /// √λ) and recompute X.
    pub fn scaled(&self, lambda: f64) -> Self {
        let s = lambda.sqrt();
        let mut e = ProbeMatrixElements {
            l1: self.l1 * s,
            l2: self.l2 * s,
            l11: self.l11 * lambda,
            l22: self.l22 * lambda,
            l12: self.l12 * lambda,
            m: self.m * lambda,
            k11: self.k11 * lambda,
            k22: self.k22 * lambda,
            x: 0.0,
        };
        e.x = x_fourth_order(&e);
        e
    }

    /// Largest modulus among the second-order entries.
    pub fn magnitude(&self) -> f64 {
        [
            self.l1.norm_sqr(),
            self.l2.norm_sqr(),
            self.l11.abs(),
            self.l22.abs(),
            self.l12.norm(),
            self.m.norm(),
            self.k11.norm(),
            self.k22.norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Copy rescaled so that [`magnitude`](Self::magnitude) equals `target`,
    /// together with the factor applied. Used to place reduced-unit elements
    /// in the perturbative regime before building a state; all ratios
    /// (negativity sign, φ_M, Bell value with N_LO ∝ |M|) are unchanged.
    pub fn perturbative(&self, target: f64) -> (Self, f64) {
        let mag = self.magnitude();
        if mag == 0.0 {
            return (*self, 1.0);
        }
        let lambda = target / mag;
        (self.scaled(lambda), lambda)
    }

    pub fn is_finite(&self) -> bool {
        [self.l1, self.l2, self.l12, self.m, self.k11, self.k22]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
            && self.l11.is_finite()
            && self.l22.is_finite()
            && self.x.is_finite()
    }
}

/// X = L11·L22 + |L12|² + |M|² (Wick factorization of the fourth-order
/// term).
pub fn x_fourth_order(e: &ProbeMatrixElements) -> f64 {
    e.l11 * e.l22 + e.l12.norm_sqr() + e.m.norm_sqr()
}

// ----------------------------------------------------------------------------
// Probe state

/// Basis order: |00⟩, |10⟩, |01⟩, |11⟩, |20⟩, |02⟩.
pub type Matrix6 = SMatrix<Complex64, 6, 6>;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeState {
    pub rho: Matrix6,
}

pub mod basis {
    pub const VAC: usize = 0;
    pub const ONE_ZERO: usize = 1;
    pub const ZERO_ONE: usize = 2;
    pub const ONE_ONE: usize = 3;
    pub const TWO_ZERO: usize = 4;
    pub const ZERO_TWO: usize = 5;
    /// (n1, n2) photon numbers of each basis vector.
    pub const OCCUPATIONS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)];
}

impl ProbeState {
    pub fn vacuum() -> Self {
        let mut rho = Matrix6::zeros();
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        ProbeState { rho }
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// Largest |ρ - ρ†| entry.
    pub fn hermiticity_defect(&self) -> f64 {
        (self.rho - self.rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Validate the state invariants at the given tolerance.
    pub fn check(&self, tol: f64) -> Result<()> {
        if (self.trace() - 1.0).norm() > tol {
            return Err(Error::Precondition(format!("trace {} != 1", self.trace())));
        }
        if self.hermiticity_defect() > tol {
            return Err(Error::Precondition("state is not Hermitian".into()));
        }
        for i in 0..6 {
            if self.rho[(i, i)].re < -tol {
                return Err(Error::Precondition(format!("negative population in basis state {i}")));
            }
        }
        Ok(())
    }
}

/// Build the state from its elements. The upper triangle carries
/// ρ[|10⟩,|01⟩] = L12, so that ⟨a2†a1⟩ = L12 and ⟨a1a2⟩ = M.
pub fn assemble_state(e: &ProbeMatrixElements) -> Result<ProbeState> {
    if !e.is_finite() {
        return Err(Error::Precondition("non-finite density-matrix elements".into()));
    }
    use basis::*;
    let c = |x: f64| Complex64::new(x, 0.0);
    let mut rho = Matrix6::zeros();
    let vac = 1.0 - e.l11 - e.l22 - e.x;
    if vac < -1e-9 {
        return Err(Error::NonPerturbative(vac));
    }
    rho[(VAC, VAC)] = c(vac);
    rho[(ONE_ZERO, VAC)] = e.l1;
    rho[(ZERO_ONE, VAC)] = e.l2;
    rho[(ONE_ONE, VAC)] = e.m;
    rho[(TWO_ZERO, VAC)] = e.k11;
    rho[(ZERO_TWO, VAC)] = e.k22;
    rho[(ONE_ZERO, ONE_ZERO)] = c(e.l11);
    rho[(ZERO_ONE, ZERO_ONE)] = c(e.l22);
    rho[(ZERO_ONE, ONE_ZERO)] = e.l12.conj();
    rho[(ONE_ONE, ONE_ONE)] = c(e.x);
    for i in 0..6 {
        for j in (i + 1)..6 {
            rho[(i, j)] = rho[(j, i)].conj();
        }
    }
    Ok(ProbeState { rho })
}

// ----------------------------------------------------------------------------
// Integrals

/// Inner q-integral results at one Ω: [Re-kernel δr=0, Re-kernel δr, full
/// kernel δr, full kernel δr=0].
pub type RadialSet = CVec<4>;

/// q∥ cutoff where e^{-q²w²/4} drops below 1e-12.
pub fn q_max(cfg: &ExperimentConfig) -> f64 {
    2.0 / cfg.beam_waist * (1.0 / TRUNCATION).ln().sqrt()
}

fn inner_integrator(cfg: &ExperimentConfig) -> Integrator {
    Integrator::new(0.1 * cfg.numerics.rel_tol, 1e-300).with_max_subdivisions(20_000)
}

fn panel_count(phase_range: f64, cfg: &ExperimentConfig) -> usize {
    let periods = phase_range / (2.0 * PI);
    (periods * cfg.numerics.nodes_per_period as f64 / 21.0).ceil() as usize + 2
}

/// Radial integrals ∫₀^{q_max} dq of the angular-reduced kernels at one Ω.
///
/// The q_z branch point at q = Re q(Ω) makes the kernel behave like
/// 1/√|q - q_c|; substituting q = q_c ∓ u² on either side removes it.
pub fn radial_integrals(ctx: &KernelContext, cfg: &ExperimentConfig) -> Result<RadialSet> {
    let dr = cfg.beam_separation;
    let qmax = q_max(cfg);
    let qr = ctx.q_c.re;
    let integ = inner_integrator(cfg);
    let f = |q: f64| CVec(ctx.radial_set(q, dr));
    let mut total = CVec::<4>([ZERO; 4]);
    let length = cfg.crystal_length;

    // Below the branch point: q = qr - u², u from √(qr - top) to √qr.
    let top = qr.min(qmax);
    if top > 0.0 {
        let (u0, u1) = ((qr - top).max(0.0).sqrt(), qr.sqrt());
        let phase = length * (ctx.q_c.norm() + ctx.omega * cfg.group_index / SI.c) + top * dr.abs();
        let r = integ.integrate_panels(|u: f64| f(qr - u * u) * (2.0 * u), u0, u1, panel_count(phase, cfg))?;
        total = total + r.value;
    }
    if qr < qmax {
        // Just above: q = qr + u² up to 2qr.
        let mid = (2.0 * qr).min(qmax);
        let phase = (mid - qr) * dr.abs();
        let r = integ.integrate_panels(
            |u: f64| f(qr + u * u) * (2.0 * u),
            0.0,
            (mid - qr).sqrt(),
            panel_count(phase, cfg),
        )?;
        total = total + r.value;
        if mid < qmax {
            let phase = (qmax - mid) * dr.abs();
            let r = integ.integrate_panels(f, mid, qmax, panel_count(phase, cfg))?;
            total = total + r.value;
        }
    }
    Ok(total)
}

/// Component layout of the Ω integrand.
mod slot {
    pub const L11_VAC: usize = 0;
    pub const L11_TH: usize = 1;
    pub const L12_VAC: usize = 2;
    pub const L12_TH: usize = 3;
    pub const M_VAC: usize = 4;
    pub const M_TH: usize = 5;
    pub const K_VAC: usize = 6;
    pub const K_TH: usize = 7;
}

fn omega_integrand(cfg: &ExperimentConfig, spectrum: &Spectrum, omega: f64) -> Result<CVec<8>> {
    let ctx = KernelContext::new(cfg, spectrum, omega)?;
    let radial = radial_integrals(&ctx, cfg)?.0;
    let [re0, re_d, full_d, full0] = radial;
    let (fp, fm, nt) = (ctx.f_pos, ctx.f_neg, ctx.n_thermal);
    let phase = Complex64::from_polar(1.0, cfg.time_delay * omega);
    let cos = (cfg.time_delay * omega).cos();
    let ff = fp * fm;
    let mut v = [ZERO; 8];
    v[slot::L11_VAC] = 0.25 * fp * fp * re0;
    v[slot::L12_VAC] = 0.25 * fp * fp * phase * re_d;
    v[slot::M_VAC] = 0.25 * ff * cos * full_d;
    v[slot::K_VAC] = 0.25 * ff * full0;
    if nt > 0.0 {
        v[slot::L11_TH] = 0.25 * nt * (fp * fp + fm * fm) * re0;
        v[slot::L12_TH] = 0.25 * nt * (phase * fp * fp + phase.conj() * fm * fm) * re_d;
        v[slot::M_TH] = 0.5 * nt * ff * cos * re_d;
        v[slot::K_TH] = 0.5 * nt * ff * re0;
    }
    Ok(CVec(v))
}

/// Settings of the Ω integration.
#[derive(Debug, Clone, Copy)]
pub struct ElementOptions {
    pub exec: Exec,
}

impl Default for ElementOptions {
    fn default() -> Self {
        ElementOptions { exec: Exec::Parallel }
    }
}

fn integrate_elements(cfg: &ExperimentConfig, opts: ElementOptions) -> Result<ProbeMatrixElements> {
    cfg.validate()?;
    let spectrum = Spectrum::new(cfg)?;
    let omega_max = spectrum.omega_max()?;
    let mut points = vec![0.0];
    points.extend(
        cfg.material
            .resonance_breakpoints()
            .into_iter()
            .filter(|&w| w > 0.0 && w < omega_max),
    );
    points.push(omega_max);
    // Subdivide for the e^{iΩδt} oscillation.
    let per_interval = panel_count(omega_max * cfg.time_delay.abs(), cfg);
    let mut refined = Vec::new();
    for w in points.windows(2) {
        let h = (w[1] - w[0]) / per_interval as f64;
        for k in 0..per_interval {
            refined.push(w[0] + h * k as f64);
        }
    }
    refined.push(omega_max);

    let integ = Integrator::new(cfg.numerics.rel_tol, cfg.numerics.abs_tol)
        .with_exec(opts.exec)
        .with_max_subdivisions(4000);
    // Errors inside the integrand cannot propagate through the integrator,
    // so the first one is stashed and reported afterwards.
    let failure: RwLock<Option<Error>> = RwLock::new(None);
    let result = integ.integrate_points(
        |w: f64| match omega_integrand(cfg, &spectrum, w) {
            Ok(v) => v,
            Err(e) => {
                let mut slot = failure.write().unwrap();
                if slot.is_none() {
                    *slot = Some(e);
                }
                CVec([ZERO; 8])
            }
        },
        &refined,
    );
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let v = result?.value.0;
    let scale = cfg.prefactor();
    let l11 = scale * (v[slot::L11_VAC].re + v[slot::L11_TH].re);
    let mut e = ProbeMatrixElements {
        l1: ZERO,
        l2: ZERO,
        l11,
        l22: l11,
        l12: scale * (v[slot::L12_VAC] + v[slot::L12_TH]),
        m: scale * (v[slot::M_VAC] + v[slot::M_TH]),
        k11: scale * (v[slot::K_VAC] + v[slot::K_TH]) * FRAC_1_SQRT_2,
        k22: ZERO,
        x: 0.0,
    };
    e.k22 = e.k11;
    e.x = x_fourth_order(&e);
    Ok(e)
}

/// Vacuum elements (temperature ignored).
pub fn vacuum_elements(cfg: &ExperimentConfig) -> Result<ProbeMatrixElements> {
    vacuum_elements_with(cfg, ElementOptions::default())
}

pub fn vacuum_elements_with(cfg: &ExperimentConfig, opts: ElementOptions) -> Result<ProbeMatrixElements> {
    let mut vac = cfg.clone();
    vac.temperature = 0.0;
    integrate_elements(&vac, opts)
}

/// Thermal-state elements: vacuum part plus the n_T-weighted additions. At
/// T = 0 this is the vacuum computation itself.
pub fn thermal_elements(cfg: &ExperimentConfig) -> Result<ProbeMatrixElements> {
    thermal_elements_with(cfg, ElementOptions::default())
}

pub fn thermal_elements_with(cfg: &ExperimentConfig, opts: ElementOptions) -> Result<ProbeMatrixElements> {
    integrate_elements(cfg, opts)
}

/// K_ii: the M integrand with both pulses coincident, divided by √2.
pub fn exchange_self(cfg: &ExperimentConfig) -> Result<Complex64> {
    Ok(thermal_elements(cfg)?.k11)
}

// ----------------------------------------------------------------------------
// Coherent states

/// One classical plane-wave component A cos(K·r - Ωt + φ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    /// V/m.
    pub amplitude: f64,
    /// rad/m, (x, y, z).
    pub wavevector: [f64; 3],
    /// rad/s.
    pub omega: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassicalWaveform {
    pub components: Vec<PlaneWave>,
}

impl ClassicalWaveform {
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.components.iter().enumerate() {
            if !(c.omega > 0.0 && c.omega.is_finite()) {
                return Err(Error::validation(format!("waveform[{i}].omega"), "must be > 0"));
            }
            if !(c.amplitude.is_finite() && c.phase.is_finite() && c.wavevector.iter().all(|k| k.is_finite())) {
                return Err(Error::validation(format!("waveform[{i}]"), "must be finite"));
            }
        }
        Ok(())
    }

    /// Plane wave propagating along z in the crystal, k = Re n(Ω)·Ω/c.
    pub fn along_z(cfg: &ExperimentConfig, amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        let n = cfg.material.refractive_index(omega)?;
        Ok(ClassicalWaveform {
            components: vec![PlaneWave {
                amplitude,
                wavevector: [0.0, 0.0, n.re * omega / SI.c],
                omega,
                phase,
            }],
        })
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Space-time overlap of the normalized squared envelope of pulse `pulse`
/// (1 or 2) with cos(K·r - Ωt + φ). Pulse 2 is pulse 1 shifted per
/// Ē₂(r, t) = Ē₁(r + δr ŷ, t + δt).
pub fn envelope_overlap(cfg: &ExperimentConfig, wave: &PlaneWave, pulse: u8) -> Result<f64> {
    let [kx, ky, kz] = wave.wavevector;
    let w = cfg.beam_waist;
    let tau = cfg.pulse_duration;
    let mut phase = wave.phase;
    match pulse {
        1 => {}
        2 => phase += -ky * cfg.beam_separation + wave.omega * cfg.time_delay,
        _ => return Err(Error::Precondition(format!("pulse index must be 1 or 2, got {pulse}"))),
    }
    let transverse = (-(kx * kx + ky * ky) * w * w / 8.0).exp();
    let temporal = (-(wave.omega * tau).powi(2) / 8.0).exp();
    let mismatch = (kz - wave.omega * cfg.group_index / SI.c) * cfg.crystal_length / 2.0;
    Ok(phase.cos() * transverse * temporal * sinc(mismatch))
}

/// L_i = -½√(C N_d) Σ_j A_j G_j.
pub fn classical_overlap(cfg: &ExperimentConfig, waveform: &ClassicalWaveform, pulse: u8) -> Result<Complex64> {
    if cfg.filter != SpectralFilter::Full {
        return Err(Error::UnsupportedFilter(
            "coherent displacements are evaluated for the unfiltered spectrum only (the pulse functions are then real)"
                .into(),
        ));
    }
    waveform.validate()?;
    let mut sum = 0.0;
    for c in &waveform.components {
        sum += c.amplitude * envelope_overlap(cfg, c, pulse)?;
    }
    Ok(Complex64::new(-0.5 * cfg.prefactor().sqrt() * sum, 0.0))
}

/// Add a classical displacement to field-state elements: ⟨a_i⟩ = l_i and
/// all second moments pick up the corresponding products.
pub fn displace(base: &ProbeMatrixElements, l1: Complex64, l2: Complex64) -> ProbeMatrixElements {
    let mut e = ProbeMatrixElements {
        l1: base.l1 + l1,
        l2: base.l2 + l2,
        l11: base.l11 + l1.norm_sqr(),
        l22: base.l22 + l2.norm_sqr(),
        l12: base.l12 + l1 * l2.conj(),
        m: base.m + l1 * l2,
        k11: base.k11 + l1 * l1 * FRAC_1_SQRT_2,
        k22: base.k22 + l2 * l2 * FRAC_1_SQRT_2,
        x: 0.0,
    };
    e.x = x_fourth_order(&e);
    e
}

/// Coherent-state elements: vacuum part displaced by the classical overlaps.
pub fn coherent_elements(cfg: &ExperimentConfig, waveform: &ClassicalWaveform) -> Result<ProbeMatrixElements> {
    let l1 = classical_overlap(cfg, waveform, 1)?;
    let l2 = classical_overlap(cfg, waveform, 2)?;
    Ok(displace(&vacuum_elements(cfg)?, l1, l2))
}

// ----------------------------------------------------------------------------
// Cache

/// Thread-safe memo of element computations keyed by the full config
/// snapshot. Values are deterministic, so concurrent inserts of the same
/// key are harmless (last write wins).
#[derive(Debug, Default)]
pub struct ElementCache {
    map: RwLock<HashMap<String, ProbeMatrixElements>>,
}

impl ElementCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(cfg: &ExperimentConfig, waveform: Option<&ClassicalWaveform>) -> String {
        format!("{}\n{:?}", cfg.to_toml_string(), waveform)
    }

    pub fn get_or_compute<F>(
        &self,
        cfg: &ExperimentConfig,
        waveform: Option<&ClassicalWaveform>,
        compute: F,
    ) -> Result<ProbeMatrixElements>
    where
        F: FnOnce() -> Result<ProbeMatrixElements>,
    {
        let key = Self::key(cfg, waveform);
        if let Some(e) = self.map.read().unwrap().get(&key) {
            return Ok(*e);
        }
        let e = compute()?;
        self.map.write().unwrap().insert(key, e);
        Ok(e)
    }

    pub fn thermal(&self, cfg: &ExperimentConfig) -> Result<ProbeMatrixElements> {
        self.get_or_compute(cfg, None, || thermal_elements(cfg))
    }
}
