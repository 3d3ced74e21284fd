//! THz permittivity and refractive index of the nonlinear crystal.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::{rad_per_s_to_thz, thz_to_rad_per_s};
use crate::{Error, Result};

/// Shipped ZnTe oscillator file.
pub const DEFAULT_MATERIAL: &str = include_str!("../data/znte.toml");

/// One transverse-optical phonon resonance (all rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    pub omega_to: f64,
    pub omega_lo: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PermittivityModel {
    Constant { eps: Complex64 },
    Lorentz { eps_inf: f64, oscillators: Vec<Oscillator> },
}

impl PermittivityModel {
    /// Non-dispersive medium with real index `n`.
    pub fn constant_index(n: f64) -> Self {
        PermittivityModel::Constant {
            eps: Complex64::new(n * n, 0.0),
        }
    }

    /// The shipped ZnTe model.
    pub fn default_crystal() -> Self {
        parse_material(DEFAULT_MATERIAL, "built-in ZnTe file").expect("shipped material file is valid")
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PermittivityModel::Constant { eps } => {
                if !(eps.re.is_finite() && eps.im.is_finite()) {
                    return Err(Error::validation("material.eps", "must be finite"));
                }
                if eps.im < 0.0 {
                    return Err(Error::validation(
                        "material.eps",
                        "Im eps must be >= 0 (passive medium)",
                    ));
                }
            }
            PermittivityModel::Lorentz { eps_inf, oscillators } => {
                if !(*eps_inf > 0.0 && eps_inf.is_finite()) {
                    return Err(Error::validation("material.eps_inf", "must be > 0"));
                }
                for (i, o) in oscillators.iter().enumerate() {
                    if !(o.omega_to > 0.0 && o.omega_to.is_finite()) {
                        return Err(Error::validation(format!("material.oscillator[{i}].to"), "must be > 0"));
                    }
                    if !(o.omega_lo > 0.0 && o.omega_lo.is_finite()) {
                        return Err(Error::validation(format!("material.oscillator[{i}].lo"), "must be > 0"));
                    }
                    if !(o.gamma >= 0.0 && o.gamma.is_finite()) {
                        return Err(Error::validation(
                            format!("material.oscillator[{i}].gamma"),
                            "must be >= 0",
                        ));
                    }
                    if o.omega_lo < o.omega_to {
                        // Negative oscillator strength would make Im eps < 0.
                        return Err(Error::validation(
                            format!("material.oscillator[{i}].lo"),
                            "must be >= the TO frequency (passivity)",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Complex permittivity. The Lorentz formula is also evaluated for
    /// negative `omega` (Re even, Im odd).
    pub fn permittivity(&self, omega: f64) -> Result<Complex64> {
        match self {
            PermittivityModel::Constant { eps } => Ok(*eps),
            PermittivityModel::Lorentz { eps_inf, oscillators } => {
                let mut sum = Complex64::new(1.0, 0.0);
                for o in oscillators {
                    let denom = Complex64::new(o.omega_to * o.omega_to - omega * omega, -o.gamma * omega);
                    if denom.re == 0.0 && denom.im == 0.0 {
                        return Err(Error::PermittivityPole { omega });
                    }
                    sum += (o.omega_lo * o.omega_lo - o.omega_to * o.omega_to) / denom;
                }
                Ok(sum * *eps_inf)
            }
        }
    }

    /// Principal square root of the permittivity (Im n ≥ 0).
    pub fn refractive_index(&self, omega: f64) -> Result<Complex64> {
        Ok(principal_index(self.permittivity(omega)?))
    }

    /// Frequencies near which quadrature should be pre-split: ω_TO ± 3γ and
    /// ω_TO itself, for every oscillator.
    pub fn resonance_breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        if let PermittivityModel::Lorentz { oscillators, .. } = self {
            for o in oscillators {
                pts.push(o.omega_to);
                if o.gamma > 0.0 {
                    pts.push(o.omega_to - 3.0 * o.gamma);
                    pts.push(o.omega_to + 3.0 * o.gamma);
                }
            }
        }
        pts.retain(|p| *p > 0.0);
        pts.sort_by(f64::total_cmp);
        pts
    }
}

/// √ε on the branch with Im n ≥ 0 (and Re n ≥ 0 when Im n = 0).
pub fn principal_index(eps: Complex64) -> Complex64 {
    let mut n = eps.sqrt();
    if n.im < 0.0 || (n.im == 0.0 && n.re < 0.0) {
        n = -n;
    }
    n
}

pub fn permittivity(model: &PermittivityModel, omega: f64) -> Result<Complex64> {
    model.permittivity(omega)
}

pub fn refractive_index(model: &PermittivityModel, omega: f64) -> Result<Complex64> {
    model.refractive_index(omega)
}

/// On-disk material description (frequencies in THz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum MaterialSpec {
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps_re: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps_im: Option<f64>,
    },
    Lorentz {
        eps_inf: f64,
        #[serde(default)]
        oscillator: Vec<OscillatorSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSpec {
    pub to_thz: f64,
    pub lo_thz: f64,
    pub gamma_thz: f64,
}

impl MaterialSpec {
    pub fn to_model(&self) -> Result<PermittivityModel> {
        let model = match self {
            MaterialSpec::Constant { n, eps_re, eps_im } => match (n, eps_re) {
                (Some(n), None) if eps_im.is_none() => PermittivityModel::constant_index(*n),
                (None, Some(re)) => PermittivityModel::Constant {
                    eps: Complex64::new(*re, eps_im.unwrap_or(0.0)),
                },
                _ => {
                    return Err(Error::validation(
                        "material",
                        "constant model needs either `n` or `eps_re` (with optional `eps_im`)",
                    ))
                }
            },
            MaterialSpec::Lorentz { eps_inf, oscillator } => PermittivityModel::Lorentz {
                eps_inf: *eps_inf,
                oscillators: oscillator
                    .iter()
                    .map(|o| Oscillator {
                        omega_to: thz_to_rad_per_s(o.to_thz),
                        omega_lo: thz_to_rad_per_s(o.lo_thz),
                        gamma: thz_to_rad_per_s(o.gamma_thz),
                    })
                    .collect(),
            },
        };
        model.validate()?;
        Ok(model)
    }

    pub fn from_model(model: &PermittivityModel) -> Self {
        match model {
            PermittivityModel::Constant { eps } => MaterialSpec::Constant {
                n: None,
                eps_re: Some(eps.re),
                eps_im: Some(eps.im),
            },
            PermittivityModel::Lorentz { eps_inf, oscillators } => MaterialSpec::Lorentz {
                eps_inf: *eps_inf,
                oscillator: oscillators
                    .iter()
                    .map(|o| OscillatorSpec {
                        to_thz: rad_per_s_to_thz(o.omega_to),
                        lo_thz: rad_per_s_to_thz(o.omega_lo),
                        gamma_thz: rad_per_s_to_thz(o.gamma),
                    })
                    .collect(),
            },
        }
    }
}

/// Parse material text; `context` names the source in error messages.
pub fn parse_material(text: &str, context: &str) -> Result<PermittivityModel> {
    let spec: MaterialSpec = toml::from_str(text).map_err(|e| Error::parse(context, e))?;
    spec.to_model()
}

pub fn load_material(path: impl AsRef<Path>) -> Result<PermittivityModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_material(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn constant_model() {
        let m = PermittivityModel::Constant {
            eps: Complex64::new(9.0, 0.0),
        };
        assert_eq!(m.permittivity(1e12).unwrap(), Complex64::new(9.0, 0.0));
        assert_eq!(m.refractive_index(3e13).unwrap(), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn index_branch() {
        assert!(close(
            principal_index(Complex64::new(3.0, 4.0)),
            Complex64::new(2.0, 1.0),
            1e-15
        ));
        assert!(close(
            principal_index(Complex64::new(-1.0, 0.0)),
            Complex64::new(0.0, 1.0),
            1e-15
        ));
        assert!(close(
            principal_index(Complex64::new(-1.0, -0.0)),
            Complex64::new(0.0, 1.0),
            1e-15
        ));
    }

    #[test]
    fn default_file_values() {
        match PermittivityModel::default_crystal() {
            PermittivityModel::Lorentz { eps_inf, oscillators } => {
                assert_eq!(eps_inf, 7.38);
                assert_eq!(oscillators.len(), 1);
            }
            _ => panic!("expected Lorentz model"),
        }
    }

    #[test]
    fn lorentz_limits() {
        let m = PermittivityModel::default_crystal();
        let PermittivityModel::Lorentz { eps_inf, oscillators } = &m else {
            unreachable!()
        };
        let o = oscillators[0];
        let lst = eps_inf * o.omega_lo.powi(2) / o.omega_to.powi(2);
        assert!(close(m.permittivity(0.0).unwrap(), Complex64::new(lst, 0.0), 1e-14));
        let far = m.permittivity(1e20).unwrap();
        assert!((far.re - eps_inf).abs() < 1e-6 && far.im.abs() < 1e-6);
    }

    #[test]
    fn undamped_pole_is_an_error() {
        let m = PermittivityModel::Lorentz {
            eps_inf: 7.0,
            oscillators: vec![Oscillator {
                omega_to: 2.0,
                omega_lo: 3.0,
                gamma: 0.0,
            }],
        };
        assert!(matches!(m.permittivity(2.0), Err(Error::PermittivityPole { .. })));
        assert!(m.permittivity(2.5).is_ok());
    }

    #[test]
    fn passivity_branch_and_parity() {
        let m = PermittivityModel::default_crystal();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let w: f64 = rng.random_range(1.0..1e14);
            let eps = m.permittivity(w).unwrap();
            assert!(eps.im >= 0.0);
            let n = m.refractive_index(w).unwrap();
            assert!(n.im >= 0.0 && n.re >= 0.0);
            assert!(close(n * n, eps, 1e-12));
            let neg = m.permittivity(-w).unwrap();
            assert!((neg.re - eps.re).abs() <= 1e-12 * eps.norm());
            assert!((neg.im + eps.im).abs() <= 1e-12 * eps.norm());
        }
    }

    #[test]
    fn parse_errors() {
        let bad = "model = \"lorentz\"\neps_inf = 7.0\n[[oscillator]]\nto_thz = 5.0\nlo_thz = 6.0\ngamma_thz = -0.1\n";
        assert!(matches!(parse_material(bad, "t"), Err(Error::Validation { .. })));
        assert!(matches!(parse_material("model = 3", "t"), Err(Error::Parse { .. })));
        let c = parse_material("model = \"constant\"\nn = 3.18\n", "t").unwrap();
        assert_eq!(
            c,
            PermittivityModel::Constant {
                eps: Complex64::new(3.18 * 3.18, 0.0)
            }
        );
    }

    #[test]
    fn spec_round_trip() {
        let m = PermittivityModel::default_crystal();
        let text = toml::to_string(&MaterialSpec::from_model(&m)).unwrap();
        let back = parse_material(&text, "round trip").unwrap();
        let (PermittivityModel::Lorentz { oscillators: a, .. }, PermittivityModel::Lorentz { oscillators: b, .. }) =
            (&m, &back)
        else {
            unreachable!()
        };
        assert!((a[0].omega_lo - b[0].omega_lo).abs() <= 1e-15 * a[0].omega_lo);
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.toml");
        std::fs::write(&p, DEFAULT_MATERIAL).unwrap();
        assert_eq!(load_material(&p).unwrap(), PermittivityModel::default_crystal());
        assert!(matches!(
            load_material(dir.path().join("missing.toml")),
            Err(Error::Io { .. })
        ));
    }
}
