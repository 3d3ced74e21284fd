//! Experiment configuration: file schema (µm, fs, mm, THz, K), validation,
//! overrides and conversion to SI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::SI;
use crate::materials::{MaterialSpec, PermittivityModel};
use crate::quadrature::{DEFAULT_ABS_TOL, DEFAULT_NODES_PER_PERIOD, DEFAULT_REL_TOL};
use crate::units::{rad_per_s_to_thz, thz_to_rad_per_s, FEMTOSECOND, MICROMETER, MILLIMETER};
use crate::{Error, Result};

/// Spectral filter in front of the detectors (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralFilter {
    Full,
    /// Detected window [omega_min, omega_max]; `omega_max` may be infinite.
    Band {
        omega_min: f64,
        omega_max: f64,
    },
    /// Narrow window of width `delta` around `omega_d`.
    Monochromatic {
        omega_d: f64,
        delta: f64,
    },
}

/// Absolute calibration. Without it every element is in units of C·N_d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalScale {
    /// Second-order susceptibility (m/V).
    pub chi2: f64,
    /// Photons per detection window.
    pub n_d: f64,
    /// Crystal refractive index at the laser frequency.
    pub n_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub nodes_per_period: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            nodes_per_period: DEFAULT_NODES_PER_PERIOD,
        }
    }
}

/// One two-beam EOS run, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub beam_waist: f64,
    pub pulse_duration: f64,
    pub crystal_length: f64,
    pub group_index: f64,
    pub central_frequency: f64,
    pub beam_separation: f64,
    /// Positive values delay pulse 2 relative to pulse 1.
    pub time_delay: f64,
    pub filter: SpectralFilter,
    pub material: PermittivityModel,
    pub temperature: f64,
    pub scale: Option<PhysicalScale>,
    pub numerics: Numerics,
}

impl ExperimentConfig {
    /// Parameters of the reference experiment: w = 10 µm, τσ = 195 fs,
    /// L = 1 mm, n_g = 3.18, 1550 nm laser, shipped ZnTe model, vacuum.
    pub fn baseline() -> Self {
        ConfigFile::default().resolve(None).expect("baseline is valid")
    }

    /// Spectral width σω = 2/τσ (rad/s).
    pub fn sigma_omega(&self) -> f64 {
        2.0 / self.pulse_duration
    }

    /// Prefactor C·N_d, or 1 in reduced units.
    pub fn prefactor(&self) -> f64 {
        match self.scale {
            None => 1.0,
            Some(s) => detection_efficiency(s.chi2, self.crystal_length, self.central_frequency, s.n_c) * s.n_d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(name, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("beam_waist_um", self.beam_waist)?;
        positive("pulse_duration_fs", self.pulse_duration)?;
        positive("crystal_length_mm", self.crystal_length)?;
        positive("central_frequency_thz", self.central_frequency)?;
        positive("group_index", self.group_index)?;
        if !self.beam_separation.is_finite() {
            return Err(Error::validation("beam_separation_um", "must be finite"));
        }
        if !self.time_delay.is_finite() {
            return Err(Error::validation("time_delay_fs", "must be finite"));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::validation("temperature_k", "must be finite and >= 0"));
        }
        match self.filter {
            SpectralFilter::Full => {}
            SpectralFilter::Band { omega_min, omega_max } => {
                if !(omega_min >= 0.0 && omega_min.is_finite()) {
                    return Err(Error::validation("filter.min", "must be finite and >= 0"));
                }
                if !(omega_min < omega_max) {
                    return Err(Error::validation("filter.max", "must exceed filter.min"));
                }
            }
            SpectralFilter::Monochromatic { omega_d, delta } => {
                positive("filter.omega_d", omega_d)?;
                positive("filter.delta_thz", delta)?;
                if delta >= self.sigma_omega() / 50.0 {
                    return Err(Error::validation(
                        "filter.delta_thz",
                        "must be narrow: delta < sigma_omega / 50",
                    ));
                }
            }
        }
        self.material.validate()?;
        if let Some(s) = self.scale {
            positive("scale.chi2_m_per_v", s.chi2)?;
            positive("scale.photons", s.n_d)?;
            positive("scale.n_c", s.n_c)?;
        }
        let n = self.numerics;
        positive("numerics.rel_tol", n.rel_tol)?;
        positive("numerics.abs_tol", n.abs_tol)?;
        if n.nodes_per_period == 0 {
            return Err(Error::validation("numerics.nodes_per_period", "must be >= 1"));
        }
        Ok(())
    }

    /// Human-unit file representation (material written inline).
    pub fn to_file(&self) -> ConfigFile {
        let filter = match self.filter {
            SpectralFilter::Full => FilterSpec::Full,
            SpectralFilter::Band { omega_min, omega_max } => FilterSpec::Band {
                min_thz: Some(rad_per_s_to_thz(omega_min)),
                min_sigma: None,
                max_thz: omega_max.is_finite().then(|| rad_per_s_to_thz(omega_max)),
            },
            SpectralFilter::Monochromatic { omega_d, delta } => FilterSpec::Monochromatic {
                omega_d_thz: Some(rad_per_s_to_thz(omega_d)),
                omega_d_sigma: None,
                delta_thz: rad_per_s_to_thz(delta),
            },
        };
        ConfigFile {
            beam_waist_um: self.beam_waist / MICROMETER,
            pulse_duration_fs: self.pulse_duration / FEMTOSECOND,
            crystal_length_mm: self.crystal_length / MILLIMETER,
            group_index: self.group_index,
            central_frequency_thz: rad_per_s_to_thz(self.central_frequency),
            beam_separation_um: self.beam_separation / MICROMETER,
            time_delay_fs: self.time_delay / FEMTOSECOND,
            temperature_k: self.temperature,
            filter,
            material: MaterialSource::Inline(MaterialSpec::from_model(&self.material)),
            scale: self.scale.map(|s| ScaleSpec {
                chi2_m_per_v: s.chi2,
                photons: s.n_d,
                n_c: s.n_c,
            }),
            numerics: NumericsSpec {
                rel_tol: self.numerics.rel_tol,
                abs_tol: self.numerics.abs_tol,
                nodes_per_period: self.numerics.nodes_per_period,
            },
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serializes")
    }
}

/// Spectral width σω = 2/τσ (rad/s).
pub fn sigma_omega(cfg: &ExperimentConfig) -> Result<f64> {
    if !(cfg.pulse_duration > 0.0) {
        return Err(Error::Precondition("pulse duration must be > 0".into()));
    }
    Ok(cfg.sigma_omega())
}

/// Detection efficiency C with √C = 2Lχ⁽²⁾ω_c/(ε₀ c n_c).
pub fn detection_efficiency(chi2: f64, length: f64, omega_c: f64, n_c: f64) -> f64 {
    let sqrt_c = 2.0 * length * chi2 * omega_c / (SI.eps0 * SI.c * n_c);
    sqrt_c * sqrt_c
}

// ----------------------------------------------------------------------------
// File schema

fn default_waist() -> f64 {
    10.0
}
fn default_duration() -> f64 {
    195.0
}
fn default_length() -> f64 {
    1.0
}
fn default_group_index() -> f64 {
    3.18
}
/// 1550 nm.
fn default_central() -> f64 {
    193.414_489
}

/// Config file contents. Every field has a default, so an empty file is the
/// baseline experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "default_waist")]
    pub beam_waist_um: f64,
    #[serde(default = "default_duration")]
    pub pulse_duration_fs: f64,
    #[serde(default = "default_length")]
    pub crystal_length_mm: f64,
    #[serde(default = "default_group_index")]
    pub group_index: f64,
    #[serde(default = "default_central")]
    pub central_frequency_thz: f64,
    #[serde(default)]
    pub beam_separation_um: f64,
    #[serde(default)]
    pub time_delay_fs: f64,
    #[serde(default)]
    pub temperature_k: f64,
    #[serde(default)]
    pub filter: FilterSpec,
    #[serde(default)]
    pub material: MaterialSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleSpec>,
    #[serde(default)]
    pub numerics: NumericsSpec,
}

impl Default for ConfigFile {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FilterSpec {
    #[default]
    Full,
    /// Lower edge given absolutely (`min_thz`) or as an offset from the
    /// central frequency in units of σω (`min_sigma`); missing `max_thz`
    /// means no upper edge.
    Band {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_thz: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_thz: Option<f64>,
    },
    /// Detected frequency given absolutely or as an offset in σω.
    Monochromatic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_d_thz: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_d_sigma: Option<f64>,
        delta_thz: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialSource {
    /// Path to a material file, relative to the config file.
    File {
        file: PathBuf,
    },
    Inline(MaterialSpec),
    /// `material = "builtin"` selects the shipped ZnTe model.
    Named(String),
}

impl Default for MaterialSource {
    fn default() -> Self {
        MaterialSource::Named("builtin".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    pub chi2_m_per_v: f64,
    pub photons: f64,
    pub n_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub nodes_per_period: usize,
}

impl Default for NumericsSpec {
    fn default() -> Self {
        let n = Numerics::default();
        NumericsSpec {
            rel_tol: n.rel_tol,
            abs_tol: n.abs_tol,
            nodes_per_period: n.nodes_per_period,
        }
    }
}

impl ConfigFile {
    /// Convert to SI and validate. `base_dir` resolves relative material
    /// paths.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<ExperimentConfig> {
        let pulse_duration = self.pulse_duration_fs * FEMTOSECOND;
        let central_frequency = thz_to_rad_per_s(self.central_frequency_thz);
        let sigma = 2.0 / pulse_duration;
        let pick = |field: &str, thz: Option<f64>, sig: Option<f64>| -> Result<f64> {
            match (thz, sig) {
                (Some(v), None) => Ok(thz_to_rad_per_s(v)),
                (None, Some(s)) => Ok(central_frequency + s * sigma),
                _ => Err(Error::validation(
                    field,
                    "give exactly one of the `_thz` and `_sigma` forms",
                )),
            }
        };
        let filter = match self.filter {
            FilterSpec::Full => SpectralFilter::Full,
            FilterSpec::Band {
                min_thz,
                min_sigma,
                max_thz,
            } => SpectralFilter::Band {
                omega_min: pick("filter.min", min_thz, min_sigma)?,
                omega_max: max_thz.map_or(f64::INFINITY, thz_to_rad_per_s),
            },
            FilterSpec::Monochromatic {
                omega_d_thz,
                omega_d_sigma,
                delta_thz,
            } => SpectralFilter::Monochromatic {
                omega_d: pick("filter.omega_d", omega_d_thz, omega_d_sigma)?,
                delta: thz_to_rad_per_s(delta_thz),
            },
        };
        let material = match &self.material {
            MaterialSource::Inline(spec) => spec.to_model()?,
            MaterialSource::File { file } => {
                let path = match base_dir {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file.clone(),
                };
                crate::materials::load_material(path)?
            }
            MaterialSource::Named(name) if name == "builtin" => PermittivityModel::default_crystal(),
            MaterialSource::Named(name) => {
                return Err(Error::validation(
                    "material",
                    format!("unknown material `{name}` (use \"builtin\", a table, or {{ file = ... }})"),
                ))
            }
        };
        let cfg = ExperimentConfig {
            beam_waist: self.beam_waist_um * MICROMETER,
            pulse_duration,
            crystal_length: self.crystal_length_mm * MILLIMETER,
            group_index: self.group_index,
            central_frequency,
            beam_separation: self.beam_separation_um * MICROMETER,
            time_delay: self.time_delay_fs * FEMTOSECOND,
            filter,
            material,
            temperature: self.temperature_k,
            scale: self.scale.map(|s| PhysicalScale {
                chi2: s.chi2_m_per_v,
                n_d: s.photons,
                n_c: s.n_c,
            }),
            numerics: Numerics {
                rel_tol: self.numerics.rel_tol,
                abs_tol: self.numerics.abs_tol,
                nodes_per_period: self.numerics.nodes_per_period,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

// ----------------------------------------------------------------------------
// Loading and overrides

/// Parse config text with `key=value` overrides applied first. Keys are
/// dotted paths (`filter.min_sigma`); values are parsed as TOML scalars,
/// falling back to strings.
pub fn parse_config(
    text: &str,
    context: &str,
    base_dir: Option<&Path>,
    overrides: &[String],
) -> Result<ExperimentConfig> {
    let mut table: toml::Table = text.parse().map_err(|e| Error::parse(context, e))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let file: ConfigFile = table.try_into().map_err(|e| Error::parse(context, e))?;
    file.resolve(base_dir)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    load_config_with(path, &[])
}

pub fn load_config_with(path: impl AsRef<Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, &path.display().to_string(), path.parent(), overrides)
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::parse("--set", format!("expected key=value, got `{assignment}`")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = parse_scalar(raw);
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::parse("--set", format!("bad key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(Error::parse("--set", format!("`{p}` is not a table in `{key}`"))),
        };
    }
    let leaf = parts[parts.len() - 1];
    // Absolute and σω-relative forms are alternatives; setting one drops the
    // other.
    if let Some(stem) = leaf.strip_suffix("_thz") {
        cur.remove(&format!("{stem}_sigma"));
    } else if let Some(stem) = leaf.strip_suffix("_sigma") {
        cur.remove(&format!("{stem}_thz"));
    }
    cur.insert(leaf.to_string(), value);
    Ok(())
}

fn parse_scalar(raw: &str) -> toml::Value {
    if let Ok(i) = raw.parse::<i64>() {
        // Fields are floats except nodes_per_period; TOML integers are
        // accepted for both by converting here.
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    match raw {
        "true" => toml::Value::Boolean(true),
        "false" => toml::Value::Boolean(false),
        _ => toml::Value::String(raw.trim_matches('"').to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / b.abs().max(a.abs())
        }
    }

    #[test]
    fn baseline_values() {
        let cfg = parse_config(
            "beam_waist_um = 10\npulse_duration_fs = 195\ncrystal_length_mm = 1\ngroup_index = 3.18\n",
            "t",
            None,
            &[],
        )
        .unwrap();
        assert!(rel(cfg.beam_waist, 10e-6) < 1e-15);
        assert!(rel(cfg.pulse_duration, 195e-15) < 1e-15);
        assert!(rel(cfg.crystal_length, 1e-3) < 1e-15);
        assert_eq!(cfg.group_index, 3.18);
        assert_eq!(cfg.temperature, 0.0);
        assert_eq!(cfg.filter, SpectralFilter::Full);
        assert_eq!(cfg, ExperimentConfig::baseline());
    }

    #[test]
    fn sigma_omega_values() {
        let mut cfg = ExperimentConfig::baseline();
        assert!(rel(sigma_omega(&cfg).unwrap(), 1.0256e13) < 1e-4);
        cfg.pulse_duration = 2.0;
        assert_eq!(sigma_omega(&cfg).unwrap(), 1.0);
        cfg.pulse_duration = 0.0;
        assert!(sigma_omega(&cfg).is_err());
    }

    #[test]
    fn inverted_band_is_rejected() {
        let text = "[filter]\nkind = \"band\"\nmin_thz = 250\nmax_thz = 200\n";
        match parse_config(text, "t", None, &[]) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "filter.max"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_is_parse_error() {
        assert!(matches!(
            parse_config("beam_waist_um = = 3", "t", None, &[]),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_config("unknown_key = 3", "t", None, &[]),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn negative_waist_names_field() {
        match parse_config("beam_waist_um = -1", "t", None, &[]) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "beam_waist_um"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sigma_relative_filter() {
        let cfg = parse_config("[filter]\nkind = \"band\"\nmin_sigma = 3\n", "t", None, &[]).unwrap();
        let SpectralFilter::Band { omega_min, omega_max } = cfg.filter else {
            panic!()
        };
        assert!(rel(omega_min, cfg.central_frequency + 3.0 * cfg.sigma_omega()) < 1e-15);
        assert!(omega_max.is_infinite());
    }

    #[test]
    fn monochromatic_width_check() {
        let wide = "[filter]\nkind = \"monochromatic\"\nomega_d_sigma = 1\ndelta_thz = 1.0\n";
        assert!(parse_config(wide, "t", None, &[]).is_err());
        let narrow = "[filter]\nkind = \"monochromatic\"\nomega_d_sigma = 1\ndelta_thz = 0.01\n";
        assert!(parse_config(narrow, "t", None, &[]).is_ok());
    }

    #[test]
    fn overrides() {
        let cfg = parse_config(
            "[filter]\nkind = \"band\"\nmin_thz = 200\n",
            "t",
            None,
            &[
                "beam_separation_um=50".into(),
                "filter.min_sigma=2".into(),
                "temperature_k=4".into(),
            ],
        )
        .unwrap();
        assert!(rel(cfg.beam_separation, 50e-6) < 1e-15);
        assert_eq!(cfg.temperature, 4.0);
        let SpectralFilter::Band { omega_min, .. } = cfg.filter else {
            panic!()
        };
        assert!(rel(omega_min, cfg.central_frequency + 2.0 * cfg.sigma_omega()) < 1e-15);
        assert!(parse_config("", "t", None, &["nonsense".into()]).is_err());
        assert!(parse_config("", "t", None, &["material=glass".into()]).is_err());
    }

    #[test]
    fn round_trip() {
        let text = "beam_waist_um = 12.5\ntime_delay_fs = -30\ntemperature_k = 14\n\
                    [filter]\nkind = \"band\"\nmin_sigma = 3\nmax_thz = 260\n\
                    [scale]\nchi2_m_per_v = 8e-12\nphotons = 1e8\nn_c = 2.8\n";
        let cfg = parse_config(text, "t", None, &[]).unwrap();
        let again = parse_config(&cfg.to_toml_string(), "t", None, &[]).unwrap();
        assert!(rel(cfg.beam_waist, again.beam_waist) <= 1e-15);
        assert!(rel(cfg.pulse_duration, again.pulse_duration) <= 1e-15);
        assert!(rel(cfg.central_frequency, again.central_frequency) <= 1e-15);
        assert!(rel(cfg.time_delay, again.time_delay) <= 1e-15);
        assert_eq!(cfg.temperature, again.temperature);
        let (
            SpectralFilter::Band {
                omega_min: a,
                omega_max: b,
            },
            SpectralFilter::Band {
                omega_min: c,
                omega_max: d,
            },
        ) = (cfg.filter, again.filter)
        else {
            panic!()
        };
        assert!(rel(a, c) <= 1e-15 && rel(b, d) <= 1e-15);
        assert_eq!(cfg.scale, again.scale);
        assert_eq!(cfg.numerics, again.numerics);
    }

    #[test]
    fn material_file_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("glass.toml"), "model = \"constant\"\nn = 2.0\n").unwrap();
        let cfg_path = dir.path().join("run.toml");
        std::fs::write(&cfg_path, "[material]\nfile = \"glass.toml\"\n").unwrap();
        let cfg = load_config(&cfg_path).unwrap();
        assert_eq!(cfg.material, PermittivityModel::constant_index(2.0));
    }

    #[test]
    fn efficiency_scaling() {
        let c1 = detection_efficiency(4e-12, 1e-3, 1.2e15, 2.8);
        let c2 = detection_efficiency(4e-12, 2e-3, 1.2e15, 2.8);
        assert!(rel(c2, 4.0 * c1) < 1e-15);
    }
}
