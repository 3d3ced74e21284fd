//! Parameter sweeps producing delimited tables with embedded provenance.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::bell::bell_optimize;
use crate::config::{ConfigFile, ExperimentConfig, SpectralFilter};
use crate::elements::{ElementCache, ProbeMatrixElements};
use crate::exec::Exec;
use crate::kernels::WavePlateSetting;
use crate::observables::{
    correlation_from_elements, negativity, perturbative_state, witness_budget, witness_expectation,
};
use crate::units::{thz_to_rad_per_s, FEMTOSECOND, MICROMETER};
use crate::{Error, Result};

/// Swept parameter and the unit its values are given in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Beam separation, µm.
    Dr,
    /// Beam separation in units of the waist.
    DrWaist,
    /// Time delay, fs.
    Dt,
    /// Temperature, K.
    Temperature,
    /// High-pass edge, THz.
    OmegaMin,
    /// High-pass edge as ω_c + value·σω.
    OmegaMinSigma,
    /// Detected frequency, THz.
    OmegaD,
    /// Detected frequency as ω_c + value·σω.
    OmegaDSigma,
}

impl SweepParam {
    pub const ALL: [(&'static str, SweepParam, &'static str); 8] = [
        ("dr", SweepParam::Dr, "um"),
        ("dr_w", SweepParam::DrWaist, "w"),
        ("dt", SweepParam::Dt, "fs"),
        ("T", SweepParam::Temperature, "K"),
        ("omega_min", SweepParam::OmegaMin, "THz"),
        ("omega_min_sigma", SweepParam::OmegaMinSigma, "sigma_omega"),
        ("omega_d", SweepParam::OmegaD, "THz"),
        ("omega_d_sigma", SweepParam::OmegaDSigma, "sigma_omega"),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(_, p, _)| *p == self)
            .map(|(n, _, _)| *n)
            .unwrap_or("?")
    }

    pub fn unit(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(_, p, _)| *p == self)
            .map(|(_, _, u)| *u)
            .unwrap_or("?")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl FromStr for ScanSpec {
    type Err = Error;

    /// `name:start:stop:count[:log]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = |msg: String| Error::parse("--sweep", msg);
        if !(4..=5).contains(&parts.len()) {
            return Err(bad(format!("expected name:start:stop:count[:log], got `{s}`")));
        }
        let param = SweepParam::ALL
            .iter()
            .find(|(n, _, _)| *n == parts[0])
            .map(|(_, p, _)| *p)
            .ok_or_else(|| {
                let names: Vec<&str> = SweepParam::ALL.iter().map(|(n, _, _)| *n).collect();
                bad(format!(
                    "unknown sweep parameter `{}` (one of {})",
                    parts[0],
                    names.join(", ")
                ))
            })?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| bad(format!("`{t}`: {e}")));
        let count = parts[3]
            .trim()
            .parse::<usize>()
            .map_err(|e| bad(format!("`{}`: {e}", parts[3])))?;
        let log = match parts.get(4) {
            None => false,
            Some(&"log") => true,
            Some(&"lin") => false,
            Some(other) => return Err(bad(format!("spacing must be `log` or `lin`, got `{other}`"))),
        };
        let spec = ScanSpec {
            param,
            start: num(parts[1])?,
            stop: num(parts[2])?,
            count,
            log,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::validation("sweep.count", "must be >= 2"));
        }
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::validation("sweep", "need finite start < stop"));
        }
        if self.log && self.start <= 0.0 {
            return Err(Error::validation("sweep", "log spacing needs start > 0"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..self.count)
            .map(|k| {
                let t = k as f64 / n as f64;
                if k == 0 {
                    self.start
                } else if k == n {
                    self.stop
                } else if self.log {
                    (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + t * (self.stop - self.start)
                }
            })
            .collect()
    }

    /// Configuration at one sweep value.
    pub fn apply(&self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        let sigma = base.sigma_omega();
        let upper = match base.filter {
            SpectralFilter::Band { omega_max, .. } => omega_max,
            _ => f64::INFINITY,
        };
        let mono = |omega_d: f64| match base.filter {
            SpectralFilter::Monochromatic { delta, .. } => Ok(SpectralFilter::Monochromatic { omega_d, delta }),
            _ => Err(Error::Precondition(
                "sweeping omega_d needs a monochromatic filter in the config".into(),
            )),
        };
        match self.param {
            SweepParam::Dr => cfg.beam_separation = value * MICROMETER,
            SweepParam::DrWaist => cfg.beam_separation = value * base.beam_waist,
            SweepParam::Dt => cfg.time_delay = value * FEMTOSECOND,
            SweepParam::Temperature => cfg.temperature = value,
            SweepParam::OmegaMin => {
                cfg.filter = SpectralFilter::Band {
                    omega_min: thz_to_rad_per_s(value),
                    omega_max: upper,
                }
            }
            SweepParam::OmegaMinSigma => {
                cfg.filter = SpectralFilter::Band {
                    omega_min: base.central_frequency + value * sigma,
                    omega_max: upper,
                }
            }
            SweepParam::OmegaD => cfg.filter = mono(thz_to_rad_per_s(value))?,
            SweepParam::OmegaDSigma => cfg.filter = mono(base.central_frequency + value * sigma)?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

// ----------------------------------------------------------------------------
// Tables

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    /// `key: value` lines written as `#` comments.
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// SHA-256 of the config's JSON snapshot.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = config_json(cfg);
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_json(cfg: &ExperimentConfig) -> String {
    serde_json::to_string(&cfg.to_file()).expect("config serializes")
}

/// Recover the configuration embedded in a table written by [`ScanTable::to_csv`].
pub fn snapshot_config(csv: &str) -> Result<ExperimentConfig> {
    let json = csv
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# config: "))
        .ok_or_else(|| Error::parse("table", "no `# config:` line"))?;
    let file: ConfigFile = serde_json::from_str(json).map_err(|e| Error::parse("table config", e))?;
    file.resolve(None)
}

fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl ScanTable {
    fn new(command: &str, cfg: &ExperimentConfig, spec: Option<&ScanSpec>, columns: &[&str], units: &str) -> Self {
        let mut metadata = vec![
            (
                "generator".to_string(),
                format!("harvest {}", env!("CARGO_PKG_VERSION")),
            ),
            ("command".to_string(), command.to_string()),
        ];
        if let Some(s) = spec {
            metadata.push((
                "sweep".to_string(),
                format!(
                    "{}:{}:{}:{}{} ({})",
                    s.param.name(),
                    s.start,
                    s.stop,
                    s.count,
                    if s.log { ":log" } else { "" },
                    s.param.unit()
                ),
            ));
        }
        metadata.push(("units".to_string(), units.to_string()));
        metadata.push(("config_sha256".to_string(), config_hash(cfg)));
        metadata.push(("created_unix".to_string(), unix_time().to_string()));
        metadata.push(("config".to_string(), config_json(cfg)));
        ScanTable {
            metadata,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// gnuplot script plotting every column against the first.
    pub fn gnuplot_script(&self, csv_name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "set datafile separator ','");
        let _ = writeln!(out, "set key autotitle columnhead");
        let _ = writeln!(
            out,
            "set xlabel '{}'",
            self.columns.first().map(String::as_str).unwrap_or("")
        );
        let _ = writeln!(out, "set grid");
        let plots: Vec<String> = (2..=self.columns.len())
            .map(|c| format!("'{csv_name}' using 1:{c} with linespoints"))
            .collect();
        let _ = writeln!(out, "plot {}", plots.join(", \\\n     "));
        let _ = writeln!(out, "pause mouse close");
        out
    }

    /// Write `path` and a `.gp` companion next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        let io = |p: &Path| {
            let p = p.to_path_buf();
            move |source| Error::Io { path: p, source }
        };
        std::fs::write(path, self.to_csv()).map_err(io(path))?;
        let gp = path.with_extension("gp");
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        std::fs::write(&gp, self.gnuplot_script(&name)).map_err(io(&gp))?;
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

// ----------------------------------------------------------------------------
// Scans

/// Shared state of a scan run.
#[derive(Debug, Default)]
pub struct Scanner {
    pub cache: ElementCache,
    pub exec: Exec,
}

impl Scanner {
    pub fn new(exec: Exec) -> Self {
        Scanner {
            cache: ElementCache::new(),
            exec,
        }
    }

    fn rows<F>(&self, base: &ExperimentConfig, spec: &ScanSpec, row: F) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(&ExperimentConfig, f64) -> Result<Vec<f64>> + Sync + Send,
    {
        spec.validate()?;
        let values = spec.values();
        let results = self.exec.map(&values, |&v| {
            let cfg = spec.apply(base, v)?;
            let mut r = vec![v];
            r.extend(row(&cfg, v)?);
            Ok(r)
        });
        results.into_iter().collect()
    }

    fn elements(&self, cfg: &ExperimentConfig) -> Result<ProbeMatrixElements> {
        let e = self.cache.thermal(cfg)?;
        // Every state assembled during a scan is checked.
        let (state, _) = perturbative_state(&e)?;
        state.check(1e-12)?;
        Ok(e)
    }

    /// Quarter-wave two-beam correlation on thermal elements.
    /// Columns: swept value, G/C, l11, Re l12, Re m.
    pub fn scan_correlation(&self, base: &ExperimentConfig, spec: &ScanSpec) -> Result<ScanTable> {
        if base.filter != SpectralFilter::Full {
            return Err(Error::UnsupportedFilter(
                "scan-correlation uses the unfiltered spectrum (filter.kind = \"full\")".into(),
            ));
        }
        let mut table = ScanTable::new(
            "scan-correlation",
            base,
            Some(spec),
            &[spec.param.name(), "G_over_C", "l11", "re_l12", "re_m"],
            "G/C dimensionless; elements in units of C*N_d unless [scale] is set; theta1 = theta2 = pi/2",
        );
        let q = WavePlateSetting::quarter();
        table.rows = self.rows(base, spec, |cfg, _| {
            let e = self.elements(cfg)?;
            let g = correlation_from_elements(&e, &q, &q)? / cfg.prefactor();
            Ok(vec![g, e.l11, e.l12.re, e.m.re])
        })?;
        Ok(table)
    }

    /// Columns: swept value, N, E1, φ_M, l11, |m|.
    pub fn scan_negativity(&self, base: &ExperimentConfig, spec: &ScanSpec) -> Result<ScanTable> {
        let mut table = ScanTable::new(
            "scan-negativity",
            base,
            Some(spec),
            &[spec.param.name(), "negativity", "E1", "phi_M", "l11", "abs_m"],
            "elements and negativity in units of C*N_d unless [scale] is set",
        );
        table.rows = self.rows(base, spec, |cfg, _| {
            let e = self.elements(cfg)?;
            let n = negativity(&e);
            Ok(vec![n.negativity, n.e1, n.phi_m, e.l11, e.m.norm()])
        })?;
        Ok(table)
    }

    /// Optimized Bell value with N_LO = |m|. Columns: swept value, B_max,
    /// the four (θ, sign) settings, φ_M.
    pub fn scan_bell(&self, base: &ExperimentConfig, spec: &ScanSpec) -> Result<ScanTable> {
        let mut probe = base.clone();
        if let Ok(c) = spec.apply(base, spec.start) {
            probe = c;
        }
        if !matches!(probe.filter, SpectralFilter::Monochromatic { .. }) {
            return Err(Error::UnsupportedFilter(
                "scan-bell needs a monochromatic filter (filter.kind = \"monochromatic\")".into(),
            ));
        }
        let mut table = ScanTable::new(
            "scan-bell",
            base,
            Some(spec),
            &[
                spec.param.name(),
                "B_max",
                "theta1",
                "sign1",
                "theta1_prime",
                "sign1_prime",
                "theta2",
                "sign2",
                "theta2_prime",
                "sign2_prime",
                "phi_M",
            ],
            "B dimensionless; angles in rad; N_LO = |m|",
        );
        table.rows = self.rows(base, spec, |cfg, _| {
            let e = self.elements(cfg)?;
            let n_lo = e.m.norm();
            if n_lo == 0.0 {
                return Err(Error::Precondition("m = 0: no local-oscillator scale".into()));
            }
            let opt = bell_optimize(&e, n_lo)?;
            let s = opt.settings;
            let mut row = vec![opt.b_max];
            for w in [s.theta1, s.theta1_prime, s.theta2, s.theta2_prime] {
                row.push(w.theta);
                row.push(w.sign);
            }
            row.push(negativity(&e).phi_m);
            Ok(row)
        })?;
        Ok(table)
    }

    /// Witness measurement record for one configuration.
    pub fn witness(&self, cfg: &ExperimentConfig) -> Result<ScanTable> {
        let mut table = ScanTable::new(
            "witness",
            cfg,
            None,
            &[
                "theta",
                "sign",
                "theta_prime",
                "sign_prime",
                "G_theta_theta",
                "G_theta_prime_theta_prime",
                "single_beam_1",
                "single_beam_2",
                "combination",
                "l11_minus_abs_m",
                "entangled",
            ],
            "G and single-beam terms times N_d, in units of C*N_d unless [scale] is set; entangled = 1 when the combination is negative",
        );
        let e = self.elements(cfg)?;
        let b = witness_budget(&e, 1.0)?;
        let w = witness_expectation(&e)?;
        table.rows.push(vec![
            b.theta.theta,
            b.theta.sign,
            b.theta_prime.theta,
            b.theta_prime.sign,
            b.g_theta,
            b.g_theta_prime,
            b.single_beam[0],
            b.single_beam[1],
            b.value,
            w,
            if b.value < 0.0 { 1.0 } else { 0.0 },
        ]);
        Ok(table)
    }
}
