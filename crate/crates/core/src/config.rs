//! Run configuration: a flat TOML document whose keys are mirrored one to
//! one by command-line flags. Angles are given in units of π.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{
    AtomCoupling, Boundary, CouplingKind, ModelError, ProbeConfig, SshParams, Sublattice,
};
use crate::output::Format;
use crate::spectral::{theta_grid, Classifier, DEFAULT_BAND_TOL, DEFAULT_CLOSURE_TOL};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Which eigenstate `distribution` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Zero,
    BoundUpper,
    BoundLower,
    /// Nonzero in-gap level.
    Gap,
    /// Index into the ascending spectrum; negative counts from the top.
    Level(i64),
    /// `r`-th highest bulk level, from 1.
    BulkTop(usize),
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |v: &str| v.trim().parse::<i64>().map_err(|e| format!("`{s}`: {e}"));
        match s.trim() {
            "zero" => Ok(Target::Zero),
            "bound_upper" => Ok(Target::BoundUpper),
            "bound_lower" => Ok(Target::BoundLower),
            "gap" => Ok(Target::Gap),
            other => {
                if let Some(v) = other.strip_prefix("level:") {
                    Ok(Target::Level(num(v)?))
                } else if let Some(v) = other.strip_prefix("bulk_top:") {
                    match num(v)? {
                        r if r >= 1 => Ok(Target::BulkTop(r as usize)),
                        r => Err(format!("bulk_top rank must be >= 1, got {r}")),
                    }
                } else if let Ok(i) = other.parse::<i64>() {
                    Ok(Target::Level(i))
                } else {
                    Err(format!(
                        "unknown target `{other}` (zero, bound_upper, bound_lower, gap, level:<i>, bulk_top:<r>)"
                    ))
                }
            }
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Zero => f.write_str("zero"),
            Target::BoundUpper => f.write_str("bound_upper"),
            Target::BoundLower => f.write_str("bound_lower"),
            Target::Gap => f.write_str("gap"),
            Target::Level(i) => write!(f, "level:{i}"),
            Target::BulkTop(r) => write!(f, "bulk_top:{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cells: usize,
    pub q: f64,
    pub delta: f64,
    pub theta_pi: f64,
    pub boundary: Boundary,

    pub coupling: CouplingKind,
    pub n: usize,
    pub m: usize,
    pub g: f64,

    pub probe: bool,
    pub probe_cell: usize,
    pub probe_sublattice: Sublattice,
    pub probe_gp: f64,
    pub probe_frequency: f64,

    pub theta_start_pi: f64,
    pub theta_end_pi: f64,
    pub theta_points: usize,
    /// Atom sizes `d`; each gives `m = n + d`.
    pub sizes: Option<Vec<usize>>,

    pub target: String,
    pub ks_pi: Vec<f64>,

    /// End of the probe time window; defaults to four predicted Rabi periods.
    pub time_end: Option<f64>,
    pub time_points: usize,

    pub output_dir: PathBuf,
    pub format: Format,
    /// Emit energies as given instead of in units of `q`.
    pub absolute_units: bool,
    pub band_tol: Option<f64>,
    pub closure_tol: Option<f64>,
    /// Relative change applied to `t2` in the exact Hamiltonian only.
    pub perturb_t2: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cells: 100,
            q: 1.0,
            delta: 0.5,
            theta_pi: 0.8,
            boundary: Boundary::Periodic,
            coupling: CouplingKind::AA,
            n: 50,
            m: 51,
            g: 1.0,
            probe: false,
            probe_cell: 50,
            probe_sublattice: Sublattice::B,
            probe_gp: 0.1,
            probe_frequency: 0.0,
            theta_start_pi: 0.0,
            theta_end_pi: 2.0,
            theta_points: 201,
            sizes: None,
            target: "zero".into(),
            ks_pi: vec![1.1, 1.3, 1.5],
            time_end: None,
            time_points: 1201,
            output_dir: PathBuf::from("out"),
            format: Format::Csv,
            absolute_units: false,
            band_tol: None,
            closure_tol: None,
            perturb_t2: 0.0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.ssh_params()?;
        let cells = self.cells;
        let in_chain = |field: &str, v: usize| {
            if (1..=cells).contains(&v) {
                Ok(())
            } else {
                Err(invalid(field, format!("cell {v} outside [1, {cells}]")))
            }
        };
        if self.coupling != CouplingKind::None {
            in_chain("n", self.n)?;
            // `sizes` replaces `m` when present
            if self.sizes.is_none() {
                in_chain("m", self.m)?;
                AtomCoupling::new(self.coupling, self.n, self.m, self.g)?;
            }
        }
        if self.probe {
            in_chain("probe_cell", self.probe_cell)?;
        }
        if !(self.probe_gp.is_finite() && self.probe_gp >= 0.0) {
            return Err(invalid("probe_gp", "must be a non-negative number"));
        }
        if self.theta_points < 2 {
            return Err(invalid(
                "theta_points",
                format!("a sweep needs at least 2 points, got {}", self.theta_points),
            ));
        }
        if !(self.theta_end_pi > self.theta_start_pi) {
            return Err(invalid(
                "theta_end_pi",
                format!(
                    "empty theta range [{}, {}]",
                    self.theta_start_pi, self.theta_end_pi
                ),
            ));
        }
        if let Some(sizes) = &self.sizes {
            if sizes.is_empty() {
                return Err(invalid("sizes", "empty size list"));
            }
            for &d in sizes {
                in_chain("sizes", self.n + d)?;
                if self.coupling == CouplingKind::AA && d == 0 {
                    return Err(invalid("sizes", "A-A coupling needs d >= 1"));
                }
            }
        }
        self.target()?;
        if self.time_points < 2 {
            return Err(invalid("time_points", "need at least 2 time points"));
        }
        if let Some(t) = self.time_end {
            if !(t > 0.0) {
                return Err(invalid("time_end", format!("must be positive, got {t}")));
            }
        }
        for (field, tol) in [("band_tol", self.band_tol), ("closure_tol", self.closure_tol)] {
            if let Some(t) = tol {
                if !(t > 0.0) {
                    return Err(invalid(field, format!("must be positive, got {t}")));
                }
            }
        }
        if !(self.perturb_t2 > -1.0) {
            return Err(invalid("perturb_t2", "must exceed -1"));
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        self.theta_pi * PI
    }

    pub fn ssh_params(&self) -> Result<SshParams, ConfigError> {
        Ok(SshParams::new(self.cells, self.q, self.delta, self.theta(), self.boundary)?)
    }

    pub fn atom(&self) -> Result<AtomCoupling, ConfigError> {
        match self.coupling {
            CouplingKind::None => Ok(AtomCoupling::none()),
            kind => Ok(AtomCoupling::new(kind, self.n, self.m, self.g)?),
        }
    }

    /// The atom with `m = n + d`.
    pub fn atom_with_size(&self, d: usize) -> Result<AtomCoupling, ConfigError> {
        Ok(AtomCoupling::new(self.coupling, self.n, self.n + d, self.g)?)
    }

    pub fn probe_config(&self) -> ProbeConfig {
        if !self.probe {
            return ProbeConfig::disabled();
        }
        ProbeConfig {
            enabled: true,
            cell: self.probe_cell,
            sublattice: self.probe_sublattice,
            gp: self.probe_gp,
            frequency: self.probe_frequency,
        }
    }

    pub fn thetas(&self) -> Vec<f64> {
        theta_grid(self.theta_start_pi * PI, self.theta_end_pi * PI, self.theta_points)
    }

    pub fn target(&self) -> Result<Target, ConfigError> {
        self.target.parse().map_err(|e| invalid("target", e))
    }

    pub fn classifier(&self) -> Classifier {
        Classifier::new(
            self.band_tol.unwrap_or(DEFAULT_BAND_TOL * self.q),
            self.closure_tol.unwrap_or(DEFAULT_CLOSURE_TOL * self.q),
        )
    }

    /// Divisor applied to emitted energies.
    pub fn energy_unit(&self) -> f64 {
        if self.absolute_units { 1.0 } else { self.q }
    }
}

/// Command-line overrides, one flag per config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_pi: Option<f64>,
    #[arg(long, value_parser = parse_boundary)]
    pub boundary: Option<Boundary>,
    #[arg(long, value_parser = parse_coupling)]
    pub coupling: Option<CouplingKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub probe: Option<bool>,
    #[arg(long)]
    pub probe_cell: Option<usize>,
    #[arg(long, value_parser = parse_sublattice)]
    pub probe_sublattice: Option<Sublattice>,
    #[arg(long)]
    pub probe_gp: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub probe_frequency: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_start_pi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_end_pi: Option<f64>,
    #[arg(long)]
    pub theta_points: Option<usize>,
    /// Comma-separated atom sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub ks_pi: Option<Vec<f64>>,
    #[arg(long)]
    pub time_end: Option<f64>,
    #[arg(long)]
    pub time_points: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    #[arg(long)]
    pub absolute_units: Option<bool>,
    #[arg(long)]
    pub band_tol: Option<f64>,
    #[arg(long)]
    pub closure_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub perturb_t2: Option<f64>,
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    match s {
        "periodic" => Ok(Boundary::Periodic),
        "open" => Ok(Boundary::Open),
        _ => Err(format!("expected periodic or open, got `{s}`")),
    }
}

fn parse_coupling(s: &str) -> Result<CouplingKind, String> {
    match s {
        "aa" => Ok(CouplingKind::AA),
        "ab" => Ok(CouplingKind::AB),
        "none" => Ok(CouplingKind::None),
        _ => Err(format!("expected aa, ab or none, got `{s}`")),
    }
}

fn parse_sublattice(s: &str) -> Result<Sublattice, String> {
    match s {
        "A" | "a" => Ok(Sublattice::A),
        "B" | "b" => Ok(Sublattice::B),
        _ => Err(format!("expected A or B, got `{s}`")),
    }
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("expected csv or json, got `{s}`")),
    }
}

impl Overrides {
    pub fn apply(&self, c: &mut RunConfig) {
        macro_rules! set {
            ($($f:ident),*) => {
                $(if let Some(v) = &self.$f { c.$f = v.clone(); })*
            };
        }
        set!(
            cells, q, delta, theta_pi, boundary, coupling, n, m, g, probe, probe_cell,
            probe_sublattice, probe_gp, probe_frequency, theta_start_pi, theta_end_pi,
            theta_points, target, ks_pi, time_points, output_dir, format, absolute_units,
            perturb_t2
        );
        if let Some(v) = &self.sizes {
            c.sizes = Some(v.clone());
        }
        if let Some(v) = self.time_end {
            c.time_end = Some(v);
        }
        if let Some(v) = self.band_tol {
            c.band_tol = Some(v);
        }
        if let Some(v) = self.closure_tol {
            c.closure_tol = Some(v);
        }
    }
}
