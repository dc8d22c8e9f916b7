//! Subcommands behind the command-line driver. Each returns output tables;
//! writing them is left to the caller.

use std::f64::consts::PI;

use thiserror::Error;

use crate::analytic::{
    amplitudes_aa, amplitudes_ab, eigen_roots, symmetry_check, zero_mode_aa, zero_mode_ab,
    AnalyticError,
};
use crate::config::{ConfigError, RunConfig, Target};
use crate::effective::{coupling_matrix, g_vs_theta, EffectiveError};
use crate::lattice::{
    build_hamiltonian, AtomCoupling, Boundary, CouplingKind, HamiltonianMatrix, ModelError,
    ProbeConfig,
};
use crate::output::{format_float, ColumnKind, OutputError, OutputTable, Schema};
use crate::spectral::{
    eigensolve, oscillation, particle_hole_asymmetry, rabi_experiment, sweep_theta, theta_grid,
    Band, LevelClass, SingleExcitationState, SpectralError, SpectrumResult,
};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl CommandError {
    /// 1 for validation failures, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Validation(_) => 1,
            CommandError::Numeric(_) | CommandError::Output(_) => 2,
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Validation(e.to_string())
    }
}

impl From<ModelError> for CommandError {
    fn from(e: ModelError) -> Self {
        CommandError::Validation(e.to_string())
    }
}

impl From<SpectralError> for CommandError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Model(m) => m.into(),
            SpectralError::InvalidInput(s) => CommandError::Validation(s),
            other => CommandError::Numeric(other.to_string()),
        }
    }
}

impl From<AnalyticError> for CommandError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Pole { .. } => CommandError::Numeric(e.to_string()),
            other => CommandError::Validation(other.to_string()),
        }
    }
}

impl From<EffectiveError> for CommandError {
    fn from(e: EffectiveError) -> Self {
        match e {
            EffectiveError::Model(m) => m.into(),
            EffectiveError::Spectral(s) => s.into(),
            other => CommandError::Validation(other.to_string()),
        }
    }
}

fn describe(table: &mut OutputTable, cfg: &RunConfig, atom: &AtomCoupling) {
    table.note("cells", cfg.cells);
    table.note_float("q", cfg.q);
    table.note_float("delta", cfg.delta);
    table.note("boundary", format!("{:?}", cfg.boundary).to_lowercase());
    table.note("coupling", atom.kind);
    table.note("n", atom.n);
    table.note("m", atom.m);
    table.note_float("g", atom.g);
    table.note("energy_unit", if cfg.absolute_units { "absolute" } else { "q" });
}

pub fn spectrum_schema(name: &str) -> Schema {
    Schema::new(
        name,
        &[
            ("theta", ColumnKind::Float),
            ("level_index", ColumnKind::Int),
            ("energy", ColumnKind::Float),
            ("class", ColumnKind::Text),
        ],
        &["theta", "level_index"],
    )
}

/// Spectrum over the θ sweep, one table per atom size when `sizes` is set.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<OutputTable>, CommandError> {
    cfg.validate()?;
    let template = cfg.ssh_params()?;
    let thetas = cfg.thetas();
    let classifier = cfg.classifier();
    let unit = cfg.energy_unit();
    let runs: Vec<(String, AtomCoupling)> = match &cfg.sizes {
        Some(sizes) => sizes
            .iter()
            .map(|&d| Ok((format!("spectrum_{}_d{d}", cfg.coupling), cfg.atom_with_size(d)?)))
            .collect::<Result<_, ConfigError>>()?,
        None => vec![("spectrum".to_string(), cfg.atom()?)],
    };
    let mut tables = Vec::with_capacity(runs.len());
    for (name, atom) in runs {
        let rows = sweep_theta(&thetas, &template, &atom, &classifier)?;
        let mut t = spectrum_schema(&name).table();
        for row in &rows {
            for (i, (e, c)) in row.energies.iter().zip(&row.classes).enumerate() {
                t.push(vec![row.theta.into(), i.into(), (e / unit).into(), c.as_str().into()])?;
            }
        }
        t.sort();
        describe(&mut t, cfg, &atom);
        tables.push(t);
    }
    Ok(tables)
}

/// Exact spectrum, with `t2` bonds scaled by `1 + perturb_t2`.
pub fn numeric_spectrum(cfg: &RunConfig, atom: &AtomCoupling) -> Result<SpectrumResult, CommandError> {
    let params = cfg.ssh_params()?;
    let mut h = build_hamiltonian(&params, atom, &ProbeConfig::disabled())?;
    if cfg.perturb_t2 != 0.0 {
        scale_t2(&mut h, 1.0 + cfg.perturb_t2);
    }
    Ok(eigensolve(&h)?)
}

fn scale_t2(h: &mut HamiltonianMatrix, factor: f64) {
    let cells = h.layout.cells;
    let mut bonds: Vec<(usize, usize)> = (0..cells - 1).map(|l| (2 * l + 1, 2 * l + 2)).collect();
    if h.params.boundary == Boundary::Periodic {
        bonds.push((2 * cells - 1, 0));
    }
    for (i, j) in bonds {
        h.matrix[(i, j)] *= factor;
        h.matrix[(j, i)] *= factor;
    }
}

/// Index of the requested level, or a validation error when it does not exist.
pub fn resolve_target(
    target: Target,
    s: &SpectrumResult,
    cfg: &RunConfig,
) -> Result<usize, CommandError> {
    let classes = cfg.classifier().classify_all(&s.energies, s.hoppings());
    let zero_tol = 1e-8 * cfg.q;
    let dim = s.dim() as i64;
    let missing = |what: &str| CommandError::Validation(format!("spectrum has no {what} level"));
    match target {
        Target::Zero => {
            let i = s.zero_mode_index();
            (s.energies[i].abs() < zero_tol).then_some(i).ok_or_else(|| missing("zero-energy"))
        }
        Target::BoundUpper => (classes[s.dim() - 1] == LevelClass::Bound)
            .then_some(s.dim() - 1)
            .ok_or_else(|| missing("upper bound")),
        Target::BoundLower => {
            (classes[0] == LevelClass::Bound).then_some(0).ok_or_else(|| missing("lower bound"))
        }
        Target::Gap => (0..s.dim())
            .filter(|&i| classes[i] == LevelClass::Gap && s.energies[i].abs() >= zero_tol)
            .min_by(|&a, &b| s.energies[a].abs().total_cmp(&s.energies[b].abs()))
            .ok_or_else(|| missing("nonzero gap")),
        Target::Level(i) => {
            let idx = if i < 0 { dim + i } else { i };
            (0..dim)
                .contains(&idx)
                .then_some(idx as usize)
                .ok_or_else(|| CommandError::Validation(format!("level {i} outside 0..{dim}")))
        }
        Target::BulkTop(r) => (0..s.dim())
            .rev()
            .filter(|&i| classes[i] == LevelClass::Bulk)
            .nth(r - 1)
            .ok_or_else(|| missing(&format!("{r}-th highest bulk"))),
    }
}

/// Closed-form profile for a level, if one exists for its class.
pub fn analytic_profile(
    cfg: &RunConfig,
    atom: &AtomCoupling,
    energy: f64,
    class: LevelClass,
) -> Result<Option<SingleExcitationState>, CommandError> {
    let params = cfg.ssh_params()?;
    let zero = energy.abs() < 1e-8 * cfg.q;
    let state = match (atom.kind, zero, class) {
        (CouplingKind::None, _, _) => None,
        (CouplingKind::AA, true, _) => Some(zero_mode_aa(&params, atom)?),
        (CouplingKind::AB, true, _) => Some(zero_mode_ab(&params, atom)?),
        (kind, false, LevelClass::Bound | LevelClass::Gap) => Some(match kind {
            CouplingKind::AA => amplitudes_aa(energy, &params, atom)?,
            _ => amplitudes_ab(energy, &params, atom)?,
        }),
        _ => None,
    };
    Ok(state)
}

pub fn distribution_schema() -> Schema {
    Schema::new(
        "distribution",
        &[
            ("cell", ColumnKind::Int),
            ("A_amplitude", ColumnKind::Float),
            ("B_amplitude", ColumnKind::Float),
            ("A_prob", ColumnKind::Float),
            ("B_prob", ColumnKind::Float),
            ("source", ColumnKind::Text),
        ],
        &["source", "cell"],
    )
}

fn push_profile(
    t: &mut OutputTable,
    state: &SingleExcitationState,
    source: &str,
) -> Result<(), CommandError> {
    for l in 1..=state.cells() {
        let (a, b) = (state.a_at(l), state.b_at(l));
        t.push(vec![l.into(), a.into(), b.into(), (a * a).into(), (b * b).into(), source.into()])?;
    }
    Ok(())
}

/// Photon distribution of one level, numeric and (when available) analytic.
pub fn cmd_distribution(cfg: &RunConfig) -> Result<OutputTable, CommandError> {
    cfg.validate()?;
    let atom = cfg.atom()?;
    let s = numeric_spectrum(cfg, &atom)?;
    let target = cfg.target()?;
    let i = resolve_target(target, &s, cfg)?;
    let energy = s.energies[i];
    let class = cfg.classifier().classify(energy, s.hoppings());
    let numeric = s.distribution(i).normalized();
    let analytic = analytic_profile(cfg, &atom, energy, class)?;

    let mut t = distribution_schema().table();
    push_profile(&mut t, &numeric, "numeric")?;
    if let Some(a) = &analytic {
        push_profile(&mut t, a, "analytic")?;
    }
    t.sort();
    describe(&mut t, cfg, &atom);
    t.note_float("theta", cfg.theta());
    t.note("target", target);
    t.note("level_index", i);
    t.note_float("energy", energy / cfg.energy_unit());
    t.note("class", class.as_str());
    t.note_float("atom_amplitude_numeric", numeric.atom);
    match &analytic {
        Some(a) => {
            t.note_float("atom_amplitude_analytic", a.atom);
            t.note_float("max_deviation", a.max_abs_diff(&numeric));
            t.note("analytic_unavailable", false);
        }
        None => t.note("analytic_unavailable", true),
    }
    Ok(t)
}

pub fn g_couplings_schema() -> Schema {
    Schema::new(
        "g_couplings",
        &[
            ("k", ColumnKind::Float),
            ("sigma", ColumnKind::Text),
            ("energy", ColumnKind::Float),
            ("re_g", ColumnKind::Float),
            ("im_g", ColumnKind::Float),
            ("abs_g", ColumnKind::Float),
        ],
        &["sigma", "k"],
    )
}

pub fn g_matrix_schema() -> Schema {
    Schema::new(
        "G_matrix",
        &[
            ("k", ColumnKind::Float),
            ("k_prime", ColumnKind::Float),
            ("sigma", ColumnKind::Text),
            ("sigma_prime", ColumnKind::Text),
            ("abs_G", ColumnKind::Float),
            ("re_G", ColumnKind::Float),
            ("im_G", ColumnKind::Float),
        ],
        &["sigma", "sigma_prime", "k", "k_prime"],
    )
}

pub fn g_vs_theta_schema() -> Schema {
    Schema::new(
        "G_vs_theta",
        &[("theta", ColumnKind::Float), ("k", ColumnKind::Float), ("abs_G", ColumnKind::Float)],
        &["k", "theta"],
    )
}

/// Atom-band couplings, the full effective coupling matrix at `theta_pi`,
/// and `|G_{k+,(2π-k)+}|` over the θ sweep for each of `ks_pi`.
pub fn cmd_effective(cfg: &RunConfig) -> Result<Vec<OutputTable>, CommandError> {
    cfg.validate()?;
    let params = cfg.ssh_params()?;
    let atom = cfg.atom()?;
    if !atom.is_present() {
        return Err(CommandError::Validation("effective couplings need an atom".into()));
    }
    if params.boundary != Boundary::Periodic {
        return Err(CommandError::Validation("momentum space needs the periodic chain".into()));
    }
    let unit = cfg.energy_unit();
    let gm = coupling_matrix(&params, &atom)?;

    let mut gc = g_couplings_schema().table();
    for c in &gm.couplings {
        let v = c.value / unit.sqrt();
        gc.push(vec![
            c.k.into(),
            c.mode.band.symbol().into(),
            (c.energy / unit).into(),
            v.re.into(),
            v.im.into(),
            v.norm().into(),
        ])?;
    }
    gc.sort();
    describe(&mut gc, cfg, &atom);
    gc.note_float("theta", params.theta);

    let mut gt = g_matrix_schema().table();
    for a in &gm.couplings {
        for b in &gm.couplings {
            let v = gm.get(a.mode, b.mode) / unit;
            gt.push(vec![
                a.k.into(),
                b.k.into(),
                a.mode.band.symbol().into(),
                b.mode.band.symbol().into(),
                v.norm().into(),
                v.re.into(),
                v.im.into(),
            ])?;
        }
    }
    gt.sort();
    describe(&mut gt, cfg, &atom);
    gt.note_float("theta", params.theta);
    gt.note_float("hermiticity_residual", gm.hermiticity_residual() / unit);
    let intra = gm.max_abs(Band::Upper, Band::Upper).max(gm.max_abs(Band::Lower, Band::Lower));
    let inter = gm.max_abs(Band::Upper, Band::Lower);
    gt.note_float("max_intra_band", intra / unit);
    gt.note_float("max_inter_band", inter / unit);

    let ks: Vec<f64> = cfg.ks_pi.iter().map(|k| k * PI).collect();
    let points = g_vs_theta(&cfg.thetas(), &ks, &params, &atom)?;
    let mut gv = g_vs_theta_schema().table();
    for p in points {
        gv.push(vec![p.theta.into(), p.k.into(), (p.abs_g / unit).into()])?;
    }
    gv.sort();
    describe(&mut gv, cfg, &atom);
    Ok(vec![gc, gt, gv])
}

pub fn rabi_schema() -> Schema {
    Schema::new(
        "rabi",
        &[
            ("time", ColumnKind::Float),
            ("probe_population", ColumnKind::Float),
            ("atom_population", ColumnKind::Float),
            ("zero_mode_overlap", ColumnKind::Float),
        ],
        &["time"],
    )
}

/// Probe-atom population dynamics starting from an excited probe.
pub fn cmd_probe(cfg: &RunConfig) -> Result<OutputTable, CommandError> {
    cfg.validate()?;
    let params = cfg.ssh_params()?;
    let atom = cfg.atom()?;
    // the probe subcommand always attaches the probe
    let probe = ProbeConfig {
        enabled: true,
        cell: cfg.probe_cell,
        sublattice: cfg.probe_sublattice,
        gp: cfg.probe_gp,
        frequency: cfg.probe_frequency,
    };
    let scout = rabi_experiment(&params, &atom, &probe, &[0.0])?;
    let end = match (cfg.time_end, scout.predicted_period) {
        (Some(t), _) => t,
        (None, Some(p)) => 4.0 * p,
        (None, None) => 100.0 / cfg.q,
    };
    let times = theta_grid(0.0, end, cfg.time_points);
    let run = rabi_experiment(&params, &atom, &probe, &times)?;

    let mut t = rabi_schema().table();
    for i in 0..times.len() {
        t.push(vec![
            times[i].into(),
            run.probe_population[i].into(),
            run.atom_population[i].into(),
            run.zero_mode_overlap[i].into(),
        ])?;
    }
    t.sort();
    describe(&mut t, cfg, &atom);
    t.note_float("theta", params.theta);
    t.note("probe_site", probe.site());
    t.note_float("probe_gp", probe.gp);
    let osc = oscillation(&times, &run.probe_population);
    t.note_float("contrast", osc.contrast);
    t.note("measured_period", osc.period.map_or("none".into(), format_float));
    t.note_float("cycles", osc.cycles);
    t.note("zero_mode_weight", run.zero_mode_weight.map_or("none".into(), format_float));
    t.note("predicted_period", run.predicted_period.map_or("none".into(), format_float));
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: residual < tolerance,
            residual,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self) -> Result<OutputTable, CommandError> {
        let mut t = validation_schema().table();
        for c in &self.checks {
            t.push(vec![
                c.name.as_str().into(),
                (if c.passed { "pass" } else { "fail" }).into(),
                c.residual.into(),
                c.tolerance.into(),
            ])?;
        }
        t.note("all_passed", self.passed());
        Ok(t)
    }
}

pub fn validation_schema() -> Schema {
    Schema::new(
        "validation",
        &[
            ("check", ColumnKind::Text),
            ("status", ColumnKind::Text),
            ("residual", ColumnKind::Float),
            ("tolerance", ColumnKind::Float),
        ],
        &[],
    )
}

/// Cross-checks between closed forms and exact diagonalization at the
/// configured point.
pub fn cmd_validate(cfg: &RunConfig) -> Result<ValidationReport, CommandError> {
    cfg.validate()?;
    let params = cfg.ssh_params()?;
    let atom = cfg.atom()?;
    if !atom.is_present() {
        return Err(CommandError::Validation("validation needs an atom".into()));
    }
    let s = numeric_spectrum(cfg, &atom)?;
    let q = cfg.q;
    let mut checks = Vec::new();

    if params.boundary == Boundary::Periodic {
        let roots = eigen_roots(&params, &atom)?;
        let worst = roots
            .roots
            .iter()
            .map(|r| (s.energies[s.nearest(*r)] - r).abs())
            .fold(0.0, f64::max);
        checks.push(CheckResult::new("root_vs_eigensolve", worst, 1e-8 * q));
    }

    let hop = s.hoppings();
    let classes = cfg.classifier().classify_all(&s.energies, hop);
    let mut targets: Vec<(&str, usize)> = Vec::new();
    if classes[s.dim() - 1] == LevelClass::Bound {
        targets.push(("bound_upper", s.dim() - 1));
    }
    if classes[0] == LevelClass::Bound {
        targets.push(("bound_lower", 0));
    }
    let zi = s.zero_mode_index();
    if s.energies[zi].abs() < 1e-8 * q && hop.is_nontrivial() {
        targets.push(("zero", zi));
    }
    if let Ok(gi) = resolve_target(Target::Gap, &s, cfg) {
        targets.push(("gap", gi));
    }
    for (label, i) in targets {
        let energy = s.energies[i];
        let Some(profile) = analytic_profile(cfg, &atom, energy, classes[i])? else {
            continue;
        };
        let numeric = s.distribution(i).normalized();
        checks.push(CheckResult::new(
            format!("overlay_{label}"),
            profile.max_abs_diff(&numeric),
            1e-6,
        ));
        if label.starts_with("bound") || (label == "zero" && atom.kind == CouplingKind::AB) {
            checks.push(CheckResult::new(
                format!("symmetry_{label}"),
                symmetry_check(&numeric, atom.kind, atom.n, atom.m, params.boundary),
                1e-8,
            ));
        }
    }
    if atom.kind == CouplingKind::AA {
        checks.push(CheckResult::new(
            "particle_hole",
            particle_hole_asymmetry(&s.energies),
            1e-10 * q,
        ));
    }
    Ok(ValidationReport { checks })
}
