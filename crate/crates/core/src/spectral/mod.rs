//! Exact diagonalization of the single-excitation Hamiltonian, level
//! classification and θ sweeps.

mod degeneracy;
mod dynamics;

pub use degeneracy::{degeneracy_report, BandSummary, DegeneracyReport, PairSplitting};
pub use dynamics::{
    oscillation, rabi_experiment, time_evolve, Evolution, Oscillation, RabiRun,
};

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector, DVectorView, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{
    build_hamiltonian, is_exactly_symmetric, AtomCoupling, BasisLabel, HamiltonianMatrix,
    Hoppings, Layout, ModelError, ProbeConfig, SshParams, Sublattice,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("eigensolver did not converge (dim {dim}, fingerprint {fingerprint:016x})")]
    NoConvergence { dim: usize, fingerprint: u64 },
    #[error("at theta = {theta}: {source}")]
    AtTheta {
        theta: f64,
        #[source]
        source: Box<SpectralError>,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

const MAX_SWEEPS: usize = 10_000;

/// Hash of the raw matrix bits, attached to convergence failures.
pub fn fingerprint(m: &DMatrix<f64>) -> u64 {
    let mut hasher = DefaultHasher::new();
    m.nrows().hash(&mut hasher);
    for v in m.iter() {
        v.to_bits().hash(&mut hasher);
    }
    hasher.finish()
}

/// Which band a bulk level belongs to, `E = ±ω_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    Upper,
    Lower,
}

impl Band {
    pub fn sign(self) -> f64 {
        match self {
            Band::Upper => 1.0,
            Band::Lower => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Band::Upper => "+",
            Band::Lower => "-",
        }
    }
}

/// Ascending spectrum with a sign-fixed orthonormal eigenbasis (columns).
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub energies: Vec<f64>,
    pub states: DMatrix<f64>,
    pub layout: Layout,
    pub params: SshParams,
    pub atom: AtomCoupling,
}

impl SpectrumResult {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn hoppings(&self) -> Hoppings {
        self.params.hoppings()
    }

    pub fn state(&self, i: usize) -> DVectorView<'_, f64> {
        self.states.column(i)
    }

    /// Index of the level closest to `target`.
    pub fn nearest(&self, target: f64) -> usize {
        let mut best = 0;
        for (i, e) in self.energies.iter().enumerate() {
            if (e - target).abs() < (self.energies[best] - target).abs() {
                best = i;
            }
        }
        best
    }

    /// Index of the level with the smallest `|E|`.
    pub fn zero_mode_index(&self) -> usize {
        self.nearest(0.0)
    }

    pub fn distribution(&self, i: usize) -> SingleExcitationState {
        photon_distribution(self.state(i), &self.layout)
    }

    /// `max_i |E_i + E_{dim-1-i}|`; zero for a particle-hole symmetric spectrum.
    pub fn particle_hole_asymmetry(&self) -> f64 {
        particle_hole_asymmetry(&self.energies)
    }

    pub fn classes(&self, band_tol: f64) -> Vec<LevelClass> {
        Classifier::new(band_tol, DEFAULT_CLOSURE_TOL * self.params.q)
            .classify_all(&self.energies, self.hoppings())
    }
}

pub fn particle_hole_asymmetry(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    (0..n)
        .map(|i| (sorted[i] + sorted[n - 1 - i]).abs())
        .fold(0.0, f64::max)
}

/// Flips `v` so that its largest-magnitude component is positive. Ties go
/// to the lowest index.
pub fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= max * (1.0 - 1e-9))
        .expect("max attained");
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn lexicographic(a: DVectorView<'_, f64>, b: DVectorView<'_, f64>) -> std::cmp::Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Dense symmetric eigendecomposition of a raw matrix: ascending energies,
/// eigenvectors as sign-fixed columns.
pub fn eigensolve_dense(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), SpectralError> {
    if !is_exactly_symmetric(m) {
        return Err(SpectralError::NotSymmetric);
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS).ok_or_else(|| {
        SpectralError::NoConvergence {
            dim: m.nrows(),
            fingerprint: fingerprint(m),
        }
    })?;
    let n = m.nrows();
    let mut vectors = eig.eigenvectors;
    for mut col in vectors.column_iter_mut() {
        fix_sign(col.as_mut_slice());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .total_cmp(&eig.eigenvalues[j])
            .then_with(|| lexicographic(vectors.column(i), vectors.column(j)))
    });
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let states = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok((energies, states))
}

/// Eigenvalues only, ascending.
pub fn eigenvalues_dense(m: &DMatrix<f64>) -> Result<Vec<f64>, SpectralError> {
    if !is_exactly_symmetric(m) {
        return Err(SpectralError::NotSymmetric);
    }
    let values = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| SpectralError::NoConvergence {
            dim: m.nrows(),
            fingerprint: fingerprint(m),
        })?
        .eigenvalues;
    let mut values: Vec<f64> = values.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn eigensolve(h: &HamiltonianMatrix) -> Result<SpectrumResult, SpectralError> {
    let (energies, states) = eigensolve_dense(&h.matrix)?;
    Ok(SpectrumResult {
        energies,
        states,
        layout: h.layout,
        params: h.params,
        atom: h.atom,
    })
}

/// Builds and diagonalizes in one step, without a probe.
pub fn solve(params: &SshParams, atom: &AtomCoupling) -> Result<SpectrumResult, SpectralError> {
    eigensolve(&build_hamiltonian(params, atom, &ProbeConfig::disabled())?)
}

pub const DEFAULT_BAND_TOL: f64 = 1e-6;
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelClass {
    Bulk,
    Gap,
    Bound,
    /// Inside or at the edge of a (nearly) closed gap.
    Indeterminate,
}

impl LevelClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LevelClass::Bulk => "bulk",
            LevelClass::Gap => "gap",
            LevelClass::Bound => "bound",
            LevelClass::Indeterminate => "indeterminate",
        }
    }
}

/// Band-edge tolerances used to classify levels against `|t1-t2|` and `t1+t2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classifier {
    pub band_tol: f64,
    pub closure_tol: f64,
}

impl Classifier {
    pub fn new(band_tol: f64, closure_tol: f64) -> Self {
        Self {
            band_tol,
            closure_tol,
        }
    }

    pub fn for_q(q: f64) -> Self {
        Self::new(DEFAULT_BAND_TOL * q, DEFAULT_CLOSURE_TOL * q)
    }

    pub fn classify(&self, energy: f64, hop: Hoppings) -> LevelClass {
        let e = energy.abs();
        let inner = hop.gap_edge();
        let eps = self.band_tol;
        if e > hop.band_top() + eps {
            LevelClass::Bound
        } else if inner < self.closure_tol && e <= inner + eps {
            LevelClass::Indeterminate
        } else if e < inner - eps {
            LevelClass::Gap
        } else {
            LevelClass::Bulk
        }
    }

    pub fn classify_all(&self, energies: &[f64], hop: Hoppings) -> Vec<LevelClass> {
        energies.iter().map(|&e| self.classify(e, hop)).collect()
    }
}

/// Per-level classes with band tolerance `eps` and the default gap-closure
/// threshold, taking `q = (t1 + t2)/2`.
pub fn classify_levels(energies: &[f64], hop: Hoppings, eps: f64) -> Vec<LevelClass> {
    let closure = DEFAULT_CLOSURE_TOL * hop.band_top() / 2.0;
    Classifier::new(eps, closure).classify_all(energies, hop)
}

/// `n` uniformly spaced points over `[start, end]`, both ends included.
pub fn theta_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub hoppings: Hoppings,
    pub energies: Vec<f64>,
    pub classes: Vec<LevelClass>,
}

impl SweepRow {
    pub fn count(&self, class: LevelClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn min_abs_energy(&self) -> f64 {
        self.energies.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()))
    }
}

fn sweep_point(
    theta: f64,
    template: &SshParams,
    atom: &AtomCoupling,
    classifier: &Classifier,
) -> Result<SweepRow, SpectralError> {
    let at = |e: SpectralError| SpectralError::AtTheta {
        theta,
        source: Box::new(e),
    };
    let params = template.with_theta(theta);
    let h = build_hamiltonian(&params, atom, &ProbeConfig::disabled()).map_err(|e| at(e.into()))?;
    let energies = eigenvalues_dense(&h.matrix).map_err(at)?;
    let hoppings = params.hoppings();
    let classes = classifier.classify_all(&energies, hoppings);
    Ok(SweepRow {
        theta,
        hoppings,
        energies,
        classes,
    })
}

fn check_grid(thetas: &[f64]) -> Result<(), SpectralError> {
    if thetas.is_empty() {
        return Err(SpectralError::InvalidInput("empty theta grid".into()));
    }
    if thetas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SpectralError::InvalidInput("theta grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Spectrum at every θ of the grid, computed in parallel and returned in
/// grid order.
pub fn sweep_theta(
    thetas: &[f64],
    template: &SshParams,
    atom: &AtomCoupling,
    classifier: &Classifier,
) -> Result<Vec<SweepRow>, SpectralError> {
    check_grid(thetas)?;
    thetas
        .par_iter()
        .map(|&th| sweep_point(th, template, atom, classifier))
        .collect()
}

/// Single-threaded variant of [`sweep_theta`].
pub fn sweep_theta_serial(
    thetas: &[f64],
    template: &SshParams,
    atom: &AtomCoupling,
    classifier: &Classifier,
) -> Result<Vec<SweepRow>, SpectralError> {
    check_grid(thetas)?;
    thetas
        .iter()
        .map(|&th| sweep_point(th, template, atom, classifier))
        .collect()
}

/// Amplitudes of a single-excitation state split by basis role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleExcitationState {
    /// Atom amplitude `U_e`.
    pub atom: f64,
    /// `A_l` for `l = 1..=L` (index `l-1`).
    pub a: Vec<f64>,
    /// `B_l` for `l = 1..=L` (index `l-1`).
    pub b: Vec<f64>,
    pub probe: Option<f64>,
}

impl SingleExcitationState {
    pub fn cells(&self) -> usize {
        self.a.len()
    }

    pub fn a_at(&self, cell: usize) -> f64 {
        self.a[cell - 1]
    }

    pub fn b_at(&self, cell: usize) -> f64 {
        self.b[cell - 1]
    }

    pub fn amplitude(&self, s: Sublattice, cell: usize) -> f64 {
        match s {
            Sublattice::A => self.a_at(cell),
            Sublattice::B => self.b_at(cell),
        }
    }

    pub fn total_probability(&self) -> f64 {
        self.atom * self.atom
            + self.a.iter().map(|x| x * x).sum::<f64>()
            + self.b.iter().map(|x| x * x).sum::<f64>()
            + self.probe.map_or(0.0, |p| p * p)
    }

    pub fn a_weight(&self) -> f64 {
        self.a.iter().map(|x| x * x).sum()
    }

    pub fn b_weight(&self) -> f64 {
        self.b.iter().map(|x| x * x).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            atom: self.atom * s,
            a: self.a.iter().map(|x| x * s).collect(),
            b: self.b.iter().map(|x| x * s).collect(),
            probe: self.probe.map(|p| p * s),
        }
    }

    /// Unit norm with `U_e >= 0`.
    pub fn normalized(&self) -> Self {
        let norm = self.total_probability().sqrt();
        let sign = if self.atom < 0.0 { -1.0 } else { 1.0 };
        self.scaled(sign / norm)
    }

    pub fn to_vector(&self, layout: &Layout) -> DVector<f64> {
        let mut v = DVector::zeros(layout.dim());
        for l in 0..self.cells() {
            v[2 * l] = self.a[l];
            v[2 * l + 1] = self.b[l];
        }
        if let Ok(i) = layout.site_index(BasisLabel::Atom) {
            v[i] = self.atom;
        }
        if let (Ok(i), Some(p)) = (layout.site_index(BasisLabel::Probe), self.probe) {
            v[i] = p;
        }
        v
    }

    /// Largest per-site amplitude difference (photons and atom).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let photons = self
            .a
            .iter()
            .zip(&other.a)
            .chain(self.b.iter().zip(&other.b))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        photons.max((self.atom - other.atom).abs())
    }
}

/// Reindexes a state vector by `(sublattice, cell)`.
pub fn photon_distribution(state: DVectorView<'_, f64>, layout: &Layout) -> SingleExcitationState {
    let cells = layout.cells;
    let a = (0..cells).map(|l| state[2 * l]).collect();
    let b = (0..cells).map(|l| state[2 * l + 1]).collect();
    let atom = layout
        .site_index(BasisLabel::Atom)
        .map(|i| state[i])
        .unwrap_or(0.0);
    let probe = layout.site_index(BasisLabel::Probe).ok().map(|i| state[i]);
    SingleExcitationState { atom, a, b, probe }
}
