//! Momentum-space picture: band states, atom-band couplings `g_kσ`, and the
//! effective photon-photon couplings obtained by eliminating the atom to
//! second order.
//!
//! Bloch states are `|E_kσ⟩ = L^{-1/2} Σ_l e^{ikl} (c_A |A_l⟩ + c_B |B_l⟩)` with
//! `(c_A, c_B) = (ω_k / h_k, σ) / √2` and `h_k = t1 + t2 e^{ik}`, so that
//! `g_kσ = ⟨e|H_I|E_kσ⟩` and
//!
//! ```text
//! G_{kσ,k'σ'} = ½ conj(g_kσ) g_k'σ' (1/E_kσ + 1/E_k'σ')
//! ```

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{dispersion, grid_momentum};
use crate::lattice::{AtomCoupling, CouplingKind, ModelError, SshParams};
use crate::spectral::{
    degeneracy_report, eigenvalues_dense, solve, Band, Classifier, LevelClass, SpectralError,
};

#[derive(Debug, Error)]
pub enum EffectiveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("band degeneracy at k = {k}: ω_k = 0, the band basis is undefined")]
    Degenerate { k: f64 },
    #[error("mode (j = {j}, {band:?}) has zero energy; elimination is invalid at resonance")]
    Resonant { j: usize, band: Band },
    #[error("weak-coupling condition violated: max |g_kσ|/|E_kσ| = {ratio:.4} >= {limit}")]
    StrongCoupling { ratio: f64, limit: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

const DEGENERATE_TOL: f64 = 1e-12;

/// Eigenpairs of the 2x2 Bloch Hamiltonian at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandBasis {
    pub k: f64,
    pub omega: f64,
    /// `(c_A, c_B)` for the upper band.
    pub upper: [Complex64; 2],
    /// `(c_A, c_B)` for the lower band.
    pub lower: [Complex64; 2],
}

impl BandBasis {
    pub fn energy(&self, band: Band) -> f64 {
        band.sign() * self.omega
    }

    pub fn vector(&self, band: Band) -> [Complex64; 2] {
        match band {
            Band::Upper => self.upper,
            Band::Lower => self.lower,
        }
    }
}

pub fn band_basis(k: f64, t1: f64, t2: f64) -> Result<BandBasis, EffectiveError> {
    let omega = dispersion(k, t1, t2);
    if omega <= DEGENERATE_TOL * (t1.abs() + t2.abs()) {
        return Err(EffectiveError::Degenerate { k });
    }
    let h = Complex64::new(t1, 0.0) + Complex64::from_polar(t2, k);
    let ca = omega / h / 2f64.sqrt();
    let cb = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
    Ok(BandBasis {
        k,
        omega,
        upper: [ca, cb],
        lower: [ca, -cb],
    })
}

/// `H(k) = [[0, t1 + t2 e^{-ik}], [t1 + t2 e^{ik}, 0]]`.
pub fn bloch_matrix(k: f64, t1: f64, t2: f64) -> [[Complex64; 2]; 2] {
    let h = Complex64::new(t1, 0.0) + Complex64::from_polar(t2, k);
    let zero = Complex64::new(0.0, 0.0);
    [[zero, h.conj()], [h, zero]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    /// Grid index of `k = 2πj/L`.
    pub j: usize,
    pub band: Band,
}

impl Mode {
    pub fn new(j: usize, band: Band) -> Self {
        Self { j, band }
    }

    pub fn k(&self, cells: usize) -> f64 {
        grid_momentum(self.j, cells)
    }

    /// The `2π - k` partner.
    pub fn partner(&self, cells: usize) -> Self {
        Self {
            j: (cells - self.j) % cells,
            band: self.band,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoupling {
    pub mode: Mode,
    pub k: f64,
    pub energy: f64,
    pub value: Complex64,
}

/// `g_kσ = g/√(2L) (ω_k e^{ikn} / h_k ± e^{ikm})`.
pub fn atom_mode_coupling_ab(
    mode: Mode,
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<ModeCoupling, EffectiveError> {
    expect_kind(atom, CouplingKind::AB)?;
    mode_coupling(mode, params, atom)
}

/// `g_kσ = g/√(2L) ω_k (e^{ikn} + e^{ikm}) / h_k`.
pub fn atom_mode_coupling_aa(
    mode: Mode,
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<ModeCoupling, EffectiveError> {
    expect_kind(atom, CouplingKind::AA)?;
    mode_coupling(mode, params, atom)
}

fn expect_kind(atom: &AtomCoupling, kind: CouplingKind) -> Result<(), EffectiveError> {
    if atom.kind != kind {
        return Err(EffectiveError::InvalidInput(format!(
            "expected {kind} coupling, got {}",
            atom.kind
        )));
    }
    Ok(())
}

/// Projection of the atom's interaction onto one Bloch state.
pub fn mode_coupling(
    mode: Mode,
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<ModeCoupling, EffectiveError> {
    let cells = params.cells;
    if mode.j >= cells {
        return Err(EffectiveError::InvalidInput(format!(
            "momentum index {} outside 0..{cells}",
            mode.j
        )));
    }
    let hop = params.hoppings();
    let k = mode.k(cells);
    let basis = band_basis(k, hop.t1, hop.t2)?;
    let [ca, cb] = basis.vector(mode.band);
    let phase = |cell: usize| Complex64::from_polar(1.0 / (cells as f64).sqrt(), k * cell as f64);
    let value = match atom.kind {
        CouplingKind::AA => ca * (phase(atom.n) + phase(atom.m)),
        CouplingKind::AB => ca * phase(atom.n) + cb * phase(atom.m),
        CouplingKind::None => Complex64::new(0.0, 0.0),
    } * atom.g;
    Ok(ModeCoupling {
        mode,
        k,
        energy: basis.energy(mode.band),
        value,
    })
}

/// All `2L` couplings, upper band first, each band in ascending `j`.
pub fn all_mode_couplings(
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<Vec<ModeCoupling>, EffectiveError> {
    [Band::Upper, Band::Lower]
        .into_iter()
        .flat_map(|band| (0..params.cells).map(move |j| Mode::new(j, band)))
        .map(|mode| mode_coupling(mode, params, atom))
        .collect()
}

/// Momentum-space Hamiltonian: `diag(E_kσ)` plus the atom row `g_kσ`,
/// with the atom as the last basis state.
pub fn momentum_space_hamiltonian(
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<DMatrix<Complex64>, EffectiveError> {
    let couplings = all_mode_couplings(params, atom)?;
    let n = couplings.len();
    let mut h = DMatrix::zeros(n + 1, n + 1);
    for (i, c) in couplings.iter().enumerate() {
        h[(i, i)] = Complex64::new(c.energy, 0.0);
        h[(n, i)] = c.value;
        h[(i, n)] = c.value.conj();
    }
    Ok(h)
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>, EffectiveError> {
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000).ok_or_else(|| {
        EffectiveError::InvalidInput("Hermitian eigensolver did not converge".into())
    })?;
    let mut e: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoupling {
    pub mode: Mode,
    pub mode_prime: Mode,
    pub value: Complex64,
}

fn pair_value(a: &ModeCoupling, b: &ModeCoupling) -> Complex64 {
    a.value.conj() * b.value * (0.5 * (1.0 / a.energy + 1.0 / b.energy))
}

pub fn effective_coupling(
    mode: Mode,
    mode_prime: Mode,
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<EffectiveCoupling, EffectiveError> {
    let a = mode_coupling(mode, params, atom)?;
    let b = mode_coupling(mode_prime, params, atom)?;
    for c in [&a, &b] {
        if c.energy == 0.0 {
            return Err(EffectiveError::Resonant {
                j: c.mode.j,
                band: c.mode.band,
            });
        }
    }
    Ok(EffectiveCoupling {
        mode,
        mode_prime,
        value: pair_value(&a, &b),
    })
}

/// Dense `G` over all band modes, indexed like [`all_mode_couplings`].
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub cells: usize,
    pub couplings: Vec<ModeCoupling>,
    pub g: DMatrix<Complex64>,
}

impl CouplingMatrix {
    pub fn index(&self, mode: Mode) -> usize {
        match mode.band {
            Band::Upper => mode.j,
            Band::Lower => self.cells + mode.j,
        }
    }

    pub fn get(&self, a: Mode, b: Mode) -> Complex64 {
        self.g[(self.index(a), self.index(b))]
    }

    /// Largest `|G|` between two bands.
    pub fn max_abs(&self, a: Band, b: Band) -> f64 {
        let mut out: f64 = 0.0;
        for i in 0..self.cells {
            for j in 0..self.cells {
                out = out.max(self.get(Mode::new(i, a), Mode::new(j, b)).norm());
            }
        }
        out
    }

    /// `max |G - G†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.g.nrows();
        let mut out: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                out = out.max((self.g[(i, j)] - self.g[(j, i)].conj()).norm());
            }
        }
        out
    }

    /// For every `j`, the off-diagonal `j'` maximizing `|G_{jσ,j'σ}|`.
    pub fn ridge(&self, band: Band) -> Vec<(usize, usize)> {
        (0..self.cells)
            .map(|j| {
                let best = (0..self.cells)
                    .filter(|&jp| jp != j)
                    .max_by(|&x, &y| {
                        let gx = self.get(Mode::new(j, band), Mode::new(x, band)).norm();
                        let gy = self.get(Mode::new(j, band), Mode::new(y, band)).norm();
                        gx.total_cmp(&gy).then(y.cmp(&x))
                    })
                    .unwrap_or(j);
                (j, best)
            })
            .collect()
    }

    /// `|G_{kσ,(2π-k)σ}|`.
    pub fn pair_abs(&self, j: usize, band: Band) -> f64 {
        let m = Mode::new(j, band);
        self.get(m, m.partner(self.cells)).norm()
    }
}

/// Assembles `G` row by row in parallel.
pub fn coupling_matrix(
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<CouplingMatrix, EffectiveError> {
    let couplings = all_mode_couplings(params, atom)?;
    if let Some(c) = couplings.iter().find(|c| c.energy == 0.0) {
        return Err(EffectiveError::Resonant {
            j: c.mode.j,
            band: c.mode.band,
        });
    }
    let n = couplings.len();
    let rows: Vec<Vec<Complex64>> = couplings
        .par_iter()
        .map(|a| couplings.iter().map(|b| pair_value(a, b)).collect())
        .collect();
    let g = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(CouplingMatrix {
        cells: params.cells,
        couplings,
        g,
    })
}

pub const WEAK_COUPLING_LIMIT: f64 = 0.3;
pub const WEAK_COUPLING_WARN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelMatch {
    pub effective: f64,
    pub exact: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct EffectiveReport {
    pub h_eff: DMatrix<Complex64>,
    pub coupling: CouplingMatrix,
    /// `max |g_kσ| / |E_kσ|`.
    pub ratio: f64,
    pub warnings: Vec<String>,
    /// States left out of the comparison, with the reason.
    pub excluded: Vec<String>,
    pub effective_energies: Vec<f64>,
    pub matches: Vec<LevelMatch>,
    pub max_deviation: f64,
}

/// `H_eff = diag(E_kσ) + G`, diagonalized and matched level by level against
/// the exact bulk spectrum.
pub fn build_effective_hamiltonian(
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<EffectiveReport, EffectiveError> {
    let coupling = coupling_matrix(params, atom)?;
    let ratio = coupling
        .couplings
        .iter()
        .map(|c| c.value.norm() / c.energy.abs())
        .fold(0.0, f64::max);
    if ratio >= WEAK_COUPLING_LIMIT {
        return Err(EffectiveError::StrongCoupling {
            ratio,
            limit: WEAK_COUPLING_LIMIT,
        });
    }
    let mut warnings = Vec::new();
    if ratio > WEAK_COUPLING_WARN {
        warnings.push(format!(
            "max |g|/|E| = {ratio:.4} exceeds {WEAK_COUPLING_WARN}; second-order terms may be inaccurate"
        ));
    }
    let mut h_eff = coupling.g.clone();
    for (i, c) in coupling.couplings.iter().enumerate() {
        h_eff[(i, i)] += c.energy;
    }
    let effective_energies = hermitian_eigenvalues(&h_eff)?;

    let exact = solve(params, atom)?;
    let classes = Classifier::for_q(params.q).classify_all(&exact.energies, params.hoppings());
    let mut excluded = vec!["atom mode (eliminated)".to_string()];
    let mut bulk = Vec::new();
    for (e, c) in exact.energies.iter().zip(&classes) {
        match c {
            LevelClass::Bulk => bulk.push(*e),
            other => excluded.push(format!("exact {} level at {e:.6e}", other.as_str())),
        }
    }
    if bulk.is_empty() {
        return Err(EffectiveError::InvalidInput("exact spectrum has no bulk levels".into()));
    }
    let matches: Vec<LevelMatch> = effective_energies
        .iter()
        .map(|&e| {
            let exact = bulk
                .iter()
                .copied()
                .min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs()))
                .unwrap_or(f64::NAN);
            LevelMatch {
                effective: e,
                exact,
                deviation: (e - exact).abs(),
            }
        })
        .collect();
    let max_deviation = matches.iter().map(|m| m.deviation).fold(0.0, f64::max);
    Ok(EffectiveReport {
        h_eff,
        coupling,
        ratio,
        warnings,
        excluded,
        effective_energies,
        matches,
        max_deviation,
    })
}

/// Grid index for a momentum, which must lie on the `2πj/L` grid.
pub fn grid_index(k: f64, cells: usize) -> Result<usize, EffectiveError> {
    let x = k / (2.0 * PI) * cells as f64;
    let j = x.round();
    if (x - j).abs() > 1e-9 || j < 0.0 {
        return Err(EffectiveError::InvalidInput(format!(
            "k = {k} is not on the {cells}-point momentum grid"
        )));
    }
    Ok(j as usize % cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCouplingPoint {
    pub theta: f64,
    pub k: f64,
    pub abs_g: f64,
}

/// `|G_{k+,(2π-k)+}|` over a θ grid for each requested `k`; rows ordered
/// by θ, then by `k` in the given order.
pub fn g_vs_theta(
    thetas: &[f64],
    ks: &[f64],
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<Vec<PairCouplingPoint>, EffectiveError> {
    let js = ks
        .iter()
        .map(|&k| grid_index(k, params.cells))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Result<Vec<PairCouplingPoint>, EffectiveError>> = thetas
        .par_iter()
        .map(|&theta| {
            let p = params.with_theta(theta);
            js.iter()
                .zip(ks)
                .map(|(&j, &k)| {
                    let m = Mode::new(j, Band::Upper);
                    let c = effective_coupling(m, m.partner(p.cells), &p, atom)?;
                    Ok(PairCouplingPoint {
                        theta,
                        k,
                        abs_g: c.value.norm(),
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(thetas.len() * ks.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplittingComparison {
    pub band: Band,
    pub j: usize,
    pub k: f64,
    /// `2|G_{kσ,(2π-k)σ}|`.
    pub predicted: f64,
    pub exact: f64,
    pub relative_error: f64,
}

/// Predicted against exact splitting for every `(k, 2π-k)` pair of a band,
/// sorted by exact splitting, largest first.
pub fn splitting_comparison(
    params: &SshParams,
    atom: &AtomCoupling,
    band: Band,
) -> Result<Vec<SplittingComparison>, EffectiveError> {
    let spectrum = solve(params, atom)?;
    let report = degeneracy_report(&spectrum, 1e-12)?;
    let g = coupling_matrix(params, atom)?;
    let mut out: Vec<SplittingComparison> = report
        .band(band)
        .map(|p| {
            let predicted = 2.0 * g.pair_abs(p.j, band);
            SplittingComparison {
                band,
                j: p.j,
                k: p.k,
                predicted,
                exact: p.splitting,
                relative_error: (predicted - p.splitting).abs() / p.splitting.max(f64::MIN_POSITIVE),
            }
        })
        .collect();
    out.sort_by(|a, b| b.exact.total_cmp(&a.exact).then(a.j.cmp(&b.j)));
    Ok(out)
}

/// Real-space spectrum, for reconstruction checks.
pub fn real_space_eigenvalues(
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<Vec<f64>, EffectiveError> {
    let h = crate::lattice::build_hamiltonian(params, atom, &crate::lattice::ProbeConfig::disabled())?;
    Ok(eigenvalues_dense(&h.matrix)?)
}
