//! Unitary evolution by spectral decomposition and the probe-atom Rabi run.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{eigensolve, eigensolve_dense, SpectralError};
use crate::lattice::{
    build_hamiltonian, AtomCoupling, BasisLabel, HamiltonianMatrix, Layout, ProbeConfig,
    SshParams,
};

/// State history on a time grid.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub layout: Layout,
    /// `amplitudes[t][i]`: amplitude on basis index `i` at `times[t]`.
    pub amplitudes: Vec<DVector<Complex64>>,
    /// `<ψ(t)|H|ψ(t)>`.
    pub energy: Vec<f64>,
}

impl Evolution {
    pub fn populations(&self, index: usize) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a[index].norm_sqr()).collect()
    }

    pub fn population(&self, label: BasisLabel) -> Result<Vec<f64>, SpectralError> {
        Ok(self.populations(self.layout.site_index(label)?))
    }

    pub fn norms(&self) -> Vec<f64> {
        self.amplitudes
            .iter()
            .map(|a| a.iter().map(|c| c.norm_sqr()).sum())
            .collect()
    }

    /// `|<v|ψ(t)>|²` for a real vector `v`.
    pub fn overlap(&self, v: &DVector<f64>) -> Vec<f64> {
        self.amplitudes
            .iter()
            .map(|a| {
                a.iter()
                    .zip(v.iter())
                    .map(|(c, x)| c * *x)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect()
    }
}

/// `ψ(t) = Σ_j e^{-iE_j t} <v_j|ψ0> v_j`.
pub fn time_evolve(
    h: &HamiltonianMatrix,
    psi0: &DVector<f64>,
    times: &[f64],
) -> Result<Evolution, SpectralError> {
    evolve_matrix(&h.matrix, h.layout, psi0, times)
}

fn evolve_matrix(
    m: &DMatrix<f64>,
    layout: Layout,
    psi0: &DVector<f64>,
    times: &[f64],
) -> Result<Evolution, SpectralError> {
    if psi0.len() != m.nrows() {
        return Err(SpectralError::InvalidInput(format!(
            "state has length {}, matrix dimension is {}",
            psi0.len(),
            m.nrows()
        )));
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(SpectralError::InvalidInput("initial state is not normalized".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(SpectralError::InvalidInput("times must be ascending".into()));
    }
    let (energies, vectors) = eigensolve_dense(m)?;
    let coeffs = vectors.transpose() * psi0;
    let mut amplitudes = Vec::with_capacity(times.len());
    let mut energy = Vec::with_capacity(times.len());
    for &t in times {
        let (re_c, im_c): (Vec<f64>, Vec<f64>) = energies
            .iter()
            .zip(coeffs.iter())
            .map(|(e, c)| {
                let (s, co) = (e * t).sin_cos();
                (c * co, -c * s)
            })
            .unzip();
        let re = &vectors * DVector::from_vec(re_c);
        let im = &vectors * DVector::from_vec(im_c);
        energy.push(re.dot(&(m * &re)) + im.dot(&(m * &im)));
        amplitudes.push(re.zip_map(&im, Complex64::new));
    }
    Ok(Evolution {
        times: times.to_vec(),
        layout,
        amplitudes,
        energy,
    })
}

/// Contrast and period of a sampled oscillation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillation {
    /// `max - min` of the series.
    pub contrast: f64,
    /// Twice the mean spacing of midline crossings, when at least two exist.
    pub period: Option<f64>,
    /// Full periods covered by the window.
    pub cycles: f64,
}

pub fn oscillation(times: &[f64], series: &[f64]) -> Oscillation {
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let mid = 0.5 * (max + min);
    let mut crossings = Vec::new();
    for i in 1..series.len() {
        let (a, b) = (series[i - 1] - mid, series[i] - mid);
        if a == 0.0 || a.signum() == b.signum() {
            continue;
        }
        let f = a / (a - b);
        crossings.push(times[i - 1] + f * (times[i] - times[i - 1]));
    }
    let period = (crossings.len() >= 2).then(|| {
        2.0 * (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64
    });
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    Oscillation {
        contrast: max - min,
        period,
        cycles: period.map_or(0.0, |p| span / p),
    }
}

/// Probe-atom experiment: probe initially excited, everything else empty.
#[derive(Debug, Clone)]
pub struct RabiRun {
    pub times: Vec<f64>,
    pub probe_population: Vec<f64>,
    pub atom_population: Vec<f64>,
    /// `|<z|ψ(t)>|²` with `z` the zero mode of the probe-free Hamiltonian,
    /// or zeros when that Hamiltonian has no zero mode.
    pub zero_mode_overlap: Vec<f64>,
    /// `|z|` on the probe site.
    pub zero_mode_weight: Option<f64>,
    /// `π / (gp w)` from the two-level reduction.
    pub predicted_period: Option<f64>,
    pub norm: Vec<f64>,
}

pub const ZERO_MODE_TOL: f64 = 1e-8;

pub fn rabi_experiment(
    params: &SshParams,
    atom: &AtomCoupling,
    probe: &ProbeConfig,
    times: &[f64],
) -> Result<RabiRun, SpectralError> {
    if !probe.enabled {
        return Err(SpectralError::InvalidInput("probe is disabled".into()));
    }
    let h = build_hamiltonian(params, atom, probe)?;
    let bare = eigensolve(&build_hamiltonian(params, atom, &ProbeConfig::disabled())?)?;
    let zi = bare.zero_mode_index();
    let zero = (bare.energies[zi].abs() < ZERO_MODE_TOL * params.q).then(|| {
        let mut z = DVector::zeros(h.dim());
        z.rows_mut(0, bare.dim()).copy_from(&bare.state(zi));
        z
    });
    let site = h.layout.site_index(probe.site())?;
    let weight = zero.as_ref().map(|z| z[site].abs());

    let p = h.layout.site_index(BasisLabel::Probe)?;
    let mut psi0 = DVector::zeros(h.dim());
    psi0[p] = 1.0;
    let evo = time_evolve(&h, &psi0, times)?;

    let atom_population = match h.layout.site_index(BasisLabel::Atom) {
        Ok(i) => evo.populations(i),
        Err(_) => vec![0.0; times.len()],
    };
    let zero_mode_overlap = match &zero {
        Some(z) => evo.overlap(z),
        None => vec![0.0; times.len()],
    };
    Ok(RabiRun {
        times: times.to_vec(),
        probe_population: evo.populations(p),
        atom_population,
        zero_mode_overlap,
        zero_mode_weight: weight,
        predicted_period: weight
            .filter(|w| *w > 0.0 && probe.gp > 0.0)
            .map(|w| PI / (probe.gp * w)),
        norm: evo.norms(),
    })
}
