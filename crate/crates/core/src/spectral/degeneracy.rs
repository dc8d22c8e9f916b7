//! Splitting of the `ω_k = ω_{-k}` pairs of the periodic chain.
//!
//! Each bare pair `(k, 2π-k)` of a band is matched to the two eigenstates
//! with the largest weight on the pair's Bloch states, so pairs stay
//! identified even when the atom pushes levels across each other.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Band, SpectralError, SpectrumResult};
use crate::lattice::Boundary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSplitting {
    pub band: Band,
    /// Grid index `j` of `k = 2πj/L`; the partner is `L - j`.
    pub j: usize,
    pub k: f64,
    pub bare_energy: f64,
    /// Indices into the spectrum of the two matched levels (ascending).
    pub levels: (usize, usize),
    pub splitting: f64,
    /// Smaller of the two matched states' weights on the pair subspace.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub band: Band,
    pub pairs: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Pairs whose splitting is below the pairing tolerance.
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub tolerance: f64,
    pub pairs: Vec<PairSplitting>,
    pub upper: BandSummary,
    pub lower: BandSummary,
}

impl DegeneracyReport {
    pub fn band(&self, band: Band) -> impl Iterator<Item = &PairSplitting> + '_ {
        self.pairs.iter().filter(move |p| p.band == band)
    }

    pub fn summary(&self, band: Band) -> &BandSummary {
        match band {
            Band::Upper => &self.upper,
            Band::Lower => &self.lower,
        }
    }
}

fn summarize(band: Band, pairs: &[PairSplitting], tol: f64) -> BandSummary {
    let splits: Vec<f64> = pairs
        .iter()
        .filter(|p| p.band == band)
        .map(|p| p.splitting)
        .collect();
    let n = splits.len();
    BandSummary {
        band,
        pairs: n,
        min: splits.iter().copied().fold(f64::INFINITY, f64::min),
        max: splits.iter().copied().fold(0.0, f64::max),
        mean: if n > 0 { splits.iter().sum::<f64>() / n as f64 } else { 0.0 },
        degenerate: splits.iter().filter(|&&s| s < tol).count(),
    }
}

/// Pair splittings for both bands; `tolerance` separates degenerate from
/// lifted pairs in the summaries.
pub fn degeneracy_report(
    spectrum: &SpectrumResult,
    tolerance: f64,
) -> Result<DegeneracyReport, SpectralError> {
    if !(tolerance > 0.0) {
        return Err(SpectralError::InvalidInput("pairing tolerance must be positive".into()));
    }
    if spectrum.params.boundary != Boundary::Periodic {
        return Err(SpectralError::InvalidInput(
            "degeneracy pairing needs the periodic chain".into(),
        ));
    }
    let cells = spectrum.layout.cells;
    let hop = spectrum.hoppings();
    let dim = spectrum.dim();
    let norm = 1.0 / (cells as f64).sqrt();

    // Fourier components of every eigenvector on each sublattice.
    let fourier = |j: usize| -> Vec<(Complex64, Complex64)> {
        let k = 2.0 * PI * j as f64 / cells as f64;
        let phases: Vec<Complex64> = (1..=cells)
            .map(|l| Complex64::from_polar(norm, -k * l as f64))
            .collect();
        (0..dim)
            .map(|c| {
                let v = spectrum.states.column(c);
                let mut fa = Complex64::new(0.0, 0.0);
                let mut fb = Complex64::new(0.0, 0.0);
                for (l, ph) in phases.iter().enumerate() {
                    fa += ph * v[2 * l];
                    fb += ph * v[2 * l + 1];
                }
                (fa, fb)
            })
            .collect()
    };

    let mut pairs = Vec::new();
    for j in (1..cells).take_while(|&j| j < cells - j) {
        let k = 2.0 * PI * j as f64 / cells as f64;
        let plus = fourier(j);
        let minus = fourier(cells - j);
        for band in [Band::Upper, Band::Lower] {
            let sigma = band.sign();
            let weight_of = |f: &(Complex64, Complex64), kk: f64| {
                // Bloch state (ω/h, σ)/√2 with h = t1 + t2 e^{ik}
                let h = Complex64::new(hop.t1, 0.0) + Complex64::from_polar(hop.t2, kk);
                let ca = h.norm() / h / 2f64.sqrt();
                let cb = Complex64::new(sigma / 2f64.sqrt(), 0.0);
                (ca.conj() * f.0 + cb.conj() * f.1).norm_sqr()
            };
            let mut weights: Vec<(usize, f64)> = (0..dim)
                .map(|c| (c, weight_of(&plus[c], k) + weight_of(&minus[c], -k)))
                .collect();
            weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let (i0, w0) = weights[0];
            let (i1, w1) = weights[1];
            let (lo, hi) = (i0.min(i1), i0.max(i1));
            pairs.push(PairSplitting {
                band,
                j,
                k,
                bare_energy: sigma * crate::analytic::dispersion(k, hop.t1, hop.t2),
                levels: (lo, hi),
                splitting: (spectrum.energies[hi] - spectrum.energies[lo]).abs(),
                weight: w0.min(w1),
            });
        }
    }
    pairs.sort_by(|a, b| a.band.cmp(&b.band).then(a.j.cmp(&b.j)));
    Ok(DegeneracyReport {
        tolerance,
        upper: summarize(Band::Upper, &pairs, tolerance),
        lower: summarize(Band::Lower, &pairs, tolerance),
        pairs,
    })
}
