//! Closed-form results for the giant atom in the SSH waveguide: dispersion,
//! winding number, eigenvalue conditions, bound/gap-state and zero-mode
//! profiles, and mirror-symmetry residuals.
//!
//! Profiles are built from the lattice Green's function of the bare chain.
//! With `x = (E² - t1² - t2²)/(t1 t2)` and `|x| > 2`,
//!
//! ```text
//! (1/L) Σ_k e^{ikr} / (x - 2 cos k) = (a^r + a^{L-r}) / ((1 - a^L)(1/a - a)),  0 <= r < L
//! ```
//!
//! which reduces to `a^{|r|} / (1/a - a)` on the infinite chain. `1/a - a`
//! equals `+√(x²-4)` above the bands and `-√(x²-4)` inside the gap.

use std::f64::consts::PI;

use thiserror::Error;

use crate::lattice::{AtomCoupling, Boundary, CouplingKind, Hoppings, SshParams};
use crate::spectral::SingleExcitationState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("energy {energy} gives |x| = {x_abs} <= 2: bulk energies have no decaying closed form")]
    Domain { energy: f64, x_abs: f64 },
    #[error("energy {energy} sits on the pole at k = {k} (grid index {j})")]
    Pole { energy: f64, j: usize, k: f64 },
    #[error("no zero mode: requires t2 > t1 (t1 = {t1}, t2 = {t2})")]
    NoZeroMode { t1: f64, t2: f64 },
    #[error("operation needs {expected} coupling, got {got}")]
    WrongKind {
        expected: CouplingKind,
        got: CouplingKind,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// `ω_k = √(t1² + t2² + 2 t1 t2 cos k)`; the bands are `E = ±ω_k`.
pub fn dispersion(k: f64, t1: f64, t2: f64) -> f64 {
    (t1 * t1 + t2 * t2 + 2.0 * t1 * t2 * k.cos()).max(0.0).sqrt()
}

/// `k = 2πj/L`.
pub fn grid_momentum(j: usize, cells: usize) -> f64 {
    2.0 * PI * j as f64 / cells as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingResult {
    /// `None` when the gap is closed.
    pub winding: Option<i32>,
    /// `min_k ω_k`.
    pub min_gap: f64,
}

/// Winding of `h(k) = t1 + t2 e^{ik}` around the origin over the Brillouin zone.
pub fn winding_number(t1: f64, t2: f64, resolution: usize) -> Result<WindingResult, AnalyticError> {
    if resolution < 100 {
        return Err(AnalyticError::InvalidInput(format!(
            "winding resolution must be >= 100, got {resolution}"
        )));
    }
    let ks: Vec<f64> = (0..=resolution).map(|i| 2.0 * PI * i as f64 / resolution as f64).collect();
    let min_gap = ks
        .iter()
        .map(|&k| dispersion(k, t1, t2))
        .chain([dispersion(PI, t1, t2)])
        .fold(f64::INFINITY, f64::min);
    if min_gap <= 1e-9 * (t1.abs() + t2.abs()) {
        return Ok(WindingResult {
            winding: None,
            min_gap,
        });
    }
    let phase = |k: f64| (t2 * k.sin()).atan2(t1 + t2 * k.cos());
    let mut total = 0.0;
    for w in ks.windows(2) {
        let mut d = phase(w[1]) - phase(w[0]);
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        total += d;
    }
    let winding = (total / (2.0 * PI)).round() as i32;
    assert_eq!(
        winding,
        i32::from(t2 > t1),
        "numerical winding disagrees with the t1/t2 comparison"
    );
    Ok(WindingResult {
        winding: Some(winding),
        min_gap,
    })
}

/// Relative distance below which `E² - ω_k²` counts as a pole.
pub const POLE_TOL: f64 = 1e-14;

fn check_coupled(atom: &AtomCoupling, expected: CouplingKind) -> Result<(), AnalyticError> {
    if atom.kind != expected {
        return Err(AnalyticError::WrongKind {
            expected,
            got: atom.kind,
        });
    }
    Ok(())
}

fn discrete_residual(
    energy: f64,
    params: &SshParams,
    atom: &AtomCoupling,
    numerator: impl Fn(f64) -> f64,
) -> Result<f64, AnalyticError> {
    let Hoppings { t1, t2 } = params.hoppings();
    let cells = params.cells;
    let scale = (t1 + t2) * (t1 + t2);
    let mut sum = 0.0;
    for j in 0..cells {
        let k = grid_momentum(j, cells);
        let w = dispersion(k, t1, t2);
        let den = energy * energy - w * w;
        if den.abs() < POLE_TOL * scale {
            return Err(AnalyticError::Pole { energy, j, k });
        }
        sum += numerator(k) / den;
    }
    Ok(energy - 2.0 * atom.g * atom.g / cells as f64 * sum)
}

/// `E - (2g²/L) Σ_k E(1 + cos[k(m-n)]) / (E² - ω_k²)`: zero at every
/// eigenvalue whose state has atom weight (A-A coupling).
pub fn self_consistency_aa(
    energy: f64,
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<f64, AnalyticError> {
    check_coupled(atom, CouplingKind::AA)?;
    let d = atom.size() as f64;
    discrete_residual(energy, params, atom, |k| energy * (1.0 + (k * d).cos()))
}

/// `Q(k) = t1 cos[k(m-n)] + t2 cos[k(n-m-1)]`.
pub fn ab_q(k: f64, hop: Hoppings, size: usize) -> f64 {
    let d = size as f64;
    hop.t1 * (k * d).cos() + hop.t2 * (k * (-d - 1.0)).cos()
}

/// `E - (2g²/L) Σ_k (E + Q) / (E² - ω_k²)` (A-B coupling).
pub fn self_consistency_ab(
    energy: f64,
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<f64, AnalyticError> {
    check_coupled(atom, CouplingKind::AB)?;
    let hop = params.hoppings();
    let size = atom.size();
    discrete_residual(energy, params, atom, |k| energy + ab_q(k, hop, size))
}

/// Dispatches on the coupling kind.
pub fn self_consistency(
    energy: f64,
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<f64, AnalyticError> {
    match atom.kind {
        CouplingKind::AA => self_consistency_aa(energy, params, atom),
        CouplingKind::AB => self_consistency_ab(energy, params, atom),
        CouplingKind::None => Err(AnalyticError::InvalidInput("no atom attached".into())),
    }
}

fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol.max(4.0 * f64::EPSILON * (left + right).abs()) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // split first so periodic integrands cannot fool the initial estimate
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 24)
        })
        .sum()
}

/// Infinite-chain residual `E - (g²/π) ∫ dk [...]` by adaptive quadrature.
/// Only defined for energies outside the bands.
pub fn self_consistency_continuum(
    energy: f64,
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<f64, AnalyticError> {
    let hop = params.hoppings();
    let x = (energy * energy - hop.t1 * hop.t1 - hop.t2 * hop.t2) / (hop.t1 * hop.t2);
    if x.abs() <= 2.0 {
        return Err(AnalyticError::Domain {
            energy,
            x_abs: x.abs(),
        });
    }
    let d = atom.size() as f64;
    let size = atom.size();
    let integrand: Box<dyn Fn(f64) -> f64> = match atom.kind {
        CouplingKind::AA => Box::new(move |k: f64| {
            let w = dispersion(k, hop.t1, hop.t2);
            energy * (1.0 + (k * d).cos()) / (energy * energy - w * w)
        }),
        CouplingKind::AB => Box::new(move |k: f64| {
            let w = dispersion(k, hop.t1, hop.t2);
            (energy + ab_q(k, hop, size)) / (energy * energy - w * w)
        }),
        CouplingKind::None => return Err(AnalyticError::InvalidInput("no atom attached".into())),
    };
    let integral = adaptive_simpson(integrand, -PI, PI, 1e-14);
    Ok(energy - atom.g * atom.g / PI * integral)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RootReport {
    /// Ascending.
    pub roots: Vec<f64>,
    /// Bracket each root was refined in.
    pub brackets: Vec<(f64, f64)>,
    pub residuals: Vec<f64>,
}

impl RootReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn in_range(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.roots.iter().copied().filter(|r| *r > lo && *r < hi).collect()
    }
}

fn sample_points(a: f64, b: f64, uniform: usize) -> Vec<f64> {
    let w = b - a;
    let mut pts: Vec<f64> = (1..uniform).map(|i| a + w * i as f64 / uniform as f64).collect();
    for p in 2..=11 {
        let f = 10f64.powi(-p);
        pts.push(a + w * f);
        pts.push(b - w * f);
    }
    pts.retain(|x| *x > a && *x < b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Locates every sign change of `f` inside the open intervals and refines
/// it by bisection until `|f| <= tol`. Intervals must be free of poles.
pub fn find_roots(
    f: impl Fn(f64) -> Result<f64, AnalyticError>,
    intervals: &[(f64, f64)],
    tol: f64,
) -> Result<RootReport, AnalyticError> {
    find_roots_sampled(f, intervals, tol, 800)
}

/// [`find_roots`] with `samples` uniform scan points per interval, on top of
/// the log-spaced points near each endpoint.
pub fn find_roots_sampled(
    f: impl Fn(f64) -> Result<f64, AnalyticError>,
    intervals: &[(f64, f64)],
    tol: f64,
    samples: usize,
) -> Result<RootReport, AnalyticError> {
    let mut found: Vec<(f64, (f64, f64), f64)> = Vec::new();
    for &(a, b) in intervals {
        if !(b > a) {
            continue;
        }
        let pts = sample_points(a, b, samples.max(2));
        let vals = pts.iter().map(|&x| f(x)).collect::<Result<Vec<_>, _>>()?;
        for i in 0..pts.len() {
            if vals[i] == 0.0 {
                found.push((pts[i], (pts[i], pts[i]), 0.0));
                continue;
            }
            if i + 1 == pts.len() || vals[i + 1] == 0.0 || vals[i].signum() == vals[i + 1].signum()
            {
                continue;
            }
            let (mut lo, mut hi) = (pts[i], pts[i + 1]);
            let mut flo = vals[i];
            let mut mid = 0.5 * (lo + hi);
            let mut fmid = f(mid)?;
            for _ in 0..200 {
                if fmid.abs() <= tol && (hi - lo) <= 1e-9 * (1.0 + mid.abs()) {
                    break;
                }
                if hi - lo <= 4.0 * f64::EPSILON * (1.0 + mid.abs()) {
                    break;
                }
                if fmid.signum() == flo.signum() {
                    lo = mid;
                    flo = fmid;
                } else {
                    hi = mid;
                }
                mid = 0.5 * (lo + hi);
                fmid = f(mid)?;
            }
            found.push((mid, (pts[i], pts[i + 1]), fmid));
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(RootReport {
        roots: found.iter().map(|r| r.0).collect(),
        brackets: found.iter().map(|r| r.1).collect(),
        residuals: found.iter().map(|r| r.2).collect(),
    })
}

/// Gap `(-|t1-t2|, |t1-t2|)` and the two regions outside the bands out to
/// `t1 + t2 + 2g`, which bounds the spectrum.
pub fn default_search_intervals(hop: Hoppings, g: f64) -> Vec<(f64, f64)> {
    let top = hop.band_top();
    let outer = top + 2.0 * g + 1e-3 * top;
    let gap = hop.gap_edge();
    let mut out = vec![(-outer, -top)];
    if gap > 0.0 {
        out.push((-gap, gap));
    }
    out.push((top, outer));
    out
}

/// Roots of the discrete eigenvalue condition in the gap and outside the bands.
pub fn eigen_roots(params: &SshParams, atom: &AtomCoupling) -> Result<RootReport, AnalyticError> {
    let tol = 1e-10 * params.q;
    let intervals = default_search_intervals(params.hoppings(), atom.g);
    find_roots(|e| self_consistency(e, params, atom), &intervals, tol)
}

/// Derived quantities for a state at energy `E` outside the bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeContext {
    pub energy: f64,
    pub hoppings: Hoppings,
    /// `gE / (t1 t2)`.
    pub t: f64,
    /// `g / t2`.
    pub y1: f64,
    /// `g / t1`.
    pub y2: f64,
    pub x: f64,
    /// Decay factor, `|a| < 1`.
    pub a: f64,
    /// `t1 / t2`.
    pub tau: f64,
    /// `1/a - a`, i.e. `sign(x) √(x² - 4)`.
    pub denom: f64,
}

impl AmplitudeContext {
    pub fn new(energy: f64, hop: Hoppings, g: f64) -> Result<Self, AnalyticError> {
        let Hoppings { t1, t2 } = hop;
        let x = (energy * energy - t1 * t1 - t2 * t2) / (t1 * t2);
        if x.abs() <= 2.0 {
            return Err(AnalyticError::Domain {
                energy,
                x_abs: x.abs(),
            });
        }
        if energy.abs() < hop.gap_edge() {
            assert!(x < -2.0, "gap energies must give x < -2");
        }
        let root = (x * x - 4.0).sqrt();
        let a = if x > 2.0 { (x - root) / 2.0 } else { (x + root) / 2.0 };
        Ok(Self {
            energy,
            hoppings: hop,
            t: g * energy / (t1 * t2),
            y1: g / t2,
            y2: g / t1,
            x,
            a,
            tau: t1 / t2,
            denom: 1.0 / a - a,
        })
    }

    /// Image-summed `a^{|r|}` for a ring of `cells` cells, or the bare power
    /// for the open chain.
    pub fn kernel(&self, r: i64, cells: usize, boundary: Boundary) -> f64 {
        match boundary {
            Boundary::Open => self.a.powi(r.unsigned_abs() as i32),
            Boundary::Periodic => {
                let l = cells as i64;
                let r = r.rem_euclid(l);
                (self.a.powi(r as i32) + self.a.powi((l - r) as i32)) / (1.0 - self.a.powi(l as i32))
            }
        }
    }
}

fn photon_state(cells: usize, mut f: impl FnMut(i64) -> (f64, f64)) -> SingleExcitationState {
    let (a, b) = (1..=cells as i64).map(&mut f).unzip();
    SingleExcitationState {
        atom: 1.0,
        a,
        b,
        probe: None,
    }
}

/// Normalized A-A profile at energy `E` (bound or gap state).
pub fn amplitudes_aa(
    energy: f64,
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<SingleExcitationState, AnalyticError> {
    check_coupled(atom, CouplingKind::AA)?;
    if energy == 0.0 {
        return zero_mode_aa(params, atom);
    }
    let c = AmplitudeContext::new(energy, params.hoppings(), atom.g)?;
    let (n, m) = (atom.n as i64, atom.m as i64);
    let ker = |r: i64| c.kernel(r, params.cells, params.boundary);
    let state = photon_state(params.cells, |l| {
        let pair = ker(l - n) + ker(l - m);
        let a = c.t / c.denom * pair;
        let b = a * c.y1 / c.t + c.y2 / c.denom * (ker(l - n + 1) + ker(l - m + 1));
        (a, b)
    });
    Ok(state.normalized())
}

/// Normalized A-B profile at energy `E` (bound or gap state).
pub fn amplitudes_ab(
    energy: f64,
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<SingleExcitationState, AnalyticError> {
    check_coupled(atom, CouplingKind::AB)?;
    let c = AmplitudeContext::new(energy, params.hoppings(), atom.g)?;
    let (n, m) = (atom.n as i64, atom.m as i64);
    let ker = |r: i64| c.kernel(r, params.cells, params.boundary);
    let state = photon_state(params.cells, |l| {
        let a = (c.t * ker(l - n) + c.y1 * ker(l - m) + c.y2 * ker(l - m - 1)) / c.denom;
        let b = (c.t * ker(l - m) + c.y1 * ker(l - n) + c.y2 * ker(l - n + 1)) / c.denom;
        (a, b)
    });
    Ok(state.normalized())
}

fn nontrivial_tau(params: &SshParams) -> Result<(Hoppings, f64), AnalyticError> {
    let hop = params.hoppings();
    if hop.t2 <= hop.t1 {
        return Err(AnalyticError::NoZeroMode {
            t1: hop.t1,
            t2: hop.t2,
        });
    }
    Ok((hop, hop.t1 / hop.t2))
}

/// Chiral A-A zero mode: photons on B sites left of `m` only.
pub fn zero_mode_aa(
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<SingleExcitationState, AnalyticError> {
    check_coupled(atom, CouplingKind::AA)?;
    let (hop, tau) = nontrivial_tau(params)?;
    let y2 = atom.g / hop.t1;
    let (n, m) = (atom.n as i64, atom.m as i64);
    let p = |e: i64| (-tau).powi(e as i32);
    let state = photon_state(params.cells, |l| {
        let b = if l < n {
            p(n - l) + p(m - l)
        } else if l < m {
            p(m - l)
        } else {
            0.0
        };
        (0.0, y2 * b)
    });
    Ok(state.normalized())
}

/// A-B zero mode: B sites left of `n` and A sites right of `m`.
pub fn zero_mode_ab(
    params: &SshParams,
    atom: &AtomCoupling,
) -> Result<SingleExcitationState, AnalyticError> {
    check_coupled(atom, CouplingKind::AB)?;
    let (hop, tau) = nontrivial_tau(params)?;
    let y2 = atom.g / hop.t1;
    let (n, m) = (atom.n as i64, atom.m as i64);
    let p = |e: i64| (-tau).powi(e as i32);
    let state = photon_state(params.cells, |l| {
        let a = if l > m { y2 * p(l - m) } else { 0.0 };
        let b = if l < n { y2 * p(n - l) } else { 0.0 };
        (a, b)
    });
    Ok(state.normalized())
}

/// Largest mirror mismatch about the atom centre `r -> m + n - r`:
/// `||A_r| - |A_{m+n-r}||` for A-A, `||A_r| - |B_{m+n-r}||` for A-B.
/// Mirror indices wrap on the ring and are skipped outside an open chain.
pub fn symmetry_check(
    state: &SingleExcitationState,
    kind: CouplingKind,
    n: usize,
    m: usize,
    boundary: Boundary,
) -> f64 {
    let cells = state.cells() as i64;
    let mut worst: f64 = 0.0;
    for r in 1..=cells {
        let mirror = (m + n) as i64 - r;
        let mirror = match boundary {
            Boundary::Periodic => (mirror - 1).rem_euclid(cells) + 1,
            Boundary::Open if (1..=cells).contains(&mirror) => mirror,
            Boundary::Open => continue,
        } as usize;
        let here = state.a_at(r as usize).abs();
        let there = match kind {
            CouplingKind::AB => state.b_at(mirror).abs(),
            _ => state.a_at(mirror).abs(),
        };
        worst = worst.max((here - there).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, ProbeConfig};
    use crate::spectral::solve;

    fn fig1(theta: f64) -> SshParams {
        SshParams::periodic(100, 1.0, 0.5, theta).unwrap()
    }

    /// Lattice Green's function summed by brute force over the k-grid.
    fn ring_green_bruteforce(x: f64, r: i64, cells: usize) -> f64 {
        (0..cells)
            .map(|j| {
                let k = grid_momentum(j, cells);
                (k * r as f64).cos() / (x - 2.0 * k.cos())
            })
            .sum::<f64>()
            / cells as f64
    }

    #[test]
    fn dispersion_examples() {
        let (t1, t2) = (1.3, 0.4);
        assert!((dispersion(0.0, t1, t2) - 1.7).abs() < 1e-15);
        assert!((dispersion(PI, t1, t2) - 0.9).abs() < 1e-15);
        assert!((dispersion(PI / 2.0, t1, t2) - (t1 * t1 + t2 * t2).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn winding_examples() {
        assert_eq!(winding_number(1.5, 0.5, 400).unwrap().winding, Some(0));
        assert_eq!(winding_number(0.5955, 1.4045, 400).unwrap().winding, Some(1));
        let closed = winding_number(1.0, 1.0, 400).unwrap();
        assert_eq!(closed.winding, None);
        assert!(closed.min_gap < 1e-9);
        assert!(winding_number(1.0, 0.5, 50).is_err());
    }

    #[test]
    fn ring_kernel_matches_bruteforce() {
        for (e, hop) in [(2.3, Hoppings::new(0.6, 1.4)), (0.1, Hoppings::new(1.35, 0.65))] {
            let c = AmplitudeContext::new(e, hop, 1.0).unwrap();
            for r in [-3i64, 0, 1, 7, 55, 99] {
                let brute = ring_green_bruteforce(c.x, r, 100);
                let closed = c.kernel(r, 100, Boundary::Periodic) / c.denom;
                assert!((brute - closed).abs() < 1e-12, "r={r}: {brute} vs {closed}");
            }
        }
    }

    #[test]
    fn context_identities() {
        for e in [2.5, -2.4, 0.05, -0.3] {
            let c = AmplitudeContext::new(e, Hoppings::new(1.3, 0.7), 1.0).unwrap();
            assert!(c.a.abs() < 1.0);
            assert!((c.a + 1.0 / c.a - c.x).abs() < 1e-12);
            assert!((c.a * (1.0 / c.a) - 1.0).abs() < 1e-12);
        }
        assert!(AmplitudeContext::new(1.0, Hoppings::new(1.0, 0.5), 1.0).is_err());
    }

    #[test]
    fn aa_residual_odd_and_zero_at_origin() {
        let atom = AtomCoupling::aa(50, 53, 1.0).unwrap();
        let p = fig1(0.3 * PI);
        assert_eq!(self_consistency_aa(0.0, &p, &atom).unwrap(), 0.0);
        for e in [0.01, 0.2, 0.4, 2.2, 2.9, 3.7] {
            let plus = self_consistency_aa(e, &p, &atom).unwrap();
            let minus = self_consistency_aa(-e, &p, &atom).unwrap();
            assert!((plus + minus).abs() < 1e-12 * (1.0 + plus.abs()));
        }
    }

    #[test]
    fn ab_zero_root_only_when_nontrivial() {
        let atom = AtomCoupling::ab(50, 51, 1.0).unwrap();
        let top = fig1(0.8 * PI);
        assert!(self_consistency_ab(0.0, &top, &atom).unwrap().abs() < 1e-12);
        let triv = fig1(0.2 * PI);
        assert!(self_consistency_ab(0.0, &triv, &atom).unwrap().abs() > 1e-3);
    }

    #[test]
    fn pole_is_reported() {
        let atom = AtomCoupling::aa(50, 51, 1.0).unwrap();
        let p = fig1(0.0);
        let w = dispersion(grid_momentum(3, 100), 1.5, 0.5);
        match self_consistency_aa(w, &p, &atom) {
            Err(AnalyticError::Pole { j, .. }) => assert!(j == 3 || j == 97),
            other => panic!("expected pole, got {other:?}"),
        }
    }

    #[test]
    fn discrete_residual_matches_ring_closed_form() {
        // E - 2g² Σ_s,s' G(s - s') written with the ring Green's function
        let cases = [
            (AtomCoupling::aa(50, 53, 0.7).unwrap(), 2.4),
            (AtomCoupling::ab(50, 52, 1.0).unwrap(), 0.05),
            (AtomCoupling::ab(50, 55, 1.0).unwrap(), -2.3),
        ];
        for (atom, e) in cases {
            let p = SshParams::periodic(100, 1.0, 0.5, 0.2 * PI).unwrap();
            let hop = p.hoppings();
            let c = AmplitudeContext::new(e, hop, atom.g).unwrap();
            let d = atom.size() as i64;
            let g_of = |r: i64| ring_green_bruteforce(c.x, r, 100) / (hop.t1 * hop.t2);
            let expected = match atom.kind {
                CouplingKind::AA => e - 2.0 * atom.g * atom.g * e * (g_of(0) + g_of(d)),
                _ => {
                    e - 2.0
                        * atom.g
                        * atom.g
                        * (e * g_of(0) + hop.t1 * g_of(d) + hop.t2 * g_of(d + 1))
                }
            };
            let got = self_consistency(e, &p, &atom).unwrap();
            assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        }
    }

    #[test]
    fn continuum_residual_matches_green_function() {
        let p = SshParams::periodic(100, 1.0, 0.5, 0.8 * PI).unwrap();
        let hop = p.hoppings();
        for (atom, e) in [
            (AtomCoupling::aa(50, 55, 1.0).unwrap(), 2.3),
            (AtomCoupling::ab(50, 55, 1.0).unwrap(), -2.25),
        ] {
            let c = AmplitudeContext::new(e, hop, atom.g).unwrap();
            let d = atom.size() as i32;
            let inf = |r: i32| c.a.powi(r) / c.denom / (hop.t1 * hop.t2);
            let closed = match atom.kind {
                CouplingKind::AA => e - 2.0 * atom.g * atom.g * e * (inf(0) + inf(d)),
                _ => e - 2.0 * atom.g * atom.g * (e * inf(0) + hop.t1 * inf(d) + hop.t2 * inf(d + 1)),
            };
            let quad = self_consistency_continuum(e, &p, &atom).unwrap();
            assert!((quad - closed).abs() < 1e-10, "{quad} vs {closed}");
        }
    }

    #[test]
    fn aa_roots_symmetric_and_include_zero() {
        let atom = AtomCoupling::aa(50, 51, 1.0).unwrap();
        for th in [0.2, 0.8, 1.3] {
            let p = fig1(th * PI);
            let r = eigen_roots(&p, &atom).unwrap();
            assert!(r.roots.iter().any(|x| x.abs() < 1e-12));
            assert!(r.max_residual() <= 1e-10);
            for (a, b) in r.roots.iter().zip(r.roots.iter().rev()) {
                assert!((a + b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn roots_match_exact_diagonalization() {
        for atom in [AtomCoupling::aa(50, 51, 1.0).unwrap(), AtomCoupling::ab(50, 53, 1.0).unwrap()] {
            for th in [0.25, 0.8] {
                let p = fig1(th * PI);
                let s = solve(&p, &atom).unwrap();
                let r = eigen_roots(&p, &atom).unwrap();
                assert!(!r.roots.is_empty());
                for root in &r.roots {
                    let e = s.energies[s.nearest(*root)];
                    assert!((e - root).abs() < 1e-8, "{root} vs {e}");
                }
            }
        }
    }

    #[test]
    fn ab_same_cell_has_no_lower_bound_root() {
        let atom = AtomCoupling::ab(50, 50, 1.0).unwrap();
        let p = fig1(0.25 * PI);
        let hop = p.hoppings();
        let r = eigen_roots(&p, &atom).unwrap();
        assert!(r.in_range(f64::NEG_INFINITY, -hop.band_top()).is_empty());
        assert_eq!(r.in_range(hop.band_top(), f64::INFINITY).len(), 1);
    }

    #[test]
    fn ab_gap_root_shrinks_with_size() {
        let energy = |d: usize| {
            let atom = AtomCoupling::ab(50, 50 + d, 1.0).unwrap();
            let p = fig1(0.25 * PI);
            let gap = p.hoppings().gap_edge();
            let r = eigen_roots(&p, &atom).unwrap().in_range(-gap, gap);
            assert_eq!(r.len(), 1, "d = {d}: {r:?}");
            r[0]
        };
        let (e3, e5) = (energy(3), energy(5));
        assert!(e3 > 0.0 && e5 > 0.0);
        assert!(e5 < e3);
        assert!(energy(2) < 0.0);
    }

    #[test]
    fn discrete_root_converges_to_continuum() {
        // weak coupling keeps the bound state close to the band edge, so the
        // finite-ring correction a^L is visible at L = 100
        let atom = AtomCoupling::aa(20, 23, 0.2).unwrap();
        let root_for = |cells: usize| {
            let p = SshParams::periodic(cells, 1.0, 0.1, 0.3 * PI).unwrap();
            let top = p.hoppings().band_top();
            eigen_roots(&p, &atom).unwrap().in_range(top, f64::INFINITY)[0]
        };
        let p = SshParams::periodic(100, 1.0, 0.1, 0.3 * PI).unwrap();
        let top = p.hoppings().band_top();
        let cont = find_roots_sampled(
            |e| self_consistency_continuum(e, &p, &atom),
            &[(top + 1e-5, top + 1.0)],
            1e-12,
            20,
        )
        .unwrap()
        .roots[0];
        let (r100, r400) = (root_for(100), root_for(400));
        assert!((r100 - cont).abs() > 1e-12, "L=100 already converged");
        assert!((r400 - cont).abs() < (r100 - cont).abs());
    }

    fn overlay(state: &SingleExcitationState, s: &crate::spectral::SpectrumResult, i: usize) -> f64 {
        let exact = s.distribution(i).normalized();
        state.max_abs_diff(&exact)
    }

    #[test]
    fn aa_bound_profiles_match_eigenvectors() {
        let atom = AtomCoupling::aa(50, 55, 1.0).unwrap();
        let p = fig1(0.8 * PI);
        let s = solve(&p, &atom).unwrap();
        for i in [0, s.dim() - 1] {
            let prof = amplitudes_aa(s.energies[i], &p, &atom).unwrap();
            assert!(overlay(&prof, &s, i) < 1e-6);
            assert!(symmetry_check(&prof, CouplingKind::AA, 50, 55, Boundary::Periodic) < 1e-12);
            assert!((prof.total_probability() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ab_bound_profiles_match_eigenvectors() {
        let atom = AtomCoupling::ab(50, 55, 1.0).unwrap();
        let p = fig1(0.8 * PI);
        let s = solve(&p, &atom).unwrap();
        for i in [0, s.dim() - 1] {
            let prof = amplitudes_ab(s.energies[i], &p, &atom).unwrap();
            assert!(overlay(&prof, &s, i) < 1e-6);
            assert!(symmetry_check(&prof, CouplingKind::AB, 50, 55, Boundary::Periodic) < 1e-12);
        }
    }

    #[test]
    fn bulk_energy_is_out_of_domain() {
        let atom = AtomCoupling::aa(50, 55, 1.0).unwrap();
        let p = fig1(0.8 * PI);
        assert!(matches!(
            amplitudes_aa(1.0, &p, &atom),
            Err(AnalyticError::Domain { .. })
        ));
        let ab = AtomCoupling::ab(50, 55, 1.0).unwrap();
        assert!(matches!(amplitudes_aa(2.5, &p, &ab), Err(AnalyticError::WrongKind { .. })));
    }

    #[test]
    fn aa_profile_tails_decay() {
        let atom = AtomCoupling::aa(50, 55, 1.0).unwrap();
        let p = fig1(0.8 * PI);
        let e = solve(&p, &atom).unwrap().energies[200];
        let prof = amplitudes_aa(e, &p, &atom).unwrap();
        for l in 30..49 {
            assert!(prof.a_at(l).abs() < prof.a_at(l + 1).abs());
        }
    }

    #[test]
    fn zero_modes_match_eigenvectors() {
        for atom in [AtomCoupling::aa(50, 55, 1.0).unwrap(), AtomCoupling::ab(50, 55, 1.0).unwrap()] {
            let p = fig1(0.8 * PI);
            let s = solve(&p, &atom).unwrap();
            let z = s.zero_mode_index();
            let prof = match atom.kind {
                CouplingKind::AA => zero_mode_aa(&p, &atom).unwrap(),
                _ => zero_mode_ab(&p, &atom).unwrap(),
            };
            assert!(overlay(&prof, &s, z) < 1e-6);
        }
    }

    #[test]
    fn zero_mode_shapes() {
        let atom = AtomCoupling::aa(50, 55, 1.0).unwrap();
        let p = fig1(0.8 * PI);
        let tau = p.hoppings().t1 / p.hoppings().t2;
        let z = zero_mode_aa(&p, &atom).unwrap();
        for l in 50..54 {
            assert!((z.b_at(l) - (-tau) * z.b_at(l + 1)).abs() < 1e-15);
        }
        assert_eq!((55..=100).map(|l| z.b_at(l).powi(2)).sum::<f64>(), 0.0);
        assert_eq!(z.a_weight(), 0.0);

        let ab = AtomCoupling::ab(50, 55, 1.0).unwrap();
        let z = zero_mode_ab(&p, &ab).unwrap();
        for l in 50..=55 {
            assert_eq!((z.a_at(l), z.b_at(l)), (0.0, 0.0));
        }
        assert!(symmetry_check(&z, CouplingKind::AB, 50, 55, Boundary::Periodic) < 1e-12);

        let triv = fig1(0.2 * PI);
        assert!(matches!(zero_mode_aa(&triv, &atom), Err(AnalyticError::NoZeroMode { .. })));
        assert!(matches!(zero_mode_ab(&triv, &ab), Err(AnalyticError::NoZeroMode { .. })));
    }

    #[test]
    fn gap_state_profile_matches_eigenvector() {
        let p = fig1(0.25 * PI);
        let gap_level = |d: usize| {
            let atom = AtomCoupling::ab(50, 50 + d, 1.0).unwrap();
            let gap = p.hoppings().gap_edge();
            let e = eigen_roots(&p, &atom).unwrap().in_range(-gap, gap)[0];
            (e, amplitudes_ab(e, &p, &atom).unwrap())
        };
        let (e3, _) = gap_level(3);
        let (e9, prof9) = gap_level(9);
        assert!(e9.abs() < e3.abs());
        let s = solve(&p, &AtomCoupling::ab(50, 59, 1.0).unwrap()).unwrap();
        let i = s.nearest(e9);
        assert!(overlay(&prof9, &s, i) < 1e-6);
    }

    #[test]
    fn substitution_into_lattice_equations() {
        for (atom, th) in [
            (AtomCoupling::aa(40, 47, 0.8).unwrap(), 0.8),
            (AtomCoupling::ab(40, 47, 0.8).unwrap(), 1.2),
            (AtomCoupling::ab(40, 43, 1.0).unwrap(), 0.25),
        ] {
            let p = SshParams::periodic(100, 1.0, 0.5, th * PI).unwrap();
            let h = build_hamiltonian(&p, &atom, &ProbeConfig::disabled()).unwrap();
            for e in eigen_roots(&p, &atom).unwrap().roots {
                if e == 0.0 || e.abs() < 1e-12 {
                    continue;
                }
                let prof = match atom.kind {
                    CouplingKind::AA => amplitudes_aa(e, &p, &atom).unwrap(),
                    _ => amplitudes_ab(e, &p, &atom).unwrap(),
                };
                let v = prof.to_vector(&h.layout);
                let r = &h.matrix * &v - &v * e;
                for l in 1..=100usize {
                    let far = l.abs_diff(atom.n) > 2 && l.abs_diff(atom.m) > 2;
                    if far {
                        assert!(r[2 * (l - 1)].abs() < 1e-8 && r[2 * l - 1].abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn random_vector_is_asymmetric() {
        let state = SingleExcitationState {
            atom: 0.1,
            a: (0..100).map(|i| ((i * 37 % 101) as f64 / 101.0) - 0.5).collect(),
            b: (0..100).map(|i| ((i * 53 % 97) as f64 / 97.0) - 0.5).collect(),
            probe: None,
        }
        .normalized();
        assert!(symmetry_check(&state, CouplingKind::AA, 50, 55, Boundary::Periodic) > 0.01);
        assert!(symmetry_check(&state, CouplingKind::AB, 50, 55, Boundary::Periodic) > 0.01);
    }
}
