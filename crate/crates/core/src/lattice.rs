//! Real-space single-excitation Hamiltonian of an SSH waveguide with a
//! two-leg giant atom and an optional probe atom.
//!
//! The basis is laid out as `(A,1), (B,1), ..., (A,L), (B,L), atom, probe`.
//! Cell indices are 1-based throughout the public API.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("unknown basis label {0}")]
    UnknownLabel(BasisLabel),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

/// Intra-cell (`t1`) and inter-cell (`t2`) hopping strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hoppings {
    pub t1: f64,
    pub t2: f64,
}

impl Hoppings {
    pub fn new(t1: f64, t2: f64) -> Self {
        Self { t1, t2 }
    }

    /// Half-width of the gap around zero, `|t1 - t2|`.
    pub fn gap_edge(&self) -> f64 {
        (self.t1 - self.t2).abs()
    }

    /// Outer band edge, `t1 + t2`.
    pub fn band_top(&self) -> f64 {
        self.t1 + self.t2
    }

    /// `t2 > t1`: winding number one.
    pub fn is_nontrivial(&self) -> bool {
        self.t2 > self.t1
    }
}

/// `t1 = q(1 + δ cos θ)`, `t2 = q(1 - δ cos θ)`.
pub fn hopping_strengths(q: f64, delta: f64, theta: f64) -> (f64, f64) {
    let c = delta * theta.cos();
    (q * (1.0 + c), q * (1.0 - c))
}

/// Waveguide geometry and dimerization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SshParams {
    pub cells: usize,
    pub q: f64,
    pub delta: f64,
    pub theta: f64,
    pub boundary: Boundary,
}

impl SshParams {
    pub fn new(
        cells: usize,
        q: f64,
        delta: f64,
        theta: f64,
        boundary: Boundary,
    ) -> Result<Self, ModelError> {
        let params = Self {
            cells,
            q,
            delta,
            theta,
            boundary,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn periodic(cells: usize, q: f64, delta: f64, theta: f64) -> Result<Self, ModelError> {
        Self::new(cells, q, delta, theta, Boundary::Periodic)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.cells < 2 {
            return Err(invalid("cells", format!("need at least 2 cells, got {}", self.cells)));
        }
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(invalid("q", format!("must be positive, got {}", self.q)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(invalid("delta", format!("must lie in [0, 1), got {}", self.delta)));
        }
        if !self.theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        Ok(())
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn hoppings(&self) -> Hoppings {
        let (t1, t2) = hopping_strengths(self.q, self.delta, self.theta);
        Hoppings { t1, t2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingKind {
    /// Both legs on A sites: `(A,n)` and `(A,m)`.
    #[serde(rename = "aa")]
    AA,
    /// Legs on `(A,n)` and `(B,m)`.
    #[serde(rename = "ab")]
    AB,
    /// No atom in the basis.
    #[serde(rename = "none")]
    None,
}

impl fmt::Display for CouplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingKind::AA => "aa",
            CouplingKind::AB => "ab",
            CouplingKind::None => "none",
        })
    }
}

/// Attachment of the giant atom. The atom frequency is the zero of energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomCoupling {
    pub kind: CouplingKind,
    pub n: usize,
    pub m: usize,
    pub g: f64,
}

impl AtomCoupling {
    pub fn new(kind: CouplingKind, n: usize, m: usize, g: f64) -> Result<Self, ModelError> {
        let atom = Self { kind, n, m, g };
        atom.validate()?;
        Ok(atom)
    }

    pub fn aa(n: usize, m: usize, g: f64) -> Result<Self, ModelError> {
        Self::new(CouplingKind::AA, n, m, g)
    }

    pub fn ab(n: usize, m: usize, g: f64) -> Result<Self, ModelError> {
        Self::new(CouplingKind::AB, n, m, g)
    }

    pub fn none() -> Self {
        Self {
            kind: CouplingKind::None,
            n: 1,
            m: 1,
            g: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(invalid("g", format!("must be non-negative, got {}", self.g)));
        }
        match self.kind {
            CouplingKind::AA if self.n >= self.m => Err(invalid(
                "m",
                format!("A-A coupling needs n < m, got n={} m={}", self.n, self.m),
            )),
            CouplingKind::AB if self.n > self.m => Err(invalid(
                "m",
                format!("A-B coupling needs n <= m, got n={} m={}", self.n, self.m),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_present(&self) -> bool {
        self.kind != CouplingKind::None
    }

    /// Atom size `|m - n|`.
    pub fn size(&self) -> usize {
        self.m.abs_diff(self.n)
    }

    /// The two photon sites the atom is attached to.
    pub fn legs(&self) -> Option<[BasisLabel; 2]> {
        match self.kind {
            CouplingKind::AA => Some([
                BasisLabel::Photon(Sublattice::A, self.n),
                BasisLabel::Photon(Sublattice::A, self.m),
            ]),
            CouplingKind::AB => Some([
                BasisLabel::Photon(Sublattice::A, self.n),
                BasisLabel::Photon(Sublattice::B, self.m),
            ]),
            CouplingKind::None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

impl fmt::Display for Sublattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sublattice::A => "A",
            Sublattice::B => "B",
        })
    }
}

/// Auxiliary single-site probe atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub enabled: bool,
    pub cell: usize,
    pub sublattice: Sublattice,
    pub gp: f64,
    pub frequency: f64,
}

impl ProbeConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            cell: 1,
            sublattice: Sublattice::B,
            gp: 0.0,
            frequency: 0.0,
        }
    }

    pub fn at(cell: usize, sublattice: Sublattice, gp: f64) -> Self {
        Self {
            enabled: true,
            cell,
            sublattice,
            gp,
            frequency: 0.0,
        }
    }

    pub fn site(&self) -> BasisLabel {
        BasisLabel::Photon(self.sublattice, self.cell)
    }
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self::disabled()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisLabel {
    Photon(Sublattice, usize),
    Atom,
    Probe,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Photon(s, l) => write!(f, "({s},{l})"),
            BasisLabel::Atom => f.write_str("atom"),
            BasisLabel::Probe => f.write_str("probe"),
        }
    }
}

/// Fixed basis ordering: A/B interleaved by cell, then the atom, then the probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub cells: usize,
    pub has_atom: bool,
    pub has_probe: bool,
}

impl Layout {
    pub fn new(cells: usize, has_atom: bool, has_probe: bool) -> Self {
        Self {
            cells,
            has_atom,
            has_probe,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.cells + usize::from(self.has_atom) + usize::from(self.has_probe)
    }

    pub fn photon_dim(&self) -> usize {
        2 * self.cells
    }

    pub fn site_index(&self, label: BasisLabel) -> Result<usize, ModelError> {
        match label {
            BasisLabel::Photon(s, l) if (1..=self.cells).contains(&l) => {
                Ok(2 * (l - 1) + usize::from(s == Sublattice::B))
            }
            BasisLabel::Atom if self.has_atom => Ok(2 * self.cells),
            BasisLabel::Probe if self.has_probe => Ok(2 * self.cells + usize::from(self.has_atom)),
            _ => Err(ModelError::UnknownLabel(label)),
        }
    }

    pub fn label(&self, index: usize) -> Option<BasisLabel> {
        let photons = 2 * self.cells;
        if index < photons {
            let s = if index % 2 == 0 { Sublattice::A } else { Sublattice::B };
            return Some(BasisLabel::Photon(s, index / 2 + 1));
        }
        match (index - photons, self.has_atom, self.has_probe) {
            (0, true, _) => Some(BasisLabel::Atom),
            (0, false, true) | (1, true, true) => Some(BasisLabel::Probe),
            _ => None,
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.dim()).filter_map(|i| self.label(i))
    }
}

/// Free-standing form of [`Layout::site_index`].
pub fn site_index(label: BasisLabel, layout: &Layout) -> Result<usize, ModelError> {
    layout.site_index(label)
}

/// Dense real symmetric Hamiltonian together with its basis layout.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub matrix: DMatrix<f64>,
    pub layout: Layout,
    pub params: SshParams,
    pub atom: AtomCoupling,
    pub probe: ProbeConfig,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hoppings(&self) -> Hoppings {
        self.params.hoppings()
    }

    pub fn entry(&self, a: BasisLabel, b: BasisLabel) -> Result<f64, ModelError> {
        let i = self.layout.site_index(a)?;
        let j = self.layout.site_index(b)?;
        Ok(self.matrix[(i, j)])
    }

    pub fn is_symmetric(&self) -> bool {
        is_exactly_symmetric(&self.matrix)
    }

    /// Index pairs `(i, j)`, `i < j`, of nonzero off-diagonal entries.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.dim();
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..j {
                if self.matrix[(i, j)] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// True when every nonzero off-diagonal entry connects a site in `x` to
    /// a site outside it.
    pub fn respects_partition(&self, in_x: impl Fn(BasisLabel) -> bool) -> bool {
        let side: Vec<bool> = (0..self.dim())
            .map(|i| in_x(self.layout.label(i).expect("index within layout")))
            .collect();
        self.edges().into_iter().all(|(i, j)| side[i] != side[j])
    }

    /// Two-colourability of the coupling graph.
    pub fn is_bipartite(&self) -> bool {
        let n = self.dim();
        let mut adj = vec![Vec::new(); n];
        for (i, j) in self.edges() {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut colour: Vec<Option<bool>> = vec![None; n];
        let mut stack = Vec::new();
        for start in 0..n {
            if colour[start].is_some() {
                continue;
            }
            colour[start] = Some(false);
            stack.push(start);
            while let Some(u) = stack.pop() {
                let cu = colour[u].unwrap();
                for &v in &adj[u] {
                    match colour[v] {
                        None => {
                            colour[v] = Some(!cu);
                            stack.push(v);
                        }
                        Some(cv) if cv == cu => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }
}

pub(crate) fn is_exactly_symmetric(m: &DMatrix<f64>) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let n = m.nrows();
    (0..n).all(|j| (0..j).all(|i| m[(i, j)] == m[(j, i)]))
}

fn check_cell(field: &'static str, cell: usize, cells: usize) -> Result<(), ModelError> {
    if (1..=cells).contains(&cell) {
        Ok(())
    } else {
        Err(invalid(field, format!("cell {cell} outside [1, {cells}]")))
    }
}

/// Assembles the single-excitation Hamiltonian.
///
/// Hoppings: `t1` on `(A,l)-(B,l)`, `t2` on `(B,l)-(A,l+1)`, plus the
/// `(B,L)-(A,1)` bond under periodic boundary. The atom row carries `g` on
/// its two legs and the probe row carries `gp` on its site.
pub fn build_hamiltonian(
    params: &SshParams,
    atom: &AtomCoupling,
    probe: &ProbeConfig,
) -> Result<HamiltonianMatrix, ModelError> {
    params.validate()?;
    atom.validate()?;
    let cells = params.cells;
    if atom.is_present() {
        check_cell("n", atom.n, cells)?;
        check_cell("m", atom.m, cells)?;
    }
    if probe.enabled {
        check_cell("probe_cell", probe.cell, cells)?;
        if !(probe.gp.is_finite() && probe.gp >= 0.0) {
            return Err(invalid("probe_gp", format!("must be non-negative, got {}", probe.gp)));
        }
    }

    let layout = Layout::new(cells, atom.is_present(), probe.enabled);
    let mut h = DMatrix::<f64>::zeros(layout.dim(), layout.dim());
    let Hoppings { t1, t2 } = params.hoppings();

    let mut couple = |a: usize, b: usize, v: f64| {
        h[(a, b)] += v;
        h[(b, a)] += v;
    };

    for l in 0..cells {
        let a = 2 * l;
        let b = a + 1;
        couple(a, b, t1);
        if l + 1 < cells {
            couple(b, a + 2, t2);
        } else if params.boundary == Boundary::Periodic {
            couple(b, 0, t2);
        }
    }

    if let Some(legs) = atom.legs() {
        let e = layout.site_index(BasisLabel::Atom)?;
        for leg in legs {
            couple(e, layout.site_index(leg)?, atom.g);
        }
    }

    if probe.enabled {
        let p = layout.site_index(BasisLabel::Probe)?;
        couple(p, layout.site_index(probe.site())?, probe.gp);
        h[(p, p)] = probe.frequency;
    }

    Ok(HamiltonianMatrix {
        matrix: h,
        layout,
        params: *params,
        atom: *atom,
        probe: *probe,
    })
}
