//! Symplectic and covariance forms of a Bogoliubov transform, the graph
//! `Z = V_g + i U_g` of the resulting pure state, and edge classification.
//!
//! Quadratures are `x = a + a†`, `p = -i(a - a†)`, so the vacuum covariance
//! is the identity. Phase-space ordering is `(x₁..x_n, p₁..p_n)`.

use std::fmt::Write as _;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ModeIndexMap;
use crate::linalg::{asymmetry, max_abs_real, max_diff_real, CMatrix, RMatrix, I};
use crate::propagate::BogoliubovTransform;

/// Default relative edge threshold.
pub const DEFAULT_EDGE_EPSILON: f64 = 0.05;

/// Largest condition number accepted when inverting `A + iB`.
pub const MAX_CONDITION: f64 = 1e12;

/// `Ω_s = [[0, I], [-I, 0]]`.
pub fn symplectic_form(n: usize) -> RMatrix {
    let mut w = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        w[(i, i + n)] = 1.0;
        w[(i + n, i)] = -1.0;
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    pub s: RMatrix,
}

impl SymplecticMatrix {
    pub fn modes(&self) -> usize {
        self.s.nrows() / 2
    }

    /// `(A, B, C, D)` with `x' = A x + B p`, `p' = C x + D p`.
    pub fn blocks(&self) -> (RMatrix, RMatrix, RMatrix, RMatrix) {
        let n = self.modes();
        (
            self.s.view((0, 0), (n, n)).clone_owned(),
            self.s.view((0, n), (n, n)).clone_owned(),
            self.s.view((n, 0), (n, n)).clone_owned(),
            self.s.view((n, n), (n, n)).clone_owned(),
        )
    }

    /// `max |S Ω Sᵀ - Ω|`.
    pub fn residual(&self) -> f64 {
        let w = symplectic_form(self.modes());
        max_diff_real(&(&self.s * &w * self.s.transpose()), &w)
    }
}

pub fn to_symplectic(bog: &BogoliubovTransform) -> Result<SymplecticMatrix> {
    let n = bog.dim();
    let (ur, ui) = (bog.u.map(|z| z.re), bog.u.map(|z| z.im));
    let (vr, vi) = (bog.v.map(|z| z.re), bog.v.map(|z| z.im));
    let mut s = RMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(&(&ur + &vr));
    s.view_mut((0, n), (n, n)).copy_from(&(&vi - &ui));
    s.view_mut((n, 0), (n, n)).copy_from(&(&ui + &vi));
    s.view_mut((n, n), (n, n)).copy_from(&(&ur - &vr));
    let out = SymplecticMatrix { s };
    let res = out.residual();
    let scale = max_abs_real(&out.s).powi(2).max(1.0);
    if res > 1e-8 * scale {
        return Err(Error::Inconsistent(format!(
            "symplectic condition violated by {res:e}"
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub sigma: RMatrix,
}

impl CovarianceMatrix {
    pub fn modes(&self) -> usize {
        self.sigma.nrows() / 2
    }

    /// Williamson spectrum, ascending, from the Hermitian matrix
    /// `σ^{1/2} (iΩ) σ^{1/2}` whose eigenvalues are `±ν_k`.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.modes();
        let eig = SymmetricEigen::new(self.sigma.clone());
        if eig.eigenvalues.iter().any(|v| *v <= 0.0) {
            return Err(Error::Numerical("covariance matrix is not positive definite".into()));
        }
        let sqrt = &eig.eigenvectors
            * RMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let sq = sqrt.map(|x| Complex64::new(x, 0.0));
        let w = symplectic_form(n).map(|x| Complex64::new(x, 0.0)) * I;
        let h = &sq * w * &sq;
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let mut vals: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        let mut nu: Vec<f64> = vals.into_iter().take(n).collect();
        nu.sort_by(f64::total_cmp);
        Ok(nu)
    }

    pub fn determinant(&self) -> f64 {
        self.sigma.clone().determinant()
    }
}

/// `σ = S Sᵀ`.
pub fn covariance(s: &SymplecticMatrix) -> CovarianceMatrix {
    CovarianceMatrix {
        sigma: &s.s * s.s.transpose(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub z: CMatrix,
    /// Condition number of `A + iB`.
    pub condition: f64,
}

impl GraphState {
    /// `V_g = Re Z`, the canonical graph.
    pub fn adjacency(&self) -> RMatrix {
        self.z.map(|x| x.re)
    }

    /// `U_g = Im Z`.
    pub fn imaginary(&self) -> RMatrix {
        self.z.map(|x| x.im)
    }

    pub fn trace_u(&self) -> f64 {
        self.z.diagonal().iter().map(|x| x.im).sum()
    }

    /// Covariance rebuilt from `Z`: `σ_xx = U⁻¹`, `σ_xp = U⁻¹V`,
    /// `σ_pp = U + V U⁻¹ V`.
    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        let n = self.z.nrows();
        let (v, u) = (self.adjacency(), self.imaginary());
        let u_inv = u
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("Im Z is singular".into()))?;
        let xp = &u_inv * &v;
        let pp = &u + &v * &xp;
        let mut sigma = RMatrix::zeros(2 * n, 2 * n);
        sigma.view_mut((0, 0), (n, n)).copy_from(&u_inv);
        sigma.view_mut((0, n), (n, n)).copy_from(&xp);
        sigma.view_mut((n, 0), (n, n)).copy_from(&xp.transpose());
        sigma.view_mut((n, n), (n, n)).copy_from(&pp);
        Ok(CovarianceMatrix { sigma })
    }
}

/// `Z = (C + iD)(A + iB)⁻¹`.
pub fn graph_z(s: &SymplecticMatrix) -> Result<GraphState> {
    let (a, b, c, d) = s.blocks();
    let den = CMatrix::from_fn(a.nrows(), a.ncols(), |r, k| Complex64::new(a[(r, k)], b[(r, k)]));
    let num = CMatrix::from_fn(c.nrows(), c.ncols(), |r, k| Complex64::new(c[(r, k)], d[(r, k)]));
    let sv = den.clone().singular_values();
    let (hi, lo) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(h, l), x| (h.max(*x), l.min(*x)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::Numerical(format!(
            "A + iB is ill-conditioned (condition number {condition:e})"
        )));
    }
    let inv = den
        .try_inverse()
        .ok_or_else(|| Error::Numerical("A + iB is singular".into()))?;
    let z = num * inv;
    let scale = z.iter().fold(1.0f64, |m, x| m.max(x.norm()));
    let asym = asymmetry(&z);
    if asym > 1e-8 * scale {
        return Err(Error::Inconsistent(format!("graph matrix is not symmetric ({asym:e})")));
    }
    Ok(GraphState { z, condition })
}

/// Applies `a → e^{iθ} a` on `modes` after the transform.
pub fn idler_rotation(bog: &BogoliubovTransform, modes: &[usize], theta: f64) -> Result<BogoliubovTransform> {
    let phase = Complex64::from_polar(1.0, theta);
    let mut out = bog.clone();
    for &m in modes {
        if m >= bog.dim() {
            return Err(Error::Contract(format!("mode {m} out of range for dimension {}", bog.dim())));
        }
        for c in 0..bog.dim() {
            out.u[(m, c)] *= phase;
            out.v[(m, c)] *= phase;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Same waveguide, mirror bands.
    Spectral,
    /// Same band, adjacent waveguides.
    Spatial,
    SpatioSpectral,
}

impl EdgeKind {
    pub fn label(self) -> &'static str {
        match self {
            EdgeKind::Spectral => "spectral",
            EdgeKind::Spatial => "spatial",
            EdgeKind::SpatioSpectral => "spatio-spectral",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Two rows of `n` modes joined rung by rung.
    Grid2xN(usize),
    Linear(usize),
    Other,
}

impl Topology {
    pub fn label(self) -> String {
        match self {
            Topology::Grid2xN(n) => format!("grid_2x{n}"),
            Topology::Linear(_) => "linear".into(),
            Topology::Other => "other".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub edges: Vec<Edge>,
    pub topology: Topology,
    pub trace_u: f64,
    /// Absolute threshold used, `ε · max|V_g|`.
    pub threshold: f64,
    /// Largest `|V_g|` among entries not listed as edges (diagonal included).
    pub suppressed_max: f64,
    /// Largest `|V_g|` outside the spectral and spatial pattern (diagonal included).
    pub off_pattern_max: f64,
}

impl EdgeReport {
    pub fn weights(&self, kind: EdgeKind) -> impl Iterator<Item = f64> + '_ {
        self.edges.iter().filter(move |e| e.kind == kind).map(|e| e.weight.abs())
    }

    pub fn mean_weight(&self, kind: EdgeKind) -> Option<f64> {
        let w: Vec<f64> = self.weights(kind).collect();
        (!w.is_empty()).then(|| w.iter().sum::<f64>() / w.len() as f64)
    }

    pub fn max_weight(&self, kind: EdgeKind) -> Option<f64> {
        self.weights(kind).reduce(f64::max)
    }

    /// One `u v weight label` row per edge.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {} {}", e.u, e.v, e.weight, e.kind.label());
        }
        out
    }

    /// Human-readable summary block.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "topology: {}", self.topology.label());
        let _ = writeln!(out, "edges: {}", self.edges.len());
        let _ = writeln!(out, "trace_U: {}", self.trace_u);
        let _ = writeln!(out, "threshold: {}", self.threshold);
        let _ = writeln!(out, "suppressed_max: {}", self.suppressed_max);
        let _ = writeln!(out, "off_pattern_max: {}", self.off_pattern_max);
        for kind in [EdgeKind::Spectral, EdgeKind::Spatial, EdgeKind::SpatioSpectral] {
            if let Some(m) = self.mean_weight(kind) {
                let _ = writeln!(out, "mean_{}: {}", kind.label(), m);
            }
        }
        out
    }
}

fn kind_of(map: &ModeIndexMap, a: usize, b: usize) -> EdgeKind {
    let ((ja, la), (jb, lb)) = (map.split(a), map.split(b));
    if ja == jb && la != lb && lb == map.mirror_band(la) {
        EdgeKind::Spectral
    } else if la == lb && ja.abs_diff(jb) == 1 {
        EdgeKind::Spatial
    } else {
        EdgeKind::SpatioSpectral
    }
}

/// Edges are the entries of `V_g` above `ε · max|V_g|`.
pub fn classify_edges(graph: &GraphState, map: &ModeIndexMap, epsilon: f64) -> Result<EdgeReport> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::config("graph.epsilon", format!("must be positive, got {epsilon}")));
    }
    let v = graph.adjacency();
    let dim = v.nrows();
    if dim != map.total() {
        return Err(Error::Contract(format!(
            "graph has {dim} modes, index map expects {}",
            map.total()
        )));
    }
    let threshold = epsilon * max_abs_real(&v);
    let mut edges = Vec::new();
    let mut suppressed_max: f64 = 0.0;
    let mut off_pattern_max: f64 = 0.0;
    for a in 0..dim {
        for b in a..dim {
            let w = v[(a, b)];
            let kind = (a != b).then(|| kind_of(map, a, b));
            if kind.is_none() || kind == Some(EdgeKind::SpatioSpectral) {
                off_pattern_max = off_pattern_max.max(w.abs());
            }
            match kind {
                Some(kind) if threshold > 0.0 && w.abs() > threshold => edges.push(Edge { u: a, v: b, weight: w, kind }),
                _ => suppressed_max = suppressed_max.max(w.abs()),
            }
        }
    }
    let topology = topology_of(map, &edges);
    Ok(EdgeReport {
        edges,
        topology,
        trace_u: graph.trace_u(),
        threshold,
        suppressed_max,
        off_pattern_max,
    })
}

fn topology_of(map: &ModeIndexMap, edges: &[Edge]) -> Topology {
    let mut got: Vec<(usize, usize)> = edges.iter().map(|e| (e.u, e.v)).collect();
    got.sort_unstable();
    let n = map.n;
    if map.bands == 2 {
        let mut want = Vec::new();
        for j in 0..n {
            want.push((map.index(j, 0), map.index(j, 1)));
            if j + 1 < n {
                want.push((map.index(j, 0), map.index(j + 1, 0)));
                want.push((map.index(j, 1), map.index(j + 1, 1)));
            }
        }
        want.sort_unstable();
        if want == got {
            return Topology::Grid2xN(n);
        }
    }
    if map.bands == 1 && n >= 2 {
        let want: Vec<(usize, usize)> = (0..n - 1).map(|j| (j, j + 1)).collect();
        if want == got {
            return Topology::Linear(n);
        }
    }
    Topology::Other
}
