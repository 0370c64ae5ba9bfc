//! Waveguide-array coupling operator, its linear supermodes, and the
//! spatio-spectral block index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{block_diagonal, RMatrix};

/// Geometry of an array of `n` identical evanescently coupled waveguides.
///
/// `profile[j]` weights the bond between guides `j` and `j + 1` (0-based);
/// the outer boundary bonds are implicitly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    n: usize,
    coupling: f64,
    profile: Vec<f64>,
}

impl LatticeSpec {
    pub fn new(n: usize, coupling: f64, profile: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("lattice.n", "waveguide count must be at least 1"));
        }
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::config(
                "lattice.coupling",
                format!("coupling strength must be positive, got {coupling}"),
            ));
        }
        if profile.len() != n - 1 {
            return Err(Error::config(
                "lattice.profile",
                format!(
                    "profile must have N-1 = {} entries, got {}",
                    n - 1,
                    profile.len()
                ),
            ));
        }
        if let Some((j, f)) = profile
            .iter()
            .enumerate()
            .find(|(_, f)| !(f.is_finite() && **f > 0.0 && **f <= 1.0))
        {
            return Err(Error::config(
                "lattice.profile",
                format!("entry {j} = {f} is outside (0, 1]"),
            ));
        }
        Ok(Self {
            n,
            coupling,
            profile,
        })
    }

    /// Uniform array: every bond has weight 1.
    pub fn homogeneous(n: usize, coupling: f64) -> Result<Self> {
        Self::new(n, coupling, vec![1.0; n.saturating_sub(1)])
    }

    /// Glauber–Fock array, bond weights `sqrt(j / (n - 1))` for `j = 1..n-1`.
    pub fn glauber_fock(n: usize, coupling: f64) -> Result<Self> {
        Self::new(n, coupling, glauber_fock_profile(n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }
}

pub fn glauber_fock_profile(n: usize) -> Vec<f64> {
    if n < 2 {
        return Vec::new();
    }
    (1..n).map(|j| (j as f64 / (n - 1) as f64).sqrt()).collect()
}

/// Zero-diagonal tridiagonal coupling matrix, entries `C_M f_j` on the first
/// off-diagonals.
pub fn build_coupling_matrix(spec: &LatticeSpec) -> RMatrix {
    let n = spec.n;
    let mut c = RMatrix::zeros(n, n);
    for (j, f) in spec.profile.iter().enumerate() {
        let v = spec.coupling * f;
        c[(j, j + 1)] = v;
        c[(j + 1, j)] = v;
    }
    c
}

/// Orthogonal eigenbasis of the coupling matrix.
///
/// Row `k` of `m` is supermode `k`; `lambda[k]` is its propagation constant.
/// Rows are sorted by descending eigenvalue and each row's first non-negligible
/// component is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupermodeBasis {
    pub m: RMatrix,
    pub lambda: Vec<f64>,
}

impl SupermodeBasis {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// `max |M Mᵀ - I|`.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.n();
        let g = &self.m * self.m.transpose();
        crate::linalg::max_diff_real(&g, &RMatrix::identity(n, n))
    }

    /// `max |Mᵀ diag(λ) M - C|` against a given coupling matrix.
    pub fn reconstruction_residual(&self, coupling: &RMatrix) -> f64 {
        let d = RMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.lambda));
        let rec = self.m.transpose() * d * &self.m;
        crate::linalg::max_diff_real(&rec, coupling)
    }

    pub fn max_abs_lambda(&self) -> f64 {
        self.lambda.iter().fold(0.0, |a, l| a.max(l.abs()))
    }
}

pub fn diagonalize_lattice(spec: &LatticeSpec) -> SupermodeBasis {
    let n = spec.n;
    let diag = vec![0.0; n];
    let off: Vec<f64> = spec.profile.iter().map(|f| spec.coupling * f).collect();
    let (values, vectors) = tridiagonal_eigen(&diag, &off);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let lambda: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut m = RMatrix::zeros(n, n);
    for (row, &col) in order.iter().enumerate() {
        for j in 0..n {
            m[(row, j)] = vectors[(j, col)];
        }
    }

    let scale = lambda.iter().fold(0.0_f64, |a, l| a.max(l.abs())).max(f64::MIN_POSITIVE);
    orthonormalize_degenerate(&mut m, &lambda, 1e-12 * scale);
    fix_signs(&mut m);

    SupermodeBasis { m, lambda }
}

/// Modified Gram–Schmidt within clusters of (numerically) equal eigenvalues,
/// in row order.
fn orthonormalize_degenerate(m: &mut RMatrix, lambda: &[f64], tol: f64) {
    let n = lambda.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (lambda[end - 1] - lambda[end]).abs() <= tol {
            end += 1;
        }
        if end - start > 1 {
            for r in start..end {
                for q in start..r {
                    let dot: f64 = (0..n).map(|j| m[(r, j)] * m[(q, j)]).sum();
                    for j in 0..n {
                        m[(r, j)] -= dot * m[(q, j)];
                    }
                }
                let norm = m.row(r).norm();
                m.row_mut(r).scale_mut(1.0 / norm);
            }
        }
        start = end;
    }
}

fn fix_signs(m: &mut RMatrix) {
    let n = m.ncols();
    for r in 0..m.nrows() {
        let row_max = m.row(r).amax();
        let first = (0..n).find(|&j| m[(r, j)].abs() > 1e-10 * row_max);
        if let Some(j) = first {
            if m[(r, j)] < 0.0 {
                m.row_mut(r).neg_mut();
            }
        }
    }
}

/// Implicit-shift QL iteration for a real symmetric tridiagonal matrix.
///
/// `diag` has length `n`, `off` length `n - 1`. Returns eigenvalues (unsorted)
/// and a matrix whose columns are the matching orthonormal eigenvectors.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, RMatrix) {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1), "tridiagonal_eigen: bad off-diagonal length");
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(off);
    let mut v = RMatrix::identity(n, n);

    let eps = f64::EPSILON;
    let mut shift = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                shift += h;

                p = d[m];
                let mut cs = 1.0;
                let mut c2 = cs;
                let mut c3 = cs;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = cs;
                    s2 = s;
                    g = cs * e[i];
                    h = cs * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    cs = p / r;
                    p = cs * d[i] - s * g;
                    d[i + 1] = h + s * (cs * g + s * d[i]);
                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + cs * h;
                        v[(k, i)] = cs * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = cs * p;
                if e[l].abs() <= eps * tst1 || iter >= 200 {
                    break;
                }
            }
        }
        d[l] += shift;
        e[l] = 0.0;
    }
    (d, v)
}

/// Bijection between `(waveguide j, band l)` and the flat spatio-spectral
/// index `j + l N` (all 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeIndexMap {
    pub n: usize,
    pub bands: usize,
}

impl ModeIndexMap {
    pub fn new(n: usize, bands: usize) -> Self {
        assert!(n >= 1 && bands >= 1, "ModeIndexMap needs n, bands >= 1");
        Self { n, bands }
    }

    pub fn total(&self) -> usize {
        self.n * self.bands
    }

    pub fn index(&self, j: usize, band: usize) -> usize {
        debug_assert!(j < self.n && band < self.bands);
        j + band * self.n
    }

    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    /// Band paired with `band` by energy conservation about degeneracy.
    pub fn mirror_band(&self, band: usize) -> usize {
        self.bands - 1 - band
    }

    /// Bands in the upper half of the mirror pairs (the idler side). The
    /// self-paired central band of an odd band count is excluded.
    pub fn idler_bands(&self) -> Vec<usize> {
        (0..self.bands).filter(|&b| b > self.mirror_band(b)).collect()
    }

    pub fn idler_modes(&self) -> Vec<usize> {
        self.idler_bands()
            .into_iter()
            .flat_map(|b| (0..self.n).map(move |j| j + b * self.n))
            .collect()
    }
}

/// Block-diagonal extension of `M` over `bands` frequency bands.
pub fn block_extend(basis: &SupermodeBasis, bands: usize) -> RMatrix {
    block_diagonal(&basis.m, bands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn coupling_matrix_examples() {
        let one = build_coupling_matrix(&LatticeSpec::homogeneous(1, 1.0).unwrap());
        assert_eq!(one, RMatrix::zeros(1, 1));

        let two = build_coupling_matrix(&LatticeSpec::new(2, 1.0, vec![1.0]).unwrap());
        assert_eq!(two, RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));

        let three = build_coupling_matrix(&LatticeSpec::homogeneous(3, 0.01).unwrap());
        assert_eq!(three[(0, 1)], 0.01);
        assert_eq!(three[(2, 1)], 0.01);
        assert_eq!(three[(0, 2)], 0.0);
        assert_eq!(three[(1, 1)], 0.0);
    }

    #[test]
    fn profile_validation() {
        assert!(LatticeSpec::new(3, 1.0, vec![1.0]).unwrap_err().is_config());
        assert!(LatticeSpec::new(3, 1.0, vec![1.0, 1.5]).is_err());
        assert!(LatticeSpec::new(3, 1.0, vec![1.0, 0.0]).is_err());
        assert!(LatticeSpec::new(3, -1.0, vec![1.0, 1.0]).is_err());
        assert!(LatticeSpec::new(0, 1.0, vec![]).is_err());
        match LatticeSpec::new(4, 1.0, vec![1.0]).unwrap_err() {
            Error::Config { field, .. } => assert_eq!(field, "lattice.profile"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn single_guide() {
        let b = diagonalize_lattice(&LatticeSpec::homogeneous(1, 0.3).unwrap());
        assert_eq!(b.lambda, vec![0.0]);
        assert_eq!(b.m, RMatrix::identity(1, 1));
    }

    #[test]
    fn three_guides_match_closed_form() {
        let b = diagonalize_lattice(&LatticeSpec::homogeneous(3, 1.0).unwrap());
        let s2 = 2f64.sqrt();
        assert!((b.lambda[0] - s2).abs() < 1e-12);
        assert!(b.lambda[1].abs() < 1e-12);
        assert!((b.lambda[2] + s2).abs() < 1e-12);
    }

    #[test]
    fn seven_guides_match_cosine_law() {
        let spec = LatticeSpec::homogeneous(7, 0.01).unwrap();
        let b = diagonalize_lattice(&spec);
        for k in 1..=7 {
            let expected = 0.02 * (k as f64 * PI / 8.0).cos();
            assert!((b.lambda[k - 1] - expected).abs() < 1e-14);
        }
        assert!(b.orthogonality_residual() < 1e-12);
        assert!(b.reconstruction_residual(&build_coupling_matrix(&spec)) < 1e-10);
    }

    #[test]
    fn agrees_with_dense_eigensolver() {
        let spec = LatticeSpec::glauber_fock(9, 0.7).unwrap();
        let b = diagonalize_lattice(&spec);
        let dense = nalgebra::SymmetricEigen::new(build_coupling_matrix(&spec));
        let mut ev: Vec<f64> = dense.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ev.iter().zip(&b.lambda) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_convention_first_entry_positive() {
        let b = diagonalize_lattice(&LatticeSpec::glauber_fock(6, 1.0).unwrap());
        for r in 0..6 {
            assert!(b.m[(r, 0)] > 0.0);
        }
    }

    #[test]
    fn block_extension_layout() {
        let b = diagonalize_lattice(&LatticeSpec::homogeneous(2, 1.0).unwrap());
        assert_eq!(block_extend(&b, 1), b.m);
        let big = block_extend(&b, 2);
        let map = ModeIndexMap::new(2, 2);
        for (k, l, j, l2) in itertools(2, 2) {
            let expected = if l == l2 { b.m[(k, j)] } else { 0.0 };
            assert_eq!(big[(map.index(k, l), map.index(j, l2))], expected);
        }
    }

    fn itertools(n: usize, bands: usize) -> Vec<(usize, usize, usize, usize)> {
        let mut v = Vec::new();
        for k in 0..n {
            for l in 0..bands {
                for j in 0..n {
                    for l2 in 0..bands {
                        v.push((k, l, j, l2));
                    }
                }
            }
        }
        v
    }

    #[test]
    fn index_map_roundtrip_and_idlers() {
        let map = ModeIndexMap::new(7, 2);
        for idx in 0..14 {
            let (j, l) = map.split(idx);
            assert_eq!(map.index(j, l), idx);
        }
        assert_eq!(map.idler_bands(), vec![1]);
        assert_eq!(map.idler_modes(), (7..14).collect::<Vec<_>>());
        assert_eq!(ModeIndexMap::new(3, 5).idler_bands(), vec![3, 4]);
        assert_eq!(ModeIndexMap::new(3, 1).idler_bands(), Vec::<usize>::new());
    }

    #[test]
    fn degenerate_rows_are_orthonormalized() {
        let mut m = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        orthonormalize_degenerate(&mut m, &[1.0, 1.0], 1e-12);
        assert!((m.row(0).dot(&m.row(1))).abs() < 1e-15);
        assert!((m.row(1).norm() - 1.0).abs() < 1e-15);
    }
}
