//! Autonne–Takagi factorization `f = Υ diag(Λ) Υᵀ` and the squeezing gains
//! of the nonlinear supermodes.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, max_abs, CMatrix, RMatrix};

/// Relative asymmetry accepted by [`takagi`].
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TakagiFactors {
    pub upsilon: CMatrix,
    /// Non-negative, descending.
    pub lambda: Vec<f64>,
}

impl TakagiFactors {
    /// `Υ diag(Λ) Υᵀ`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.upsilon.clone();
        for (m, l) in self.lambda.iter().enumerate() {
            scaled.column_mut(m).scale_mut(*l);
        }
        scaled * self.upsilon.transpose()
    }

    /// `max |Υ Υ† - I|`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.upsilon.nrows();
        let g = &self.upsilon * self.upsilon.adjoint();
        crate::linalg::max_diff(&g, &CMatrix::identity(n, n))
    }
}

/// Takagi factorization of a complex symmetric matrix.
///
/// Works on the real symmetric embedding `[[Re f, Im f], [Im f, -Re f]]`,
/// whose spectrum is `±Λ`: an eigenvector `(a; b)` for `+σ` gives a Takagi
/// vector `a + ib` with `f conj(t) = σ t`. The `n` largest eigenpairs are
/// taken in descending order and re-orthonormalized, which also completes the
/// basis when `f` is rank deficient. Each column is then multiplied by `±1`
/// so that its largest-modulus entry has a positive real part; the only phase
/// freedom compatible with real `Λ` is a sign (within degenerate clusters a
/// real orthogonal mixing also remains, fixed here by the eigensolver order).
pub fn takagi(f: &CMatrix) -> Result<TakagiFactors> {
    let n = f.nrows();
    if f.ncols() != n {
        return Err(Error::Contract(format!("takagi needs a square matrix, got {}x{}", n, f.ncols())));
    }
    if n == 0 {
        return Ok(TakagiFactors {
            upsilon: CMatrix::zeros(0, 0),
            lambda: Vec::new(),
        });
    }
    let scale = max_abs(f);
    if !scale.is_finite() {
        return Err(Error::Numerical("takagi: non-finite matrix entries".into()));
    }
    let asym = asymmetry(f);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Contract(format!(
            "takagi: matrix is not symmetric (max |f - fᵀ| = {asym:e}, max |f| = {scale:e})"
        )));
    }
    let sym = (f + f.transpose()) * Complex64::new(0.5, 0.0);

    let mut h = RMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = sym[(r, c)];
            h[(r, c)] = z.re;
            h[(r, c + n)] = z.im;
            h[(r + n, c)] = z.im;
            h[(r + n, c + n)] = -z.re;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut upsilon = CMatrix::zeros(n, n);
    let mut lambda = Vec::with_capacity(n);
    for (m, &idx) in order.iter().take(n).enumerate() {
        lambda.push(eig.eigenvalues[idx].max(0.0));
        let v = eig.eigenvectors.column(idx);
        for r in 0..n {
            upsilon[(r, m)] = Complex64::new(v[r], v[r + n]);
        }
    }
    orthonormalize(&mut upsilon)?;

    for m in 0..n {
        let col = upsilon.column(m);
        let (mut best, mut pos) = (0.0, 0);
        for (r, z) in col.iter().enumerate() {
            if z.norm() > best + 1e-12 {
                best = z.norm();
                pos = r;
            }
        }
        if upsilon[(pos, m)].re < 0.0 {
            upsilon.column_mut(m).neg_mut();
        }
    }

    let out = TakagiFactors { upsilon, lambda };
    let rec = crate::linalg::max_diff(&out.reconstruct(), f);
    if rec > 1e-8 * scale.max(1.0) {
        return Err(Error::Numerical(format!("takagi: reconstruction residual {rec:e}")));
    }
    Ok(out)
}

/// Two passes of modified Gram–Schmidt over the columns, in order. Columns
/// that collapse are replaced by the first unit vector that survives.
fn orthonormalize(u: &mut CMatrix) -> Result<()> {
    let n = u.ncols();
    for m in 0..n {
        for _ in 0..2 {
            for p in 0..m {
                let proj = u.column(p).dotc(&u.column(m));
                let q = u.column(p).clone_owned();
                u.column_mut(m).axpy(-proj, &q, Complex64::new(1.0, 0.0));
            }
        }
        let mut norm = u.column(m).norm();
        if norm < 0.5 {
            let mut replaced = false;
            for e in 0..u.nrows() {
                let mut cand = nalgebra::DVector::<Complex64>::zeros(u.nrows());
                cand[e] = Complex64::new(1.0, 0.0);
                for _ in 0..2 {
                    for p in 0..m {
                        let proj = u.column(p).dotc(&cand);
                        cand.axpy(-proj, &u.column(p).clone_owned(), Complex64::new(1.0, 0.0));
                    }
                }
                if cand.norm() > 0.5 {
                    u.column_mut(m).copy_from(&cand);
                    norm = cand.norm();
                    replaced = true;
                    break;
                }
            }
            if !replaced {
                return Err(Error::Numerical("takagi: failed to complete an orthonormal basis".into()));
            }
        }
        u.column_mut(m).unscale_mut(norm);
    }
    Ok(())
}

/// Downconversion gains `r_m = Γ Λ_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSpectrum {
    pub r: Vec<f64>,
}

pub fn gains(takagi: &TakagiFactors, gamma: f64) -> Result<GainSpectrum> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::Contract(format!("Γ must be finite and non-negative, got {gamma}")));
    }
    Ok(GainSpectrum {
        r: takagi.lambda.iter().map(|l| gamma * l).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_diff};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&a + a.transpose()) * c(0.5, 0.0)
    }

    fn svd_values(f: &CMatrix) -> Vec<f64> {
        let mut s: Vec<f64> = f.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    #[test]
    fn diagonal_input() {
        let f = crate::linalg::diag([c(0.5, 0.0), c(0.2, 0.0)]);
        let t = takagi(&f).unwrap();
        assert_eq!(t.lambda.len(), 2);
        assert!((t.lambda[0] - 0.5).abs() < 1e-15 && (t.lambda[1] - 0.2).abs() < 1e-15);
        assert!(max_diff(&t.upsilon, &CMatrix::identity(2, 2)) < 1e-14);
    }

    #[test]
    fn off_diagonal_pair() {
        let cval = 0.7;
        let f = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(cval, 0.0), c(cval, 0.0), c(0.0, 0.0)]);
        let t = takagi(&f).unwrap();
        assert!((t.lambda[0] - cval).abs() < 1e-14 && (t.lambda[1] - cval).abs() < 1e-14);
        assert!(max_diff(&t.reconstruct(), &f) < 1e-12);
        assert!(t.unitarity_residual() < 1e-12);

        let g = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, 0.0)]);
        let t = takagi(&g).unwrap();
        assert!((t.lambda[0] - 1.0).abs() < 1e-14 && (t.lambda[1] - 1.0).abs() < 1e-14);
        assert!(max_diff(&t.reconstruct(), &g) < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let f = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(takagi(&f), Err(Error::Contract(_))));
    }

    #[test]
    fn zero_and_rank_deficient_inputs() {
        let t = takagi(&CMatrix::zeros(3, 3)).unwrap();
        assert!(t.lambda.iter().all(|l| *l == 0.0));
        assert!(t.unitarity_residual() < 1e-14);

        let v = nalgebra::DVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 1.0), c(0.4, 0.0)]);
        let f = &v * v.transpose();
        let t = takagi(&f).unwrap();
        assert!((t.lambda[0] - v.norm_squared()).abs() < 1e-12);
        assert!(t.lambda[1..].iter().all(|l| *l < 1e-12));
        assert!(t.unitarity_residual() < 1e-10);
        assert!(max_diff(&t.reconstruct(), &f) < 1e-12);
    }

    #[test]
    fn random_matrices_against_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..1000 {
            let n = 1 + case % 8;
            let f = random_symmetric(&mut rng, n);
            let t = takagi(&f).unwrap();
            assert!(t.unitarity_residual() < 1e-10, "case {case}");
            assert!(max_diff(&t.reconstruct(), &f) < 1e-8 * max_abs(&f).max(1.0), "case {case}");
            for (a, b) in t.lambda.iter().zip(svd_values(&f)) {
                assert!((a - b).abs() < 1e-10, "case {case}: {a} vs {b}");
            }
            assert!(t.lambda.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn global_phase_leaves_values_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_symmetric(&mut rng, 6);
        let base = takagi(&f).unwrap().lambda;
        for theta in [std::f64::consts::PI / 7.0, std::f64::consts::PI / 3.0, 1.0] {
            let g = &f * Complex64::from_polar(1.0, theta);
            for (a, b) in takagi(&g).unwrap().lambda.iter().zip(&base) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sign_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = takagi(&random_symmetric(&mut rng, 5)).unwrap();
        for m in 0..5 {
            let col = t.upsilon.column(m);
            let best = col.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            assert!(best.re >= 0.0);
        }
    }

    #[test]
    fn gain_examples() {
        let t = TakagiFactors {
            upsilon: CMatrix::identity(2, 2),
            lambda: vec![1.0, 0.5],
        };
        assert_eq!(gains(&t, 0.3).unwrap().r, vec![0.3, 0.15]);
        assert_eq!(gains(&t, 0.0).unwrap().r, vec![0.0, 0.0]);
        assert!(gains(&t, -1.0).is_err());
    }
}
