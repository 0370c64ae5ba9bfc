//! Small dense helpers shared across modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &RMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `max |a - b|` entrywise. Panics on shape mismatch.
pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_diff: shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn max_diff_real(a: &RMatrix, b: &RMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_diff_real: shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// `max |m - mᵀ|`.
pub fn asymmetry(m: &CMatrix) -> f64 {
    max_diff(m, &m.transpose())
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Diagonal complex matrix from an iterator of entries.
pub fn diag<It: IntoIterator<Item = Complex64>>(entries: It) -> CMatrix {
    let v: Vec<Complex64> = entries.into_iter().collect();
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(v))
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Block-diagonal matrix holding `copies` copies of `block`.
pub fn block_diagonal(block: &RMatrix, copies: usize) -> RMatrix {
    let n = block.nrows();
    let mut out = RMatrix::zeros(n * copies, n * copies);
    for b in 0..copies {
        out.view_mut((b * n, b * n), (n, n)).copy_from(block);
    }
    out
}
