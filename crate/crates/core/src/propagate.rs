//! Input→output mode maps `a(z) = U a(0) + V a†(0)`.
//!
//! Three routes: the low-gain closed form built from a Takagi factorization,
//! the exact solution for a flat monochromatic pump, and a fixed-step RK4
//! integration of the coupled-mode equations used as an oracle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomp::{GainSpectrum, TakagiFactors};
use crate::error::{Error, Result};
use crate::lattice::{block_extend, ModeIndexMap, SupermodeBasis};
use crate::linalg::{diag, max_abs, max_diff, to_complex, CMatrix, I};

/// Mode basis a transform is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Supermode amplitudes with the linear propagation phase removed.
    Slow,
    /// Individual waveguide modes.
    Lab,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovTransform {
    pub u: CMatrix,
    pub v: CMatrix,
    pub frame: Frame,
    pub z: f64,
}

impl BogoliubovTransform {
    pub fn identity(dim: usize, frame: Frame) -> Self {
        Self {
            u: CMatrix::identity(dim, dim),
            v: CMatrix::zeros(dim, dim),
            frame,
            z: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// `max |U U† - V V† - I|`.
    pub fn commutator_residual(&self) -> f64 {
        let n = self.dim();
        let g = &self.u * self.u.adjoint() - &self.v * self.v.adjoint();
        max_diff(&g, &CMatrix::identity(n, n))
    }

    /// `max |U Vᵀ - (U Vᵀ)ᵀ|`.
    pub fn symmetry_residual(&self) -> f64 {
        let p = &self.u * self.v.transpose();
        max_diff(&p, &p.transpose())
    }

    /// Fails with an internal-consistency error when either residual exceeds
    /// `tol · max(1, max|U|²)`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let scale = max_abs(&self.u).powi(2).max(1.0);
        let (c, s) = (self.commutator_residual(), self.symmetry_residual());
        if c > tol * scale || s > tol * scale {
            return Err(Error::Inconsistent(format!(
                "Bogoliubov invariants violated: |UU†-VV†-I| = {c:e}, |UVᵀ-VUᵀ| = {s:e}"
            )));
        }
        Ok(())
    }
}

/// Fixed-step RK4 settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeSettings {
    /// Nominal step in mm; the actual step divides `z` evenly and never exceeds it.
    pub step: f64,
    /// Bound on `h · (fastest phase rate of 𝓛)`.
    pub max_phase_per_step: f64,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            step: 0.01,
            max_phase_per_step: 0.1,
        }
    }
}

/// Source of the local coupling matrix `𝓛(z)` in the slow supermode frame.
pub trait CouplingSampler: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, z: f64) -> CMatrix;
    /// Fastest phase rotation rate of any entry, rad/mm.
    fn max_phase_rate(&self) -> f64;
}

fn lambda_extended(basis: &SupermodeBasis, bands: usize) -> Vec<f64> {
    (0..bands).flat_map(|_| basis.lambda.iter().copied()).collect()
}

fn phase_diag(lambda: &[f64], z: f64) -> CMatrix {
    diag(lambda.iter().map(|l| Complex64::from_polar(1.0, l * z)))
}

/// Converts a slow-frame transform to the lab frame:
/// `U → 𝖬ᵀ D(z) U 𝖬`, `V → 𝖬ᵀ D(z) V 𝖬` with `D = diag(e^{iλz})`.
pub fn slow_to_lab(bog: &BogoliubovTransform, basis: &SupermodeBasis) -> Result<BogoliubovTransform> {
    if bog.frame != Frame::Slow {
        return Err(Error::Usage("transform is already in the lab frame".into()));
    }
    let n = basis.n();
    if !bog.dim().is_multiple_of(n) {
        return Err(Error::Contract(format!(
            "transform dimension {} is not a multiple of N = {n}",
            bog.dim()
        )));
    }
    let bands = bog.dim() / n;
    let m = to_complex(&block_extend(basis, bands));
    let left = m.transpose() * phase_diag(&lambda_extended(basis, bands), bog.z);
    Ok(BogoliubovTransform {
        u: &left * &bog.u * &m,
        v: &left * &bog.v * &m,
        frame: Frame::Lab,
        z: bog.z,
    })
}

/// Low-gain solution in the lab frame:
/// `U = 𝖬ᵀ D Υ cosh(r) Υ† 𝖬`, `V = i 𝖬ᵀ D Υ sinh(r) Υᵀ 𝖬`.
///
/// The factor `i` is the one multiplying the nonlinear term of the
/// coupled-mode equations, so that a constant coupling reproduces the ODE.
pub fn low_gain_bogoliubov(
    basis: &SupermodeBasis,
    takagi: &TakagiFactors,
    gains: &GainSpectrum,
    z: f64,
) -> Result<BogoliubovTransform> {
    let total = takagi.upsilon.nrows();
    let n = basis.n();
    if total == 0 || !total.is_multiple_of(n) || gains.r.len() != total {
        return Err(Error::Contract(format!(
            "dimension mismatch: Υ is {total}x{total}, N = {n}, {} gains",
            gains.r.len()
        )));
    }
    let ups = &takagi.upsilon;
    let ch = diag(gains.r.iter().map(|r| Complex64::new(r.cosh(), 0.0)));
    let sh = diag(gains.r.iter().map(|r| Complex64::new(r.sinh(), 0.0)));
    let slow = BogoliubovTransform {
        u: ups * ch * ups.adjoint(),
        v: ups * sh * ups.transpose() * I,
        frame: Frame::Slow,
        z,
    };
    let out = slow_to_lab(&slow, basis)?;
    out.check(1e-8)?;
    Ok(out)
}

/// Per-supermode `(cosh(r z) + iλ sinh(r z)/r, G sinh(r z)/r)` with
/// `r² = G² - λ²`, continued to the trigonometric branch when `r² < 0`.
fn flat_pump_mode(lambda: f64, g: f64, z: f64) -> (Complex64, f64) {
    let r2 = g * g - lambda * lambda;
    let x = r2 * z * z;
    let (ch, sh) = if x.abs() < 1e-8 {
        (1.0 + x / 2.0 + x * x / 24.0, z * (1.0 + x / 6.0 + x * x / 120.0))
    } else if r2 > 0.0 {
        let r = r2.sqrt();
        ((r * z).cosh(), (r * z).sinh() / r)
    } else {
        let rho = (-r2).sqrt();
        ((rho * z).cos(), (rho * z).sin() / rho)
    };
    (Complex64::new(ch, lambda * sh), g * sh)
}

/// Exact lab-frame solution for a flat, monochromatic pump with the global
/// phase `φ = -π/2`. `g_sqrt_ph` is the per-waveguide value `g √(P_h / N)`.
pub fn flat_pump_solution(basis: &SupermodeBasis, bands: usize, g_sqrt_ph: f64, z: f64) -> Result<BogoliubovTransform> {
    flat_pump_solution_with_phase(basis, bands, g_sqrt_ph, z, -std::f64::consts::FRAC_PI_2)
}

/// As [`flat_pump_solution`] for an arbitrary global pump phase `φ`; the
/// two-mode coupling then carries the factor `i e^{iφ}`.
pub fn flat_pump_solution_with_phase(
    basis: &SupermodeBasis,
    bands: usize,
    g_sqrt_ph: f64,
    z: f64,
    phi: f64,
) -> Result<BogoliubovTransform> {
    if bands == 0 {
        return Err(Error::config("frexels.count", "need at least one band"));
    }
    if !(g_sqrt_ph.is_finite() && g_sqrt_ph >= 0.0 && z.is_finite() && z >= 0.0) {
        return Err(Error::config(
            "nonlinearity",
            format!("g√p_h and z must be finite and non-negative (got {g_sqrt_ph}, {z})"),
        ));
    }
    let n = basis.n();
    let (u_k, v_k): (Vec<Complex64>, Vec<f64>) =
        basis.lambda.iter().map(|&l| flat_pump_mode(l, g_sqrt_ph, z)).unzip();
    let m = to_complex(&basis.m);
    let mt = m.transpose();
    let u_tilde = &mt * diag(u_k) * &m;
    let coeff = I * Complex64::from_polar(1.0, phi);
    let v_tilde = &mt * diag(v_k.into_iter().map(|v| coeff * v)) * &m;

    let map = ModeIndexMap::new(n, bands);
    let total = map.total();
    let mut u = CMatrix::zeros(total, total);
    let mut v = CMatrix::zeros(total, total);
    for l in 0..bands {
        let lp = map.mirror_band(l);
        u.view_mut((l * n, l * n), (n, n)).copy_from(&u_tilde);
        v.view_mut((l * n, lp * n), (n, n)).copy_from(&v_tilde);
    }
    Ok(BogoliubovTransform {
        u,
        v,
        frame: Frame::Lab,
        z,
    })
}

/// RK4 integration of `dB/dz = i g√P 𝓛(z) B†` in the slow frame, starting from
/// the identity. Returns the slow-frame transform.
pub fn ode_oracle(
    sampler: &dyn CouplingSampler,
    g_sqrt_p: f64,
    z: f64,
    settings: &OdeSettings,
) -> Result<BogoliubovTransform> {
    if !(settings.step.is_finite() && settings.step > 0.0) {
        return Err(Error::config("ode.step", format!("must be positive, got {}", settings.step)));
    }
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::config("z", format!("must be finite and non-negative, got {z}")));
    }
    let rate = sampler.max_phase_rate();
    if settings.step * rate >= settings.max_phase_per_step {
        return Err(Error::config(
            "ode.step",
            format!(
                "step {} mm advances the coupling phase by {:.3} rad, above the {} rad guard",
                settings.step,
                settings.step * rate,
                settings.max_phase_per_step
            ),
        ));
    }
    let dim = sampler.dim();
    let steps = (z / settings.step).ceil().max(1.0) as usize;
    let h = z / steps as f64;
    let gi = I * g_sqrt_p;

    let deriv = |l: &CMatrix, u: &CMatrix, v: &CMatrix| -> (CMatrix, CMatrix) {
        let gl = l * gi;
        (&gl * v.map(|x| x.conj()), &gl * u.map(|x| x.conj()))
    };

    let mut u = CMatrix::identity(dim, dim);
    let mut v = CMatrix::zeros(dim, dim);
    let checkpoints: Vec<usize> = (1..=10).map(|k| (k * steps).div_ceil(10)).collect();
    let mut l0 = sampler.sample(0.0);
    let hc = Complex64::new(h, 0.0);
    let half = Complex64::new(0.5 * h, 0.0);
    for step in 0..steps {
        let z0 = step as f64 * h;
        let lm = sampler.sample(z0 + 0.5 * h);
        let l1 = sampler.sample(z0 + h);
        let (k1u, k1v) = deriv(&l0, &u, &v);
        let (k2u, k2v) = deriv(&lm, &(&u + &k1u * half), &(&v + &k1v * half));
        let (k3u, k3v) = deriv(&lm, &(&u + &k2u * half), &(&v + &k2v * half));
        let (k4u, k4v) = deriv(&l1, &(&u + &k3u * hc), &(&v + &k3v * hc));
        let sixth = Complex64::new(h / 6.0, 0.0);
        let two = Complex64::new(2.0, 0.0);
        u += (k1u + &k2u * two + &k3u * two + k4u) * sixth;
        v += (k1v + &k2v * two + &k3v * two + k4v) * sixth;
        l0 = l1;

        if checkpoints.contains(&(step + 1)) {
            let probe = BogoliubovTransform {
                u: u.clone(),
                v: v.clone(),
                frame: Frame::Slow,
                z: z0 + h,
            };
            let drift = probe.commutator_residual();
            if drift.is_nan() || drift > 1e-6 {
                return Err(Error::Accuracy(format!(
                    "commutator drift {drift:e} at z = {:.4} mm; reduce the ODE step",
                    z0 + h
                )));
            }
        }
    }
    Ok(BogoliubovTransform {
        u,
        v,
        frame: Frame::Slow,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{gains, takagi};
    use crate::jssa::{narrowband_jssa, ConstantSampler, NarrowbandSampler};
    use crate::lattice::{diagonalize_lattice, LatticeSpec};
    use crate::linalg::c;

    fn lattice(n: usize, cm: f64) -> SupermodeBasis {
        diagonalize_lattice(&LatticeSpec::homogeneous(n, cm).unwrap())
    }

    #[test]
    fn zero_gain_is_linear_evolution() {
        let basis = lattice(4, 0.3);
        let j = narrowband_jssa(&basis, 2, 2.0, 0.0, 0.0).unwrap();
        let t = takagi(&j.f).unwrap();
        let g = gains(&t, j.gamma).unwrap();
        let bog = low_gain_bogoliubov(&basis, &t, &g, 2.0).unwrap();
        let m = to_complex(&block_extend(&basis, 2));
        let d = phase_diag(&lambda_extended(&basis, 2), 2.0);
        assert!(max_diff(&bog.u, &(m.transpose() * d * &m)) < 1e-14);
        assert!(max_abs(&bog.v) == 0.0);
    }

    #[test]
    fn scalar_squeezer() {
        let basis = lattice(1, 1.0);
        let f = CMatrix::from_element(1, 1, Complex64::from_polar(0.8, 0.3));
        let t = takagi(&f).unwrap();
        let g = gains(&t, 0.5).unwrap();
        let bog = low_gain_bogoliubov(&basis, &t, &g, 1.0).unwrap();
        assert!((bog.u[(0, 0)] - c(0.4f64.cosh(), 0.0)).norm() < 1e-14);
        let want = I * Complex64::from_polar(0.4f64.sinh(), 0.3);
        assert!((bog.v[(0, 0)] - want).norm() < 1e-14);
    }

    #[test]
    fn ode_constant_coupling() {
        let s = ConstantSampler(CMatrix::from_element(1, 1, c(0.0, -1.0)));
        let (g, z) = (0.7, 1.5);
        let set = OdeSettings {
            step: z / 1e4,
            ..OdeSettings::default()
        };
        let bog = ode_oracle(&s, g, z, &set).unwrap();
        assert!((bog.u[(0, 0)] - c((g * z).cosh(), 0.0)).norm() < 1e-8);
        assert!((bog.v[(0, 0)] - c((g * z).sinh(), 0.0)).norm() < 1e-8);

        let ident = ode_oracle(&s, 0.0, z, &set).unwrap();
        assert!(max_diff(&ident.u, &CMatrix::identity(1, 1)) == 0.0 && max_abs(&ident.v) == 0.0);
    }

    #[test]
    fn ode_step_guard() {
        let basis = lattice(3, 10.0);
        let s = NarrowbandSampler::new(&basis, 2, 0.0);
        let err = ode_oracle(&s, 0.1, 1.0, &OdeSettings::default());
        assert!(matches!(err, Err(Error::Config { .. })));
    }

    #[test]
    fn flat_pump_limits() {
        let basis = lattice(5, 0.4);
        let bog = flat_pump_solution(&basis, 2, 0.3, 0.0).unwrap();
        assert!(max_diff(&bog.u, &CMatrix::identity(10, 10)) < 1e-14);
        assert!(max_abs(&bog.v) < 1e-15);

        let one = lattice(1, 1.0);
        let (g, z) = (0.3, 2.0);
        let bog = flat_pump_solution(&one, 2, g, z).unwrap();
        assert!((bog.u[(0, 0)] - c((g * z).cosh(), 0.0)).norm() < 1e-14);
        assert!((bog.v[(0, 1)] - c((g * z).sinh(), 0.0)).norm() < 1e-14);
        assert!((bog.v[(1, 0)] - c((g * z).sinh(), 0.0)).norm() < 1e-14);
        assert!(bog.v[(0, 0)].norm() == 0.0);
    }

    #[test]
    fn flat_pump_bands_are_copies_of_single_band() {
        let basis = lattice(4, 0.2);
        let single = flat_pump_solution(&basis, 1, 0.15, 3.0).unwrap();
        for bands in [2, 3, 4] {
            let multi = flat_pump_solution(&basis, bands, 0.15, 3.0).unwrap();
            for l in 0..bands {
                let lp = bands - 1 - l;
                assert_eq!(multi.u.view((l * 4, l * 4), (4, 4)).clone_owned(), single.u);
                assert_eq!(multi.v.view((l * 4, lp * 4), (4, 4)).clone_owned(), single.v);
            }
            multi.check(1e-12).unwrap();
        }
    }

    /// `cosh(√x)` and `sinh(√x)/√x` as power series in `x`, entire and
    /// therefore blind to the sign of `r²`.
    fn entire_series(x: f64) -> (f64, f64) {
        let (mut ch, mut sh) = (0.0, 0.0);
        let mut term = 1.0;
        for k in 0..60 {
            ch += term;
            sh += term / (2 * k + 1) as f64;
            term *= x / (((2 * k + 1) * (2 * k + 2)) as f64);
        }
        (ch, sh)
    }

    #[test]
    fn branch_continuity() {
        let lambda = 0.2;
        for z in [0.5, 3.0, 20.0] {
            for g in [lambda - 1e-6, lambda, lambda + 1e-6] {
                let (u, v) = flat_pump_mode(lambda, g, z);
                let (ch, sh) = entire_series((g * g - lambda * lambda) * z * z);
                assert!((u - c(ch, lambda * z * sh)).norm() < 1e-8, "g = {g}, z = {z}");
                assert!((v - g * z * sh).abs() < 1e-8, "g = {g}, z = {z}");
            }
            let (lo, hi) = (flat_pump_mode(lambda, lambda - 1e-6, z), flat_pump_mode(lambda, lambda + 1e-6, z));
            let (at, _) = flat_pump_mode(lambda, lambda, z);
            assert!((hi.0 + lo.0 - at * 2.0).norm() < 1e-8);
        }
    }

    #[test]
    fn ode_reproduces_flat_pump() {
        let basis = lattice(3, 0.05);
        let (g, z) = (0.08, 6.0);
        let n = basis.n() as f64;
        let sampler = NarrowbandSampler::new(&basis, 2, -std::f64::consts::FRAC_PI_2);
        let slow = ode_oracle(&sampler, g * n.sqrt(), z, &OdeSettings::default()).unwrap();
        let lab = slow_to_lab(&slow, &basis).unwrap();
        let exact = flat_pump_solution(&basis, 2, g, z).unwrap();
        assert!(max_diff(&lab.u, &exact.u) < 1e-9);
        assert!(max_diff(&lab.v, &exact.v) < 1e-9);

        let phi = 0.9;
        let sampler = NarrowbandSampler::new(&basis, 3, phi);
        let lab = slow_to_lab(&ode_oracle(&sampler, g * n.sqrt(), z, &OdeSettings::default()).unwrap(), &basis)
            .unwrap();
        let exact = flat_pump_solution_with_phase(&basis, 3, g, z, phi).unwrap();
        assert!(max_diff(&lab.u, &exact.u) < 1e-9);
        assert!(max_diff(&lab.v, &exact.v) < 1e-9);
    }
}
