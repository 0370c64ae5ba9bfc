//! Joint spatio-spectral amplitude in the supermode ⊗ frexel basis.
//!
//! Flat index `k + l N` pairs supermode `k` with frequency band `l`, the same
//! layout as [`ModeIndexMap`] uses for waveguides.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{ModeIndexMap, SupermodeBasis};
use crate::linalg::{max_abs, sinc, CMatrix};
use crate::propagate::CouplingSampler;
use crate::spectral::{
    project_delta_beta, project_pump, BandPairKernel, FrexelBasis, PhaseMatching, PumpSpectrum,
    QuadratureOptions, QuadratureWarning, SpatialPumpProfile, CONVERGENCE_TOL,
};

/// `η_{k,k'} = Σ_j M_{k,j} M_{k',j} η_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaProjection {
    pub eta_kk: CMatrix,
}

pub fn eta_project(basis: &SupermodeBasis, pump: &SpatialPumpProfile) -> Result<EtaProjection> {
    let n = basis.n();
    if pump.n() != n {
        return Err(Error::Contract(format!(
            "spatial pump has {} entries for a lattice of {n} waveguides",
            pump.n()
        )));
    }
    let eta_kk = CMatrix::from_fn(n, n, |k, kp| {
        (0..n)
            .map(|j| pump.eta[j] * (basis.m[(k, j)] * basis.m[(kp, j)]))
            .sum()
    });
    Ok(EtaProjection { eta_kk })
}

/// A JSSA evaluated at one propagation distance.
#[derive(Debug, Clone)]
pub struct Jssa {
    pub f: CMatrix,
    /// Total nonlinear amplitude `Γ = g√P_h z`.
    pub gamma: f64,
    pub z: f64,
    pub index_map: ModeIndexMap,
    /// Band pairs whose entries moved by more than the convergence tolerance
    /// (relative to `max |f|`) when the quadrature order was doubled.
    pub warnings: Vec<QuadratureWarning>,
}

impl Jssa {
    pub fn max_entry(&self) -> f64 {
        max_abs(&self.f)
    }
}

fn check_gain(g_sqrt_p: f64, z: f64) -> Result<f64> {
    if !(g_sqrt_p.is_finite() && g_sqrt_p >= 0.0) {
        return Err(Error::config(
            "nonlinearity.g_sqrtP",
            format!("must be finite and non-negative, got {g_sqrt_p}"),
        ));
    }
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::config("z", format!("must be finite and non-negative, got {z}")));
    }
    Ok(g_sqrt_p * z)
}

fn band_pairs(bands: usize) -> Vec<(usize, usize)> {
    (0..bands)
        .flat_map(|l| (l..bands).map(move |lp| (l, lp)))
        .collect()
}

/// Precomputed band-pair kernels plus the supermode data needed to evaluate
/// the full JSSA and the local coupling at any `z` up to `z_max`.
#[derive(Debug, Clone)]
pub struct JssaModel {
    lambda: Vec<f64>,
    eta: CMatrix,
    map: ModeIndexMap,
    kernels: Vec<BandPairKernel>,
    z_max: f64,
}

impl JssaModel {
    pub fn new(
        basis: &SupermodeBasis,
        frexels: &FrexelBasis,
        pump_spectral: &PumpSpectrum,
        pump_spatial: &SpatialPumpProfile,
        pm: &PhaseMatching,
        z_max: f64,
        opts: &QuadratureOptions,
    ) -> Result<Self> {
        if pump_spectral.is_monochromatic() {
            return Err(Error::Usage(
                "monochromatic pump: use the narrowband JSSA or the flat-pump solver".into(),
            ));
        }
        let eta = eta_project(basis, pump_spatial)?.eta_kk;
        let map = ModeIndexMap::new(basis.n(), frexels.bands());
        let kernels = band_pairs(frexels.bands())
            .into_par_iter()
            .map(|bands| BandPairKernel::build(pump_spectral, frexels, pm, bands, z_max, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lambda: basis.lambda.clone(),
            eta,
            map,
            kernels,
            z_max,
        })
    }

    pub fn index_map(&self) -> ModeIndexMap {
        self.map
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// The unscaled matrix `𝖿(z)`.
    pub fn jssa(&self, z: f64) -> CMatrix {
        let n = self.map.n;
        let blocks: Vec<Vec<Complex64>> = self
            .kernels
            .par_iter()
            .map(|kernel| {
                let mut block = vec![Complex64::new(0.0, 0.0); n * n];
                for k in 0..n {
                    for kp in 0..n {
                        let eta = self.eta[(k, kp)];
                        if eta.norm() == 0.0 {
                            continue;
                        }
                        block[k * n + kp] =
                            eta * kernel.jssa_factor(self.lambda[k] + self.lambda[kp], z);
                    }
                }
                block
            })
            .collect();
        self.assemble(&blocks)
    }

    /// `𝓛(z)` with `𝓛_{𝗄,𝗄'} = η_{k,k'} e^{-i(λ_k+λ_{k'})z} ∬ ξ ξ Ω e^{iΔβ z}`,
    /// whose average over `[0, z]` is `𝖿(z)`.
    pub fn coupling(&self, z: f64) -> CMatrix {
        let n = self.map.n;
        let blocks: Vec<Vec<Complex64>> = self
            .kernels
            .iter()
            .map(|kernel| {
                let base = kernel.coupling_factor(z);
                let mut block = vec![Complex64::new(0.0, 0.0); n * n];
                for k in 0..n {
                    for kp in 0..n {
                        let phase = -(self.lambda[k] + self.lambda[kp]) * z;
                        block[k * n + kp] = self.eta[(k, kp)] * base * Complex64::from_polar(1.0, phase);
                    }
                }
                block
            })
            .collect();
        self.assemble(&blocks)
    }

    fn assemble(&self, blocks: &[Vec<Complex64>]) -> CMatrix {
        let n = self.map.n;
        let total = self.map.total();
        let mut f = CMatrix::zeros(total, total);
        for (kernel, block) in self.kernels.iter().zip(blocks) {
            let (l, lp) = kernel.bands;
            for k in 0..n {
                for kp in 0..n {
                    if l == lp && kp < k {
                        continue;
                    }
                    let v = block[k * n + kp];
                    let a = self.map.index(k, l);
                    let b = self.map.index(kp, lp);
                    f[(a, b)] = v;
                    f[(b, a)] = v;
                }
            }
        }
        f
    }
}

impl CouplingSampler for JssaModel {
    fn dim(&self) -> usize {
        self.map.total()
    }

    fn sample(&self, z: f64) -> CMatrix {
        self.coupling(z)
    }

    fn max_phase_rate(&self) -> f64 {
        let lam = self.lambda.iter().fold(0.0, |a: f64, l| a.max(l.abs()));
        let db = self.kernels.iter().fold(0.0, |a: f64, k| a.max(k.max_delta_beta()));
        db + 2.0 * lam
    }
}

/// Full JSSA by panel quadrature over every band rectangle, with a
/// convergence check against twice the quadrature order.
#[allow(clippy::too_many_arguments)]
pub fn build_jssa_full(
    basis: &SupermodeBasis,
    frexels: &FrexelBasis,
    pump_spectral: &PumpSpectrum,
    pump_spatial: &SpatialPumpProfile,
    pm: &PhaseMatching,
    g_sqrt_p: f64,
    z: f64,
    opts: &QuadratureOptions,
) -> Result<Jssa> {
    let gamma = check_gain(g_sqrt_p, z)?;
    let model = JssaModel::new(basis, frexels, pump_spectral, pump_spatial, pm, z, opts)?;
    let f = model.jssa(z);
    let fine_opts = QuadratureOptions {
        order: 2 * opts.order,
        ..*opts
    };
    let fine = JssaModel::new(basis, frexels, pump_spectral, pump_spatial, pm, z, &fine_opts)?.jssa(z);
    let scale = max_abs(&fine).max(f64::MIN_POSITIVE);
    let map = model.index_map();
    let mut warnings = Vec::new();
    for (l, lp) in band_pairs(frexels.bands()) {
        let mut worst: f64 = 0.0;
        for k in 0..map.n {
            for kp in 0..map.n {
                let (a, b) = (map.index(k, l), map.index(kp, lp));
                worst = worst.max((f[(a, b)] - fine[(a, b)]).norm() / scale);
            }
        }
        if worst > CONVERGENCE_TOL {
            warnings.push(QuadratureWarning {
                bands: (l, lp),
                relative_change: worst,
            });
        }
    }
    Ok(Jssa {
        f,
        gamma,
        z,
        index_map: map,
        warnings,
    })
}

/// Separable approximation `η_{k,k'} Ω^{l,l'} sinc(Δβ̃ z/2) e^{iΔβ̃ z/2}`
/// with `Δβ̃ = Δβ^{l,l'} - λ_k - λ_{k'}`. The phase-matching factor is
/// averaged over both band orderings, which only matters when `γ₋ ≠ 0`.
#[allow(clippy::too_many_arguments)]
pub fn build_jssa_separable(
    basis: &SupermodeBasis,
    frexels: &FrexelBasis,
    pump_spectral: &PumpSpectrum,
    pump_spatial: &SpatialPumpProfile,
    pm: &PhaseMatching,
    g_sqrt_p: f64,
    z: f64,
    opts: &QuadratureOptions,
) -> Result<Jssa> {
    let gamma = check_gain(g_sqrt_p, z)?;
    let eta = eta_project(basis, pump_spatial)?.eta_kk;
    let n = basis.n();
    let map = ModeIndexMap::new(n, frexels.bands());
    let mut f = CMatrix::zeros(map.total(), map.total());
    let mut warnings = Vec::new();
    for (l, lp) in band_pairs(frexels.bands()) {
        let omega = project_pump(pump_spectral, frexels, (l, lp), opts)?;
        warnings.extend(omega.warning);
        let db = project_delta_beta(pm, frexels, (l, lp));
        let db_swap = project_delta_beta(pm, frexels, (lp, l));
        for k in 0..n {
            for kp in 0..n {
                let lam = basis.lambda[k] + basis.lambda[kp];
                let phi = |d: f64| {
                    let theta = 0.5 * (d - lam) * z;
                    sinc(theta) * Complex64::from_polar(1.0, theta)
                };
                let v = eta[(k, kp)] * omega.value * (phi(db) + phi(db_swap)) * 0.5;
                let (a, b) = (map.index(k, l), map.index(kp, lp));
                f[(a, b)] = v;
                f[(b, a)] = v;
            }
        }
    }
    Ok(Jssa {
        f,
        gamma,
        z,
        index_map: map,
        warnings,
    })
}

/// Delta-pump JSSA for a flat spatial pump of phase `phi`: entries
/// `(e^{iφ}/√N) sinc(λ_k z) e^{-iλ_k z}` between `(k, l)` and `(k, L-1-l)`.
pub fn narrowband_jssa(basis: &SupermodeBasis, bands: usize, z: f64, phi: f64, g_sqrt_p: f64) -> Result<Jssa> {
    let gamma = check_gain(g_sqrt_p, z)?;
    if bands == 0 {
        return Err(Error::config("frexels.count", "need at least one band"));
    }
    let n = basis.n();
    let map = ModeIndexMap::new(n, bands);
    let amp = Complex64::from_polar((n as f64).sqrt().recip(), phi);
    let mut f = CMatrix::zeros(map.total(), map.total());
    for l in 0..bands {
        let lp = map.mirror_band(l);
        for k in 0..n {
            let x = basis.lambda[k] * z;
            f[(map.index(k, l), map.index(k, lp))] = amp * sinc(x) * Complex64::from_polar(1.0, -x);
        }
    }
    Ok(Jssa {
        f,
        gamma,
        z,
        index_map: map,
        warnings: Vec::new(),
    })
}

/// Local coupling of the delta pump with a flat spatial profile:
/// `(e^{iφ}/√N) e^{-2iλ_k z}` on the mirror-band pattern.
#[derive(Debug, Clone)]
pub struct NarrowbandSampler {
    lambda: Vec<f64>,
    map: ModeIndexMap,
    amp: Complex64,
}

impl NarrowbandSampler {
    pub fn new(basis: &SupermodeBasis, bands: usize, phi: f64) -> Self {
        let n = basis.n();
        Self {
            lambda: basis.lambda.clone(),
            map: ModeIndexMap::new(n, bands),
            amp: Complex64::from_polar((n as f64).sqrt().recip(), phi),
        }
    }
}

impl CouplingSampler for NarrowbandSampler {
    fn dim(&self) -> usize {
        self.map.total()
    }

    fn sample(&self, z: f64) -> CMatrix {
        let total = self.map.total();
        let mut out = CMatrix::zeros(total, total);
        for l in 0..self.map.bands {
            let lp = self.map.mirror_band(l);
            for (k, lam) in self.lambda.iter().enumerate() {
                out[(self.map.index(k, l), self.map.index(k, lp))] =
                    self.amp * Complex64::from_polar(1.0, -2.0 * lam * z);
            }
        }
        out
    }

    fn max_phase_rate(&self) -> f64 {
        2.0 * self.lambda.iter().fold(0.0, |a: f64, l| a.max(l.abs()))
    }
}

/// A `z`-independent coupling matrix.
#[derive(Debug, Clone)]
pub struct ConstantSampler(pub CMatrix);

impl CouplingSampler for ConstantSampler {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn sample(&self, _z: f64) -> CMatrix {
        self.0.clone()
    }

    fn max_phase_rate(&self) -> f64 {
        0.0
    }
}
