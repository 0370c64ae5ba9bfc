//! Frexel measurement basis, pump profiles, phase mismatch, and the frexel
//! projections of the spectral functions.
//!
//! Frequencies are detunings in rad/ps: signal and idler are measured from
//! half the pump carrier, pump sums `s = δ_s + δ_i` from the carrier itself.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sinc;
use crate::quadrature::{panels, GaussLegendre};

/// Relative change between quadrature orders above which a result is flagged.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Contiguous rectangular frequency bands, symmetric about degeneracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrexelBasis {
    pub width: f64,
    pub centers: Vec<f64>,
}

impl FrexelBasis {
    pub fn bands(&self) -> usize {
        self.centers.len()
    }

    pub fn edges(&self, band: usize) -> (f64, f64) {
        let c = self.centers[band];
        (c - 0.5 * self.width, c + 0.5 * self.width)
    }

    /// Normalized mode function `ξ^l(ω)`, real, height `Δ_F^{-1/2}`.
    pub fn amplitude(&self, band: usize, omega: f64) -> f64 {
        let (a, b) = self.edges(band);
        if omega >= a && omega < b {
            self.width.sqrt().recip()
        } else {
            0.0
        }
    }

    pub fn mirror(&self, band: usize) -> usize {
        self.bands() - 1 - band
    }
}

pub fn make_frexels(bands: usize, width: f64) -> Result<FrexelBasis> {
    if bands == 0 {
        return Err(Error::config("frexels.count", "need at least one band"));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::config(
            "frexels.width",
            format!("band width must be positive, got {width}"),
        ));
    }
    let mid = 0.5 * (bands as f64 + 1.0);
    let centers = (1..=bands).map(|l| (l as f64 - mid) * width).collect();
    Ok(FrexelBasis { width, centers })
}

/// Spectral pump amplitude as a function of the sum detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PumpSpectrum {
    /// `Ω(s) = ((2π)^{1/2} Δ_p)^{-1/2} exp(-s² / (4 Δ_p²))`.
    Gaussian { delta_p: f64 },
    /// `δ(s)`; only ever consumed analytically.
    Monochromatic,
    /// Linearly interpolated samples `(s, Ω(s))`, zero outside the table.
    Tabulated { samples: Vec<(f64, Complex64)> },
}

impl PumpSpectrum {
    pub fn gaussian(delta_p: f64) -> Result<Self> {
        if !(delta_p.is_finite() && delta_p > 0.0) {
            return Err(Error::config(
                "pump.delta_p",
                format!("pump bandwidth must be positive, got {delta_p}"),
            ));
        }
        Ok(PumpSpectrum::Gaussian { delta_p })
    }

    pub fn tabulated(mut samples: Vec<(f64, Complex64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::config("pump.table", "need at least two samples"));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if samples.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::config("pump.table", "duplicate abscissa"));
        }
        Ok(PumpSpectrum::Tabulated { samples })
    }

    pub fn is_monochromatic(&self) -> bool {
        matches!(self, PumpSpectrum::Monochromatic)
    }
}

pub fn pump_amplitude(pump: &PumpSpectrum, s: f64) -> Result<Complex64> {
    match pump {
        PumpSpectrum::Gaussian { delta_p } => Ok(Complex64::new(gaussian_pump(*delta_p, s), 0.0)),
        PumpSpectrum::Tabulated { samples } => Ok(interpolate(samples, s)),
        PumpSpectrum::Monochromatic => Err(Error::Usage(
            "a monochromatic pump is a distribution and cannot be sampled".into(),
        )),
    }
}

fn gaussian_pump(delta_p: f64, s: f64) -> f64 {
    ((2.0 * PI).sqrt() * delta_p).powf(-0.5) * (-s * s / (4.0 * delta_p * delta_p)).exp()
}

fn interpolate(samples: &[(f64, Complex64)], s: f64) -> Complex64 {
    let first = samples[0].0;
    let last = samples[samples.len() - 1].0;
    if s < first || s > last {
        return Complex64::new(0.0, 0.0);
    }
    let idx = samples.partition_point(|(x, _)| *x <= s);
    if idx == samples.len() {
        return samples[idx - 1].1;
    }
    let (x0, y0) = samples[idx - 1];
    let (x1, y1) = samples[idx];
    let t = (s - x0) / (x1 - x0);
    y0 + (y1 - y0) * t
}

/// Normalized spatial distribution of the pump over the waveguides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialPumpProfile {
    pub eta: Vec<Complex64>,
}

impl SpatialPumpProfile {
    /// `η_j = e^{iφ} / sqrt(N)`.
    pub fn flat(n: usize, phase: f64) -> Self {
        let amp = Complex64::from_polar((n as f64).sqrt().recip(), phase);
        Self { eta: vec![amp; n] }
    }

    /// All power in guide `j` (0-based).
    pub fn single(n: usize, j: usize, phase: f64) -> Result<Self> {
        if j >= n {
            return Err(Error::config(
                "pump.waveguide",
                format!("waveguide {j} out of range for N = {n}"),
            ));
        }
        let mut eta = vec![Complex64::new(0.0, 0.0); n];
        eta[j] = Complex64::from_polar(1.0, phase);
        Ok(Self { eta })
    }

    /// Arbitrary amplitudes, rescaled to unit norm and rotated by `phase`.
    pub fn explicit(eta: Vec<Complex64>, phase: f64) -> Result<Self> {
        let norm = eta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::config("pump.eta", "amplitudes must not all vanish"));
        }
        let rot = Complex64::from_polar(1.0 / norm, phase);
        Ok(Self {
            eta: eta.into_iter().map(|z| z * rot).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn is_flat(&self) -> bool {
        let first = self.eta[0];
        self.eta.iter().all(|z| (z - first).norm() <= 1e-12)
    }

    /// Common phase of a flat profile.
    pub fn phase(&self) -> f64 {
        self.eta[0].arg()
    }
}

/// Linear phase-mismatch model
/// `Δβ = Δβ₀ + γ₊ (δ_s + δ_i) + γ₋ (δ_s - δ_i)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatching {
    pub delta_beta0: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

impl PhaseMatching {
    pub fn is_zero(&self) -> bool {
        self.delta_beta0 == 0.0 && self.gamma_plus == 0.0 && self.gamma_minus == 0.0
    }
}

pub fn delta_beta(pm: &PhaseMatching, omega_s: f64, omega_i: f64) -> f64 {
    pm.delta_beta0 + pm.gamma_plus * (omega_s + omega_i) + pm.gamma_minus * (omega_s - omega_i)
}

/// A quadrature result plus the convergence diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected<T> {
    pub value: T,
    pub warning: Option<QuadratureWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureWarning {
    pub bands: (usize, usize),
    pub relative_change: f64,
}

/// Quadrature settings shared by the spectral integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Gauss–Legendre points per panel and axis.
    pub order: usize,
    /// Upper bound on panels along either axis.
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            order: 32,
            max_panels: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNode {
    /// Quadrature weight times `ξ^l ξ^{l'}`.
    pub weight: f64,
    pub pump: Complex64,
    pub delta_beta: f64,
}

/// Quadrature nodes over one signal/idler band rectangle.
///
/// When the mismatch is not symmetric under exchange of signal and idler
/// (`γ₋ ≠ 0`) every node carries both orderings at half weight, so the
/// kernel of `(l, l')` equals that of `(l', l)`.
///
/// The rectangle is integrated in sheared coordinates: the pump sum
/// `s = δ_s + δ_i` on the outside and the signal detuning on the inside, each
/// axis split into Gauss–Legendre panels. Panels on `s` resolve the pump
/// (width at most `Δ_p` across the Gaussian core) and both axes keep at least
/// eight nodes per period of the phase-mismatch oscillation up to `z_max`.
#[derive(Debug, Clone)]
pub struct BandPairKernel {
    pub bands: (usize, usize),
    pub nodes: Vec<KernelNode>,
}

impl BandPairKernel {
    pub fn build(
        pump: &PumpSpectrum,
        frexels: &FrexelBasis,
        pm: &PhaseMatching,
        bands: (usize, usize),
        z_max: f64,
        opts: &QuadratureOptions,
    ) -> Result<Self> {
        if pump.is_monochromatic() {
            return Err(Error::Usage(
                "monochromatic pump has no quadrature kernel; use the narrowband form".into(),
            ));
        }
        let gl = GaussLegendre::new(opts.order);
        let (a1, b1) = frexels.edges(bands.0);
        let (a2, b2) = frexels.edges(bands.1);
        let (s_lo, s_hi) = (a1 + a2, b1 + b2);

        let nodes_per_panel = opts.order as f64;
        let osc_width = |rate: f64| {
            if rate > 0.0 {
                2.0 * PI / rate * nodes_per_panel / 8.0
            } else {
                f64::INFINITY
            }
        };
        let z = z_max.abs();
        let s_osc = osc_width((pm.gamma_plus - pm.gamma_minus).abs() * z);
        let x_osc = osc_width(2.0 * pm.gamma_minus.abs() * z);

        let mut breaks = vec![a1 + b2, b1 + a2];
        let mut core: Option<(f64, f64, f64)> = None;
        match pump {
            PumpSpectrum::Gaussian { delta_p } => {
                let half = 12.0 * delta_p;
                breaks.extend([-half, 0.0, half]);
                core = Some((-half, half, *delta_p));
            }
            PumpSpectrum::Tabulated { samples } => {
                breaks.extend(samples.iter().map(|(s, _)| *s));
            }
            PumpSpectrum::Monochromatic => unreachable!(),
        }

        let coarse = panels(s_lo, s_hi, &breaks, f64::INFINITY);
        let mut s_panels = Vec::new();
        for (lo, hi) in coarse {
            let mid = 0.5 * (lo + hi);
            let mut width = s_osc;
            if let Some((c_lo, c_hi, dp)) = core {
                if mid > c_lo && mid < c_hi {
                    width = width.min(dp);
                }
            }
            s_panels.extend(panels(lo, hi, &[], width));
            if s_panels.len() > opts.max_panels {
                return Err(Error::Numerical(format!(
                    "bands {bands:?}: more than {} quadrature panels needed along the pump-sum axis; \
                     reduce z, the mismatch slope, or the band width",
                    opts.max_panels
                )));
            }
        }

        // Signal and idler are the same field, so only the part of the
        // integrand symmetric under ω_s ↔ ω_i couples; the γ₋ term is not.
        let symmetrize = pm.gamma_minus != 0.0;
        let mut nodes = Vec::new();
        let frexel_weight = frexels.width.recip();
        for (lo, hi) in s_panels {
            for (s, ws) in gl.on(lo, hi) {
                let x_lo = a1.max(s - b2);
                let x_hi = b1.min(s - a2);
                if x_hi <= x_lo {
                    continue;
                }
                let amp = pump_amplitude(pump, s)?;
                let x_panels = ((x_hi - x_lo) / x_osc).ceil().max(1.0);
                if x_panels > opts.max_panels as f64 {
                    return Err(Error::Numerical(format!(
                        "bands {bands:?}: more than {} quadrature panels needed along the signal axis",
                        opts.max_panels
                    )));
                }
                for (p_lo, p_hi) in panels(x_lo, x_hi, &[], x_osc) {
                    for (x, wx) in gl.on(p_lo, p_hi) {
                        let weight = ws * wx * frexel_weight;
                        if symmetrize {
                            for db in [delta_beta(pm, x, s - x), delta_beta(pm, s - x, x)] {
                                nodes.push(KernelNode {
                                    weight: 0.5 * weight,
                                    pump: amp,
                                    delta_beta: db,
                                });
                            }
                        } else {
                            nodes.push(KernelNode {
                                weight,
                                pump: amp,
                                delta_beta: delta_beta(pm, x, s - x),
                            });
                        }
                    }
                }
            }
        }
        Ok(Self { bands, nodes })
    }

    /// `∬ ξ^l ξ^{l'} Ω`.
    pub fn pump_projection(&self) -> Complex64 {
        self.nodes.iter().map(|n| n.pump * n.weight).sum()
    }

    /// `∬ ξ^l ξ^{l'} Ω sinc(θ) e^{iθ}` with `θ = (Δβ - Λ) z / 2`.
    pub fn jssa_factor(&self, lambda_sum: f64, z: f64) -> Complex64 {
        self.nodes
            .iter()
            .map(|n| {
                let theta = 0.5 * (n.delta_beta - lambda_sum) * z;
                n.pump * (n.weight * sinc(theta)) * Complex64::from_polar(1.0, theta)
            })
            .sum()
    }

    /// `∬ ξ^l ξ^{l'} Ω e^{iΔβ z}`, the local spectral coupling at `z`.
    pub fn coupling_factor(&self, z: f64) -> Complex64 {
        self.nodes
            .iter()
            .map(|n| n.pump * n.weight * Complex64::from_polar(1.0, n.delta_beta * z))
            .sum()
    }

    /// Largest phase-mismatch rate, for step-size guards.
    pub fn max_delta_beta(&self) -> f64 {
        self.nodes.iter().fold(0.0, |a, n| a.max(n.delta_beta.abs()))
    }
}

/// `Ω^{l,l'}`, evaluated at the configured order and checked against twice
/// that order.
pub fn project_pump(
    pump: &PumpSpectrum,
    frexels: &FrexelBasis,
    bands: (usize, usize),
    opts: &QuadratureOptions,
) -> Result<Projected<Complex64>> {
    let pm = PhaseMatching::default();
    let value = BandPairKernel::build(pump, frexels, &pm, bands, 0.0, opts)?.pump_projection();
    let fine_opts = QuadratureOptions {
        order: 2 * opts.order,
        ..*opts
    };
    let fine = BandPairKernel::build(pump, frexels, &pm, bands, 0.0, &fine_opts)?.pump_projection();
    let floor = 1e-12 * pump_peak(pump) * frexels.width;
    let change = (value - fine).norm() / fine.norm().max(floor).max(f64::MIN_POSITIVE);
    let warning = (change > CONVERGENCE_TOL).then_some(QuadratureWarning {
        bands,
        relative_change: change,
    });
    Ok(Projected { value, warning })
}

/// Upper bound on `|Ω|`; `Δ_F` times this bounds every `|Ω^{l,l'}|`.
pub fn pump_peak(pump: &PumpSpectrum) -> f64 {
    match pump {
        PumpSpectrum::Gaussian { delta_p } => gaussian_pump(*delta_p, 0.0),
        PumpSpectrum::Tabulated { samples } => {
            samples.iter().fold(0.0, |a, (_, v)| a.max(v.norm()))
        }
        PumpSpectrum::Monochromatic => f64::INFINITY,
    }
}

/// Frexel-averaged mismatch `Δβ^{l,l'}`. For the linear model the
/// `|ξ|²`-weighted mean equals the value at the band centers.
pub fn project_delta_beta(pm: &PhaseMatching, frexels: &FrexelBasis, bands: (usize, usize)) -> f64 {
    delta_beta(pm, frexels.centers[bands.0], frexels.centers[bands.1])
}
