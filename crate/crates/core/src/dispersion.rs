//! Wavelength dependence of evanescent coupling, the waveguide spacing that
//! realizes a design coupling profile, and the profile seen off design.
//!
//! Wavelengths and distances are in μm, couplings in mm⁻¹.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n² - 1 = Σ A λ² / (λ² - B)`, λ in μm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sellmeier {
    /// `(A, B)` pairs, `B` in μm².
    pub terms: Vec<(f64, f64)>,
    /// Inclusive validity range in μm.
    pub valid: (f64, f64),
}

impl Sellmeier {
    /// Extraordinary index of congruent lithium niobate at room temperature
    /// (Zelmon, Small and Jundt, JOSA B 14, 3319 (1997)), 0.4–5 μm.
    pub fn lithium_niobate_extraordinary() -> Self {
        Self {
            terms: vec![(2.9804, 0.02047), (0.5981, 0.0666), (8.9543, 416.08)],
            valid: (0.4, 5.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexModel {
    Sellmeier(Sellmeier),
    /// Linearly interpolated `(λ, n)` samples; valid over the table span.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl IndexModel {
    pub fn valid_range(&self) -> (f64, f64) {
        match self {
            IndexModel::Sellmeier(s) => s.valid,
            IndexModel::Tabulated { samples } => (samples[0].0, samples[samples.len() - 1].0),
        }
    }

    pub fn index(&self, lambda: f64) -> Result<f64> {
        let (lo, hi) = self.valid_range();
        if !(lambda >= lo && lambda <= hi) {
            return Err(Error::Domain(format!(
                "wavelength {lambda} μm outside the index model range [{lo}, {hi}] μm"
            )));
        }
        let n = match self {
            IndexModel::Sellmeier(s) => {
                let l2 = lambda * lambda;
                (1.0 + s.terms.iter().map(|(a, b)| a * l2 / (l2 - b)).sum::<f64>()).sqrt()
            }
            IndexModel::Tabulated { samples } => {
                let i = samples.partition_point(|(x, _)| *x <= lambda).clamp(1, samples.len() - 1);
                let ((x0, y0), (x1, y1)) = (samples[i - 1], samples[i]);
                y0 + (y1 - y0) * (lambda - x0) / (x1 - x0)
            }
        };
        if !(n.is_finite() && n > 1.0) {
            return Err(Error::Domain(format!("refractive index {n} at {lambda} μm is not above 1")));
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    /// μm·mm⁻¹.
    pub c0: f64,
    pub gamma0: f64,
    /// Design wavelength, μm.
    pub lambda0: f64,
    /// Shortest spacing in the array, μm.
    pub d_m: f64,
    /// Smallest spacing for which the coupling law holds, μm.
    pub d_valid: f64,
    pub index: IndexModel,
}

impl DispersionModel {
    /// Lithium niobate array designed at 1.55 μm with 13 μm minimal spacing.
    pub fn lithium_niobate() -> Self {
        Self {
            c0: 25.6,
            gamma0: 0.19,
            lambda0: 1.55,
            d_m: 13.0,
            d_valid: 13.0,
            index: IndexModel::Sellmeier(Sellmeier::lithium_niobate_extraordinary()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dispersion.C0", self.c0),
            ("dispersion.Gamma0", self.gamma0),
            ("dispersion.lambda0", self.lambda0),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        if let IndexModel::Tabulated { samples } = &self.index {
            if samples.len() < 2 || samples.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::config(
                    "dispersion.index",
                    "table needs at least two samples with increasing wavelength",
                ));
            }
        }
        if self.d_m.is_nan() || self.d_m < self.d_valid {
            return Err(Error::config(
                "dispersion.d_m",
                format!("minimal distance {} μm is below the validity limit {} μm", self.d_m, self.d_valid),
            ));
        }
        self.index.index(self.lambda0).map(|_| ())
    }

    /// Coupling at the design point, `C(λ₀, d_m)`.
    pub fn design_coupling(&self) -> Result<f64> {
        coupling_strength(self, self.lambda0, self.d_m)
    }
}

/// `C(λ, d) = C₀/λ · exp(-Γ₀ n(λ) d / λ)`.
pub fn coupling_strength(model: &DispersionModel, lambda: f64, d: f64) -> Result<f64> {
    // Distances produced by `distance_profile` can sit a rounding error below
    // `d_m`.
    if d.is_nan() || d < model.d_valid * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "distance {d} μm below the validity limit {} μm",
            model.d_valid
        )));
    }
    let n = model.index.index(lambda)?;
    Ok(model.c0 / lambda * (-model.gamma0 * n * d / lambda).exp())
}

fn check_profile(f_design: &[f64]) -> Result<()> {
    for (j, f) in f_design.iter().enumerate() {
        if !(*f > 0.0 && *f <= 1.0) {
            return Err(Error::Domain(format!(
                "design coupling f[{j}] = {f} must lie in (0, 1]"
            )));
        }
    }
    Ok(())
}

/// `d_j = d_m - λ₀ / (Γ₀ n(λ₀)) · ln f_j`.
pub fn distance_profile(model: &DispersionModel, f_design: &[f64]) -> Result<Vec<f64>> {
    check_profile(f_design)?;
    let n0 = model.index.index(model.lambda0)?;
    let k = model.lambda0 / (model.gamma0 * n0);
    Ok(f_design.iter().map(|f| model.d_m - k * f.ln()).collect())
}

/// `f_j(λ) = (λ₀/λ) exp((λ₀/λ)(n/n₀) ln f_j) exp(-Γ₀ (n/λ - n₀/λ₀) d_m)`.
pub fn distorted_profile(model: &DispersionModel, f_design: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_profile(f_design)?;
    let n = model.index.index(lambda)?;
    if lambda == model.lambda0 {
        return Ok(f_design.to_vec());
    }
    let n0 = model.index.index(model.lambda0)?;
    let ratio = model.lambda0 / lambda;
    let base = (-model.gamma0 * (n / lambda - n0 / model.lambda0) * model.d_m).exp();
    Ok(f_design
        .iter()
        .map(|f| ratio * (ratio * n / n0 * f.ln()).exp() * base)
        .collect())
}

/// Same quantity assembled from [`coupling_strength`] at the spacings of
/// [`distance_profile`], divided by the design coupling.
pub fn distorted_profile_via_coupling(model: &DispersionModel, f_design: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let cm = model.design_coupling()?;
    distance_profile(model, f_design)?
        .into_iter()
        .map(|d| coupling_strength(model, lambda, d).map(|c| c / cm))
        .collect()
}

/// `max |f_j(λ)/f_j^D - 1|` over the wavelengths and profile entries.
pub fn max_relative_deviation(model: &DispersionModel, f_design: &[f64], lambdas: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &l in lambdas {
        for (f, fd) in distorted_profile(model, f_design, l)?.iter().zip(f_design) {
            worst = worst.max((f / fd - 1.0).abs());
        }
    }
    Ok(worst)
}

/// Evenly spaced wavelengths `λ₀ ± half_width` (μm) with the given step.
pub fn wavelength_grid(center: f64, half_width: f64, step: f64) -> Vec<f64> {
    let count = (half_width / step).round() as i64;
    (-count..=count).map(|k| center + k as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignTable {
    pub f_design: Vec<f64>,
    pub distances: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `distorted[i][j]` is `f_j` at `lambdas[i]`.
    pub distorted: Vec<Vec<f64>>,
}

pub fn design_table(model: &DispersionModel, f_design: &[f64], lambdas: &[f64]) -> Result<DesignTable> {
    model.validate()?;
    let distances = distance_profile(model, f_design)?;
    let distorted = lambdas
        .iter()
        .map(|&l| distorted_profile(model, f_design, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(DesignTable {
        f_design: f_design.to_vec(),
        distances,
        lambdas: lambdas.to_vec(),
        distorted,
    })
}

impl DesignTable {
    /// Columns `j, f_design, d_um`, then one `f_at_<λ>` column per wavelength.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,f_design,d_um");
        for l in &self.lambdas {
            let _ = write!(out, ",f_at_{l}");
        }
        out.push('\n');
        for j in 0..self.f_design.len() {
            let _ = write!(out, "{},{},{}", j + 1, self.f_design[j], self.distances[j]);
            for row in &self.distorted {
                let _ = write!(out, ",{}", row[j]);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln() -> DispersionModel {
        DispersionModel::lithium_niobate()
    }

    #[test]
    fn sellmeier_reference_value() {
        let n = ln().index.index(1.55).unwrap();
        assert!((n - 2.137_56).abs() < 1e-4, "{n}");
        assert!(ln().index.index(0.3).is_err());
    }

    #[test]
    fn design_point_consistency() {
        let m = ln();
        let n0 = m.index.index(m.lambda0).unwrap();
        let cm = m.c0 / m.lambda0 * (-m.gamma0 * n0 * m.d_m / m.lambda0).exp();
        assert!((m.design_coupling().unwrap() - cm).abs() < 1e-15);
        let c1 = coupling_strength(&m, 1.55, 14.0).unwrap();
        assert!(c1 < cm);
        assert!(coupling_strength(&m, 1.55, 12.0).is_err());
    }

    #[test]
    fn distances_and_round_trip() {
        let m = ln();
        assert_eq!(distance_profile(&m, &[1.0]).unwrap(), vec![13.0]);
        let gf: Vec<f64> = (1..5).map(|j| (j as f64 / 4.0).sqrt()).collect();
        let d = distance_profile(&m, &gf).unwrap();
        assert!(d.windows(2).all(|w| w[0] > w[1]));
        let back = distorted_profile_via_coupling(&m, &gf, m.lambda0).unwrap();
        for (a, b) in back.iter().zip(&gf) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(distance_profile(&m, &[0.0]).is_err());
        assert!(distance_profile(&m, &[1.2]).is_err());
    }

    #[test]
    fn two_routes_agree() {
        let m = ln();
        let f = [1.0, 0.5, 0.1, 0.03];
        for l in wavelength_grid(1.55, 0.05, 0.001) {
            let a = distorted_profile(&m, &f, l).unwrap();
            let b = distorted_profile_via_coupling(&m, &f, l).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "λ = {l}");
            }
        }
        assert_eq!(distorted_profile(&m, &f, 1.55).unwrap(), f.to_vec());
    }

    #[test]
    fn deviation_grows_with_detuning_and_weaker_coupling() {
        let m = ln();
        let mut last = 0.0;
        for k in 1..=50 {
            let dev = max_relative_deviation(&m, &[1.0], &[1.55 + k as f64 * 1e-3]).unwrap();
            assert!(dev > last);
            last = dev;
        }
        let grid = wavelength_grid(1.55, 0.03, 0.001);
        let d: Vec<f64> = [1.0, 0.5, 0.1]
            .iter()
            .map(|f| max_relative_deviation(&m, &[*f], &grid).unwrap())
            .collect();
        assert!(d[0] < d[1] && d[1] < d[2]);
    }

    #[test]
    fn csv_layout() {
        let t = design_table(&ln(), &[1.0, 0.5], &[1.55]).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("j,f_design,d_um,f_at_1.55"));
        assert_eq!(lines.next(), Some("1,1,13,1"));
    }
}
