//! Scenario files: TOML, versioned by a top-level `schema_version`.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use cvlattice::dispersion::{DispersionModel, IndexModel};
use cvlattice::{LatticeSpec, PhaseMatching, PumpSpectrum, QuadratureOptions, SpatialPumpProfile};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Tag};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub frexels: FrexelConfig,
    #[serde(default)]
    pub pump: PumpConfig,
    #[serde(default)]
    pub phasematching: PhaseMatchingConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub dispersion: DispersionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Waveguide count.
    pub n: usize,
    /// `C_M`, mm⁻¹.
    pub coupling: f64,
    #[serde(default)]
    pub profile: ProfileConfig,
}

/// `"homogeneous"`, `"glauber_fock"`, or the `N-1` bond weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileConfig {
    Named(String),
    Explicit(Vec<f64>),
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig::Named("homogeneous".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrexelConfig {
    /// Band count `L`.
    pub count: usize,
    /// Band width `Δ_F`, rad/ps.
    pub width: f64,
}

impl Default for FrexelConfig {
    fn default() -> Self {
        Self { count: 2, width: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialKind {
    Flat,
    Single,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralKind {
    Monochromatic,
    Gaussian,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpConfig {
    pub spatial: SpatialKind,
    /// Global pump phase `φ`, rad.
    pub phase: f64,
    /// 1-based waveguide for `spatial = "single"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waveguide: Option<usize>,
    /// `[re, im]` per waveguide for `spatial = "explicit"`; normalized on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<[f64; 2]>>,
    pub spectral: SpectralKind,
    /// `Δ_p`, rad/ps, for `spectral = "gaussian"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_p: Option<f64>,
    /// `[s, re, im]` rows for `spectral = "tabulated"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 3]>>,
    /// `g√p_h` with `p_h = P_h / N` the mean power per guide, mm⁻¹.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_sqrt_ph: Option<f64>,
    /// `g√P_h` with the total pump power, mm⁻¹.
    #[serde(default, rename = "g_sqrt_Ph", skip_serializing_if = "Option::is_none")]
    pub g_sqrt_ph_total: Option<f64>,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            spatial: SpatialKind::Flat,
            phase: -FRAC_PI_2,
            waveguide: None,
            eta: None,
            spectral: SpectralKind::Monochromatic,
            delta_p: None,
            table: None,
            g_sqrt_ph: None,
            g_sqrt_ph_total: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseMatchingConfig {
    /// mm⁻¹.
    #[serde(default)]
    pub delta_beta0: f64,
    /// ps/mm.
    #[serde(default)]
    pub gamma_plus: f64,
    /// ps/mm.
    #[serde(default)]
    pub gamma_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    LowGain,
    FlatPump,
    Ode,
}

impl Solver {
    pub fn parse(name: &str) -> CliResult<Self> {
        match name {
            "low_gain" => Ok(Solver::LowGain),
            "flat_pump" => Ok(Solver::FlatPump),
            "ode" => Ok(Solver::Ode),
            other => Err(CliError::config(
                "run.solver",
                format!("unknown solver `{other}` (expected low_gain, flat_pump or ode)"),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Solver::LowGain => "low_gain",
            Solver::FlatPump => "flat_pump",
            Solver::Ode => "ode",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JssaKind {
    Full,
    Separable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Propagation length, mm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub solver: Solver,
    /// JSSA construction used by the low-gain solver for a broadband pump.
    pub jssa: JssaKind,
    pub quadrature_order: usize,
    pub max_panels: usize,
    /// Nominal RK4 step, mm.
    pub ode_step: f64,
    pub ode_max_phase_per_step: f64,
    /// Relative edge threshold `ε`.
    pub edge_epsilon: f64,
    /// Rotate the idler bands by π/2 before forming the graph.
    pub idler_rotation: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let q = QuadratureOptions::default();
        Self {
            z: None,
            solver: Solver::LowGain,
            jssa: JssaKind::Full,
            quadrature_order: q.order,
            max_panels: q.max_panels,
            ode_step: 0.01,
            ode_max_phase_per_step: 0.1,
            edge_epsilon: cvlattice::graph::DEFAULT_EDGE_EPSILON,
            idler_rotation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    /// `C₀`, μm·mm⁻¹.
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "Gamma0")]
    pub gamma0: f64,
    /// Design wavelength, μm.
    pub lambda0: f64,
    /// Minimal spacing, μm.
    pub d_m: f64,
    /// Smallest spacing the coupling law is trusted at, μm.
    pub d_valid: f64,
    /// `[λ, n]` rows; the built-in lithium niobate Sellmeier model if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index_table: Option<Vec<[f64; 2]>>,
    /// Design profile `f^D`; the lattice profile if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_design: Option<Vec<f64>>,
    /// Explicit wavelengths, μm. Overrides the grid below.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelengths: Option<Vec<f64>>,
    /// Grid `λ₀ ± half_width` in steps of `step`, μm.
    pub half_width: f64,
    pub step: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        let ln = DispersionModel::lithium_niobate();
        Self {
            c0: ln.c0,
            gamma0: ln.gamma0,
            lambda0: ln.lambda0,
            d_m: ln.d_m,
            d_valid: ln.d_valid,
            index_table: None,
            f_design: None,
            wavelengths: None,
            half_width: 0.05,
            step: 0.01,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse { message, .. } => CliError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Parse {
            path: "<config>".into(),
            message: e.to_string().trim_end().to_string(),
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!("unsupported version {} (this build reads {SCHEMA_VERSION})", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    /// TOML text that reproduces this scenario, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }

    pub fn lattice_spec(&self) -> CliResult<LatticeSpec> {
        let l = &self.lattice;
        match &l.profile {
            ProfileConfig::Named(name) => match name.as_str() {
                "homogeneous" => LatticeSpec::homogeneous(l.n, l.coupling),
                "glauber_fock" => LatticeSpec::glauber_fock(l.n, l.coupling),
                other => {
                    return Err(CliError::config(
                        "lattice.profile",
                        format!("unknown profile `{other}` (expected homogeneous, glauber_fock or a list)"),
                    ))
                }
            },
            ProfileConfig::Explicit(f) => LatticeSpec::new(l.n, l.coupling, f.clone()),
        }
        .tag("lattice")
    }

    pub fn spatial_pump(&self) -> CliResult<SpatialPumpProfile> {
        let p = &self.pump;
        let n = self.lattice.n;
        match p.spatial {
            SpatialKind::Flat => Ok(SpatialPumpProfile::flat(n, p.phase)),
            SpatialKind::Single => {
                let j = p
                    .waveguide
                    .ok_or_else(|| CliError::config("pump.waveguide", "required for spatial = \"single\""))?;
                if j == 0 || j > n {
                    return Err(CliError::config("pump.waveguide", format!("must lie in 1..={n}, got {j}")));
                }
                SpatialPumpProfile::single(n, j - 1, p.phase).tag("spectral")
            }
            SpatialKind::Explicit => {
                let eta = p
                    .eta
                    .as_ref()
                    .ok_or_else(|| CliError::config("pump.eta", "required for spatial = \"explicit\""))?;
                if eta.len() != n {
                    return Err(CliError::config("pump.eta", format!("expected {n} entries, got {}", eta.len())));
                }
                let eta = eta.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                SpatialPumpProfile::explicit(eta, p.phase).tag("spectral")
            }
        }
    }

    pub fn spectral_pump(&self) -> CliResult<PumpSpectrum> {
        let p = &self.pump;
        match p.spectral {
            SpectralKind::Monochromatic => Ok(PumpSpectrum::Monochromatic),
            SpectralKind::Gaussian => {
                let dp = p
                    .delta_p
                    .ok_or_else(|| CliError::config("pump.delta_p", "required for spectral = \"gaussian\""))?;
                PumpSpectrum::gaussian(dp).tag("spectral")
            }
            SpectralKind::Tabulated => {
                let table = p
                    .table
                    .as_ref()
                    .ok_or_else(|| CliError::config("pump.table", "required for spectral = \"tabulated\""))?;
                PumpSpectrum::tabulated(table.iter().map(|[s, re, im]| (*s, Complex64::new(*re, *im))).collect())
                    .tag("spectral")
            }
        }
    }

    pub fn phase_matching(&self) -> PhaseMatching {
        let pm = &self.phasematching;
        PhaseMatching {
            delta_beta0: pm.delta_beta0,
            gamma_plus: pm.gamma_plus,
            gamma_minus: pm.gamma_minus,
        }
    }

    pub fn quadrature(&self) -> CliResult<QuadratureOptions> {
        let r = &self.run;
        if r.quadrature_order < 2 {
            return Err(CliError::config("run.quadrature_order", "must be at least 2"));
        }
        if r.max_panels == 0 {
            return Err(CliError::config("run.max_panels", "must be positive"));
        }
        Ok(QuadratureOptions {
            order: r.quadrature_order,
            max_panels: r.max_panels,
        })
    }

    pub fn z(&self) -> CliResult<f64> {
        let z = self.run.z.ok_or_else(|| CliError::config("run.z", "propagation length is required"))?;
        if !(z.is_finite() && z >= 0.0) {
            return Err(CliError::config("run.z", format!("must be finite and non-negative, got {z}")));
        }
        Ok(z)
    }

    /// Total nonlinear rate `g√P_h`, from whichever of the two keys is set.
    pub fn g_sqrt_ph_total(&self) -> CliResult<f64> {
        let p = &self.pump;
        let g = match (p.g_sqrt_ph, p.g_sqrt_ph_total) {
            (Some(g), None) => g * (self.lattice.n as f64).sqrt(),
            (None, Some(g)) => g,
            (Some(_), Some(_)) => {
                return Err(CliError::config("pump.g_sqrt_ph", "set only one of g_sqrt_ph and g_sqrt_Ph"))
            }
            (None, None) => {
                return Err(CliError::config("pump.g_sqrt_ph", "one of g_sqrt_ph or g_sqrt_Ph is required"))
            }
        };
        if !(g.is_finite() && g >= 0.0) {
            return Err(CliError::config("pump.g_sqrt_ph", format!("must be finite and non-negative, got {g}")));
        }
        Ok(g)
    }

    pub fn dispersion_model(&self) -> CliResult<DispersionModel> {
        let d = &self.dispersion;
        let index = match &d.index_table {
            Some(rows) => IndexModel::Tabulated {
                samples: rows.iter().map(|[l, n]| (*l, *n)).collect(),
            },
            None => DispersionModel::lithium_niobate().index,
        };
        let model = DispersionModel {
            c0: d.c0,
            gamma0: d.gamma0,
            lambda0: d.lambda0,
            d_m: d.d_m,
            d_valid: d.d_valid,
            index,
        };
        model.validate().tag("dispersion")?;
        Ok(model)
    }

    pub fn f_design(&self) -> CliResult<Vec<f64>> {
        match &self.dispersion.f_design {
            Some(f) => Ok(f.clone()),
            None => Ok(self.lattice_spec()?.profile().to_vec()),
        }
    }

    pub fn wavelengths(&self) -> CliResult<Vec<f64>> {
        let d = &self.dispersion;
        if let Some(w) = &d.wavelengths {
            if w.is_empty() {
                return Err(CliError::config("dispersion.wavelengths", "must not be empty"));
            }
            return Ok(w.clone());
        }
        if !(d.step.is_finite() && d.step > 0.0 && d.half_width.is_finite() && d.half_width >= 0.0) {
            return Err(CliError::config(
                "dispersion.step",
                "step must be positive and half_width non-negative",
            ));
        }
        Ok(cvlattice::dispersion::wavelength_grid(d.lambda0, d.half_width, d.step))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schema_version = 1\n[lattice]\nn = 3\ncoupling = 0.01\n";

    #[test]
    fn defaults_fill_optional_sections() {
        let cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.frexels, FrexelConfig::default());
        assert_eq!(cfg.run.solver, Solver::LowGain);
        assert_eq!(cfg.lattice_spec().unwrap().profile(), &[1.0, 1.0]);
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        cfg.pump.eta = Some(vec![[1.0, 0.5], [0.0, 0.0], [0.25, -1.0]]);
        cfg.pump.g_sqrt_ph_total = Some(0.1);
        cfg.lattice.profile = ProfileConfig::Explicit(vec![0.3, 0.7]);
        let back = ScenarioConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_field_reports_location() {
        let err = ScenarioConfig::parse("schema_version = 1\n[lattice]\nn = 3\ncoupling = 0.01\nbogus = 1\n").unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let err = ScenarioConfig::parse("schema_version = 7\n[lattice]\nn = 3\ncoupling = 0.01\n").unwrap_err();
        assert!(err.to_string().contains("schema_version"));
    }

    #[test]
    fn gain_keys_are_exclusive_and_scaled() {
        let mut cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        assert!(cfg.g_sqrt_ph_total().is_err());
        cfg.pump.g_sqrt_ph = Some(0.05);
        assert!((cfg.g_sqrt_ph_total().unwrap() - 0.05 * 3f64.sqrt()).abs() < 1e-15);
        cfg.pump.g_sqrt_ph_total = Some(0.05);
        assert!(cfg.g_sqrt_ph_total().is_err());
    }

    #[test]
    fn named_profile_must_exist() {
        let mut cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        cfg.lattice.profile = ProfileConfig::Named("ramp".into());
        assert_eq!(cfg.lattice_spec().unwrap_err().exit_code(), 1);
    }
}
