//! lattice → spectral → jssa → decomp → propagate → gaussian-graph.

use std::f64::consts::FRAC_PI_2;

use cvlattice::graph::covariance;
use cvlattice::linalg::{max_abs, max_diff, max_diff_real};
use cvlattice::spectral::make_frexels;
use cvlattice::{
    build_jssa_full, build_jssa_separable, classify_edges, diagonalize_lattice, flat_pump_solution_with_phase,
    gains, graph_z, idler_rotation, low_gain_bogoliubov, narrowband_jssa, ode_oracle, slow_to_lab, takagi,
    to_symplectic, BogoliubovTransform, CovarianceMatrix, EdgeKind, EdgeReport, GraphState, Jssa, JssaModel,
    ModeIndexMap, NarrowbandSampler, OdeSettings, SupermodeBasis,
};
use serde::Serialize;

use crate::config::{JssaKind, ScenarioConfig, SpectralKind, Solver};
use crate::error::{CliError, CliResult, Tag};

/// Relative tolerance on every structural residual, scaled by `max(1, |U|²)`.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    /// `‖UU† - VV† - I‖_max`.
    pub commutator: f64,
    /// `‖UVᵀ - (UVᵀ)ᵀ‖_max`.
    pub symmetry: f64,
    /// `‖SΩSᵀ - Ω‖_max`.
    pub symplectic: f64,
    /// Covariance rebuilt from `Z` against `S Sᵀ`.
    pub covariance_round_trip: f64,
    pub tolerance: f64,
}

impl Residuals {
    pub fn failures(&self) -> Vec<String> {
        [
            ("commutator", self.commutator),
            ("symmetry", self.symmetry),
            ("symplectic", self.symplectic),
            ("covariance_round_trip", self.covariance_round_trip),
        ]
        .into_iter()
        .filter(|(_, r)| r.is_nan() || *r > self.tolerance)
        .map(|(name, r)| format!("{name} residual {r:e} exceeds {:e}", self.tolerance))
        .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TakagiSummary {
    /// Takagi values `Λ_m`, descending.
    pub lambda: Vec<f64>,
    /// `Γ = g√P_h z`.
    pub gamma: f64,
    /// `max|Υ diag(Λ) Υᵀ - f| / max(1, max|f|)`.
    pub reconstruction: f64,
}

/// Difference to the exact flat-pump solution, when the scenario admits one.
#[derive(Debug, Clone, Serialize)]
pub struct FlatPumpCheck {
    pub max_du: f64,
    pub max_dv: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub solver: Solver,
    pub basis: SupermodeBasis,
    pub map: ModeIndexMap,
    /// Lab-frame transform before any idler rotation.
    pub lab: BogoliubovTransform,
    pub graph: GraphState,
    pub covariance: CovarianceMatrix,
    pub edges: EdgeReport,
    /// Squeezing parameters `r_m = asinh σ_m(V)`, descending.
    pub gains: Vec<f64>,
    pub takagi: Option<TakagiSummary>,
    pub quadrature_warnings: usize,
    pub flat_pump_check: Option<FlatPumpCheck>,
    pub residuals: Residuals,
}

impl Simulation {
    pub fn trace_u(&self) -> f64 {
        self.edges.trace_u
    }

    pub fn max_gain(&self) -> f64 {
        self.gains.first().copied().unwrap_or(0.0)
    }

    /// Mean spectral over mean spatial edge weight; NaN if either is absent.
    pub fn spectral_spatial_ratio(&self) -> f64 {
        match (
            self.edges.mean_weight(EdgeKind::Spectral),
            self.edges.mean_weight(EdgeKind::Spatial),
        ) {
            (Some(a), Some(b)) => a / b,
            _ => f64::NAN,
        }
    }
}

pub fn supermodes(cfg: &ScenarioConfig) -> CliResult<SupermodeBasis> {
    Ok(diagonalize_lattice(&cfg.lattice_spec()?))
}

pub fn simulate(cfg: &ScenarioConfig, solver: Solver) -> CliResult<Simulation> {
    let basis = supermodes(cfg)?;
    let frexels = make_frexels(cfg.frexels.count, cfg.frexels.width).tag("spectral")?;
    let spatial = cfg.spatial_pump()?;
    let spectral = cfg.spectral_pump()?;
    let pm = cfg.phase_matching();
    let opts = cfg.quadrature()?;
    let z = cfg.z()?;
    let g = cfg.g_sqrt_ph_total()?;
    let bands = frexels.bands();
    let n = basis.n();
    let phi = cfg.pump.phase;
    let monochromatic = cfg.pump.spectral == SpectralKind::Monochromatic;
    let flat = spatial.is_flat();
    if monochromatic && !flat {
        return Err(CliError::config(
            "pump.spectral",
            "a monochromatic pump is only supported with a flat spatial profile",
        ));
    }
    if solver == Solver::FlatPump && !(monochromatic && flat) {
        return Err(CliError::config(
            "run.solver",
            "flat_pump requires spatial = \"flat\" and spectral = \"monochromatic\"",
        ));
    }
    let g_per_guide = g / (n as f64).sqrt();

    let mut takagi_summary = None;
    let mut quadrature_warnings = 0;
    let lab = match solver {
        Solver::LowGain => {
            let jssa: Jssa = if monochromatic {
                narrowband_jssa(&basis, bands, z, phi, g)
            } else {
                match cfg.run.jssa {
                    JssaKind::Full => build_jssa_full(&basis, &frexels, &spectral, &spatial, &pm, g, z, &opts),
                    JssaKind::Separable => {
                        build_jssa_separable(&basis, &frexels, &spectral, &spatial, &pm, g, z, &opts)
                    }
                }
            }
            .tag("jssa")?;
            quadrature_warnings = jssa.warnings.len();
            let tk = takagi(&jssa.f).tag("decomp")?;
            let gs = gains(&tk, jssa.gamma).tag("decomp")?;
            takagi_summary = Some(TakagiSummary {
                reconstruction: max_diff(&tk.reconstruct(), &jssa.f) / max_abs(&jssa.f).max(1.0),
                lambda: tk.lambda.clone(),
                gamma: jssa.gamma,
            });
            low_gain_bogoliubov(&basis, &tk, &gs, z).tag("propagate")?
        }
        Solver::FlatPump => flat_pump_solution_with_phase(&basis, bands, g_per_guide, z, phi).tag("propagate")?,
        Solver::Ode => {
            let settings = OdeSettings {
                step: cfg.run.ode_step,
                max_phase_per_step: cfg.run.ode_max_phase_per_step,
            };
            let slow = if monochromatic {
                ode_oracle(&NarrowbandSampler::new(&basis, bands, phi), g, z, &settings)
            } else {
                let model = JssaModel::new(&basis, &frexels, &spectral, &spatial, &pm, z, &opts).tag("jssa")?;
                ode_oracle(&model, g, z, &settings)
            }
            .tag("propagate")?;
            slow_to_lab(&slow, &basis).tag("propagate")?
        }
    };

    let flat_pump_check = if monochromatic && flat && solver != Solver::FlatPump {
        let exact = flat_pump_solution_with_phase(&basis, bands, g_per_guide, z, phi).tag("propagate")?;
        Some(FlatPumpCheck {
            max_du: max_diff(&lab.u, &exact.u),
            max_dv: max_diff(&lab.v, &exact.v),
        })
    } else {
        None
    };

    let map = ModeIndexMap::new(n, bands);
    let state = if cfg.run.idler_rotation {
        idler_rotation(&lab, &map.idler_modes(), FRAC_PI_2).tag("gaussian-graph")?
    } else {
        lab.clone()
    };
    let sym = to_symplectic(&state).tag("gaussian-graph")?;
    let graph = graph_z(&sym).tag("gaussian-graph")?;
    let cov = covariance(&sym);
    let edges = classify_edges(&graph, &map, cfg.run.edge_epsilon).tag("gaussian-graph")?;
    let rebuilt = graph.covariance().tag("gaussian-graph")?;

    let scale = max_abs(&lab.u).max(1.0);
    let residuals = Residuals {
        commutator: lab.commutator_residual(),
        symmetry: lab.symmetry_residual(),
        symplectic: sym.residual(),
        covariance_round_trip: max_diff_real(&rebuilt.sigma, &cov.sigma),
        tolerance: RESIDUAL_TOL * scale * scale,
    };

    let mut gains: Vec<f64> = lab.v.clone().singular_values().iter().map(|s| s.asinh()).collect();
    gains.sort_by(|a, b| b.total_cmp(a));

    Ok(Simulation {
        solver,
        basis,
        map,
        lab,
        graph,
        covariance: cov,
        edges,
        gains,
        takagi: takagi_summary,
        quadrature_warnings,
        flat_pump_check,
        residuals,
    })
}

pub const SWEEP_PARAMETERS: [&str; 5] = ["g_sqrtp", "z", "C_M", "Delta_p", "Delta_F"];

/// Copy of `cfg` with one swept parameter replaced.
pub fn with_parameter(cfg: &ScenarioConfig, parameter: &str, value: f64) -> CliResult<ScenarioConfig> {
    let mut out = cfg.clone();
    match parameter {
        "g_sqrtp" => {
            if out.pump.g_sqrt_ph_total.is_some() {
                out.pump.g_sqrt_ph_total = Some(value);
            } else {
                out.pump.g_sqrt_ph = Some(value);
            }
        }
        "z" => out.run.z = Some(value),
        "C_M" => out.lattice.coupling = value,
        "Delta_p" => {
            if out.pump.spectral != SpectralKind::Gaussian {
                return Err(CliError::config(
                    "sweep.parameter",
                    "Delta_p can only be swept with spectral = \"gaussian\"",
                ));
            }
            out.pump.delta_p = Some(value);
        }
        "Delta_F" => out.frexels.width = value,
        other => {
            return Err(CliError::config(
                "sweep.parameter",
                format!("unknown parameter `{other}` (expected one of {})", SWEEP_PARAMETERS.join(", ")),
            ))
        }
    }
    Ok(out)
}
