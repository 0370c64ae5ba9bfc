use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cvlattice::dispersion::design_table;
use cvlattice::EdgeKind;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ScenarioConfig, Solver};
use crate::error::{CliError, CliResult, Tag};
use crate::output::{column_csv, complex_matrix_csv, ensure_dir, real_matrix_csv, write_atomic};
use crate::pipeline::{self, FlatPumpCheck, Residuals, Simulation, TakagiSummary};

#[derive(Debug, Clone, Serialize)]
pub struct EdgeSummary {
    pub topology: String,
    pub count: usize,
    pub threshold: f64,
    pub suppressed_max: f64,
    pub off_pattern_max: f64,
    pub mean_spectral: Option<f64>,
    pub mean_spatial: Option<f64>,
    pub mean_spatio_spectral: Option<f64>,
    pub spectral_spatial_ratio: f64,
}

/// Everything needed to audit or repeat a `simulate` run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub status: &'static str,
    pub failures: Vec<String>,
    pub solver: &'static str,
    pub modes: usize,
    /// `r_m`, descending.
    pub gains: Vec<f64>,
    pub takagi: Option<TakagiSummary>,
    pub trace_u: f64,
    pub graph_condition: f64,
    pub edges: EdgeSummary,
    pub residuals: Residuals,
    pub flat_pump_check: Option<FlatPumpCheck>,
    pub quadrature_warnings: usize,
    pub files: Vec<PathBuf>,
    pub wall_time_s: f64,
    pub config: ScenarioConfig,
    /// The same scenario as TOML, ready to be fed back to `--config`.
    pub config_toml: String,
}

fn edge_summary(sim: &Simulation) -> EdgeSummary {
    let e = &sim.edges;
    EdgeSummary {
        topology: e.topology.label(),
        count: e.edges.len(),
        threshold: e.threshold,
        suppressed_max: e.suppressed_max,
        off_pattern_max: e.off_pattern_max,
        mean_spectral: e.mean_weight(EdgeKind::Spectral),
        mean_spatial: e.mean_weight(EdgeKind::Spatial),
        mean_spatio_spectral: e.mean_weight(EdgeKind::SpatioSpectral),
        spectral_spatial_ratio: sim.spectral_spatial_ratio(),
    }
}

fn solver_for(cfg: &ScenarioConfig, solver: Option<Solver>) -> Solver {
    solver.unwrap_or(cfg.run.solver)
}

/// `M.csv` (row `k` is supermode `k`) and `lambda.csv`, descending.
pub fn cmd_supermodes(cfg: &ScenarioConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let basis = pipeline::supermodes(cfg)?;
    ensure_dir(out)?;
    Ok(vec![
        write_atomic(out, "M.csv", &real_matrix_csv(&basis.m))?,
        write_atomic(out, "lambda.csv", &column_csv(&basis.lambda))?,
    ])
}

/// Runs the full pipeline and writes the matrices, the edge list and
/// `report.json`. A run whose residuals exceed tolerance still writes all
/// files, marks the report failed and returns an error.
pub fn cmd_simulate(cfg: &ScenarioConfig, out: &Path, solver: Option<Solver>) -> CliResult<RunReport> {
    let start = Instant::now();
    let sim = pipeline::simulate(cfg, solver_for(cfg, solver))?;
    ensure_dir(out)?;
    let mut edges_txt = sim.edges.summary();
    edges_txt.push('\n');
    edges_txt.push_str(&sim.edges.edge_list());
    let mut files = vec![
        write_atomic(out, "U.csv", &complex_matrix_csv(&sim.lab.u))?,
        write_atomic(out, "V.csv", &complex_matrix_csv(&sim.lab.v))?,
        write_atomic(out, "sigma.csv", &real_matrix_csv(&sim.covariance.sigma))?,
        write_atomic(out, "Z.csv", &complex_matrix_csv(&sim.graph.z))?,
        write_atomic(out, "edges.txt", &edges_txt)?,
    ];
    files.push(out.join("report.json"));
    let failures = sim.residuals.failures();
    let report = RunReport {
        schema_version: cfg.schema_version,
        status: if failures.is_empty() { "ok" } else { "failed" },
        failures: failures.clone(),
        solver: sim.solver.name(),
        modes: sim.map.total(),
        gains: sim.gains.clone(),
        takagi: sim.takagi.clone(),
        trace_u: sim.trace_u(),
        graph_condition: sim.graph.condition,
        edges: edge_summary(&sim),
        residuals: sim.residuals.clone(),
        flat_pump_check: sim.flat_pump_check.clone(),
        quadrature_warnings: sim.quadrature_warnings,
        files,
        wall_time_s: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
        config_toml: cfg.to_toml(),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(out, "report.json", &(json + "\n"))?;
    if !failures.is_empty() {
        return Err(CliError::Failed(failures.join("; ")));
    }
    Ok(report)
}

/// One `sweep.csv` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub trace_u: f64,
    pub max_gain: f64,
    pub spectral_spatial_ratio: f64,
}

pub fn sweep_rows(cfg: &ScenarioConfig, solver: Option<Solver>, parameter: &str, values: &[f64]) -> CliResult<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(CliError::config("sweep.values", "need at least one value"));
    }
    let scenarios = values
        .iter()
        .map(|v| pipeline::with_parameter(cfg, parameter, *v))
        .collect::<CliResult<Vec<_>>>()?;
    let solver = solver_for(cfg, solver);
    scenarios
        .par_iter()
        .zip(values.par_iter())
        .map(|(scenario, &value)| {
            let sim = pipeline::simulate(scenario, solver)?;
            let failures = sim.residuals.failures();
            if !failures.is_empty() {
                return Err(CliError::Failed(format!("{parameter} = {value}: {}", failures.join("; "))));
            }
            Ok(SweepRow {
                value,
                trace_u: sim.trace_u(),
                max_gain: sim.max_gain(),
                spectral_spatial_ratio: sim.spectral_spatial_ratio(),
            })
        })
        .collect()
}

pub fn sweep_csv(parameter: &str, rows: &[SweepRow]) -> String {
    let mut out = format!("{parameter},trace_U,max_r,spectral_spatial_ratio\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.value, r.trace_u, r.max_gain, r.spectral_spatial_ratio);
    }
    out
}

/// Parameter and values come from the arguments when given, otherwise from
/// the `[sweep]` section.
pub fn cmd_sweep(
    cfg: &ScenarioConfig,
    out: &Path,
    solver: Option<Solver>,
    parameter: Option<&str>,
    values: Option<&[f64]>,
) -> CliResult<PathBuf> {
    let section = cfg.sweep.as_ref();
    let parameter = parameter
        .or(section.map(|s| s.parameter.as_str()))
        .ok_or_else(|| CliError::config("sweep.parameter", "no sweep parameter given"))?;
    let values = values
        .or(section.map(|s| s.values.as_slice()))
        .ok_or_else(|| CliError::config("sweep.values", "no sweep values given"))?;
    let rows = sweep_rows(cfg, solver, parameter, values)?;
    ensure_dir(out)?;
    write_atomic(out, "sweep.csv", &sweep_csv(parameter, &rows))
}

/// `design.csv`: spacings for the design profile and the profile seen at
/// each wavelength of the grid.
pub fn cmd_dispersion(cfg: &ScenarioConfig, out: &Path) -> CliResult<PathBuf> {
    let model = cfg.dispersion_model()?;
    let f = cfg.f_design()?;
    let lambdas = cfg.wavelengths()?;
    let table = design_table(&model, &f, &lambdas).tag("dispersion")?;
    ensure_dir(out)?;
    write_atomic(out, "design.csv", &table.to_csv())
}
