//! End-to-end runs of the `cvlattice` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const GRID7: &str = include_str!("../../../configs/grid7.toml");
const GAUSSIAN: &str = include_str!("../../../configs/gaussian.toml");

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn cvlattice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvlattice"))
        .args(args)
        .env_remove("CVLATTICE_THREADS")
        .output()
        .unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = cvlattice(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn simulate(dir: &Path, config: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join(format!("run{}", fs::read_dir(dir).unwrap().count()));
    let mut args = vec!["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run_ok(&args);
    out
}

fn read_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn sweep_table(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const DATA_FILES: [&str; 5] = ["U.csv", "V.csv", "sigma.csv", "Z.csv", "edges.txt"];

#[test]
fn grid_scenario_forms_a_two_by_seven_grid() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "grid7.toml", GRID7);
    let out = simulate(tmp.path(), &cfg, &[]);
    let edges = fs::read_to_string(out.join("edges.txt")).unwrap();
    assert!(edges.starts_with("topology: grid_2x7\n"), "{edges}");
    let r = report(&out);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["edges"]["topology"], "grid_2x7");
    assert_eq!(r["modes"], 14);
    for file in DATA_FILES.iter().chain(["report.json"].iter()) {
        let listed = r["files"].as_array().unwrap().iter().any(|p| p.as_str().unwrap().ends_with(file));
        assert!(listed, "{file} missing from report");
    }
}

#[test]
fn identical_configs_give_identical_files() {
    let tmp = TempDir::new().unwrap();
    for (name, text) in [("grid7.toml", GRID7), ("gaussian.toml", GAUSSIAN)] {
        let cfg = write_config(tmp.path(), name, text);
        let a = simulate(tmp.path(), &cfg, &[]);
        let b = simulate(tmp.path(), &cfg, &["--threads", "3"]);
        for file in DATA_FILES {
            assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{name}: {file}");
        }
    }
}

#[test]
fn echoed_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "gaussian.toml", GAUSSIAN);
    let first = simulate(tmp.path(), &cfg, &[]);
    let echo = report(&first)["config_toml"].as_str().unwrap().to_string();
    let again = simulate(tmp.path(), &write_config(tmp.path(), "echo.toml", &echo), &[]);
    for file in DATA_FILES {
        assert_eq!(fs::read(first.join(file)).unwrap(), fs::read(again.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn zero_gain_gives_vacuum() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "g0.toml", &GRID7.replace("g_sqrt_ph = 0.05", "g_sqrt_ph = 0.0"));
    for solver in ["flat_pump", "ode", "low_gain"] {
        let out = simulate(tmp.path(), &cfg, &["--solver", solver]);
        assert!(read_rows(&out.join("V.csv")).iter().flatten().all(|v| *v == 0.0), "{solver}");
        let z = read_rows(&out.join("Z.csv"));
        for (i, row) in z.iter().enumerate() {
            for j in 0..row.len() / 2 {
                let expected_im = if i == j { 1.0 } else { 0.0 };
                assert!(row[2 * j].abs() < 1e-12 && (row[2 * j + 1] - expected_im).abs() < 1e-12, "{solver}");
            }
        }
    }
}

#[test]
fn ode_agrees_with_flat_pump() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "grid7.toml", GRID7);
    let exact = simulate(tmp.path(), &cfg, &["--solver", "flat_pump"]);
    let ode = simulate(tmp.path(), &cfg, &["--solver", "ode"]);
    for file in ["U.csv", "V.csv"] {
        let (a, b) = (read_rows(&exact.join(file)), read_rows(&ode.join(file)));
        let diff = a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "{file}: {diff}");
    }
    let check = &report(&ode)["flat_pump_check"];
    assert!(check["max_du"].as_f64().unwrap() < 1e-6);
    assert!(check["max_dv"].as_f64().unwrap() < 1e-6);
}

#[test]
fn gain_sweep_lowers_the_trace() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "grid7.toml", GRID7);
    let out = tmp.path().join("sweep");
    run_ok(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(text.starts_with("g_sqrtp,trace_U,max_r,spectral_spatial_ratio\n"));
    let rows = sweep_table(&out.join("sweep.csv"));
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![0.01, 0.02, 0.05, 0.1]);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]), "{text}");
    // Flat pump: the largest gain is g√p_h z.
    for r in &rows {
        assert!((r[2] - r[0] * 20.0).abs() < 1e-12, "{text}");
    }
}

#[test]
fn vacuum_trace_is_constant_along_z() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "g0.toml", &GRID7.replace("g_sqrt_ph = 0.05", "g_sqrt_ph = 0.0"));
    let out = tmp.path().join("sweep");
    run_ok(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--param",
        "z",
        "--values",
        "0,5,10,20",
    ]);
    for row in sweep_table(&out.join("sweep.csv")) {
        assert_eq!(row[1], 14.0);
        assert_eq!(row[2], 0.0);
    }
}

#[test]
fn single_point_sweep_matches_simulate() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "gaussian.toml", GAUSSIAN);
    let sim = report(&simulate(tmp.path(), &cfg, &[]));
    let out = tmp.path().join("sweep");
    run_ok(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--param",
        "Delta_p",
        "--values",
        "0.25",
    ]);
    let row = &sweep_table(&out.join("sweep.csv"))[0];
    assert_eq!(row[1], sim["trace_u"].as_f64().unwrap());
    assert_eq!(row[2], sim["gains"][0].as_f64().unwrap());
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "grid7.toml", GRID7);
    let mut tables = Vec::new();
    for threads in ["1", "4"] {
        let out = tmp.path().join(format!("sweep{threads}"));
        run_ok(&[
            "--threads",
            threads,
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--param",
            "C_M",
            "--values",
            "0.005,0.01,0.02",
        ]);
        tables.push(fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn threads_flag_overrides_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "grid7.toml", GRID7);
    let base = |args: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_cvlattice"));
        cmd.args(args)
            .args(["supermodes", "--config", cfg.to_str().unwrap(), "--out"])
            .arg(tmp.path().join("m"))
            .env("CVLATTICE_THREADS", "lots");
        cmd.output().unwrap()
    };
    assert_eq!(base(&[]).status.code(), Some(1));
    assert!(base(&["--threads", "2"]).status.success());
}

#[test]
fn supermodes_match_closed_form() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "grid7.toml", GRID7);
    let out = tmp.path().join("m");
    run_ok(&["supermodes", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let lambda = read_rows(&out.join("lambda.csv"));
    assert_eq!(lambda.len(), 7);
    for (k, row) in lambda.iter().enumerate() {
        let exact = 0.02 * ((k + 1) as f64 * std::f64::consts::PI / 8.0).cos();
        assert!((row[0] - exact).abs() < 1e-15, "k = {k}");
    }
    let m = read_rows(&out.join("M.csv"));
    assert_eq!(m.len(), 7);
    assert!(m.iter().all(|r| r.len() == 7));
}

#[test]
fn single_guide_supermode_is_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "n1.toml", "schema_version = 1\n[lattice]\nn = 1\ncoupling = 0.01\n");
    let out = tmp.path().join("m");
    run_ok(&["supermodes", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(out.join("M.csv")).unwrap().trim(), "1");
    assert_eq!(fs::read_to_string(out.join("lambda.csv")).unwrap().trim(), "0");
}

#[test]
fn malformed_profile_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        "schema_version = 1\n[lattice]\nn = 4\ncoupling = 0.01\nprofile = [1.0, 0.5]\n",
    );
    let out = cvlattice(&["supermodes", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lattice.profile"), "{err}");
}

#[test]
fn syntax_errors_report_the_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "schema_version = 1\n[lattice]\nn = 4\ncoupling = oops\n");
    let out = cvlattice(&["supermodes", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn flat_pump_solver_needs_a_flat_monochromatic_pump() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "gaussian.toml", GAUSSIAN);
    let out = cvlattice(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--solver",
        "flat_pump",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.solver"));
}

#[test]
fn unknown_sweep_parameter_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "grid7.toml", GRID7);
    let out = cvlattice(&["sweep", "--config", cfg.to_str().unwrap(), "--param", "temperature", "--values", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("temperature"));
}

fn dispersion(tmp: &TempDir, extra: &str) -> Output {
    let text = format!(
        "schema_version = 1\n[lattice]\nn = 5\ncoupling = 0.01\nprofile = \"glauber_fock\"\n[dispersion]\n{extra}"
    );
    let cfg = write_config(tmp.path(), "disp.toml", &text);
    cvlattice(&["dispersion", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("d").to_str().unwrap()])
}

fn design_columns(tmp: &TempDir) -> Vec<Vec<f64>> {
    sweep_table(&tmp.path().join("d/design.csv"))
}

#[test]
fn glauber_fock_spacings_are_monotone() {
    let tmp = TempDir::new().unwrap();
    assert!(dispersion(&tmp, "").status.success());
    let rows = design_columns(&tmp);
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1][2] < w[0][2]));
    assert_eq!(rows[3][2], 13.0);
}

#[test]
fn design_wavelength_reproduces_the_profile() {
    let tmp = TempDir::new().unwrap();
    assert!(dispersion(&tmp, "wavelengths = [1.55]\n").status.success());
    for row in design_columns(&tmp) {
        assert_eq!(row.len(), 4);
        assert_eq!(row[3], row[1]);
    }
}

#[test]
fn vanishing_design_coupling_is_a_domain_error() {
    let tmp = TempDir::new().unwrap();
    let out = dispersion(&tmp, "f_design = [1.0, 0.0, 0.5, 1.0]\n");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[dispersion]") && err.contains("domain"), "{err}");
}
