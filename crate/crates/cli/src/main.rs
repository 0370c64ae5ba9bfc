use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvlattice_cli::{cmd_dispersion, cmd_simulate, cmd_supermodes, cmd_sweep, configure_threads, CliResult};
use cvlattice_cli::{ScenarioConfig, Solver};

#[derive(Parser)]
#[command(name = "cvlattice", version, about = "Spatio-spectral Gaussian states of χ(2) waveguide arrays")]
struct Cli {
    /// Worker threads (overrides CVLATTICE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write the supermode matrix and propagation constants.
    Supermodes(Common),
    /// Run the full pipeline and write matrices, edges and a report.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// low_gain, flat_pump or ode; overrides run.solver.
        #[arg(long)]
        solver: Option<String>,
    },
    /// Repeat the simulation over a parameter and tabulate the outcome.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solver: Option<String>,
        /// One of g_sqrtp, z, C_M, Delta_p, Delta_F; overrides sweep.parameter.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values; overrides sweep.values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
    },
    /// Write the dispersion design table.
    Dispersion(Common),
}

fn solver(name: Option<&str>) -> CliResult<Option<Solver>> {
    name.map(Solver::parse).transpose()
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Supermodes(c) => {
            for path in cmd_supermodes(&ScenarioConfig::load(&c.config)?, &c.out)? {
                println!("{}", path.display());
            }
        }
        Command::Simulate { common, solver: s } => {
            let cfg = ScenarioConfig::load(&common.config)?;
            let report = cmd_simulate(&cfg, &common.out, solver(s.as_deref())?)?;
            println!(
                "{} solver, {} modes: Tr(U_g) = {}, max r = {}, topology {}",
                report.solver,
                report.modes,
                report.trace_u,
                report.gains.first().copied().unwrap_or(0.0),
                report.edges.topology
            );
            for path in &report.files {
                println!("{}", path.display());
            }
        }
        Command::Sweep {
            common,
            solver: s,
            param,
            values,
        } => {
            let cfg = ScenarioConfig::load(&common.config)?;
            let path = cmd_sweep(&cfg, &common.out, solver(s.as_deref())?, param.as_deref(), values.as_deref())?;
            println!("{}", path.display());
        }
        Command::Dispersion(c) => {
            println!("{}", cmd_dispersion(&ScenarioConfig::load(&c.config)?, &c.out)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
