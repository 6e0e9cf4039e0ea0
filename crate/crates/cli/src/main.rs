use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use echo_sim::config::RunMode;
use echo_sim::output::{trace_csv, write_trace};
use echo_sim::{run_oracle, run_scenario, CliError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "echo-sim", version, about = "Loschmidt echo and purity decay under noisy perturbations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Replaces the seed of the run block.
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces the output directory of the run block.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario of a config (or manifest) file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Scan the diffusion coefficient over `run.scan.d_values`.
    Scan {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Tabulate the exact inverted-oscillator echo.
    Oracle {
        #[arg(long = "lambda")]
        lambda0: f64,
        #[arg(long)]
        r: f64,
        #[arg(long = "t-max")]
        t_max: f64,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        /// Directory for trace.csv; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benettin Lyapunov exponents of the configured Hamiltonian.
    Lyapunov {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn load(path: &Path, o: &Overrides, mode: Option<RunMode>) -> Result<ScenarioConfig, CliError> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = o.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &o.out {
        cfg.run.output_dir = out.clone();
    }
    if let Some(mode) = mode {
        cfg.run.mode = mode;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let outcome = match cli.command {
        Command::Run { config, overrides } => run_scenario(&load(&config, &overrides, None)?)?,
        Command::Scan { config, overrides } => run_scenario(&load(&config, &overrides, Some(RunMode::ScanD))?)?,
        Command::Lyapunov { config, overrides } => {
            run_scenario(&load(&config, &overrides, Some(RunMode::Lyapunov))?)?
        }
        Command::Oracle { lambda0, r, t_max, dt, out } => {
            let trace = run_oracle(lambda0, r, t_max, dt)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    write_trace(&dir, &trace)?;
                }
                None => print!("{}", trace_csv(&trace)),
            }
            return Ok(());
        }
    };
    let summary = serde_json::json!({
        "status": "ok",
        "output_dir": outcome.output_dir,
        "files": outcome.files,
    });
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version go to stdout with status 0
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::Config(e.to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
