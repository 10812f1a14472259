use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvalue_cli::compare::{load_config, output_json, run_compare};
use cvalue_cli::simulate::{headline, resolve_config, run_simulate, SimulateOverrides};
use cvalue_cli::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "cvalue", version, about = "c-values for comparing a default and an alternative estimate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the c-value of an alternative estimate against a default.
    Compare {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Level of the two-stage rule.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output JSON file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Vector file holding the diagonal of the noise covariance.
        #[arg(long, value_name = "PATH")]
        sigma_diag: Option<PathBuf>,
        /// Apply the Berry-Esseen correction to the approximate bound.
        #[arg(long)]
        berry_esseen: bool,
    },
    /// Run a named simulation experiment.
    Simulate {
        /// calibration, selection, risk, pitfall, logistic, gp or eb.
        name: String,
        /// JSON file overriding keys of the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Comma-separated levels.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        berry_esseen: bool,
        /// Report directory; `results/<name>` when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compare {
            config,
            alpha,
            seed,
            out,
            sigma_diag,
            berry_esseen,
        } => {
            let mut c = load_config(&config)?;
            if let Some(a) = alpha {
                c.alpha = a;
            }
            if let Some(s) = seed {
                c.seed = s;
            }
            if let Some(p) = sigma_diag {
                c.model.sigma_diag = Some(p);
                c.model.sigma = None;
                c.model.noise_sd = None;
            }
            c.berry_esseen |= berry_esseen;
            let output = out.or(c.output.clone());
            let result = run_compare(&c)?;
            for w in &result.warnings {
                log::warn!("{w}");
            }
            let json = output_json(&result)?;
            match output {
                Some(path) => std::fs::write(&path, json).map_err(|e| CliError::in_file(&path, e))?,
                None => print!("{json}"),
            }
            Ok(())
        }
        Command::Simulate {
            name,
            config,
            n,
            tau,
            reps,
            seed,
            grid,
            alphas,
            workers,
            berry_esseen,
            out,
        } => {
            let overrides = SimulateOverrides {
                config,
                n,
                tau,
                reps,
                seed,
                grid,
                alphas,
                berry_esseen,
            };
            let c = resolve_config(&name, &overrides)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("results").join(&name));
            let report = run_simulate(&c, workers, &dir)?;
            print!("{}", headline(&report));
            println!("wrote {}", dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
