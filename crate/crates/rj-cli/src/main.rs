//! `rj`: steady-state currents through junctions with relaxed finite
//! reservoirs. Subcommands: current, validate, sweep, converge.
//!
//! Exit codes: 0 success, 1 usage/parse, 2 numerical accuracy, 3 validation
//! failure. Errors go to stderr as "ERROR <category>: ...".

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use rj_cli::commands::{cmd_converge, cmd_current, cmd_sweep, cmd_validate, RunOptions};
use rj_cli::config::{parse_config_with, RunConfig};
use rj_cli::error::{CliError, CliResult};
use rj_core::quadrature::QuadratureConfig;

#[derive(Parser)]
#[command(
    name = "rj",
    about = "Steady-state junction currents with relaxed finite reservoirs",
    after_help = "Config sections: [system] kind/eps0/eps1/eps2/h12_re/h12_im; \
[lead_L]/[lead_R] n/t_hop/v0/gamma/gamma_spacing or modes; [fermi] mu_L/mu_R/T; \
[quadrature] rel_tol/abs_tol/window_pad/max_panels/split_at_poles; \
[run] mode/methods/sweep_parameter/sweep_values/converge_sizes/gamma_rule. \
Unknown keys are errors. RJ_DEFAULT_TOL sets the default rel_tol \
(precedence: --rel-tol > config > RJ_DEFAULT_TOL > built-in 1e-8)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker count for sweep/convergence cells (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Also write the oracle correlation matrix as row,col,re,im CSV.
    #[arg(long, global = true, value_name = "PATH")]
    dump_correlations: Option<PathBuf>,

    /// Seed for the randomized validation junctions.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the quadrature relative tolerance.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-point currents, one CSV row per method.
    Current,
    /// Identity and oracle cross-checks; add --seed for randomized junctions.
    Validate,
    /// Parameter sweep over gamma, reservoir size, or bias.
    Sweep,
    /// Landauer convergence report over reservoir sizes.
    Converge,
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::usage("--config PATH is required"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::parse_plain(format!("cannot read {}: {e}", path.display())))?;

    let mut defaults = QuadratureConfig::default();
    if let Ok(env_tol) = std::env::var("RJ_DEFAULT_TOL") {
        defaults.rel_tol = env_tol.parse::<f64>().map_err(|_| {
            CliError::parse_plain(format!("RJ_DEFAULT_TOL expects a number, got '{env_tol}'"))
        })?;
    }
    let mut config = parse_config_with(&text, &defaults)?;
    if let Some(tol) = cli.rel_tol {
        config.quadrature.rel_tol = tol;
        config.quadrature.validate()?;
    }
    Ok(config)
}

fn run(cli: &Cli) -> CliResult<i32> {
    let config = load_config(cli)?;
    let opts = RunOptions {
        jobs: cli.jobs,
        dump_correlations: cli.dump_correlations.clone(),
        seed: cli.seed,
    };

    let mut sink: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    match cli.command {
        Command::Current => cmd_current(&config, &opts, &mut sink),
        Command::Validate => cmd_validate(&config, &opts, &mut sink),
        Command::Sweep => cmd_sweep(&config, &opts, &mut sink),
        Command::Converge => cmd_converge(&config, &opts, &mut sink),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            eprintln!("ERROR usage: {e}");
            std::process::exit(1);
        }
    };
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("ERROR {e}");
            std::process::exit(e.exit_code());
        }
    }
}
