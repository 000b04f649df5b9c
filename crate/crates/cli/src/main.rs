use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shadowqec_cli::config::{Method, NoiseKind, SweepConfig, Units};
use shadowqec_cli::experiments::{self, Outputs};
use shadowqec_cli::output::write_file;
use shadowqec_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "shadowqec", version, about = "Lifetime, dephasing and circuit sweeps for the shadow-resonator logical qubit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config; omitted sections take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Master seed for stochastic runs (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Unit convention for angular frequencies (overrides the config).
    #[arg(long, global = true, value_enum)]
    units: Option<Units>,
}

#[derive(Subcommand)]
enum Command {
    /// Logical T1/T2 over a T1P grid.
    Lifetimes {
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Driven-qubit dephasing under 1/f or telegraph noise.
    Dephasing {
        #[arg(long, value_enum)]
        noise: Option<NoiseKind>,
        #[arg(long)]
        n_traces: Option<usize>,
    },
    /// Closed-form repair and logical error rates.
    Rates,
    /// Drive-tone plan with collision report.
    Plan,
    /// Transmon spectrum, matrix elements and quasiparticle ratios.
    Transmon,
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let mut cfg = match &cli.config {
        Some(p) => SweepConfig::load(p)?,
        None => SweepConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(u) = cli.units {
        cfg.units = u;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be > 0".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    let outputs: Outputs = match cli.command {
        Command::Lifetimes { method } => {
            if let Some(m) = method {
                cfg.lifetimes.method = m;
            }
            experiments::run_lifetimes(&cfg)?.1
        }
        Command::Dephasing { noise, n_traces } => {
            if let Some(k) = noise {
                cfg.dephasing.noise = k;
            }
            if let Some(n) = n_traces {
                cfg.dephasing.one_over_f.n_traces = n;
                cfg.dephasing.telegraph.n_traces = n;
            }
            match cfg.dephasing.noise {
                NoiseKind::OneOverF => experiments::run_one_over_f(&cfg)?.1,
                NoiseKind::Telegraph => experiments::run_telegraph(&cfg)?.1,
            }
        }
        Command::Rates => experiments::run_rates(&cfg)?.1,
        Command::Plan => {
            let (run, out) = experiments::run_plan(&cfg)?;
            if !run.meets_pass_level {
                log::warn!(
                    "closest unwanted product is {:.3} GHz from a transition (recommended >= 1 GHz)",
                    run.plan.min_detuning
                );
            }
            out
        }
        Command::Transmon => experiments::run_transmon(&cfg)?.1,
    };
    outputs
        .files
        .iter()
        .map(|(name, body)| write_file(&cli.out, name, body))
        .collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
