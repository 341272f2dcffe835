use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbell_core::commands::{self, parse_grid, Command, NumericsFile, OutputFormat, RunConfig};
use qbell_core::par::init_threads_from_env;
use qbell_core::{QbellError, QuasiBellLabel, StatePair};

const AFTER_HELP: &str = "\
CSV columns (fixed order):
  pnd           n1,n2,probability
  gram          beta,k13_analytic,k13_numeric,off_pattern_residual,n1_max,n2_max,norm_deficit
  entanglement  beta,beta_sq,theta,alpha_star,fef,bound_bits
  error         pair,beta,mean_n,theta,pe,n1_max,n2_max,trace_deficit
JSON output wraps the same rows as {\"header\", \"rows\", \"metadata\"}.
state-dump always writes the density-matrix JSON layout.

Presets: fig1a fig1b (pnd), fig2 (entanglement), fig3a1 fig3a2 fig3b1..fig3b6 (error), gram.
QBELL_THREADS caps the worker pool.";

#[derive(Parser)]
#[command(name = "qbell", version, about = "Quasi-Bell entangled coherent states under thermal noise", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Photon-number distribution P(n1, n2) of one state
    Pnd(Opts),
    /// Analytic vs truncated Gram matrix
    Gram(Opts),
    /// Restricted fully entangled fraction and entanglement-of-formation bound
    Entanglement(Opts),
    /// Minimax discrimination error of a state pair
    Error(Opts),
    /// Write a density matrix as JSON
    StateDump(Opts),
}

#[derive(Args)]
struct Opts {
    /// Coherent amplitude(s); repeat or comma-separate
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    beta: Vec<f64>,
    /// Evenly spaced beta grid lo:hi:n
    #[arg(long, conflicts_with = "beta")]
    beta_grid: Option<String>,
    /// Thermal parameter(s); repeat or comma-separate
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Vec<f64>,
    /// Evenly spaced theta grid lo:hi:n
    #[arg(long, conflicts_with = "theta")]
    theta_grid: Option<String>,
    /// State pair for `error`: phi24 or phi13; repeatable
    #[arg(long, value_delimiter = ',')]
    pair: Vec<StatePair>,
    /// State label phi1..phi4
    #[arg(long)]
    label: Option<QuasiBellLabel>,
    /// Mode-1 Fock cutoff (with --trunc-n2)
    #[arg(long)]
    trunc_n1: Option<usize>,
    /// Mode-2 Fock cutoff (with --trunc-n1)
    #[arg(long)]
    trunc_n2: Option<usize>,
    /// Allowed trace deficit
    #[arg(long)]
    tol: Option<f64>,
    /// csv or json
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Output file; stdout if absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Named parameter set; explicit flags override it
    #[arg(long)]
    preset: Option<String>,
    /// JSON file with any of "tol", "trunc_n1", "trunc_n2"; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

fn build_config(command: Command, o: Opts) -> Result<RunConfig, QbellError> {
    let mut cfg = match &o.preset {
        Some(name) => {
            let cfg = RunConfig::from_preset(name)?;
            if cfg.command != command {
                return Err(QbellError::Usage(format!(
                    "preset {name} belongs to `{}`, not `{command}`",
                    cfg.command
                )));
            }
            cfg
        }
        None => RunConfig::new(command),
    };
    if let Some(path) = &o.config {
        NumericsFile::load(path)?.apply(&mut cfg);
    }
    if let Some(grid) = &o.beta_grid {
        cfg.betas = parse_grid(grid)?;
    } else if !o.beta.is_empty() {
        cfg.betas = o.beta;
    }
    if let Some(grid) = &o.theta_grid {
        cfg.thetas = parse_grid(grid)?;
    } else if !o.theta.is_empty() {
        cfg.thetas = o.theta;
    }
    if !o.pair.is_empty() {
        cfg.pairs = o.pair;
    }
    if o.label.is_some() {
        cfg.label = o.label;
    }
    if o.trunc_n1.is_some() || o.trunc_n2.is_some() {
        cfg.trunc_n1 = o.trunc_n1;
        cfg.trunc_n2 = o.trunc_n2;
    }
    if let Some(tol) = o.tol {
        cfg.tol = tol;
    }
    if let Some(format) = o.format {
        cfg.format = format;
    }
    cfg.out = o.out;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), QbellError> {
    init_threads_from_env()?;
    let (command, opts) = match cli.command {
        Cmd::Pnd(o) => (Command::Pnd, o),
        Cmd::Gram(o) => (Command::Gram, o),
        Cmd::Entanglement(o) => (Command::Entanglement, o),
        Cmd::Error(o) => (Command::Error, o),
        Cmd::StateDump(o) => (Command::StateDump, o),
    };
    let cfg = build_config(command, opts)?;
    if let Some(text) = commands::run_and_render(&cfg)? {
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|source| QbellError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qbell: {e}");
            match e {
                QbellError::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
