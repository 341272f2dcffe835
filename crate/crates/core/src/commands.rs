//! Command layer behind the `qbell` binary: presets, run configuration and
//! the table each command emits.
//!
//! Column orders are part of the output contract:
//!
//! | command        | columns |
//! |----------------|---------|
//! | `pnd`          | `n1,n2,probability` |
//! | `gram`         | `beta,k13_analytic,k13_numeric,off_pattern_residual,n1_max,n2_max,norm_deficit` |
//! | `entanglement` | `beta,beta_sq,theta,alpha_star,fef,bound_bits` |
//! | `error`        | `pair,beta,mean_n,theta,pe,n1_max,n2_max,trace_deficit` |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{json, Map, Value as Json};

use crate::discrimination::{error_sweep, StatePair, TruncationPolicy};
use crate::entanglement::{entanglement_threshold_scan, FefSearch};
use crate::error::{QbellError, Result};
use crate::fock::{ThermalParameter, TruncationSpec};
use crate::quasi_bell::{gram_matrix, numeric_gram_matrix, QuasiBellLabel};
use crate::sweep::SweepResult;
use crate::thermal::{build_thermal_state, photon_number_distribution, DensityMatrix};

pub const PND_COLUMNS: [&str; 3] = ["n1", "n2", "probability"];
pub const GRAM_COLUMNS: [&str; 7] = [
    "beta",
    "k13_analytic",
    "k13_numeric",
    "off_pattern_residual",
    "n1_max",
    "n2_max",
    "norm_deficit",
];
pub const ENTANGLEMENT_COLUMNS: [&str; 6] = [
    "beta",
    "beta_sq",
    "theta",
    "alpha_star",
    "fef",
    "bound_bits",
];
pub const ERROR_COLUMNS: [&str; 8] = [
    "pair",
    "beta",
    "mean_n",
    "theta",
    "pe",
    "n1_max",
    "n2_max",
    "trace_deficit",
];

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Thermal parameters of the error-probability figure.
pub const FIG3_THETAS: [f64; 7] = [0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9];
/// Single-`theta` panels comparing both pairs.
pub const FIG3B_THETAS: [f64; 6] = [0.01, 0.1, 0.3, 0.5, 0.7, 0.9];

pub const PRESET_NAMES: [&str; 12] = [
    "fig1a", "fig1b", "fig2", "fig3a1", "fig3a2", "fig3b1", "fig3b2", "fig3b3", "fig3b4", "fig3b5",
    "fig3b6", "gram",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Pnd,
    Gram,
    Entanglement,
    Error,
    StateDump,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pnd => "pnd",
            Command::Gram => "gram",
            Command::Entanglement => "entanglement",
            Command::Error => "error",
            Command::StateDump => "state-dump",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = QbellError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(QbellError::Usage(format!(
                "unknown format {other:?} (expected csv or json)"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Everything a command needs; presets fill the parameter lists.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub preset: Option<String>,
    pub label: Option<QuasiBellLabel>,
    pub pairs: Vec<StatePair>,
    pub betas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub trunc_n1: Option<usize>,
    pub trunc_n2: Option<usize>,
    pub tol: f64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            preset: None,
            label: None,
            pairs: Vec::new(),
            betas: Vec::new(),
            thetas: Vec::new(),
            trunc_n1: None,
            trunc_n2: None,
            tol: DEFAULT_TOLERANCE,
            format: OutputFormat::Csv,
            out: None,
        }
    }

    /// Config for a named preset; the preset fixes the command.
    pub fn from_preset(name: &str) -> Result<Self> {
        let tenths = |lo: usize, hi: usize| (lo..=hi).map(|i| i as f64 / 10.0).collect::<Vec<_>>();
        let fig3_betas = tenths(1, 19);
        let mut cfg = match name {
            "fig1a" | "fig1b" => {
                let mut c = Self::new(Command::Pnd);
                c.label = Some(QuasiBellLabel::Phi2);
                c.betas = vec![2.0];
                c.thetas = vec![if name == "fig1a" { 0.0 } else { 0.5 }];
                c
            }
            "fig2" => {
                let mut c = Self::new(Command::Entanglement);
                c.betas = tenths(1, 30);
                c.thetas = tenths(0, 9);
                c
            }
            "fig3a1" | "fig3a2" => {
                let mut c = Self::new(Command::Error);
                c.betas = fig3_betas;
                c.pairs = vec![if name == "fig3a1" {
                    StatePair::Phi24
                } else {
                    StatePair::Phi13
                }];
                c.thetas = FIG3_THETAS.to_vec();
                if name == "fig3a2" {
                    c.thetas.insert(0, 0.0);
                }
                c
            }
            "gram" => {
                let mut c = Self::new(Command::Gram);
                c.betas = tenths(1, 30);
                c
            }
            _ => {
                let panel = name
                    .strip_prefix("fig3b")
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|d| (1..=FIG3B_THETAS.len()).contains(d))
                    .ok_or_else(|| {
                        QbellError::Usage(format!(
                            "unknown preset {name:?} (known: {})",
                            PRESET_NAMES.join(", ")
                        ))
                    })?;
                let mut c = Self::new(Command::Error);
                c.betas = fig3_betas;
                c.pairs = vec![StatePair::Phi24, StatePair::Phi13];
                c.thetas = vec![FIG3B_THETAS[panel - 1]];
                c
            }
        };
        cfg.preset = Some(name.to_owned());
        Ok(cfg)
    }

    fn policy(&self) -> Result<TruncationPolicy> {
        match (self.trunc_n1, self.trunc_n2) {
            (None, None) => Ok(TruncationPolicy::Heuristic { tol: self.tol }),
            (Some(n1), Some(n2)) => Ok(TruncationPolicy::Fixed(TruncationSpec::new(
                n1, n2, self.tol,
            )?)),
            _ => Err(QbellError::Usage(
                "--trunc-n1 and --trunc-n2 must be given together".into(),
            )),
        }
    }

    /// Validate the parameter lists against what `command` needs.
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(QbellError::Usage(format!(
                "--tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        self.policy()?;
        if let Some(bad) = self.betas.iter().find(|b| !b.is_finite() || **b < 0.0) {
            return Err(QbellError::Usage(format!(
                "beta must be finite and nonnegative, got {bad}"
            )));
        }
        if let Some(bad) = self.thetas.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(QbellError::Usage(format!(
                "theta must be finite and nonnegative, got {bad}"
            )));
        }
        let need_positive = matches!(
            self.command,
            Command::Gram | Command::Entanglement | Command::Error
        );
        if need_positive && self.betas.contains(&0.0) {
            return Err(QbellError::Usage(format!(
                "{} requires beta > 0",
                self.command
            )));
        }
        if self.betas.is_empty() {
            return Err(QbellError::Usage(format!(
                "{} requires --beta or --beta-grid",
                self.command
            )));
        }
        match self.command {
            Command::Pnd | Command::StateDump => {
                if self.label.is_none() {
                    return Err(QbellError::Usage(format!(
                        "{} requires --label",
                        self.command
                    )));
                }
                if self.betas.len() != 1 || self.thetas.len() > 1 {
                    return Err(QbellError::Usage(format!(
                        "{} takes a single beta and theta",
                        self.command
                    )));
                }
            }
            Command::Error => {
                if self.pairs.is_empty() {
                    return Err(QbellError::Usage("error requires --pair".into()));
                }
                if self.thetas.is_empty() {
                    return Err(QbellError::Usage("error requires --theta".into()));
                }
            }
            Command::Entanglement => {
                if self.thetas.is_empty() {
                    return Err(QbellError::Usage("entanglement requires --theta".into()));
                }
            }
            Command::Gram => {}
        }
        Ok(())
    }

    fn single_point(&self) -> Result<(QuasiBellLabel, f64, ThermalParameter, TruncationSpec)> {
        let label = self.label.expect("validated");
        let beta = self.betas[0];
        let theta = ThermalParameter::new(self.thetas.first().copied().unwrap_or(0.0))?;
        let trunc = self.policy()?.resolve(beta, theta)?;
        Ok((label, beta, theta, trunc))
    }

    fn echo(&self) -> Map<String, Json> {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command.name()));
        m.insert("preset".into(), json!(self.preset));
        if let Some(l) = self.label {
            m.insert("label".into(), json!(l.name()));
        }
        if !self.pairs.is_empty() {
            m.insert(
                "pairs".into(),
                json!(self.pairs.iter().map(|p| p.name()).collect::<Vec<_>>()),
            );
        }
        m.insert("betas".into(), json!(self.betas));
        m.insert("thetas".into(), json!(self.thetas));
        m.insert("trace_tolerance".into(), json!(self.tol));
        m.insert("trunc_n1".into(), json!(self.trunc_n1));
        m.insert("trunc_n2".into(), json!(self.trunc_n2));
        m.insert(
            "truncation_policy".into(),
            json!(if self.trunc_n1.is_some() {
                "fixed"
            } else {
                "heuristic"
            }),
        );
        m
    }
}

/// Truncation and tolerance settings read from a JSON file; flags override them.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsFile {
    pub tol: Option<f64>,
    pub trunc_n1: Option<usize>,
    pub trunc_n2: Option<usize>,
}

impl NumericsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| QbellError::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| QbellError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(tol) = self.tol {
            cfg.tol = tol;
        }
        if self.trunc_n1.is_some() || self.trunc_n2.is_some() {
            cfg.trunc_n1 = self.trunc_n1;
            cfg.trunc_n2 = self.trunc_n2;
        }
    }
}

/// Parse `lo:hi:n` into `n` evenly spaced values including both ends.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || QbellError::Usage(format!("grid must be lo:hi:n, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let steps = (n - 1) as f64;
    // Snap to 12 significant digits so 0:0.9:10 yields 0.3, not 0.30000000000000004.
    let snap = |x: f64| format!("{x:.11e}").parse::<f64>().unwrap_or(x);
    Ok((0..n)
        .map(|i| snap((lo * (steps - i as f64) + hi * i as f64) / steps))
        .collect())
}

/// Parse a comma-separated list of reals.
pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| QbellError::Usage(format!("not a number: {s:?}")))
        })
        .collect()
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub enum CommandOutput {
    Table(SweepResult),
    /// Pre-rendered JSON document (`state-dump`).
    Document(String),
}

impl CommandOutput {
    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match (self, format) {
            (CommandOutput::Table(t), OutputFormat::Csv) => Ok(t.to_csv()),
            (CommandOutput::Table(t), OutputFormat::Json) => t.to_json(),
            (CommandOutput::Document(d), _) => Ok(d.clone()),
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<CommandOutput> {
    cfg.validate()?;
    Ok(match cfg.command {
        Command::Pnd => CommandOutput::Table(cmd_pnd(cfg)?),
        Command::Gram => CommandOutput::Table(cmd_gram(cfg)?),
        Command::Entanglement => CommandOutput::Table(cmd_entanglement(cfg)?),
        Command::Error => CommandOutput::Table(cmd_error(cfg)?),
        Command::StateDump => CommandOutput::Document(cmd_state_dump(cfg)?),
    })
}

/// Run `cfg` and write the rendered output to `cfg.out` or return it.
pub fn run_and_render(cfg: &RunConfig) -> Result<Option<String>> {
    let text = run(cfg)?.render(cfg.format)?;
    match &cfg.out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| QbellError::Io {
        path: path.to_owned(),
        source,
    })
}

fn truncation_meta(m: &mut Map<String, Json>, trunc: &TruncationSpec, deficit: f64) {
    m.insert("n1_max".into(), json!(trunc.n1_max));
    m.insert("n2_max".into(), json!(trunc.n2_max));
    m.insert("trace_deficit".into(), json!(deficit));
}

pub fn cmd_pnd(cfg: &RunConfig) -> Result<SweepResult> {
    let (label, beta, theta, trunc) = cfg.single_point()?;
    let rho = build_thermal_state(label, Complex64::new(beta, 0.0), theta, trunc)?;
    let dist = photon_number_distribution(&rho)?;
    let mut out = SweepResult::new(PND_COLUMNS.to_vec());
    for (n1, n2, p) in dist.iter() {
        out.push(vec![n1.into(), n2.into(), p.into()]);
    }
    out.metadata = cfg.echo();
    truncation_meta(&mut out.metadata, &trunc, rho.trace_deficit());
    out.metadata.insert("purity".into(), json!(rho.purity()));
    out.metadata
        .insert("n2_second_moment".into(), json!(dist.n2_moment(2)));
    Ok(out)
}

pub fn cmd_gram(cfg: &RunConfig) -> Result<SweepResult> {
    let mut out = SweepResult::new(GRAM_COLUMNS.to_vec());
    for &beta in &cfg.betas {
        let b = Complex64::new(beta, 0.0);
        let trunc = cfg.policy()?.resolve(beta, ThermalParameter::ZERO)?;
        let analytic = gram_matrix(b)?;
        let numeric = numeric_gram_matrix(b, trunc)?;
        let deficit = QuasiBellLabel::ALL
            .iter()
            .map(|&l| 1.0 - numeric.get(l, l).re)
            .fold(0.0_f64, f64::max);
        out.push(vec![
            beta.into(),
            analytic.k13().re.into(),
            numeric.k13().re.into(),
            numeric.off_pattern_residual().into(),
            trunc.n1_max.into(),
            trunc.n2_max.into(),
            deficit.into(),
        ]);
    }
    out.metadata = cfg.echo();
    Ok(out)
}

pub fn cmd_entanglement(cfg: &RunConfig) -> Result<SweepResult> {
    let scan = entanglement_threshold_scan(&cfg.betas, &cfg.thetas, FefSearch::default())?;
    let mut out = SweepResult::new(ENTANGLEMENT_COLUMNS.to_vec());
    for p in &scan.points {
        out.push(vec![
            p.beta.into(),
            (p.beta * p.beta).into(),
            p.theta.into(),
            p.alpha_star.into(),
            p.fef.into(),
            p.bound_bits.into(),
        ]);
    }
    out.metadata = cfg.echo();
    out.metadata.insert(
        "fef_family".into(),
        json!("restricted to Phi2(alpha), real alpha > 0"),
    );
    out.metadata.insert(
        "truncation_policy".into(),
        json!("closed form, no truncation"),
    );
    out.metadata
        .insert("thresholds".into(), serde_json::to_value(&scan.thresholds)?);
    Ok(out)
}

pub fn cmd_error(cfg: &RunConfig) -> Result<SweepResult> {
    let policy = cfg.policy()?;
    let mut out = SweepResult::new(ERROR_COLUMNS.to_vec());
    let mut max_dev = 0.0_f64;
    let mut max_deficit = 0.0_f64;
    for &pair in &cfg.pairs {
        for p in error_sweep(pair, &cfg.betas, &cfg.thetas, policy)? {
            max_dev = max_dev.max(p.symmetry_deviation);
            max_deficit = max_deficit.max(p.trace_deficit);
            out.push(vec![
                pair.name().into(),
                p.beta.into(),
                p.mean_n.into(),
                p.theta.into(),
                p.error.into(),
                p.n1_max.into(),
                p.n2_max.into(),
                p.trace_deficit.into(),
            ]);
        }
    }
    out.metadata = cfg.echo();
    out.metadata
        .insert("max_symmetry_deviation".into(), json!(max_dev));
    out.metadata
        .insert("max_trace_deficit".into(), json!(max_deficit));
    Ok(out)
}

pub fn cmd_state_dump(cfg: &RunConfig) -> Result<String> {
    let (label, beta, theta, trunc) = cfg.single_point()?;
    let rho = build_thermal_state(label, Complex64::new(beta, 0.0), theta, trunc)?;
    state_dump_json(&rho, label, beta, theta)
}

pub fn state_dump_json(
    rho: &DensityMatrix,
    label: QuasiBellLabel,
    beta: f64,
    theta: ThermalParameter,
) -> Result<String> {
    let meta = json!({
        "label": label.name(),
        "beta": beta,
        "theta": theta.value(),
        "trace_tolerance": rho.truncation().trace_tolerance,
        "trace_deficit": rho.trace_deficit(),
    });
    let mut text = rho.to_json(Some(meta))?;
    text.push('\n');
    Ok(text)
}
