//! Binary minimum-error (Helstrom) and minimax discrimination.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QbellError, Result};
use crate::fock::{Mode, ThermalParameter, TruncationSpec};
use crate::numerics::{self, CMatrix};
use crate::par::Execution;
use crate::quasi_bell::{mean_photon_number, QuasiBellLabel};
use crate::thermal::{build_thermal_state_with, DensityMatrix};

/// Relative floor for the positive eigenvalues entering the Helstrom sum.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;
/// Max elementwise deviation allowed in the `rho1 = R rho0 R^dagger` check.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;
const TRACE_MISMATCH_LIMIT: f64 = 1e-6;

/// Average error probability of a binary decision, in `[0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct ErrorProbability(f64);

impl ErrorProbability {
    /// Accepts `[-1e-9, 1/2 + 1e-9]` and clips to `[0, 1/2]`.
    pub fn checked(value: f64) -> Result<Self> {
        if !(-1e-9..=0.5 + 1e-9).contains(&value) {
            return Err(QbellError::NumericalInstability(format!(
                "error probability {value} outside [0, 1/2]"
            )));
        }
        Ok(Self(value.clamp(0.0, 0.5)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for ErrorProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Minimax error for two pure states with overlap `kappa`: `(1 - sqrt(1 - |kappa|^2)) / 2`.
pub fn pure_minimax_error(overlap: Complex64) -> Result<ErrorProbability> {
    let k2 = overlap.norm_sqr();
    if k2.is_nan() || k2 > 1.0 + 1e-12 {
        return Err(QbellError::InvalidParameter(format!(
            "overlap modulus {} exceeds 1",
            k2.sqrt()
        )));
    }
    let k2 = k2.min(1.0);
    // 1 - sqrt(1 - x) = x / (1 + sqrt(1 - x))
    ErrorProbability::checked(0.5 * k2 / (1.0 + (1.0 - k2).sqrt()))
}

#[derive(Debug, Clone, Copy)]
pub struct BinaryEnsemble<'a> {
    pub rho0: &'a DensityMatrix,
    pub rho1: &'a DensityMatrix,
    pub prior0: f64,
}

impl<'a> BinaryEnsemble<'a> {
    pub fn new(rho0: &'a DensityMatrix, rho1: &'a DensityMatrix, prior0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&prior0) {
            return Err(QbellError::InvalidParameter(format!(
                "prior must lie in [0, 1], got {prior0}"
            )));
        }
        if !rho0.truncation().same_basis(rho1.truncation()) {
            return Err(QbellError::DimensionMismatch {
                expected: rho0.dim(),
                found: rho1.dim(),
            });
        }
        Ok(Self { rho0, rho1, prior0 })
    }

    pub fn uniform(rho0: &'a DensityMatrix, rho1: &'a DensityMatrix) -> Result<Self> {
        Self::new(rho0, rho1, 0.5)
    }

    pub fn prior1(&self) -> f64 {
        1.0 - self.prior0
    }
}

/// Bayes-optimal error `p0 Tr(rho0) - sum_{lambda > tol} lambda` with `lambda`
/// the eigenvalues of `p0 rho0 - p1 rho1`.
///
/// For unit-trace states this is `1/2 - sum lambda+`, i.e. at uniform priors
/// `1/2 - 1/2 sum lambda+(rho0 - rho1)`. Keeping `Tr(rho0)` makes two
/// orthogonal states with the same truncation loss give exactly zero.
pub fn helstrom_error(ensemble: &BinaryEnsemble<'_>) -> Result<ErrorProbability> {
    let (rho0, rho1) = (ensemble.rho0, ensemble.rho1);
    let trunc = *rho0.truncation();
    let (t0, t1) = (rho0.trace(), rho1.trace());
    let limit = (2.0 * trunc.trace_tolerance.max(rho1.truncation().trace_tolerance))
        .min(TRACE_MISMATCH_LIMIT);
    if (t0 - t1).abs() > limit {
        return Err(QbellError::TraceMismatch {
            difference: (t0 - t1).abs(),
        });
    }
    let (p0, p1) = (ensemble.prior0, ensemble.prior1());
    let weighted: CMatrix = rho0.matrix().zip_map(rho1.matrix(), |a, b| a * p0 - b * p1);
    let cover = numerics::partial_trace(rho0, Mode::One) + numerics::partial_trace(rho1, Mode::One);
    let spectrum = numerics::spectrum_on_reduced_support(&weighted, &cover, &trunc)?;
    let scale = spectrum.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    let floor = EIGENVALUE_FLOOR * scale;
    let positive: f64 = spectrum.iter().filter(|&&l| l > floor).sum();
    ErrorProbability::checked(p0 * t0 - positive)
}

/// Minimax error for a pair related by the mode-2 pi rotation, where the
/// uniform prior is optimal.
pub fn minimax_error_symmetric(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
) -> Result<ErrorProbability> {
    let deviation = symmetry_deviation(rho0, rho1)?;
    if deviation > SYMMETRY_TOLERANCE {
        return Err(QbellError::SymmetryViolation { deviation });
    }
    helstrom_error(&BinaryEnsemble::uniform(rho0, rho1)?)
}

/// `max |R rho0 R^dagger - rho1|` elementwise.
pub fn symmetry_deviation(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    if !rho0.truncation().same_basis(rho1.truncation()) {
        return Err(QbellError::DimensionMismatch {
            expected: rho0.dim(),
            found: rho1.dim(),
        });
    }
    let d2 = rho0.truncation().dim2();
    let mut worst = 0.0_f64;
    for (j, (c0, c1)) in rho0
        .matrix()
        .column_iter()
        .zip(rho1.matrix().column_iter())
        .enumerate()
    {
        let n2 = j % d2;
        for (i, (&a, &b)) in c0.iter().zip(c1.iter()).enumerate() {
            let rotated = if (i % d2 + n2) % 2 == 1 { -a } else { a };
            worst = worst.max((rotated - b).norm_sqr());
        }
    }
    Ok(worst.sqrt())
}

/// The two binary sets compared throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StatePair {
    /// `(Phi2, Phi4)`: orthogonal without noise.
    Phi24,
    /// `(Phi1, Phi3)`: overlap `sech(2|beta|^2)`.
    Phi13,
}

impl StatePair {
    pub fn labels(self) -> (QuasiBellLabel, QuasiBellLabel) {
        match self {
            StatePair::Phi24 => (QuasiBellLabel::Phi2, QuasiBellLabel::Phi4),
            StatePair::Phi13 => (QuasiBellLabel::Phi1, QuasiBellLabel::Phi3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StatePair::Phi24 => "phi24",
            StatePair::Phi13 => "phi13",
        }
    }

    /// Mean photon number of either state of the pair.
    pub fn mean_photon_number(self, beta: f64) -> f64 {
        mean_photon_number(self.labels().0, Complex64::new(beta, 0.0))
    }
}

impl fmt::Display for StatePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatePair {
    type Err = QbellError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi24" | "24" => Ok(StatePair::Phi24),
            "phi13" | "13" => Ok(StatePair::Phi13),
            other => Err(QbellError::Usage(format!(
                "unknown pair {other:?} (expected phi24 or phi13)"
            ))),
        }
    }
}

/// How a sweep picks the Fock cutoffs for each `(beta, theta)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationPolicy {
    /// Default cutoffs, widened to the fitted ones where those are larger.
    Heuristic {
        tol: f64,
    },
    Fitted {
        tol: f64,
    },
    Fixed(TruncationSpec),
}

impl TruncationPolicy {
    pub fn resolve(&self, beta: f64, theta: ThermalParameter) -> Result<TruncationSpec> {
        let b = Complex64::new(beta, 0.0);
        match *self {
            TruncationPolicy::Heuristic { tol } => Ok(TruncationSpec::heuristic(b, theta, tol)?
                .union(&TruncationSpec::fitted(b, theta, tol)?)),
            TruncationPolicy::Fitted { tol } => TruncationSpec::fitted(b, theta, tol),
            TruncationPolicy::Fixed(spec) => Ok(spec),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPoint {
    pub pair: StatePair,
    pub beta: f64,
    pub mean_n: f64,
    pub theta: f64,
    pub error: f64,
    pub n1_max: usize,
    pub n2_max: usize,
    /// Larger of the two states' trace deficits.
    pub trace_deficit: f64,
    pub symmetry_deviation: f64,
}

/// Minimax error of `pair` over the grid; rows ordered `theta`-major.
pub fn error_sweep(
    pair: StatePair,
    beta_grid: &[f64],
    theta_list: &[f64],
    policy: TruncationPolicy,
) -> Result<Vec<ErrorPoint>> {
    error_sweep_with(Execution::default(), pair, beta_grid, theta_list, policy)
}

pub fn error_sweep_with(
    exec: Execution,
    pair: StatePair,
    beta_grid: &[f64],
    theta_list: &[f64],
    policy: TruncationPolicy,
) -> Result<Vec<ErrorPoint>> {
    if beta_grid.is_empty() || theta_list.is_empty() {
        return Err(QbellError::InvalidParameter(
            "beta and theta grids must be nonempty".into(),
        ));
    }
    let mut grid = Vec::with_capacity(beta_grid.len() * theta_list.len());
    for &t in theta_list {
        let theta = ThermalParameter::new(t)?;
        for &b in beta_grid {
            grid.push((b, theta));
        }
    }
    // Points run in parallel; each build stays sequential to bound memory.
    exec.try_map_collect(&grid, |&(beta, theta)| {
        error_point(pair, beta, theta, policy)
    })
}

pub fn error_point(
    pair: StatePair,
    beta: f64,
    theta: ThermalParameter,
    policy: TruncationPolicy,
) -> Result<ErrorPoint> {
    let trunc = policy.resolve(beta, theta)?;
    let (l0, l1) = pair.labels();
    let b = Complex64::new(beta, 0.0);
    let rho0 = build_thermal_state_with(Execution::Sequential, l0, b, theta, trunc)?;
    let rho1 = build_thermal_state_with(Execution::Sequential, l1, b, theta, trunc)?;
    let deviation = symmetry_deviation(&rho0, &rho1)?;
    let error = minimax_error_symmetric(&rho0, &rho1)?;
    Ok(ErrorPoint {
        pair,
        beta,
        mean_n: pair.mean_photon_number(beta),
        theta: theta.value(),
        error: error.value(),
        n1_max: trunc.n1_max,
        n2_max: trunc.n2_max,
        trace_deficit: rho0.trace_deficit().max(rho1.trace_deficit()),
        symmetry_deviation: deviation,
    })
}
