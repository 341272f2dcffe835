//! Fock-space kernels.
//!
//! Every density matrix in this crate is assembled from two scalar kernels:
//! the coherent-state amplitude `g1(beta, k) = <k|beta>` and the amplitude
//! `g23(beta, k2, k3) = <k2, k3| T(theta) |beta, 0~>` of a coherent state on
//! the real mode after the thermalizing two-mode operator couples it to a
//! fictitious vacuum mode. Magnitudes go through `log_factorial` so that
//! photon numbers well past 170 (where `k!` overflows) remain finite.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QbellError, Result};

/// Photon number labelling a Fock basis vector.
pub type FockIndex = usize;

/// One of the two real modes of the entangled state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::One => f.write_str("mode 1"),
            Mode::Two => f.write_str("mode 2"),
        }
    }
}

/// Per-mode Fock cutoffs plus the trace deficit a build is allowed to lose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub n1_max: FockIndex,
    pub n2_max: FockIndex,
    pub trace_tolerance: f64,
}

pub const DEFAULT_TRACE_TOLERANCE: f64 = 1e-6;

impl TruncationSpec {
    pub fn new(n1_max: FockIndex, n2_max: FockIndex, trace_tolerance: f64) -> Result<Self> {
        if !(trace_tolerance > 0.0 && trace_tolerance < 1.0) {
            return Err(QbellError::InvalidParameter(format!(
                "trace tolerance must lie in (0, 1), got {trace_tolerance}"
            )));
        }
        Ok(Self {
            n1_max,
            n2_max,
            trace_tolerance,
        })
    }

    /// Default cutoffs: Poisson tail plus thermal broadening on mode 2.
    ///
    /// `n1 = ceil(4|beta|^2 + 30)`, `n2 = ceil(4(|beta|^2 + sinh^2 theta) + 30)`.
    pub fn heuristic(
        beta: Complex64,
        theta: ThermalParameter,
        trace_tolerance: f64,
    ) -> Result<Self> {
        let b2 = beta.norm_sqr();
        let n1 = (4.0 * b2 + 30.0).ceil() as usize;
        let n2 = (4.0 * (b2 + theta.mean_thermal_photons()) + 30.0).ceil() as usize;
        Self::new(n1, n2, trace_tolerance)
    }

    /// Smallest cutoffs whose per-mode tails are provably below the tolerance
    /// once the cat-state normalizer is accounted for.
    ///
    /// For `Phi = N (|a> +- |b>)` the truncated norm loss is at most
    /// `4 N^2 (tail_1 + tail_2)`, so each single-mode tail is driven below
    /// `tol / (8 N^2)`. The a-posteriori trace check in the builders still runs.
    pub fn fitted(beta: Complex64, theta: ThermalParameter, trace_tolerance: f64) -> Result<Self> {
        Self::new(0, 0, trace_tolerance)?;
        let b2 = beta.norm_sqr();
        let norm_sq = if b2 == 0.0 {
            0.25
        } else {
            1.0 / (2.0 * -(-4.0 * b2).exp_m1())
        };
        let target = trace_tolerance / (8.0 * norm_sq);

        let mut n1 = 0;
        let mut mass1 = 0.0;
        loop {
            mass1 += g1(beta, n1).norm_sqr();
            if 1.0 - mass1 <= target || n1 > 4096 {
                break;
            }
            n1 += 1;
        }

        let mut n2 = 0;
        let mut mass2 = 0.0;
        loop {
            mass2 += (0..=n2)
                .map(|k3| g23(beta, n2, k3, theta).norm_sqr())
                .sum::<f64>();
            if 1.0 - mass2 <= target || n2 > 4096 {
                break;
            }
            n2 += 1;
        }
        Self::new(n1, n2, trace_tolerance)
    }

    /// Widen both cutoffs to cover `other` as well.
    pub fn union(&self, other: &TruncationSpec) -> TruncationSpec {
        TruncationSpec {
            n1_max: self.n1_max.max(other.n1_max),
            n2_max: self.n2_max.max(other.n2_max),
            trace_tolerance: self.trace_tolerance.min(other.trace_tolerance),
        }
    }

    pub fn dim1(&self) -> usize {
        self.n1_max + 1
    }

    pub fn dim2(&self) -> usize {
        self.n2_max + 1
    }

    /// Dimension of the flattened two-mode basis.
    pub fn dim(&self) -> usize {
        self.dim1() * self.dim2()
    }

    /// Row-major flattening `n1 * (n2_max + 1) + n2`.
    #[inline]
    pub fn index(&self, n1: FockIndex, n2: FockIndex) -> usize {
        debug_assert!(n1 <= self.n1_max && n2 <= self.n2_max);
        n1 * self.dim2() + n2
    }

    #[inline]
    pub fn unflatten(&self, idx: usize) -> (FockIndex, FockIndex) {
        (idx / self.dim2(), idx % self.dim2())
    }

    pub fn same_basis(&self, other: &TruncationSpec) -> bool {
        self.n1_max == other.n1_max && self.n2_max == other.n2_max
    }
}

/// Thermal noise parameter `theta >= 0`; the mean thermal photon number is
/// `sinh^2 theta`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThermalParameter(f64);

impl ThermalParameter {
    pub const ZERO: ThermalParameter = ThermalParameter(0.0);

    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(QbellError::InvalidParameter(format!(
                "theta must be finite and >= 0, got {theta}"
            )));
        }
        Ok(Self(theta))
    }

    /// Inverse of [`ThermalParameter::mean_thermal_photons`]: `theta = asinh(sqrt(n_bar))`.
    pub fn from_mean_thermal_photons(n_bar: f64) -> Result<Self> {
        if !n_bar.is_finite() || n_bar < 0.0 {
            return Err(QbellError::InvalidParameter(format!(
                "mean thermal photon number must be finite and >= 0, got {n_bar}"
            )));
        }
        Ok(Self(n_bar.sqrt().asinh()))
    }

    /// From the ratio `omega / (k_B T)` via the Bose occupation `1 / (e^x - 1)`.
    pub fn from_frequency_over_temperature(x: f64) -> Result<Self> {
        if x.is_nan() || x <= 0.0 {
            return Err(QbellError::InvalidParameter(format!(
                "omega / k_B T must be > 0, got {x}"
            )));
        }
        Self::from_mean_thermal_photons(1.0 / x.exp_m1())
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn cosh(self) -> f64 {
        self.0.cosh()
    }

    pub fn sinh(self) -> f64 {
        self.0.sinh()
    }

    pub fn tanh(self) -> f64 {
        self.0.tanh()
    }

    pub fn mean_thermal_photons(self) -> f64 {
        let s = self.0.sinh();
        s * s
    }
}

impl fmt::Display for ThermalParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const LOG_FACTORIAL_TABLE: usize = 2048;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LOG_FACTORIAL_TABLE);
        let mut acc = 0.0;
        table.push(0.0);
        for i in 1..LOG_FACTORIAL_TABLE {
            acc += (i as f64).ln();
            table.push(acc);
        }
        table
    })
}

/// `ln(k!)`.
pub fn log_factorial(k: FockIndex) -> f64 {
    if k < LOG_FACTORIAL_TABLE {
        return log_factorial_table()[k];
    }
    // Stirling series; the truncation error is far below 1 ulp at k >= 2048.
    let n = k as f64;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + inv / 12.0 - inv * inv2 / 360.0
        + inv * inv2 * inv2 / 1260.0
}

/// `ln C(n, k)` for `k <= n`.
pub fn log_binomial(n: FockIndex, k: FockIndex) -> f64 {
    debug_assert!(k <= n);
    log_factorial(n) - log_factorial(k) - log_factorial(n - k)
}

/// Phase of `beta^power` as a unit complex number. Real amplitudes give an
/// exact `+-1` so parity zeros and sign symmetries survive bit-for-bit.
fn unit_phase_pow(beta: Complex64, power: usize) -> Complex64 {
    if beta.im == 0.0 {
        let sign = if beta.re < 0.0 && power % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        Complex64::new(sign, 0.0)
    } else {
        Complex64::from_polar(1.0, beta.arg() * power as f64)
    }
}

/// Coherent-state amplitude `<k|beta> = exp(-|beta|^2/2) beta^k / sqrt(k!)`.
pub fn g1(beta: Complex64, k: FockIndex) -> Complex64 {
    let r = beta.norm();
    if r == 0.0 {
        return if k == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let log_mag = -0.5 * r * r + k as f64 * r.ln() - 0.5 * log_factorial(k);
    unit_phase_pow(beta, k) * log_mag.exp()
}

/// Thermalized coherent amplitude `<k2, k3| T23(theta) |beta, 0~>`.
///
/// Zero whenever `k2 < k3`. Otherwise
/// `(1/cosh) e^{-|beta|^2/2} sqrt(k3!/k2!) C(k2,k3) beta^{k2-k3} sinh^k3 / cosh^k2`.
pub fn g23(beta: Complex64, k2: FockIndex, k3: FockIndex, theta: ThermalParameter) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    if k2 < k3 {
        return zero;
    }
    let shift = k2 - k3;
    let r = beta.norm();
    let s = theta.sinh();
    let c = theta.cosh();
    if (r == 0.0 && shift > 0) || (s == 0.0 && k3 > 0) {
        return zero;
    }
    let mut log_mag = -c.ln() - 0.5 * r * r
        + 0.5 * (log_factorial(k3) - log_factorial(k2))
        + log_binomial(k2, k3)
        - k2 as f64 * c.ln();
    if shift > 0 {
        log_mag += shift as f64 * r.ln();
    }
    if k3 > 0 {
        log_mag += k3 as f64 * s.ln();
    }
    unit_phase_pow(beta, shift) * log_mag.exp()
}
