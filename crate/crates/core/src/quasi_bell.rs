//! The four noiseless quasi-Bell entangled coherent states.
//!
//! ```text
//! Phi1 = N+ (|b, b> + |-b,-b>)      Phi2 = N- (|b, b> - |-b,-b>)
//! Phi3 = N+ (|b,-b> + |-b, b>)      Phi4 = N- (|b,-b> - |-b, b>)
//! ```
//!
//! with `N+- = 1 / sqrt(2 (1 +- exp(-4|b|^2)))`.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QbellError, Result};
use crate::fock::{g1, Mode, TruncationSpec};
use crate::numerics::{binary_entropy, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuasiBellLabel {
    Phi1,
    Phi2,
    Phi3,
    Phi4,
}

impl QuasiBellLabel {
    pub const ALL: [QuasiBellLabel; 4] = [
        QuasiBellLabel::Phi1,
        QuasiBellLabel::Phi2,
        QuasiBellLabel::Phi3,
        QuasiBellLabel::Phi4,
    ];

    /// Relative sign between the two coherent branches; also picks `N+` or `N-`.
    pub fn sign(self) -> Sign {
        match self {
            QuasiBellLabel::Phi1 | QuasiBellLabel::Phi3 => Sign::Plus,
            QuasiBellLabel::Phi2 | QuasiBellLabel::Phi4 => Sign::Minus,
        }
    }

    /// Phi3 and Phi4 carry the opposite amplitude on mode 2.
    pub fn mode2_flipped(self) -> bool {
        matches!(self, QuasiBellLabel::Phi3 | QuasiBellLabel::Phi4)
    }

    pub fn name(self) -> &'static str {
        match self {
            QuasiBellLabel::Phi1 => "phi1",
            QuasiBellLabel::Phi2 => "phi2",
            QuasiBellLabel::Phi3 => "phi3",
            QuasiBellLabel::Phi4 => "phi4",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// The two coherent branches `(coefficient, mode-1 amplitude, mode-2 amplitude)`.
    pub fn branches(self, beta: Complex64) -> [(f64, Complex64, Complex64); 2] {
        let s = self.sign().factor();
        let b2 = if self.mode2_flipped() { -beta } else { beta };
        [(1.0, beta, b2), (s, -beta, -b2)]
    }
}

impl fmt::Display for QuasiBellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuasiBellLabel {
    type Err = QbellError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi1" | "1" => Ok(QuasiBellLabel::Phi1),
            "phi2" | "2" => Ok(QuasiBellLabel::Phi2),
            "phi3" | "3" => Ok(QuasiBellLabel::Phi3),
            "phi4" | "4" => Ok(QuasiBellLabel::Phi4),
            other => Err(QbellError::Usage(format!(
                "unknown state label {other:?} (expected phi1, phi2, phi3 or phi4)"
            ))),
        }
    }
}

/// `N+- = 1 / sqrt(2 (1 +- exp(-4|beta|^2)))`.
pub fn normalizer(sign: Sign, beta: Complex64) -> Result<f64> {
    let x = -4.0 * beta.norm_sqr();
    match sign {
        Sign::Plus => Ok(1.0 / (2.0 * (1.0 + x.exp())).sqrt()),
        Sign::Minus => {
            if beta.norm_sqr() == 0.0 {
                return Err(QbellError::DegenerateState { label: "N-" });
            }
            Ok(1.0 / (2.0 * -x.exp_m1()).sqrt())
        }
    }
}

pub(crate) fn label_normalizer(label: QuasiBellLabel, beta: Complex64) -> Result<f64> {
    normalizer(label.sign(), beta).map_err(|_| QbellError::DegenerateState {
        label: label.name(),
    })
}

/// Two-mode pure state over the truncated Fock basis, row-major in `(n1, n2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStateVector {
    trunc: TruncationSpec,
    amps: CVector,
}

impl PureStateVector {
    pub fn from_amplitudes(trunc: TruncationSpec, amps: CVector) -> Result<Self> {
        if amps.len() != trunc.dim() {
            return Err(QbellError::DimensionMismatch {
                expected: trunc.dim(),
                found: amps.len(),
            });
        }
        Ok(Self { trunc, amps })
    }

    pub fn truncation(&self) -> &TruncationSpec {
        &self.trunc
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> Complex64 {
        self.amps[self.trunc.index(n1, n2)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureStateVector) -> Result<Complex64> {
        if !self.trunc.same_basis(&other.trunc) {
            return Err(QbellError::DimensionMismatch {
                expected: self.amps.len(),
                found: other.amps.len(),
            });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// Apply `1 (x) R2(pi)`: amplitude `(n1, n2)` picks up `(-1)^n2`.
    pub fn rotate_mode2_by_pi(&self) -> PureStateVector {
        let mut amps = self.amps.clone();
        for (idx, a) in amps.iter_mut().enumerate() {
            if self.trunc.unflatten(idx).1 % 2 == 1 {
                *a = -*a;
            }
        }
        PureStateVector {
            trunc: self.trunc,
            amps,
        }
    }

    /// Mode whose top Fock level carries more weight; used to blame truncation loss.
    fn heavier_edge(&self) -> Mode {
        let (d1, d2) = (self.trunc.dim1(), self.trunc.dim2());
        let edge1: f64 = (0..d2)
            .map(|n2| self.amplitude(d1 - 1, n2).norm_sqr())
            .sum();
        let edge2: f64 = (0..d1)
            .map(|n1| self.amplitude(n1, d2 - 1).norm_sqr())
            .sum();
        if edge1 >= edge2 {
            Mode::One
        } else {
            Mode::Two
        }
    }
}

/// Fock expansion of a quasi-Bell state; fails if the truncated norm loss
/// exceeds the tolerance.
pub fn build_pure_state(
    label: QuasiBellLabel,
    beta: Complex64,
    trunc: TruncationSpec,
) -> Result<PureStateVector> {
    let norm = label_normalizer(label, beta)?;
    let branches = label.branches(beta);
    let (d1, d2) = (trunc.dim1(), trunc.dim2());
    let mode1: Vec<[Complex64; 2]> = (0..d1)
        .map(|n| [g1(branches[0].1, n), g1(branches[1].1, n)])
        .collect();
    let mode2: Vec<[Complex64; 2]> = (0..d2)
        .map(|n| [g1(branches[0].2, n), g1(branches[1].2, n)])
        .collect();
    let amps = CVector::from_fn(trunc.dim(), |idx, _| {
        let (n1, n2) = (idx / d2, idx % d2);
        let a = mode1[n1][0] * mode2[n2][0] * branches[0].0;
        let b = mode1[n1][1] * mode2[n2][1] * branches[1].0;
        (a + b) * norm
    });
    let state = PureStateVector { trunc, amps };
    let deficit = 1.0 - state.norm_sqr();
    if deficit > trunc.trace_tolerance {
        return Err(QbellError::TruncationTooSmall {
            mode: state.heavier_edge(),
            deficit,
            tolerance: trunc.trace_tolerance,
        });
    }
    Ok(state)
}

/// Gram matrix of `{Phi1, .., Phi4}`, indexed by [`QuasiBellLabel::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub entries: Matrix4<Complex64>,
}

impl GramMatrix {
    pub fn get(&self, a: QuasiBellLabel, b: QuasiBellLabel) -> Complex64 {
        self.entries[(a.index(), b.index())]
    }

    /// `K13 = <Phi1|Phi3>`.
    pub fn k13(&self) -> Complex64 {
        self.get(QuasiBellLabel::Phi1, QuasiBellLabel::Phi3)
    }

    /// Largest modulus among entries that vanish analytically (everything
    /// except the diagonal and the (1,3)/(3,1) pair).
    pub fn off_pattern_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                if i == j || (i, j) == (0, 2) || (i, j) == (2, 0) {
                    continue;
                }
                worst = worst.max(self.entries[(i, j)].norm());
            }
        }
        worst
    }
}

/// Analytic Gram matrix: identity apart from `K13 = K31 = sech(2|beta|^2)`.
pub fn gram_matrix(beta: Complex64) -> Result<GramMatrix> {
    if beta.norm_sqr() == 0.0 {
        return Err(QbellError::DegenerateState { label: "phi2/phi4" });
    }
    let k13 = Complex64::new(1.0 / (2.0 * beta.norm_sqr()).cosh(), 0.0);
    let mut entries = Matrix4::identity();
    entries[(0, 2)] = k13;
    entries[(2, 0)] = k13;
    Ok(GramMatrix { entries })
}

/// Gram matrix from inner products of the truncated state vectors.
pub fn numeric_gram_matrix(beta: Complex64, trunc: TruncationSpec) -> Result<GramMatrix> {
    let states = QuasiBellLabel::ALL
        .iter()
        .map(|&l| build_pure_state(l, beta, trunc))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            entries[(i, j)] = states[i].inner(&states[j])?;
        }
    }
    Ok(GramMatrix { entries })
}

/// `x tanh x` (Phi1, Phi3) or `x coth x` (Phi2, Phi4) with `x = 2|beta|^2`;
/// the `beta -> 0` limits are 0 and 1.
pub fn mean_photon_number(label: QuasiBellLabel, beta: Complex64) -> f64 {
    let x = 2.0 * beta.norm_sqr();
    match label.sign() {
        Sign::Plus => x * x.tanh(),
        Sign::Minus => {
            if x == 0.0 {
                1.0
            } else {
                x / x.tanh()
            }
        }
    }
}

/// Entropy of entanglement in bits: 1 for Phi2/Phi4, `h2((1 + K13)/2)` for Phi1/Phi3.
pub fn pure_entropy_of_entanglement(label: QuasiBellLabel, beta: Complex64) -> f64 {
    match label.sign() {
        Sign::Minus => 1.0,
        Sign::Plus => {
            let k13 = 1.0 / (2.0 * beta.norm_sqr()).cosh();
            binary_entropy(0.5 * (1.0 + k13))
        }
    }
}
