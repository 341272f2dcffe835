//! Quasi-Bell states after thermal noise on mode 2.
//!
//! Each state is `Tr_3[(1 (x) T23) |Phi>|0~><Phi|<0~| (1 (x) T23^dagger)]`.
//! In the Fock basis an element factorizes into a mode-1 coherent product and
//! a mode-2 kernel
//!
//! ```text
//! K(a, b; m2, n2) = sum_{k <= min(m2, n2)} g23(a, m2, k) g23(b, n2, k)^*
//! ```
//!
//! The mode-3 sum is exact: `g23` vanishes for `k > k2`, so only the two real
//! modes are truncated.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QbellError, Result};
use crate::fock::{g1, g23, Mode, ThermalParameter, TruncationSpec, DEFAULT_TRACE_TOLERANCE};
use crate::numerics::{self, CMatrix};
use crate::par::Execution;
use crate::quasi_bell::{label_normalizer, PureStateVector, QuasiBellLabel};

/// Maximum `|M - M^dagger|` accepted from an assembled state.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;
/// Eigenvalues above this (negative) floor count as truncation noise.
pub const PSD_TOLERANCE: f64 = -1e-9;

pub const JSON_LAYOUT: &str = "row-major n1*(n2_max+1)+n2";

/// Density matrix over the flattened two-mode basis `n1 * (n2_max + 1) + n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    trunc: TruncationSpec,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix without checking the state invariants; see [`DensityMatrix::validate`].
    pub fn from_parts(trunc: TruncationSpec, mat: CMatrix) -> Result<Self> {
        if mat.nrows() != trunc.dim() || mat.ncols() != trunc.dim() {
            return Err(QbellError::DimensionMismatch {
                expected: trunc.dim(),
                found: mat.nrows().max(mat.ncols()),
            });
        }
        Ok(Self { trunc, mat })
    }

    /// `|psi><psi|`.
    pub fn from_pure(psi: &PureStateVector) -> Self {
        let a = psi.amplitudes();
        Self {
            trunc: *psi.truncation(),
            mat: a * a.adjoint(),
        }
    }

    pub fn truncation(&self) -> &TruncationSpec {
        &self.trunc
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// `<m1, m2| rho |n1, n2>`.
    pub fn element(&self, m1: usize, m2: usize, n1: usize, n2: usize) -> Complex64 {
        self.mat[(self.trunc.index(m1, m2), self.trunc.index(n1, n2))]
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn trace_deficit(&self) -> f64 {
        1.0 - self.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        numerics::hermiticity_residual(&self.mat)
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Smallest eigenvalue, or 0 when the state has a kernel.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let spectrum = numerics::spectrum_on_mode1_support(&self.mat, &self.mat, &self.trunc)?;
        Ok(self.lowest_of(&spectrum))
    }

    fn lowest_of(&self, spectrum: &[f64]) -> f64 {
        let lowest = spectrum.first().copied().unwrap_or(0.0);
        if spectrum.len() < self.dim() {
            lowest.min(0.0)
        } else {
            lowest
        }
    }

    /// Checks Hermiticity, trace window and positivity.
    pub fn validate(&self) -> Result<()> {
        let asym = self.hermiticity_residual();
        if asym > HERMITICITY_TOLERANCE {
            return Err(QbellError::NumericalInstability(format!(
                "assembled state is not Hermitian: max |M - M^dagger| = {asym:e}"
            )));
        }
        let deficit = self.trace_deficit();
        if deficit > self.trunc.trace_tolerance {
            return Err(QbellError::TruncationTooSmall {
                mode: photon_number_distribution_unclipped(self).heavier_edge(),
                deficit,
                tolerance: self.trunc.trace_tolerance,
            });
        }
        if deficit < -1e-12 {
            return Err(QbellError::NumericalInstability(format!(
                "trace exceeds one by {:e}",
                -deficit
            )));
        }
        let reduced = numerics::partial_trace(self, Mode::One);
        let spectrum = numerics::spectrum_on_support_prechecked(&self.mat, &reduced, &self.trunc)?;
        let lowest = self.lowest_of(&spectrum);
        if lowest < PSD_TOLERANCE {
            return Err(QbellError::NotPositiveSemidefinite {
                min_eigenvalue: lowest,
            });
        }
        Ok(())
    }

    /// Serialize to the documented JSON layout, optionally with a metadata object.
    pub fn to_json(&self, metadata: Option<serde_json::Value>) -> Result<String> {
        let d = self.dim();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.mat[(i, j)];
                re.push(z.re);
                im.push(z.im);
            }
        }
        let doc = DensityJson {
            n1_max: self.trunc.n1_max,
            n2_max: self.trunc.n2_max,
            layout: JSON_LAYOUT.to_string(),
            re,
            im,
            metadata,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    /// Inverse of [`DensityMatrix::to_json`]; the trace tolerance is taken from
    /// `metadata.trace_tolerance` when present.
    pub fn from_json(text: &str) -> Result<(Self, Option<serde_json::Value>)> {
        let doc: DensityJson = serde_json::from_str(text)?;
        if doc.layout != JSON_LAYOUT {
            return Err(QbellError::InvalidParameter(format!(
                "unsupported layout {:?}",
                doc.layout
            )));
        }
        let tol = doc
            .metadata
            .as_ref()
            .and_then(|m| m.get("trace_tolerance"))
            .and_then(|v| v.as_f64())
            .unwrap_or(DEFAULT_TRACE_TOLERANCE);
        let trunc = TruncationSpec::new(doc.n1_max, doc.n2_max, tol)?;
        let d = trunc.dim();
        if doc.re.len() != d * d || doc.im.len() != d * d {
            return Err(QbellError::DimensionMismatch {
                expected: d * d,
                found: doc.re.len().min(doc.im.len()),
            });
        }
        let mat = CMatrix::from_fn(d, d, |i, j| {
            Complex64::new(doc.re[i * d + j], doc.im[i * d + j])
        });
        Ok((Self { trunc, mat }, doc.metadata))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DensityJson {
    n1_max: usize,
    n2_max: usize,
    layout: String,
    re: Vec<f64>,
    im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

/// `P(n1, n2) = <n1, n2| rho |n1, n2>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonNumberDistribution {
    trunc: TruncationSpec,
    probs: Vec<f64>,
}

impl PhotonNumberDistribution {
    pub fn truncation(&self) -> &TruncationSpec {
        &self.trunc
    }

    pub fn get(&self, n1: usize, n2: usize) -> f64 {
        self.probs[self.trunc.index(n1, n2)]
    }

    /// `(n1, n2, P)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| {
            let (n1, n2) = self.trunc.unflatten(i);
            (n1, n2, p)
        })
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `sum n2^k P(n1, n2)`.
    pub fn n2_moment(&self, power: i32) -> f64 {
        self.iter()
            .map(|(_, n2, p)| (n2 as f64).powi(power) * p)
            .sum()
    }

    pub fn n1_moment(&self, power: i32) -> f64 {
        self.iter()
            .map(|(n1, _, p)| (n1 as f64).powi(power) * p)
            .sum()
    }

    fn heavier_edge(&self) -> Mode {
        let (d1, d2) = (self.trunc.dim1(), self.trunc.dim2());
        let edge1: f64 = (0..d2).map(|n2| self.get(d1 - 1, n2)).sum();
        let edge2: f64 = (0..d1).map(|n1| self.get(n1, d2 - 1)).sum();
        if edge1 >= edge2 {
            Mode::One
        } else {
            Mode::Two
        }
    }
}

fn photon_number_distribution_unclipped(rho: &DensityMatrix) -> PhotonNumberDistribution {
    PhotonNumberDistribution {
        trunc: rho.trunc,
        probs: rho.mat.diagonal().iter().map(|z| z.re).collect(),
    }
}

/// Diagonal of `rho`; entries in `[-1e-12, 0)` are clipped to zero.
pub fn photon_number_distribution(rho: &DensityMatrix) -> Result<PhotonNumberDistribution> {
    let mut dist = photon_number_distribution_unclipped(rho);
    for p in dist.probs.iter_mut() {
        if *p < -1e-12 {
            return Err(QbellError::NumericalInstability(format!(
                "negative photon-number probability {p:e}"
            )));
        }
        *p = p.max(0.0);
    }
    Ok(dist)
}

/// `(1 (x) R2(pi)) rho (1 (x) R2(pi))^dagger`: element `(m; n)` times `(-1)^(m2 + n2)`.
pub fn apply_mode2_pi_rotation(rho: &DensityMatrix) -> DensityMatrix {
    let trunc = rho.trunc;
    let d2 = trunc.dim2();
    let mut mat = rho.mat.clone();
    for (j, mut col) in mat.column_iter_mut().enumerate() {
        let n2 = j % d2;
        for (i, z) in col.iter_mut().enumerate() {
            if (i % d2 + n2) % 2 == 1 {
                *z = -*z;
            }
        }
    }
    DensityMatrix { trunc, mat }
}

/// Mode-2 kernel `K(a, b; m2, n2)` as a dense `d2 x d2` row-major table.
fn mode2_kernel(a: &[Vec<Complex64>], b: &[Vec<Complex64>], d2: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); d2 * d2];
    for m2 in 0..d2 {
        for n2 in 0..d2 {
            let kmax = m2.min(n2);
            out[m2 * d2 + n2] = (0..=kmax).map(|k| a[m2][k] * b[n2][k].conj()).sum();
        }
    }
    out
}

/// Density matrix of a quasi-Bell state with thermal noise `theta` on mode 2.
pub fn build_thermal_state(
    label: QuasiBellLabel,
    beta: Complex64,
    theta: ThermalParameter,
    trunc: TruncationSpec,
) -> Result<DensityMatrix> {
    build_thermal_state_with(Execution::default(), label, beta, theta, trunc)
}

/// [`build_thermal_state`] with an explicit execution mode.
pub fn build_thermal_state_with(
    exec: Execution,
    label: QuasiBellLabel,
    beta: Complex64,
    theta: ThermalParameter,
    trunc: TruncationSpec,
) -> Result<DensityMatrix> {
    let rho = assemble(exec, label, beta, theta, trunc)?;
    rho.validate()?;
    Ok(rho)
}

/// Assembly without the invariant checks.
pub(crate) fn assemble(
    exec: Execution,
    label: QuasiBellLabel,
    beta: Complex64,
    theta: ThermalParameter,
    trunc: TruncationSpec,
) -> Result<DensityMatrix> {
    let norm = label_normalizer(label, beta)?;
    let norm_sq = norm * norm;
    let branches = label.branches(beta);
    let (d1, d2) = (trunc.dim1(), trunc.dim2());

    let mode1: [Vec<Complex64>; 2] =
        [0, 1].map(|s| (0..d1).map(|n| g1(branches[s].1, n)).collect());
    let thermal: [Vec<Vec<Complex64>>; 2] = [0, 1].map(|s| {
        (0..d2)
            .map(|k2| {
                (0..=k2)
                    .map(|k3| g23(branches[s].2, k2, k3, theta))
                    .collect()
            })
            .collect()
    });
    let kernels: [[Vec<Complex64>; 2]; 2] =
        [0, 1].map(|s| [0, 1].map(|t| mode2_kernel(&thermal[s], &thermal[t], d2)));
    let coeff = [0, 1].map(|s| [0, 1].map(|t| norm_sq * branches[s].0 * branches[t].0));

    let dim = trunc.dim();
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    // Column-major storage: chunk j is column (n1, n2).
    exec.for_each_chunk_mut(&mut data, dim, |col, out| {
        let (n1, n2) = (col / d2, col % d2);
        let right = [0, 1].map(|t| mode1[t][n1].conj());
        for m1 in 0..d1 {
            let w = [0, 1].map(|s| [0, 1].map(|t| coeff[s][t] * mode1[s][m1] * right[t]));
            let rows = &mut out[m1 * d2..(m1 + 1) * d2];
            for (m2, z) in rows.iter_mut().enumerate() {
                let k = m2 * d2 + n2;
                *z = w[0][0] * kernels[0][0][k]
                    + w[0][1] * kernels[0][1][k]
                    + w[1][0] * kernels[1][0][k]
                    + w[1][1] * kernels[1][1][k];
            }
        }
    });
    DensityMatrix::from_parts(trunc, CMatrix::from_vec(dim, dim, data))
}
