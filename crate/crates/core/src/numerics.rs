//! Dense Hermitian linear algebra used by the analysis modules.
//!
//! Eigendecomposition is delegated to nalgebra. Large two-mode operators are
//! never diagonalized directly: every state built here is supported on a
//! low-dimensional mode-1 subspace (the span of `|beta>` and `|-beta>`), so
//! spectra are taken after compressing onto that support.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QbellError, Result};
use crate::fock::{Mode, TruncationSpec};
use crate::quasi_bell::PureStateVector;
use crate::thermal::DensityMatrix;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative eigenvalue floor below which a reduced-state direction is treated
/// as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct HermitianEigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` belongs to `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
}

/// `max |m_ij - conj(m_ji)|`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    const TILE: usize = 32;
    let n = m.nrows();
    let data = m.as_slice();
    let mut worst = 0.0_f64;
    // Tiled so the transposed reads stay in cache.
    for jb in (0..n).step_by(TILE) {
        for ib in (0..=jb).step_by(TILE) {
            for j in jb..(jb + TILE).min(n) {
                let col = &data[j * n..(j + 1) * n];
                for (i, &z) in col.iter().enumerate().take((ib + TILE).min(j + 1)).skip(ib) {
                    worst = worst.max((z - data[i * n + j].conj()).norm_sqr());
                }
            }
        }
    }
    worst.sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(QbellError::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let asym = hermiticity_residual(m);
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    if asym > 1e-10 * scale {
        return Err(QbellError::NonHermitian { asymmetry: asym });
    }
    Ok(())
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigenResult> {
    check_hermitian(m)?;
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok(HermitianEigenResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let mut values: Vec<f64> = hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `sum |lambda_i|`.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.iter().map(|l| l.abs()).sum())
}

/// Von Neumann entropy in bits; eigenvalues below `1e-15` contribute nothing.
pub fn von_neumann_entropy_bits(m: &CMatrix) -> Result<f64> {
    let values = hermitian_eigenvalues(m)?;
    Ok(values
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum())
}

/// Binary entropy `h2(x)` in bits, with `h2(0) = h2(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// Reduced operator on one mode of a flattened two-mode matrix.
pub fn partial_trace_raw(m: &CMatrix, trunc: &TruncationSpec, keep: Mode) -> CMatrix {
    let (d1, d2) = (trunc.dim1(), trunc.dim2());
    match keep {
        Mode::One => CMatrix::from_fn(d1, d1, |a, b| {
            (0..d2).map(|k| m[(a * d2 + k, b * d2 + k)]).sum()
        }),
        Mode::Two => CMatrix::from_fn(d2, d2, |a, b| {
            (0..d1).map(|k| m[(k * d2 + a, k * d2 + b)]).sum()
        }),
    }
}

pub fn partial_trace(rho: &DensityMatrix, keep: Mode) -> CMatrix {
    partial_trace_raw(rho.matrix(), rho.truncation(), keep)
}

/// `psi^dagger rho psi`, checked to be real and inside `[-1e-9, 1 + 1e-9]`.
pub fn expectation(rho: &DensityMatrix, psi: &PureStateVector) -> Result<f64> {
    if !rho.truncation().same_basis(psi.truncation()) {
        return Err(QbellError::DimensionMismatch {
            expected: rho.dim(),
            found: psi.amplitudes().len(),
        });
    }
    let amps = psi.amplitudes();
    let rho_psi = rho.matrix() * amps;
    let value = amps.dotc(&rho_psi);
    if value.im.abs() > 1e-12 * value.norm().max(1.0) {
        return Err(QbellError::NumericalInstability(format!(
            "expectation value has imaginary residue {:e}",
            value.im
        )));
    }
    if !(-1e-9..=1.0 + 1e-9).contains(&value.re) {
        return Err(QbellError::NumericalInstability(format!(
            "expectation value {} outside [0, 1]",
            value.re
        )));
    }
    Ok(value.re)
}

/// Orthonormal basis (columns) of the mode-1 support of a PSD two-mode operator.
pub fn mode1_support(cover: &CMatrix, trunc: &TruncationSpec) -> Result<CMatrix> {
    support_of_reduced(&partial_trace_raw(cover, trunc, Mode::One))
}

/// Orthonormal basis of the range of a PSD single-mode operator.
pub fn support_of_reduced(reduced: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eigen(reduced)?;
    let top = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > SUPPORT_THRESHOLD * top)
        .collect();
    Ok(CMatrix::from_fn(reduced.nrows(), keep.len(), |r, c| {
        eig.eigenvectors[(r, keep[c])]
    }))
}

/// `(V (x) 1)^dagger M (V (x) 1)` for an isometry `V` on mode 1.
pub fn compress_mode1(m: &CMatrix, trunc: &TruncationSpec, v: &CMatrix) -> CMatrix {
    let (d1, d2) = (trunc.dim1(), trunc.dim2());
    let r = v.ncols();
    let mut out = CMatrix::zeros(r * d2, r * d2);
    let mut left = vec![Complex64::new(0.0, 0.0); r * d2];
    // One pass over the columns of M (column-major).
    for (j, col) in m.column_iter().enumerate() {
        let (n1, n2) = (j / d2, j % d2);
        left.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for m1 in 0..d1 {
            let block = &col.as_slice()[m1 * d2..(m1 + 1) * d2];
            for a in 0..r {
                let w = v[(m1, a)].conj();
                for (dst, &x) in left[a * d2..(a + 1) * d2].iter_mut().zip(block) {
                    *dst += w * x;
                }
            }
        }
        for b in 0..r {
            let w = v[(n1, b)];
            let mut dst = out.column_mut(b * d2 + n2);
            for (z, &x) in dst.iter_mut().zip(&left) {
                *z += w * x;
            }
        }
    }
    out
}

/// Spectrum of Hermitian `m` restricted to the mode-1 support of a PSD `cover`.
///
/// Exact whenever `m` is supported inside `cover`'s support: the dropped
/// eigenvalues are zeros.
pub fn spectrum_on_mode1_support(
    m: &CMatrix,
    cover: &CMatrix,
    trunc: &TruncationSpec,
) -> Result<Vec<f64>> {
    spectrum_on_reduced_support(m, &partial_trace_raw(cover, trunc, Mode::One), trunc)
}

/// As [`spectrum_on_mode1_support`], with the cover already traced down to mode 1.
pub fn spectrum_on_reduced_support(
    m: &CMatrix,
    reduced_cover: &CMatrix,
    trunc: &TruncationSpec,
) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    spectrum_on_support_prechecked(m, reduced_cover, trunc)
}

/// Skips the Hermiticity check for callers that already ran it.
pub(crate) fn spectrum_on_support_prechecked(
    m: &CMatrix,
    reduced_cover: &CMatrix,
    trunc: &TruncationSpec,
) -> Result<Vec<f64>> {
    let v = support_of_reduced(reduced_cover)?;
    if v.ncols() == trunc.dim1() {
        return hermitian_eigenvalues(m);
    }
    hermitian_eigenvalues(&compress_mode1(m, trunc, &v))
}
