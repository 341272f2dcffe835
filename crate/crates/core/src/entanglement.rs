//! Entanglement of the noisy odd state `rho(Phi2)`.
//!
//! The fully entangled fraction is restricted to the family `|Phi2(alpha)>`
//! with real `alpha > 0`, so every value here is a lower bound on the true
//! FEF; emitted data labels it "restricted". `H(f)` then lower-bounds the
//! entanglement of formation.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QbellError, Result};
use crate::fock::ThermalParameter;
use crate::numerics::binary_entropy;
use crate::par::Execution;

/// Below this `alpha` the bracket is evaluated in factorized form.
pub const SMALL_ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FefEvaluation {
    pub alpha: f64,
    /// Clipped to `[0, 1]`.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementBound {
    pub fef: f64,
    pub bound_bits: f64,
}

impl EntanglementBound {
    pub fn from_fef(fef: f64) -> Self {
        Self {
            fef,
            bound_bits: eof_lower_bound(fef),
        }
    }
}

/// Coarse grid followed by golden-section refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FefSearch {
    pub grid_points: usize,
    /// Upper end of the bracket; `None` means `max(2 beta, 4)`.
    pub alpha_hi: Option<f64>,
    pub alpha_tol: f64,
}

impl Default for FefSearch {
    fn default() -> Self {
        Self {
            grid_points: 200,
            alpha_hi: None,
            alpha_tol: 1e-6,
        }
    }
}

fn n_minus_sq(x: f64) -> f64 {
    1.0 / (2.0 * -(-4.0 * x * x).exp_m1())
}

/// `<Phi2(alpha)| rho(Phi2; beta, theta) |Phi2(alpha)>` for real `alpha, beta > 0`.
pub fn fef_closed_form(alpha: f64, beta: f64, theta: ThermalParameter) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(QbellError::InvalidParameter(format!(
            "alpha and beta must be positive, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if alpha < SMALL_ALPHA {
        return Ok(fef_factorized(alpha, beta, theta));
    }
    Ok(fef_bracket(alpha, beta, theta))
}

/// The eight-term bracket with the complex conjugations kept explicit.
fn fef_bracket(alpha: f64, beta: f64, theta: ThermalParameter) -> f64 {
    let (c, t) = (theta.cosh(), theta.tanh());
    let a = Complex64::new(alpha, 0.0);
    let b = Complex64::new(beta, 0.0);
    let a2 = a.norm_sqr();
    let b2 = b.norm_sqr();
    // a* b and a b*
    let ab = a.conj() * b;
    let ba = a * b.conj();
    let e = |z: Complex64| z.exp();
    let r = |x: f64| Complex64::new(x, 0.0);
    let wide = a2 * (1.0 + t * t);

    let terms = [
        e(r(-(a / c - b).norm_sqr())) * e(r(-(a - b).norm_sqr())),
        -e(-wide + ab / c - ba / c - b2) * e(-a2 + ab - ba - b2),
        -e(-wide - ab / c + ba / c - b2) * e(-a2 - ab + ba - b2),
        e(r(-(a / c + b).norm_sqr())) * e(r(-(a + b).norm_sqr())),
        -e(-a2 / (c * c) + ab / c - ba / c - b2) * e(-a2 + ab - ba - b2),
        e(-wide + ab / c + ba / c - b2) * e(r(-(a - b).norm_sqr())),
        e(-wide - ab / c - ba / c - b2) * e(r(-(a + b).norm_sqr())),
        -e(-a2 / (c * c) - ab / c + ba / c - b2) * e(-a2 - ab + ba - b2),
    ];
    let bracket: Complex64 = terms.iter().sum();
    2.0 * n_minus_sq(alpha) * n_minus_sq(beta) / (c * c) * bracket.re
}

/// Same quantity with the `+-` pairs combined into `sinh^2`, free of the
/// `0/0` cancellation as `alpha -> 0`.
fn fef_factorized(alpha: f64, beta: f64, theta: ThermalParameter) -> f64 {
    let (c, t) = (theta.cosh(), theta.tanh());
    let kappa = 1.0 + 1.0 / c;
    let sh = (alpha * beta * kappa).sinh();
    let envelope =
        (-alpha * alpha * (1.0 + 1.0 / (c * c))).exp() + (-alpha * alpha * (2.0 + t * t)).exp();
    let denom = c * c * -(-4.0 * alpha * alpha).exp_m1() * -(-4.0 * beta * beta).exp_m1();
    2.0 * sh * sh * (-2.0 * beta * beta).exp() * envelope / denom
}

fn clip_fidelity(v: f64) -> Result<f64> {
    if !(-1e-9..=1.0 + 1e-9).contains(&v) {
        return Err(QbellError::NumericalInstability(format!(
            "fidelity {v} outside [0, 1]"
        )));
    }
    Ok(v.clamp(0.0, 1.0))
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Restricted FEF: `max over alpha in (0, alpha_hi]` of [`fef_closed_form`].
pub fn maximize_fef(
    beta: f64,
    theta: ThermalParameter,
    search: FefSearch,
) -> Result<FefEvaluation> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(QbellError::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    if search.grid_points < 3 || search.alpha_tol.is_nan() || search.alpha_tol <= 0.0 {
        return Err(QbellError::InvalidParameter(
            "search needs at least 3 grid points and a positive tolerance".into(),
        ));
    }
    let hi = search.alpha_hi.unwrap_or_else(|| (2.0 * beta).max(4.0));
    if hi.is_nan() || hi <= 0.0 {
        return Err(QbellError::InvalidParameter(format!(
            "alpha_hi must be positive, got {hi}"
        )));
    }
    let n = search.grid_points;
    let step = hi / n as f64;
    let objective = |a: f64| fef_closed_form(a, beta, theta).unwrap_or(f64::NEG_INFINITY);

    let (mut best_i, mut best_v) = (1, f64::NEG_INFINITY);
    for i in 1..=n {
        let v = objective(step * i as f64);
        if v > best_v {
            best_i = i;
            best_v = v;
        }
    }
    let lo = if best_i == 1 {
        step * 1e-6
    } else {
        step * (best_i - 1) as f64
    };
    let up = step * (best_i + 1).min(n) as f64;
    let (a_ref, v_ref) = golden_section_max(objective, lo, up, search.alpha_tol);
    let (alpha, value) = if v_ref >= best_v {
        (a_ref, v_ref)
    } else {
        (step * best_i as f64, best_v)
    };
    Ok(FefEvaluation {
        alpha,
        value: clip_fidelity(value)?,
    })
}

/// `H(f) = h2(1/2 + sqrt(f (1 - f)))` for `f >= 1/2`, else 0.
pub fn eof_lower_bound(fef: f64) -> f64 {
    let f = fef.clamp(0.0, 1.0);
    if f < 0.5 {
        return 0.0;
    }
    binary_entropy(0.5 + (f * (1.0 - f)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementPoint {
    pub beta: f64,
    pub theta: f64,
    pub alpha_star: f64,
    pub fef: f64,
    pub bound_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementThreshold {
    pub beta: f64,
    /// Smallest grid `theta` with restricted FEF below 1/2, if any.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementScan {
    /// `beta`-major, `theta` in grid order.
    pub points: Vec<EntanglementPoint>,
    pub thresholds: Vec<EntanglementThreshold>,
}

pub fn entanglement_threshold_scan(
    beta_grid: &[f64],
    theta_grid: &[f64],
    search: FefSearch,
) -> Result<EntanglementScan> {
    entanglement_threshold_scan_with(Execution::default(), beta_grid, theta_grid, search)
}

pub fn entanglement_threshold_scan_with(
    exec: Execution,
    beta_grid: &[f64],
    theta_grid: &[f64],
    search: FefSearch,
) -> Result<EntanglementScan> {
    if beta_grid.is_empty() || theta_grid.is_empty() {
        return Err(QbellError::InvalidParameter(
            "beta and theta grids must be nonempty".into(),
        ));
    }
    let thetas = theta_grid
        .iter()
        .map(|&t| ThermalParameter::new(t))
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(f64, ThermalParameter)> = beta_grid
        .iter()
        .flat_map(|&b| thetas.iter().map(move |&t| (b, t)))
        .collect();
    let points = exec.try_map_collect(&grid, |&(beta, theta)| {
        let eval = maximize_fef(beta, theta, search)?;
        Ok(EntanglementPoint {
            beta,
            theta: theta.value(),
            alpha_star: eval.alpha,
            fef: eval.value,
            bound_bits: eof_lower_bound(eval.value),
        })
    })?;
    let thresholds = beta_grid
        .iter()
        .map(|&beta| EntanglementThreshold {
            beta,
            theta: points
                .iter()
                .filter(|p| p.beta == beta && p.fef < 0.5)
                .map(|p| p.theta)
                .reduce(f64::min),
        })
        .collect();
    Ok(EntanglementScan { points, thresholds })
}
