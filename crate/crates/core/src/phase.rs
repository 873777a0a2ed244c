//! Critical points of the phase `v·ξ − ω(ξ)`: derivatives of `ω`, the
//! Hessian determinant identity and the degeneracy classes `Γ_k`.
//!
//! With `s_i = sin ξ_i`, `c_i = cos ξ_i`:
//!
//! ```text
//! ∂_i ω = s_i / ω,      ∂_i∂_j ω = (δ_ij c_i − s_i s_j / ω²) / ω
//! ω^d det Hess ω = Π c_i − ω^{-2} Σ_i s_i² Π_{j≠i} c_j
//! ```
//!
//! The determinant vanishes exactly when at least two `c_i` vanish (`Γ_k`,
//! `k ≥ 2` components at `±π/2`) or when `Σ (sec ξ_i + cos ξ_i) = 2d` (`Γ_1`).

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{class_budget_3d, DecayBudget, DegeneracyClass};
use crate::spectral::omega;

/// `|det formula| < DEGENERATE_TOL·(1 + |Π cos|)` counts as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-9;
/// Upper edge of the band reported as uncertain.
pub const UNCERTAIN_TOL: f64 = 1e-7;
/// A component with `|cos ξ_i|` below this sits at `±π/2`.
pub const RIGHT_ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("the phase is singular at ξ = 0")]
    SingularPoint,
    #[error("classification uncertain: determinant {det:e} lies between {first:?} and {second:?}")]
    Uncertain { det: f64, first: PhaseClass, second: PhaseClass },
    #[error("component {index} sits at ±π/2 where the tangent is singular")]
    TangentSingularity { index: usize },
    #[error("no Γ_1 completion: need sec x + cos x = {target}, which has no root in (0, π/2)")]
    NoGamma1Completion { target: f64 },
    #[error("point has {got} coordinates, dimension must be 1..=5")]
    BadDimension { got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PhaseClass {
    NonDegenerate,
    /// `Γ_k`; `k = 1` is the secant–cosine set.
    Gamma {
        k: usize,
    },
}

impl PhaseClass {
    fn class_3d(self) -> Option<DegeneracyClass> {
        match self {
            PhaseClass::NonDegenerate => Some(DegeneracyClass::NonDegenerate),
            PhaseClass::Gamma { k: 1 } => Some(DegeneracyClass::Gamma1),
            PhaseClass::Gamma { k: 2 } => Some(DegeneracyClass::Gamma2),
            PhaseClass::Gamma { k: 3 } => Some(DegeneracyClass::Gamma3),
            PhaseClass::Gamma { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseClassification {
    pub xi: Vec<f64>,
    pub class: PhaseClass,
    /// Critical velocity `∇ω(ξ)`.
    pub velocity: Vec<f64>,
    /// `ω^d det Hess ω` from the closed form.
    pub det_scaled: f64,
    /// Expected budget; only tabulated in dimension three.
    pub budget: Option<DecayBudget>,
}

fn check_point(xi: &[f64]) -> Result<f64, PhaseError> {
    if xi.is_empty() || xi.len() > crate::lattice::MAX_DIM {
        return Err(PhaseError::BadDimension { got: xi.len() });
    }
    let w = omega(xi);
    if w == 0.0 {
        return Err(PhaseError::SingularPoint);
    }
    Ok(w)
}

pub fn grad_omega(xi: &[f64]) -> Result<Vec<f64>, PhaseError> {
    let w = check_point(xi)?;
    Ok(xi.iter().map(|x| x.sin() / w).collect())
}

pub fn hess_omega(xi: &[f64]) -> Result<DMatrix<f64>, PhaseError> {
    let w = check_point(xi)?;
    let d = xi.len();
    let s = DVector::from_iterator(d, xi.iter().map(|x| x.sin()));
    let mut h = -(&s * s.transpose()) / (w * w * w);
    for i in 0..d {
        h[(i, i)] += xi[i].cos() / w;
    }
    Ok(h)
}

/// Closed form of `ω^d det Hess ω`, with the magnitude of its product term.
pub fn hessian_det_formula(xi: &[f64]) -> Result<(f64, f64), PhaseError> {
    let w = check_point(xi)?;
    let cos: Vec<f64> = xi.iter().map(|x| x.cos()).collect();
    let product: f64 = cos.iter().product();
    let mut acc = 0.0;
    for (i, x) in xi.iter().enumerate() {
        let others: f64 = cos.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c).product();
        acc += x.sin().powi(2) * others;
    }
    Ok((product - acc / (w * w), product.abs()))
}

/// `(ω^d det Hess ω` by numeric determinant, closed form`)`.
pub fn det_hessian_identity(xi: &[f64]) -> Result<(f64, f64), PhaseError> {
    let w = check_point(xi)?;
    let lhs = hess_omega(xi)?.determinant() * w.powi(xi.len() as i32);
    let (rhs, _) = hessian_det_formula(xi)?;
    Ok((lhs, rhs))
}

/// `Σ (sec ξ_i + cos ξ_i)`.
pub fn secant_cosine_sum(xi: &[f64]) -> f64 {
    xi.iter().map(|x| 1.0 / x.cos() + x.cos()).sum()
}

fn right_angle_count(xi: &[f64]) -> usize {
    xi.iter().filter(|x| x.cos().abs() < RIGHT_ANGLE_TOL).count()
}

pub fn classify_point(xi: &[f64]) -> Result<PhaseClassification, PhaseError> {
    let velocity = grad_omega(xi)?;
    let (det, product) = hessian_det_formula(xi)?;
    let right = right_angle_count(xi);
    let scale = 1.0 + product;
    let class = if right >= 2 {
        PhaseClass::Gamma { k: right }
    } else if det.abs() < DEGENERATE_TOL * scale {
        if right == 1 {
            // A single right angle leaves Π_{j≠i} cos_j, which is only small
            // when a second component is near ±π/2.
            return Err(PhaseError::Uncertain {
                det,
                first: PhaseClass::NonDegenerate,
                second: PhaseClass::Gamma { k: 2 },
            });
        }
        PhaseClass::Gamma { k: 1 }
    } else if det.abs() <= UNCERTAIN_TOL * scale {
        return Err(PhaseError::Uncertain {
            det,
            first: PhaseClass::NonDegenerate,
            second: PhaseClass::Gamma { k: 1 },
        });
    } else {
        PhaseClass::NonDegenerate
    };
    let budget = if xi.len() == 3 { class.class_3d().map(class_budget_3d) } else { None };
    Ok(PhaseClassification { xi: xi.to_vec(), class, velocity, det_scaled: det, budget })
}

/// Completes `rest` with a first coordinate in `(0, π/2)` so the point lies on `Γ_1`.
///
/// Solves `sec x + cos x = 2d − Σ_rest (sec + cos)` by bisection; the left
/// side increases from 2 to ∞ on the interval.
pub fn gamma1_point(rest: &[f64]) -> Result<Vec<f64>, PhaseError> {
    let d = rest.len() + 1;
    if d > crate::lattice::MAX_DIM {
        return Err(PhaseError::BadDimension { got: d });
    }
    if let Some(index) = rest.iter().position(|x| x.cos().abs() < RIGHT_ANGLE_TOL) {
        return Err(PhaseError::TangentSingularity { index: index + 1 });
    }
    let target = 2.0 * d as f64 - secant_cosine_sum(rest);
    if !(target > 2.0) || !target.is_finite() {
        return Err(PhaseError::NoGamma1Completion { target });
    }
    let f = |x: f64| 1.0 / x.cos() + x.cos() - target;
    let (mut lo, mut hi) = (0.0f64, FRAC_PI_2);
    while hi - lo > 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    let mut point = vec![x];
    point.extend_from_slice(rest);
    Ok(point)
}

/// Transversality data at a `Γ_1` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma1Check {
    /// `Σ sin ξ_j tan³ ξ_j`.
    pub value: f64,
    /// Derivative of `det Hess ω` along `tan ξ` by central differences.
    pub directional_derivative: f64,
    /// Derivative predicted from `value`: `−ω^{-d-2} Π cos ξ_j · value`.
    pub predicted_derivative: f64,
    /// Both quantities are nonzero at the `1e-6` scale, or both vanish.
    pub verdicts_agree: bool,
}

/// Threshold separating vanishing from nonvanishing transversality.
const VERDICT_SCALE: f64 = 1e-6;

/// Step of the central difference in [`gamma1_nondegeneracy`].
const FD_STEP: f64 = 1e-5;

pub fn gamma1_nondegeneracy(xi: &[f64]) -> Result<Gamma1Check, PhaseError> {
    let w = check_point(xi)?;
    if let Some(index) = xi.iter().position(|x| x.cos().abs() < RIGHT_ANGLE_TOL) {
        return Err(PhaseError::TangentSingularity { index });
    }
    let value: f64 = xi.iter().map(|x| x.sin() * x.tan().powi(3)).sum();
    // tan ξ spans the kernel of the Hessian on Γ_1.
    let dir: Vec<f64> = xi.iter().map(|x| x.tan()).collect();
    let det_at = |h: f64| -> Result<f64, PhaseError> {
        let p: Vec<f64> = xi.iter().zip(&dir).map(|(x, v)| x + h * v).collect();
        Ok(hess_omega(&p)?.determinant())
    };
    let directional_derivative = (det_at(FD_STEP)? - det_at(-FD_STEP)?) / (2.0 * FD_STEP);
    let cos_product: f64 = xi.iter().map(|x| x.cos()).product();
    // Converts Σ sin tan³ into the derivative of det Hess ω on Γ_1.
    let factor = w.powi(-(xi.len() as i32) - 2) * cos_product;
    let predicted_derivative = -factor * value;
    let verdicts_agree = (value.abs() > VERDICT_SCALE) == (directional_derivative.abs() > VERDICT_SCALE * factor.abs());
    Ok(Gamma1Check { value, directional_derivative, predicted_derivative, verdicts_agree })
}
