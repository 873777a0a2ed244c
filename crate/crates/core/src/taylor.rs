//! Numeric Taylor coefficients of the phase `Φ(ξ) = v*·ξ − ω(ξ)`, with
//! `v* = ∇ω(ξ*)`, in the adapted frames used for the three-dimensional
//! decay budgets, and the structural claims each frame is meant to satisfy.
//!
//! Coefficients come from tensor-product central differences with step
//! [`TAYLOR_STEP`], extrapolated once (Richardson, `h` and `h/2`).

use nalgebra::Matrix3;
use serde::Serialize;

use crate::phase::{classify_point, grad_omega, PhaseClass, PhaseError};
use crate::spectral::omega;

pub const TAYLOR_STEP: f64 = 1e-3;
/// Coefficients up to third order below this count as vanishing.
pub const TAYLOR_ZERO: f64 = 1e-6;
/// Coefficients (and discriminants) above this count as nonzero.
pub const TAYLOR_NONZERO: f64 = 1e-3;

/// `Σ c_α ζ^α` coefficient for one multi-index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorCoefficient {
    pub exponent: [u32; 3],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorClaim {
    pub name: String,
    pub value: f64,
    /// `true` for a vanishing claim, `false` for a nonvanishing one.
    pub vanishes: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorStructure {
    pub xi: Vec<f64>,
    pub class: PhaseClass,
    /// Columns are the images of the `ζ` axes: `ξ = frame·ζ + ξ*`.
    pub frame: [[f64; 3]; 3],
    /// All monomials of degree 2 and 3, then `ζ_1⁴`.
    pub coefficients: Vec<TaylorCoefficient>,
    pub claims: Vec<TaylorClaim>,
}

impl TaylorStructure {
    pub fn coefficient(&self, exponent: [u32; 3]) -> f64 {
        self.coefficients.iter().find(|c| c.exponent == exponent).map_or(0.0, |c| c.value)
    }

    pub fn all_claims_hold(&self) -> bool {
        self.claims.iter().all(|c| c.holds)
    }
}

// Central-difference stencils (offset, weight) for the k-th derivative,
// in units of h; each is second-order accurate.
fn stencil(k: u32) -> &'static [(f64, f64)] {
    match k {
        0 => &[(0.0, 1.0)],
        1 => &[(-1.0, -0.5), (1.0, 0.5)],
        2 => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
        3 => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
        4 => &[(-2.0, 1.0), (-1.0, -4.0), (0.0, 6.0), (1.0, -4.0), (2.0, 1.0)],
        _ => unreachable!("orders above four are not used"),
    }
}

fn mixed_partial(g: &impl Fn([f64; 3]) -> f64, alpha: [u32; 3], h: f64) -> f64 {
    let (s0, s1, s2) = (stencil(alpha[0]), stencil(alpha[1]), stencil(alpha[2]));
    let mut acc = 0.0;
    for &(o0, w0) in s0 {
        for &(o1, w1) in s1 {
            for &(o2, w2) in s2 {
                acc += w0 * w1 * w2 * g([o0 * h, o1 * h, o2 * h]);
            }
        }
    }
    acc / h.powi((alpha[0] + alpha[1] + alpha[2]) as i32)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `∂^α g(0) / α!` with one Richardson step.
pub fn taylor_coefficient(g: &impl Fn([f64; 3]) -> f64, alpha: [u32; 3], h: f64) -> f64 {
    let coarse = mixed_partial(g, alpha, h);
    let fine = mixed_partial(g, alpha, h / 2.0);
    let d = (4.0 * fine - coarse) / 3.0;
    d / alpha.iter().map(|&a| factorial(a)).product::<f64>()
}

fn monomials() -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for degree in 2..=3u32 {
        for a in (0..=degree).rev() {
            for b in (0..=degree - a).rev() {
                out.push([a, b, degree - a - b]);
            }
        }
    }
    out.push([4, 0, 0]);
    out
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Adapted frame for each class; `None` for classes without one.
fn frame(xi: &[f64], class: PhaseClass) -> Option<Matrix3<f64>> {
    let s: Vec<f64> = xi.iter().map(|x| sign(x.sin())).collect();
    match class {
        PhaseClass::NonDegenerate => Some(Matrix3::identity()),
        // Kernel directions (1,0,−1), (0,1,−1) of the Hessian at
        // (π/2,π/2,π/2), then the third axis; reflected to the actual signs.
        PhaseClass::Gamma { k: 3 } => {
            let base = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, -1.0, 1.0);
            Some(Matrix3::from_diagonal(&nalgebra::Vector3::new(s[0], s[1], s[2])) * base)
        }
        // Kernel direction (1,−1,0) at (π/2,π/2,ξ_0), reordered so the two
        // right angles come first.
        PhaseClass::Gamma { k: 2 } => {
            let right: Vec<usize> = (0..3).filter(|&i| xi[i].cos().abs() < crate::phase::RIGHT_ANGLE_TOL).collect();
            let other = (0..3).find(|i| !right.contains(i))?;
            let order = [right[0], right[1], other];
            let mut m = Matrix3::zeros();
            for (col, &row) in order.iter().enumerate() {
                m[(row, col)] = if col < 2 { s[row] } else { 1.0 };
            }
            let base = Matrix3::new(1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 1.0);
            Some(m * base)
        }
        // First column tan ξ spans the Hessian kernel.
        PhaseClass::Gamma { k: 1 } => {
            let t: Vec<f64> = xi.iter().map(|x| x.tan()).collect();
            Some(Matrix3::new(t[0], -t[1], -t[2], t[1], t[0], 0.0, t[2], 0.0, t[0]))
        }
        PhaseClass::Gamma { .. } => None,
    }
}

/// Taylor coefficients of the phase at `xi` (dimension three) in the frame
/// of its degeneracy class, and the structural claims for that class.
pub fn taylor_structure(xi: &[f64]) -> Result<TaylorStructure, PhaseError> {
    if xi.len() != 3 {
        return Err(PhaseError::BadDimension { got: xi.len() });
    }
    let class = classify_point(xi)?.class;
    let a = frame(xi, class).ok_or(PhaseError::BadDimension { got: xi.len() })?;
    let v = grad_omega(xi)?;
    let base: f64 = v.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() - omega(xi);
    let g = |z: [f64; 3]| {
        let p: Vec<f64> = (0..3).map(|i| xi[i] + a[(i, 0)] * z[0] + a[(i, 1)] * z[1] + a[(i, 2)] * z[2]).collect();
        let lin: f64 = v.iter().zip(&p).map(|(a, b)| a * b).sum();
        // Subtracting the constant term keeps the differences well scaled.
        lin - omega(&p) - base
    };
    let coefficients: Vec<TaylorCoefficient> = monomials()
        .into_iter()
        .map(|exponent| TaylorCoefficient { exponent, value: taylor_coefficient(&g, exponent, TAYLOR_STEP) })
        .collect();
    let c = |e: [u32; 3]| coefficients.iter().find(|c| c.exponent == e).map_or(0.0, |c| c.value);
    let zero = |name: &str, value: f64| TaylorClaim {
        name: name.into(),
        value,
        vanishes: true,
        holds: value.abs() <= TAYLOR_ZERO,
    };
    let nonzero = |name: &str, value: f64| TaylorClaim {
        name: name.into(),
        value,
        vanishes: false,
        holds: value.abs() >= TAYLOR_NONZERO,
    };
    // ζ₂² ζ₂ζ₃ ζ₃² discriminant of the transverse quadratic form.
    let disc = c([0, 1, 1]).powi(2) - 4.0 * c([0, 2, 0]) * c([0, 0, 2]);
    let claims = match class {
        PhaseClass::NonDegenerate => {
            let q = Matrix3::new(
                2.0 * c([2, 0, 0]),
                c([1, 1, 0]),
                c([1, 0, 1]),
                c([1, 1, 0]),
                2.0 * c([0, 2, 0]),
                c([0, 1, 1]),
                c([1, 0, 1]),
                c([0, 1, 1]),
                2.0 * c([0, 0, 2]),
            );
            vec![nonzero("det quadratic form", q.determinant())]
        }
        PhaseClass::Gamma { k: 3 } => vec![
            zero("z1^2", c([2, 0, 0])),
            zero("z2^2", c([0, 2, 0])),
            zero("z1*z2", c([1, 1, 0])),
            nonzero("a = z3^2", c([0, 0, 2])),
            nonzero("b = z1^2*z2", c([2, 1, 0])),
            nonzero("c = z1*z2^2", c([1, 2, 0])),
        ],
        PhaseClass::Gamma { k: 2 } => vec![
            zero("z1^2", c([2, 0, 0])),
            zero("z1^3", c([3, 0, 0])),
            nonzero("d = z1^2*z2", c([2, 1, 0])),
            nonzero("b^2 - 4ac", disc),
        ],
        _ => vec![zero("z1^2", c([2, 0, 0])), nonzero("d = z1^3", c([3, 0, 0])), nonzero("b^2 - 4ac", disc)],
    };
    let mut frame_rows = [[0.0; 3]; 3];
    for (i, row) in frame_rows.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = a[(i, j)];
        }
    }
    Ok(TaylorStructure { xi: xi.to_vec(), class, frame: frame_rows, coefficients, claims })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::gamma1_point;
    use std::f64::consts::FRAC_PI_2 as H;

    #[test]
    fn polynomial_coefficients_recovered() {
        let g = |z: [f64; 3]| 2.0 * z[0] * z[0] - 0.5 * z[0] * z[1] * z[2] + 3.0 * z[1].powi(3) + 0.25 * z[0].powi(4);
        assert!((taylor_coefficient(&g, [2, 0, 0], TAYLOR_STEP) - 2.0).abs() < 1e-6);
        assert!((taylor_coefficient(&g, [1, 1, 1], TAYLOR_STEP) + 0.5).abs() < 1e-6);
        assert!((taylor_coefficient(&g, [0, 3, 0], TAYLOR_STEP) - 3.0).abs() < 1e-6);
        assert!((taylor_coefficient(&g, [4, 0, 0], TAYLOR_STEP) - 0.25).abs() < 1e-3);
        assert!(taylor_coefficient(&g, [0, 0, 2], TAYLOR_STEP).abs() < 1e-6);
    }

    #[test]
    fn monomial_list() {
        let m = monomials();
        assert_eq!(m.len(), 6 + 10 + 1);
        assert_eq!(m[0], [2, 0, 0]);
    }

    #[test]
    fn claims_hold_for_each_class() {
        let g1 = gamma1_point(&[2.0, 2.0]).unwrap();
        for xi in [vec![0.3, 1.0, 2.5], vec![H, H, H], vec![H, -H, -H], vec![H, H, 1.0], vec![1.0, -H, H], g1] {
            let t = taylor_structure(&xi).unwrap();
            assert!(t.all_claims_hold(), "{xi:?}: {:#?}", t.claims);
        }
    }

    #[test]
    fn quadratic_part_matches_hessian() {
        let xi = [0.3, 1.0, 2.5];
        let t = taylor_structure(&xi).unwrap();
        let h = crate::phase::hess_omega(&xi).unwrap();
        assert!((t.coefficient([2, 0, 0]) + 0.5 * h[(0, 0)]).abs() < 1e-8);
        assert!((t.coefficient([1, 0, 1]) + h[(0, 2)]).abs() < 1e-8);
    }

    #[test]
    fn printed_gamma3_frame_leaves_square_term() {
        // As printed (columns (1,0,0), (0,1,0), (−1,−1,1)) the ζ₁² term survives.
        let xi = [H, H, H];
        let a = Matrix3::new(1.0, 0.0, -1.0, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0);
        let v = grad_omega(&xi).unwrap();
        let g = |z: [f64; 3]| {
            let p: Vec<f64> = (0..3).map(|i| xi[i] + (a * nalgebra::Vector3::from(z))[i]).collect();
            v.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() - omega(&p)
        };
        assert!(taylor_coefficient(&g, [2, 0, 0], TAYLOR_STEP).abs() > TAYLOR_NONZERO);
    }

    #[test]
    fn other_dimensions_rejected() {
        assert!(matches!(taylor_structure(&[0.3, 1.0]), Err(PhaseError::BadDimension { .. })));
    }
}
