//! Discrete Fourier transform on the box, the dispersion relation
//! `ω(ξ) = (Σ_j 4 sin²(ξ_j/2))^{1/2}`, Fourier multipliers and Sobolev norms.
//!
//! Normalization: `dft` is the plain sum `Σ_x f(x) e^{-i x·ξ_k}` over the
//! grid `ξ_k = π k / N`, `k ∈ [-N, N-1]^d`; `idft` carries `(2N)^{-d}`.

use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::{lp_norm_unchecked, Exponent, LatticeError, LatticeField, Shape};
use crate::sum;
use crate::transform::{CubeFft, Direction};

/// Relative tolerance on the mean of a field fed to a negative power of `ω`.
pub const MEAN_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("symbol is singular at zero frequency and the field mean {mean:e} exceeds {tolerance:e}")]
    SingularMultiplier { mean: f64, tolerance: f64 },
    #[error("Sobolev exponent p must lie in (1, ∞), got {0}")]
    BadSobolevExponent(f64),
}

/// Samples of a function on the frequency grid, FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyField {
    shape: Shape,
    values: Vec<Complex64>,
}

impl FrequencyField {
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn from_values(shape: Shape, values: Vec<Complex64>) -> Result<Self, LatticeError> {
        if values.len() != shape.len() {
            return Err(LatticeError::ValueCount { expected: shape.len(), got: values.len() });
        }
        Ok(Self { shape, values })
    }

    /// Frequency `ξ_k` of a flat index.
    pub fn frequency(&self, index: usize) -> Vec<f64> {
        frequency_of(self.shape, index)
    }
}

pub(crate) fn frequency_of(shape: Shape, index: usize) -> Vec<f64> {
    let step = std::f64::consts::PI / shape.half_width() as f64;
    shape.coord(index).into_iter().map(|k| k as f64 * step).collect()
}

pub fn dft(f: &LatticeField) -> Result<FrequencyField, SpectralError> {
    f.validate()?;
    let shape = f.shape();
    let mut values = f.values().to_vec();
    CubeFft::new(shape.dim(), shape.side()).process(&mut values, Direction::Forward);
    Ok(FrequencyField { shape, values })
}

pub fn idft(spectrum: &FrequencyField) -> Result<LatticeField, SpectralError> {
    let shape = spectrum.shape;
    let mut values = spectrum.values.clone();
    CubeFft::new(shape.dim(), shape.side()).process(&mut values, Direction::Inverse);
    let scale = 1.0 / shape.len() as f64;
    values.iter_mut().for_each(|z| *z *= scale);
    Ok(LatticeField::from_values(shape, values)?)
}

/// Dispersion relation at a single frequency.
pub fn omega(xi: &[f64]) -> f64 {
    omega_squared(xi).sqrt()
}

pub fn omega_squared(xi: &[f64]) -> f64 {
    sum::sum(xi.iter().map(|x| {
        let s = (0.5 * x).sin();
        4.0 * s * s
    }))
}

/// `ω` on the frequency grid, FFT order.
pub fn omega_grid(shape: Shape) -> FrequencyField {
    let values = omega_values(shape).into_iter().map(|w| Complex64::new(w, 0.0)).collect();
    FrequencyField { shape, values }
}

/// Real `ω` values on the grid, FFT order.
pub(crate) fn omega_values(shape: Shape) -> Vec<f64> {
    let side = shape.side();
    let n = shape.half_width() as f64;
    let per_axis: Vec<f64> = (0..side)
        .map(|k| {
            let s = (0.5 * std::f64::consts::PI * shape.signed(k) as f64 / n).sin();
            4.0 * s * s
        })
        .collect();
    let dim = shape.dim();
    (0..shape.len())
        .map(|mut i| {
            let mut acc = 0.0;
            for _ in 0..dim {
                acc += per_axis[i % side];
                i /= side;
            }
            acc.sqrt()
        })
        .collect()
}

/// Fourier symbols available as multipliers; all are functions of `ω` only.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiplierSpec {
    /// `ω^s`.
    OmegaPower { s: f64 },
    /// `cos(tω)`.
    Cos { t: f64 },
    /// `sin(tω)/ω`, equal to `t` at `ξ = 0`.
    SinOverOmega { t: f64 },
    /// `sin(tω)·ω`.
    SinTimesOmega { t: f64 },
    /// `cos(tω)·ω`.
    CosTimesOmega { t: f64 },
    /// `(1 + ω²)^{s/2}`.
    BracketPower { s: f64 },
}

impl MultiplierSpec {
    /// Symbol value at a given `ω ≥ 0`, with analytic limits at `ω = 0`.
    pub fn symbol(&self, w: f64) -> f64 {
        match *self {
            MultiplierSpec::OmegaPower { s } => {
                if s == 0.0 {
                    1.0
                } else if w == 0.0 {
                    // Negative powers are only applied to mean-zero data.
                    0.0
                } else {
                    w.powf(s)
                }
            }
            MultiplierSpec::Cos { t } => (t * w).cos(),
            MultiplierSpec::SinOverOmega { t } => sin_over(t, w),
            MultiplierSpec::SinTimesOmega { t } => (t * w).sin() * w,
            MultiplierSpec::CosTimesOmega { t } => (t * w).cos() * w,
            MultiplierSpec::BracketPower { s } => (1.0 + w * w).powf(0.5 * s),
        }
    }

    /// Whether the symbol blows up at zero frequency.
    pub fn singular_at_zero(&self) -> bool {
        matches!(*self, MultiplierSpec::OmegaPower { s } if s < 0.0)
    }
}

/// `sin(tω)/ω` with the value `t` at `ω = 0`.
pub(crate) fn sin_over(t: f64, w: f64) -> f64 {
    if w == 0.0 {
        t
    } else {
        (t * w).sin() / w
    }
}

/// Checks the mean-zero requirement of negative powers of `ω`.
pub(crate) fn check_mean_zero(f: &LatticeField) -> Result<(), SpectralError> {
    let mean = f.total().norm() / f.shape().len() as f64;
    let l2 = lp_norm_unchecked(f.values(), Exponent::Finite(2.0));
    let tolerance = MEAN_ZERO_TOL * l2;
    if mean > tolerance {
        return Err(SpectralError::SingularMultiplier { mean, tolerance });
    }
    Ok(())
}

pub fn apply_multiplier(f: &LatticeField, m: MultiplierSpec) -> Result<LatticeField, SpectralError> {
    if m.singular_at_zero() {
        check_mean_zero(f)?;
    }
    let mut spectrum = dft(f)?;
    for (z, w) in spectrum.values.iter_mut().zip(omega_values(f.shape())) {
        *z *= m.symbol(w);
    }
    idft(&spectrum)
}

/// `‖F^{-1}(ω^s F f)‖_{ℓ^p}` (homogeneous) or with `(1+ω²)^{s/2}` (inhomogeneous).
pub fn sobolev_norm(f: &LatticeField, s: f64, homogeneous: bool, p: f64) -> Result<f64, SpectralError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(SpectralError::BadSobolevExponent(p));
    }
    let m = if homogeneous { MultiplierSpec::OmegaPower { s } } else { MultiplierSpec::BracketPower { s } };
    if m.singular_at_zero() {
        check_mean_zero(f)?;
    }
    if p == 2.0 {
        let spectrum = dft(f)?;
        let weights = omega_values(f.shape());
        let total = sum::sum(spectrum.values.iter().zip(&weights).map(|(z, &w)| {
            let a = m.symbol(w);
            a * a * z.norm_sqr()
        }));
        return Ok((total / f.shape().len() as f64).sqrt());
    }
    let g = apply_multiplier(f, m)?;
    Ok(lp_norm_unchecked(g.values(), Exponent::Finite(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{laplacian, lp_norm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random(shape: Shape, seed: u64) -> LatticeField {
        LatticeField::random_real(shape, shape.half_width() - 1, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn max_diff(a: &LatticeField, b: &LatticeField) -> f64 {
        a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    #[test]
    fn delta_transforms_to_ones() {
        let shape = Shape::new(2, 4).unwrap();
        let hat = dft(&LatticeField::delta(shape, &[0, 0]).unwrap()).unwrap();
        assert!(hat.values().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn dft_matches_plain_sum() {
        let shape = Shape::new(2, 3).unwrap();
        let f = random(shape, 1);
        let hat = dft(&f).unwrap();
        for k in 0..shape.len() {
            let xi = hat.frequency(k);
            let mut acc = Complex64::default();
            for i in 0..shape.len() {
                let x = shape.coord(i);
                let phase: f64 = x.iter().zip(&xi).map(|(a, b)| *a as f64 * b).sum();
                acc += f.values()[i] * Complex64::from_polar(1.0, -phase);
            }
            assert!((acc - hat.values()[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let shape = Shape::new(3, 4).unwrap();
        let f = random(shape, 2);
        let hat = dft(&f).unwrap();
        let back = idft(&hat).unwrap();
        assert!(max_diff(&f, &back) < 1e-12);
        let lhs = lp_norm(&f, Exponent::Finite(2.0)).unwrap().powi(2);
        let rhs = hat.values().iter().map(|z| z.norm_sqr()).sum::<f64>() / shape.len() as f64;
        assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn omega_closed_forms() {
        assert_eq!(omega(&[0.0, 0.0]), 0.0);
        assert!((omega(&[PI, PI, PI]) - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!((omega(&[PI / 2.0, 0.0]) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn omega_grid_matches_pointwise() {
        let shape = Shape::new(2, 5).unwrap();
        let grid = omega_grid(shape);
        for k in 0..shape.len() {
            assert!((grid.values()[k].re - omega(&grid.frequency(k))).abs() < 1e-14);
        }
    }

    #[test]
    fn group_velocity_bounded_by_one() {
        let shape = Shape::new(3, 6).unwrap();
        for k in 1..shape.len() {
            let xi = frequency_of(shape, k);
            let w2 = omega_squared(&xi);
            let g2: f64 = xi.iter().map(|x| x.sin().powi(2)).sum::<f64>() / w2;
            assert!(g2 <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn unit_symbols_are_identity() {
        let shape = Shape::new(2, 4).unwrap();
        let f = random(shape, 3);
        for m in [MultiplierSpec::OmegaPower { s: 0.0 }, MultiplierSpec::Cos { t: 0.0 }] {
            assert!(max_diff(&apply_multiplier(&f, m).unwrap(), &f) < 1e-13);
        }
    }

    #[test]
    fn omega_squared_is_minus_laplacian() {
        let shape = Shape::new(3, 4).unwrap();
        let f = random(shape, 4);
        let a = apply_multiplier(&f, MultiplierSpec::OmegaPower { s: 2.0 }).unwrap();
        let b = laplacian(&f).unwrap().scaled(Complex64::new(-1.0, 0.0));
        assert!(max_diff(&a, &b) < 1e-10);
    }

    #[test]
    fn composition_equals_product_symbol() {
        let shape = Shape::new(2, 6).unwrap();
        let f = random(shape, 5);
        let t = 1.7;
        let apply = |g: &LatticeField, m| apply_multiplier(g, m).unwrap();
        let cos2 = apply(&apply(&f, MultiplierSpec::Cos { t }), MultiplierSpec::Cos { t });
        let sin2 = apply(&apply(&f, MultiplierSpec::SinOverOmega { t }), MultiplierSpec::SinTimesOmega { t });
        // cos² + sin² = 1.
        let one = cos2.axpy(Complex64::new(1.0, 0.0), &sin2).unwrap();
        assert!(max_diff(&one, &f) < 1e-12);
        let twice = apply(&apply(&f, MultiplierSpec::OmegaPower { s: 1.0 }), MultiplierSpec::OmegaPower { s: 1.0 });
        assert!(max_diff(&twice, &apply(&f, MultiplierSpec::OmegaPower { s: 2.0 })) < 1e-12);
    }

    #[test]
    fn negative_power_rejects_field_with_mean() {
        let f = random(Shape::new(2, 4).unwrap(), 9);
        let err = apply_multiplier(&f, MultiplierSpec::OmegaPower { s: -1.0 });
        assert!(matches!(err, Err(SpectralError::SingularMultiplier { .. })));
    }

    #[test]
    fn negative_power_accepts_mean_zero_field() {
        let shape = Shape::new(1, 8).unwrap();
        let mut f = LatticeField::zeros(shape);
        f.set(&[0], Complex64::new(1.0, 0.0)).unwrap();
        f.set(&[1], Complex64::new(-1.0, 0.0)).unwrap();
        let g = apply_multiplier(&f, MultiplierSpec::OmegaPower { s: -1.0 }).unwrap();
        let back = apply_multiplier(&g, MultiplierSpec::OmegaPower { s: 1.0 }).unwrap();
        assert!(max_diff(&back, &f) < 1e-12);
    }

    #[test]
    fn sobolev_level_zero_is_lp_norm() {
        let shape = Shape::new(2, 5).unwrap();
        let f = random(shape, 6);
        for p in [1.5, 2.0, 3.0, 6.0] {
            let a = sobolev_norm(&f, 0.0, true, p).unwrap();
            let b = lp_norm(&f, Exponent::Finite(p)).unwrap();
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn delta_h1_norm_converges_to_sqrt_two() {
        // (1/2π)∫(2 − 2cos ξ)dξ = 2; the grid average is exact for N ≥ 1.
        for n in [4, 16, 64] {
            let shape = Shape::new(1, n).unwrap();
            let norm = sobolev_norm(&LatticeField::delta(shape, &[0]).unwrap(), 1.0, true, 2.0).unwrap();
            assert!((norm - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn h1_norm_via_parseval_matches_gradient_energy() {
        let shape = Shape::new(3, 4).unwrap();
        let f = random(shape, 7);
        let a = sobolev_norm(&f, 1.0, true, 2.0).unwrap().powi(2);
        assert!((a - f.gradient_energy()).abs() < 1e-11 * a);
    }

    #[test]
    fn inhomogeneous_dominates_homogeneous() {
        let shape = Shape::new(2, 6).unwrap();
        let f = random(shape, 8);
        for p in [2.0, 4.0] {
            let h = sobolev_norm(&f, 1.0, true, p).unwrap();
            let i = sobolev_norm(&f, 1.0, false, p).unwrap();
            assert!(i >= h);
        }
    }

    #[test]
    fn bad_sobolev_exponent() {
        let f = LatticeField::zeros(Shape::new(1, 4).unwrap());
        assert!(matches!(sobolev_norm(&f, 1.0, true, 1.0), Err(SpectralError::BadSobolevExponent(_))));
    }

    #[test]
    fn removable_singularities() {
        assert_eq!(MultiplierSpec::SinOverOmega { t: 2.5 }.symbol(0.0), 2.5);
        assert_eq!(MultiplierSpec::SinTimesOmega { t: 2.5 }.symbol(0.0), 0.0);
        assert_eq!(MultiplierSpec::CosTimesOmega { t: 2.5 }.symbol(0.0), 0.0);
        assert_eq!(MultiplierSpec::OmegaPower { s: 1.5 }.symbol(0.0), 0.0);
    }
}
