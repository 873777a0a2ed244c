//! Compactly supported functions on `Z^d` stored on a periodic box.
//!
//! A field with half width `N` holds the sites `x ∈ [-N, N-1]^d`; the box is
//! a torus of side `2N`, so a stencil at the edge wraps around. Values are
//! stored in FFT order (coordinate `c` lives at position `c mod 2N` on each
//! axis) with the last axis fastest.

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::sum::{self, CompensatedSum};
use crate::transform::{CubeFft, Direction};

pub const MAX_DIM: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("dimension {0} is outside 1..=5")]
    BadDimension(usize),
    #[error("half width must be positive")]
    BadHalfWidth,
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: Shape, right: Shape },
    #[error("coordinate {coord:?} lies outside the box of half width {half_width}")]
    OutOfBox { coord: Vec<i64>, half_width: usize },
    #[error("expected {expected} coordinates, got {got}")]
    CoordinateArity { expected: usize, got: usize },
    #[error("expected {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("norm exponent must be positive, got {0}")]
    BadExponent(f64),
}

/// Dimension and half width of a periodic box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Shape {
    dim: usize,
    half_width: usize,
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(d={}, N={})", self.dim, self.half_width)
    }
}

impl Shape {
    pub fn new(dim: usize, half_width: usize) -> Result<Self, LatticeError> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(LatticeError::BadDimension(dim));
        }
        if half_width == 0 {
            return Err(LatticeError::BadHalfWidth);
        }
        Ok(Self { dim, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Side length `2N`.
    pub fn side(&self) -> usize {
        2 * self.half_width
    }

    /// Number of sites `(2N)^d`.
    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of a site; coordinates outside `[-N, N-1]` are rejected.
    pub fn index(&self, coord: &[i64]) -> Result<usize, LatticeError> {
        if coord.len() != self.dim {
            return Err(LatticeError::CoordinateArity { expected: self.dim, got: coord.len() });
        }
        let n = self.half_width as i64;
        if coord.iter().any(|&c| c < -n || c >= n) {
            return Err(LatticeError::OutOfBox { coord: coord.to_vec(), half_width: self.half_width });
        }
        Ok(self.wrapped_index(coord))
    }

    /// Flat index with periodic wraparound, accepting any integer coordinates.
    pub fn wrapped_index(&self, coord: &[i64]) -> usize {
        let side = self.side() as i64;
        coord.iter().fold(0usize, |acc, &c| acc * self.side() + c.rem_euclid(side) as usize)
    }

    /// Coordinates in `[-N, N-1]^d` of a flat index.
    pub fn coord(&self, mut index: usize) -> Vec<i64> {
        let side = self.side();
        let n = self.half_width as i64;
        let mut out = vec![0i64; self.dim];
        for slot in out.iter_mut().rev() {
            let k = (index % side) as i64;
            *slot = if k >= n { k - 2 * n } else { k };
            index /= side;
        }
        out
    }

    /// Signed grid position of an FFT-order axis index.
    pub fn signed(&self, k: usize) -> i64 {
        let n = self.half_width as i64;
        let k = k as i64;
        if k >= n {
            k - 2 * n
        } else {
            k
        }
    }
}

/// Norm exponent `p ∈ (0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self, LatticeError> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p > 0.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(LatticeError::BadExponent(p))
        }
    }
}

/// Cube `[-radius, radius]^d` containing every nonzero site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportHint {
    pub radius: usize,
}

/// Complex function on the periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    shape: Shape,
    values: Vec<Complex64>,
    support: Option<SupportHint>,
}

impl LatticeField {
    pub fn zeros(shape: Shape) -> Self {
        Self { shape, values: vec![Complex64::default(); shape.len()], support: Some(SupportHint { radius: 0 }) }
    }

    /// Wraps values given in FFT order.
    pub fn from_values(shape: Shape, values: Vec<Complex64>) -> Result<Self, LatticeError> {
        if values.len() != shape.len() {
            return Err(LatticeError::ValueCount { expected: shape.len(), got: values.len() });
        }
        let field = Self { shape, values, support: None };
        field.validate()?;
        Ok(field)
    }

    pub(crate) fn from_values_unchecked(shape: Shape, values: Vec<Complex64>) -> Self {
        Self { shape, values, support: None }
    }

    /// Evaluates `f` at every site.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[i64]) -> Complex64) -> Result<Self, LatticeError> {
        let values = (0..shape.len()).map(|i| f(&shape.coord(i))).collect();
        Self::from_values(shape, values)
    }

    /// Real field from a real-valued site function.
    pub fn from_real_fn(shape: Shape, mut f: impl FnMut(&[i64]) -> f64) -> Result<Self, LatticeError> {
        Self::from_fn(shape, |x| Complex64::new(f(x), 0.0))
    }

    /// Unit mass at `at`.
    pub fn delta(shape: Shape, at: &[i64]) -> Result<Self, LatticeError> {
        let idx = shape.index(at)?;
        let mut field = Self::zeros(shape);
        field.values[idx] = Complex64::new(1.0, 0.0);
        let radius = at.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0);
        field.support = Some(SupportHint { radius });
        Ok(field)
    }

    /// Real values uniform in `[-1, 1]` on the cube of the given radius, zero elsewhere.
    pub fn random_real<R: Rng + ?Sized>(shape: Shape, radius: usize, rng: &mut R) -> Self {
        let r = radius as i64;
        let mut field = Self::zeros(shape);
        for (i, v) in field.values.iter_mut().enumerate() {
            if shape.coord(i).iter().all(|c| c.abs() <= r) {
                *v = Complex64::new(rng.gen_range(-1.0..=1.0), 0.0);
            }
        }
        field.support = Some(SupportHint { radius });
        field
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim
    }

    pub fn half_width(&self) -> usize {
        self.shape.half_width
    }

    pub fn support_hint(&self) -> Option<SupportHint> {
        self.support
    }

    pub fn with_support_hint(mut self, hint: Option<SupportHint>) -> Self {
        self.support = hint;
        self
    }

    /// Values in FFT order.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        self.support = None;
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, coord: &[i64]) -> Result<Complex64, LatticeError> {
        Ok(self.values[self.shape.index(coord)?])
    }

    pub fn set(&mut self, coord: &[i64], value: Complex64) -> Result<(), LatticeError> {
        let idx = self.shape.index(coord)?;
        self.values[idx] = value;
        self.support = None;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        match self.values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            Some(i) => Err(LatticeError::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn ensure_same_shape(&self, other: &LatticeField) -> Result<(), LatticeError> {
        if self.shape != other.shape {
            return Err(LatticeError::ShapeMismatch { left: self.shape, right: other.shape });
        }
        Ok(())
    }

    /// Largest imaginary part in absolute value.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// Sum of all values.
    pub fn total(&self) -> Complex64 {
        Complex64::new(sum::sum(self.values.iter().map(|z| z.re)), sum::sum(self.values.iter().map(|z| z.im)))
    }

    /// `Σ_x conj(self(x)) other(x)`.
    pub fn inner(&self, other: &LatticeField) -> Result<Complex64, LatticeError> {
        self.ensure_same_shape(other)?;
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for (a, b) in self.values.iter().zip(&other.values) {
            let z = a.conj() * b;
            re.add(z.re);
            im.add(z.im);
        }
        Ok(Complex64::new(re.value(), im.value()))
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: Complex64, other: &LatticeField) -> Result<LatticeField, LatticeError> {
        self.ensure_same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + scale * b).collect();
        Ok(Self::from_values_unchecked(self.shape, values))
    }

    pub fn scaled(&self, scale: Complex64) -> LatticeField {
        Self::from_values_unchecked(self.shape, self.values.iter().map(|a| a * scale).collect())
    }

    /// Squared sum of forward differences `Σ_x Σ_j |f(x+e_j) − f(x)|²` on the torus.
    pub fn gradient_energy(&self) -> f64 {
        let shape = self.shape;
        let side = shape.side();
        let mut acc = CompensatedSum::new();
        for axis in 0..shape.dim {
            let stride = side.pow((shape.dim - 1 - axis) as u32);
            for (i, &z) in self.values.iter().enumerate() {
                let k = (i / stride) % side;
                let j = if k + 1 == side { i + stride - side * stride } else { i + stride };
                acc.add((self.values[j] - z).norm_sqr());
            }
        }
        acc.value()
    }
}

/// Displacement and velocity of the wave system.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub u: LatticeField,
    pub v: LatticeField,
}

impl StatePair {
    pub fn new(u: LatticeField, v: LatticeField) -> Result<Self, LatticeError> {
        u.ensure_same_shape(&v)?;
        u.validate()?;
        v.validate()?;
        Ok(Self { u, v })
    }

    pub fn zeros(shape: Shape) -> Self {
        Self { u: LatticeField::zeros(shape), v: LatticeField::zeros(shape) }
    }

    pub fn shape(&self) -> Shape {
        self.u.shape()
    }

    /// Componentwise `self - other`.
    pub fn difference(&self, other: &StatePair) -> Result<StatePair, LatticeError> {
        let minus = Complex64::new(-1.0, 0.0);
        Ok(StatePair { u: self.u.axpy(minus, &other.u)?, v: self.v.axpy(minus, &other.v)? })
    }

    /// Squared phase-space norm `‖u‖²_{Ḣ¹} + ‖v‖²_{ℓ²}`.
    pub fn x_norm_sqr(&self) -> f64 {
        self.u.gradient_energy() + sum::sum(self.v.values.iter().map(|z| z.norm_sqr()))
    }

    pub fn x_norm(&self) -> f64 {
        self.x_norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.u.validate().is_ok() && self.v.validate().is_ok()
    }
}

/// `(Σ_x |f(x)|^p)^{1/p}`, or `max |f|` for `p = ∞`.
pub fn lp_norm(f: &LatticeField, p: Exponent) -> Result<f64, LatticeError> {
    f.validate()?;
    Ok(lp_norm_unchecked(f.values(), p))
}

pub(crate) fn lp_norm_unchecked(values: &[Complex64], p: Exponent) -> f64 {
    let max = values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    match p {
        Exponent::Infinity => max,
        Exponent::Finite(_) if max == 0.0 => 0.0,
        Exponent::Finite(p) => {
            // Scaling by the maximum keeps large exponents from overflowing.
            let s = sum::sum(values.iter().map(|z| (z.norm() / max).powf(p)));
            max * s.powf(1.0 / p)
        }
    }
}

/// Lattice Laplacian `Δf(x) = Σ_{y∼x} (f(y) − f(x))` with periodic wraparound.
pub fn laplacian(f: &LatticeField) -> Result<LatticeField, LatticeError> {
    f.validate()?;
    let shape = f.shape;
    let side = shape.side();
    let mut out = vec![Complex64::default(); shape.len()];
    let values = f.values();
    for axis in 0..shape.dim {
        let stride = side.pow((shape.dim - 1 - axis) as u32);
        for (i, o) in out.iter_mut().enumerate() {
            let k = (i / stride) % side;
            let up = if k + 1 == side { i + stride - side * stride } else { i + stride };
            let down = if k == 0 { i + side * stride - stride } else { i - stride };
            *o += values[up] + values[down] - 2.0 * values[i];
        }
    }
    Ok(LatticeField::from_values_unchecked(shape, out))
}

/// Periodic convolution `(f ∗ g)(x) = Σ_y f(y) g(x − y)`.
///
/// Equals the convolution on `Z^d` only when the supports of `f` and `g`
/// are small enough not to wrap around the box.
pub fn convolve(f: &LatticeField, g: &LatticeField) -> Result<LatticeField, LatticeError> {
    f.ensure_same_shape(g)?;
    f.validate()?;
    g.validate()?;
    let shape = f.shape;
    let fft = CubeFft::new(shape.dim, shape.side());
    let mut a = f.values.clone();
    let mut b = g.values.clone();
    fft.process(&mut a, Direction::Forward);
    fft.process(&mut b, Direction::Forward);
    let scale = 1.0 / shape.len() as f64;
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y * scale;
    }
    fft.process(&mut a, Direction::Inverse);
    Ok(LatticeField::from_values_unchecked(shape, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn shape_rejects_bad_dimension_and_width() {
        assert_eq!(Shape::new(0, 4), Err(LatticeError::BadDimension(0)));
        assert_eq!(Shape::new(6, 4), Err(LatticeError::BadDimension(6)));
        assert_eq!(Shape::new(2, 0), Err(LatticeError::BadHalfWidth));
    }

    #[test]
    fn index_and_coord_round_trip() {
        let shape = Shape::new(3, 3).unwrap();
        for i in 0..shape.len() {
            assert_eq!(shape.index(&shape.coord(i)).unwrap(), i);
        }
        assert_eq!(shape.coord(0), vec![0, 0, 0]);
        assert!(shape.index(&[3, 0, 0]).is_err());
        assert!(shape.index(&[-3, 0, 0]).is_ok());
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let f = LatticeField::zeros(Shape::new(2, 4).unwrap());
        for p in [0.5, 1.0, 2.0, 7.0] {
            assert_eq!(lp_norm(&f, Exponent::Finite(p)).unwrap(), 0.0);
        }
        assert_eq!(lp_norm(&f, Exponent::Infinity).unwrap(), 0.0);
    }

    #[test]
    fn delta_has_unit_norms() {
        let f = LatticeField::delta(Shape::new(3, 4).unwrap(), &[0, 0, 0]).unwrap();
        for p in [0.5, 1.0, 2.0, 3.5] {
            assert!((lp_norm(&f, Exponent::Finite(p)).unwrap() - 1.0).abs() < 1e-15);
        }
        assert_eq!(lp_norm(&f, Exponent::Infinity).unwrap(), 1.0);
    }

    #[test]
    fn three_four_five() {
        let shape = Shape::new(1, 4).unwrap();
        let mut f = LatticeField::zeros(shape);
        f.set(&[-1], c(3.0)).unwrap();
        f.set(&[2], c(-4.0)).unwrap();
        assert!((lp_norm(&f, Exponent::Finite(2.0)).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let shape = Shape::new(1, 2).unwrap();
        let err = LatticeField::from_values(shape, vec![c(0.0), c(f64::NAN), c(0.0), c(0.0)]);
        assert_eq!(err, Err(LatticeError::NonFinite(1)));
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!(Exponent::new(f64::INFINITY).unwrap(), Exponent::Infinity);
        assert!(Exponent::new(0.0).is_err());
        assert!(Exponent::new(-1.0).is_err());
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let shape = Shape::new(2, 3).unwrap();
        let f = LatticeField::from_real_fn(shape, |_| 2.5).unwrap();
        let lap = laplacian(&f).unwrap();
        assert!(lap.values().iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn laplacian_of_delta_in_one_dimension() {
        let shape = Shape::new(1, 4).unwrap();
        let lap = laplacian(&LatticeField::delta(shape, &[0]).unwrap()).unwrap();
        for x in -4..4 {
            let expect = match x {
                0 => -2.0,
                1 | -1 => 1.0,
                _ => 0.0,
            };
            assert_eq!(lap.get(&[x]).unwrap(), c(expect));
        }
    }

    #[test]
    fn laplacian_sums_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shape = Shape::new(3, 5).unwrap();
        let f = LatticeField::random_real(shape, 4, &mut rng);
        let total = laplacian(&f).unwrap().total().norm();
        let scale = f.values().iter().map(|z| z.norm()).sum::<f64>();
        assert!(total <= 1e-12 * scale);
    }

    #[test]
    fn gradient_energy_of_delta() {
        for d in 1..=4 {
            let f = LatticeField::delta(Shape::new(d, 3).unwrap(), &vec![0; d]).unwrap();
            assert!((f.gradient_energy() - 2.0 * d as f64).abs() < 1e-15);
        }
    }

    fn direct_convolution(f: &LatticeField, g: &LatticeField) -> LatticeField {
        let shape = f.shape();
        LatticeField::from_fn(shape, |x| {
            let mut acc = Complex64::default();
            for j in 0..shape.len() {
                let y = shape.coord(j);
                let diff: Vec<i64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                acc += f.values()[j] * g.values()[shape.wrapped_index(&diff)];
            }
            acc
        })
        .unwrap()
    }

    #[test]
    fn convolution_identity_and_translation() {
        let shape = Shape::new(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = LatticeField::random_real(shape, 2, &mut rng);
        let delta = LatticeField::delta(shape, &[0, 0]).unwrap();
        let same = convolve(&f, &delta).unwrap();
        for (a, b) in same.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-14);
        }
        let a = LatticeField::delta(shape, &[1, -2]).unwrap();
        let b = LatticeField::delta(shape, &[-3, 1]).unwrap();
        let ab = convolve(&a, &b).unwrap();
        let expect = LatticeField::delta(shape, &[-2, -1]).unwrap();
        for (x, y) in ab.values().iter().zip(expect.values()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn young_inequality_one_dimension_size_eight() {
        let shape = Shape::new(1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let f = LatticeField::random_real(shape, 3, &mut rng);
            let g = LatticeField::random_real(shape, 3, &mut rng);
            let fg = direct_convolution(&f, &g);
            let fast = convolve(&f, &g).unwrap();
            for (a, b) in fg.values().iter().zip(fast.values()) {
                assert!((a - b).norm() < 1e-12);
            }
            let lhs = lp_norm(&fg, Exponent::Infinity).unwrap();
            let rhs = lp_norm(&f, Exponent::Finite(2.0)).unwrap() * lp_norm(&g, Exponent::Finite(2.0)).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-14));
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = LatticeField::zeros(Shape::new(1, 4).unwrap());
        let b = LatticeField::zeros(Shape::new(1, 5).unwrap());
        assert!(matches!(convolve(&a, &b), Err(LatticeError::ShapeMismatch { .. })));
    }
}
