//! Exact spectral evolution of the linear lattice wave equation
//! `∂_t² u = Δu`, Green kernels and decay diagnostics.
//!
//! The free flow acts on Fourier coefficients by the matrix
//!
//! ```text
//! U_0(t) = [[ cos(tω),     sin(tω)/ω ],
//!           [ −ω sin(tω),  cos(tω)   ]]
//! ```
//!
//! The Green kernel `G(·,t)` (zero displacement, unit velocity at the origin)
//! has symbol `sin(tω)/ω`. Kernel scans never build the full `(2N)^d` grid:
//! every catalog symbol is even in each coordinate, so the torus sum reduces
//! to a cosine sum over the octant `[0, N]^d`, which is computed in place.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{LatticeError, LatticeField, Shape, StatePair};
use crate::spectral::{omega_values, sin_over, MultiplierSpec, SpectralError};
use crate::sum::{self, CompensatedSum};
use crate::transform::{even_octant_transform, CubeFft, Direction};

/// Extra sites beyond `|t|` a box must keep to avoid wraparound contamination.
pub const WRAP_MARGIN: f64 = 8.0;

/// Largest octant (in grid points) a kernel evaluation may allocate.
pub const MAX_OCTANT_POINTS: usize = 400_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagatorError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("kernel octant of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: usize, limit: usize },
    #[error("time samples must be finite, positive and strictly increasing")]
    BadTimes,
    #[error("norm order k must be at least 2, got {0}")]
    BadOrder(u32),
    #[error("fit window [{lo}, {hi}] holds {got} samples, at least 4 are needed")]
    TooFewSamples { lo: f64, hi: f64, got: usize },
    #[error("cannot fit a non-positive value {value} at t = {t}")]
    NonPositiveValue { t: f64, value: f64 },
}

/// Phase-space energy `½‖u‖²_{Ḣ¹} + ½‖v‖²_{ℓ²}`.
pub fn linear_energy(state: &StatePair) -> f64 {
    0.5 * state.x_norm_sqr()
}

/// Reusable FFT plans and `ω` table for repeated free evolution on one box.
pub struct LinearFlow {
    shape: Shape,
    fft: CubeFft,
    omega: Vec<f64>,
}

impl LinearFlow {
    pub fn new(shape: Shape) -> Self {
        Self { shape, fft: CubeFft::new(shape.dim(), shape.side()), omega: omega_values(shape) }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub(crate) fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub(crate) fn forward(&self, values: &mut [Complex64]) {
        self.fft.process(values, Direction::Forward);
    }

    /// Inverse transform including the `(2N)^{-d}` factor.
    pub(crate) fn inverse(&self, values: &mut [Complex64]) {
        self.fft.process(values, Direction::Inverse);
        let scale = 1.0 / self.shape.len() as f64;
        values.iter_mut().for_each(|z| *z *= scale);
    }

    /// Applies `U_0(t)` to Fourier coefficients in place.
    pub(crate) fn rotate(&self, u_hat: &mut [Complex64], v_hat: &mut [Complex64], t: f64) {
        for ((u, v), &w) in u_hat.iter_mut().zip(v_hat.iter_mut()).zip(&self.omega) {
            let (s, c) = (t * w).sin_cos();
            let a = *u;
            let b = *v;
            *u = c * a + sin_over(t, w) * b;
            *v = -(w * s) * a + c * b;
        }
    }

    /// `U_0(t)` applied to a state.
    pub fn solve(&self, state: &StatePair, t: f64) -> Result<StatePair, PropagatorError> {
        if state.shape() != self.shape {
            return Err(LatticeError::ShapeMismatch { left: state.shape(), right: self.shape }.into());
        }
        if t == 0.0 {
            return Ok(state.clone());
        }
        let mut u = state.u.values().to_vec();
        let mut v = state.v.values().to_vec();
        self.forward(&mut u);
        self.forward(&mut v);
        self.rotate(&mut u, &mut v, t);
        self.inverse(&mut u);
        self.inverse(&mut v);
        Ok(StatePair {
            u: LatticeField::from_values_unchecked(self.shape, u),
            v: LatticeField::from_values_unchecked(self.shape, v),
        })
    }
}

/// Solution at time `t` of the free equation with displacement `f` and velocity `g`.
pub fn linear_solve(f: &LatticeField, g: &LatticeField, t: f64) -> Result<StatePair, PropagatorError> {
    let state = StatePair::new(f.clone(), g.clone())?;
    LinearFlow::new(f.shape()).solve(&state, t)
}

/// How the box half width grows with time in kernel scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfWidthPolicy {
    pub scale: f64,
    pub pad: usize,
    pub cap: Option<usize>,
}

impl Default for HalfWidthPolicy {
    fn default() -> Self {
        Self { scale: 1.25, pad: 16, cap: None }
    }
}

impl HalfWidthPolicy {
    pub fn with_cap(cap: usize) -> Self {
        Self { cap: Some(cap), ..Self::default() }
    }

    pub fn half_width(&self, t: f64) -> usize {
        let n = (self.scale * t.abs()).ceil() as usize + self.pad;
        self.cap.map_or(n, |c| n.min(c)).max(1)
    }
}

/// Whether a box of half width `n` is too small for time `t`.
pub fn wraparound_risk(n: usize, t: f64) -> bool {
    (n as f64) < t.abs() + WRAP_MARGIN
}

/// Kernels computable through the octant reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Zero displacement, unit velocity: symbol `sin(tω)/ω`.
    Velocity,
    /// Unit displacement, zero velocity: symbol `cos(tω)`.
    Displacement,
}

impl KernelKind {
    fn multiplier(self, t: f64) -> MultiplierSpec {
        match self {
            KernelKind::Velocity => MultiplierSpec::SinOverOmega { t },
            KernelKind::Displacement => MultiplierSpec::Cos { t },
        }
    }
}

/// Kernel values on `[0, n]^dim`, row-major, last axis fastest.
#[derive(Debug, Clone)]
pub struct OctantKernel {
    pub dim: usize,
    pub half_width: usize,
    pub t: f64,
    pub values: Vec<f64>,
    pub wraparound_warning: bool,
}

/// Torus weight of octant position `k`: `0` and `n` occur once, others twice.
fn octant_weight(k: usize, n: usize) -> f64 {
    if k == 0 || k == n {
        1.0
    } else {
        2.0
    }
}

/// Calls `visit(flat_index, ω², weight)` over the frequency octant.
fn for_each_octant_frequency(dim: usize, n: usize, mut visit: impl FnMut(usize, f64, f64)) {
    let len = n + 1;
    let axis: Vec<f64> = (0..len)
        .map(|k| {
            let s = (0.5 * PI * k as f64 / n as f64).sin();
            4.0 * s * s
        })
        .collect();
    let total = len.pow(dim as u32);
    let mut idx = vec![0usize; dim];
    for flat in 0..total {
        let mut w2 = 0.0;
        let mut weight = 1.0;
        for &k in &idx {
            w2 += axis[k];
            weight *= octant_weight(k, n);
        }
        visit(flat, w2, weight);
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < len {
                break;
            }
            *slot = 0;
        }
    }
}

fn octant_points(dim: usize, n: usize) -> Result<usize, PropagatorError> {
    let points =
        (n + 1).checked_pow(dim as u32).filter(|&p| p <= MAX_OCTANT_POINTS).ok_or(PropagatorError::GridTooLarge {
            points: (n + 1).saturating_pow(dim as u32),
            limit: MAX_OCTANT_POINTS,
        })?;
    Ok(points)
}

/// Exact torus kernel of the given kind on the nonnegative octant.
pub fn kernel_octant(dim: usize, n: usize, t: f64, kind: KernelKind) -> Result<OctantKernel, PropagatorError> {
    Shape::new(dim, n)?;
    let points = octant_points(dim, n)?;
    let m = kind.multiplier(t);
    let mut values = vec![0.0; points];
    for_each_octant_frequency(dim, n, |i, w2, _| values[i] = m.symbol(w2.sqrt()));
    even_octant_transform(&mut values, dim, n);
    let scale = (2.0 * n as f64).powi(-(dim as i32));
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(OctantKernel { dim, half_width: n, t, values, wraparound_warning: wraparound_risk(n, t) })
}

impl OctantKernel {
    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `‖G‖_{ℓ^k}` over the whole box.
    pub fn lk_norm(&self, k: u32) -> f64 {
        let max = self.sup();
        if max == 0.0 {
            return 0.0;
        }
        let mut acc = CompensatedSum::new();
        for_each_octant_frequency(self.dim, self.half_width, |i, _, weight| {
            acc.add(weight * (self.values[i].abs() / max).powi(k as i32));
        });
        max * acc.value().powf(1.0 / k as f64)
    }

    /// Expands the octant to a full field using evenness in every coordinate.
    pub fn to_field(&self) -> Result<LatticeField, PropagatorError> {
        let shape = Shape::new(self.dim, self.half_width)?;
        let len = self.half_width + 1;
        let values = (0..shape.len())
            .map(|i| {
                let flat = shape.coord(i).iter().fold(0usize, |acc, c| acc * len + c.unsigned_abs() as usize);
                Complex64::new(self.values[flat], 0.0)
            })
            .collect();
        Ok(LatticeField::from_values_unchecked(shape, values))
    }
}

/// Green kernel `G(·,t)` on the box with a flag for boxes that are too small.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    pub field: LatticeField,
    pub wraparound_warning: bool,
}

pub fn green_kernel(dim: usize, n: usize, t: f64) -> Result<GreenKernel, PropagatorError> {
    let octant = kernel_octant(dim, n, t, KernelKind::Velocity)?;
    Ok(GreenKernel { field: octant.to_field()?, wraparound_warning: octant.wraparound_warning })
}

/// Trapezoid points for a periodic analytic integrand with the given bandwidth.
fn quadrature_points(x: i64, t: f64) -> usize {
    let need = 4 * (x.unsigned_abs() as usize + 2 * t.abs().ceil() as usize) + 64;
    need.next_power_of_two().max(512)
}

/// `(1/2π) ∫_{-π}^{π} h(ξ) dξ` by the trapezoid rule.
fn periodic_mean(points: usize, h: impl Fn(f64) -> f64) -> f64 {
    let step = 2.0 * PI / points as f64;
    sum::sum((0..points).map(|j| h(-PI + j as f64 * step))) / points as f64
}

/// One-dimensional displacement kernel `H(x,t) = (1/2π)∫ e^{ixξ} cos(2t sin(ξ/2)) dξ` by quadrature.
pub fn bessel_kernel_1d(x: i64, t: f64) -> f64 {
    periodic_mean(quadrature_points(x, t), |xi| (x as f64 * xi).cos() * (2.0 * t * (0.5 * xi).sin()).cos())
}

/// One-dimensional Green kernel `(1/2π)∫ e^{ixξ} sin(tω)/ω dξ` by quadrature.
pub fn green_kernel_1d_quadrature(x: i64, t: f64) -> f64 {
    periodic_mean(quadrature_points(x, t), |xi| {
        // sin(2ts)/(2s) is even in s = sin(ξ/2), hence smooth and periodic.
        let s = (0.5 * xi).sin();
        (x as f64 * xi).cos() * sin_over(t, 2.0 * s.abs())
    })
}

/// Which norm of the kernel a series records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "norm", rename_all = "snake_case")]
pub enum DecayNorm {
    Sup,
    Lk { k: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub t: f64,
    pub value: f64,
    pub half_width: usize,
    pub wraparound_warning: bool,
}

/// Kernel norms at increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub dim: usize,
    pub kind: KernelKind,
    pub norm: DecayNorm,
    pub samples: Vec<DecaySample>,
}

impl DecaySeries {
    pub fn any_wraparound(&self) -> bool {
        self.samples.iter().any(|s| s.wraparound_warning)
    }
}

fn check_times(times: &[f64]) -> Result<(), PropagatorError> {
    let ok = times.iter().all(|t| t.is_finite() && *t > 0.0) && times.windows(2).all(|w| w[0] < w[1]);
    if ok && !times.is_empty() {
        Ok(())
    } else {
        Err(PropagatorError::BadTimes)
    }
}

/// Kernel norm at each time, evaluated one time at a time to bound memory.
pub fn decay_scan(
    dim: usize,
    kind: KernelKind,
    norm: DecayNorm,
    times: &[f64],
    policy: HalfWidthPolicy,
) -> Result<DecaySeries, PropagatorError> {
    check_times(times)?;
    if let DecayNorm::Lk { k } = norm {
        if k < 2 {
            return Err(PropagatorError::BadOrder(k));
        }
    }
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let n = policy.half_width(t);
        let kernel = kernel_octant(dim, n, t, kind)?;
        let value = match norm {
            DecayNorm::Sup => kernel.sup(),
            DecayNorm::Lk { k } => kernel.lk_norm(k),
        };
        samples.push(DecaySample { t, value, half_width: n, wraparound_warning: kernel.wraparound_warning });
    }
    Ok(DecaySeries { dim, kind, norm, samples })
}

/// `sup_x |G(x,t)|` at each time.
pub fn sup_decay_scan(dim: usize, times: &[f64], policy: HalfWidthPolicy) -> Result<DecaySeries, PropagatorError> {
    decay_scan(dim, KernelKind::Velocity, DecayNorm::Sup, times, policy)
}

/// `‖G(·,t)‖_{ℓ^k}` at each time.
pub fn lk_decay_scan(
    dim: usize,
    k: u32,
    times: &[f64],
    policy: HalfWidthPolicy,
) -> Result<DecaySeries, PropagatorError> {
    decay_scan(dim, KernelKind::Velocity, DecayNorm::Lk { k }, times, policy)
}

/// `t0, 2 t0, 4 t0, …` up to and including `t1`, followed by `t1` if it is not dyadic.
pub fn dyadic_times(t0: f64, t1: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = t0;
    while t <= t1 * (1.0 + 1e-12) {
        out.push(t);
        t *= 2.0;
    }
    if out.last().is_some_and(|&last| last < t1 * (1.0 - 1e-12)) {
        out.push(t1);
    }
    out
}

/// Least-squares slope of `log value` against `log t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub with_log: bool,
    pub samples: usize,
}

/// Fits `value ≈ C t^slope` (or `C t^slope log(2+t)` when `with_log`) on the window.
pub fn decay_fit(series: &DecaySeries, window: (f64, f64), with_log: bool) -> Result<DecayFit, PropagatorError> {
    let (lo, hi) = window;
    let picked: Vec<&DecaySample> = series.samples.iter().filter(|s| s.t >= lo && s.t <= hi).collect();
    if picked.len() < 4 {
        return Err(PropagatorError::TooFewSamples { lo, hi, got: picked.len() });
    }
    let mut xs = Vec::with_capacity(picked.len());
    let mut ys = Vec::with_capacity(picked.len());
    for s in picked {
        if !(s.value > 0.0) || !(s.t > 0.0) {
            return Err(PropagatorError::NonPositiveValue { t: s.t, value: s.value });
        }
        let v = if with_log { s.value / (2.0 + s.t).ln() } else { s.value };
        xs.push(s.t.ln());
        ys.push(v.ln());
    }
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    Ok(DecayFit { slope, intercept, r_squared, window, with_log, samples: xs.len() })
}

/// Ordinary least squares line through `(x, y)`; returns slope, intercept, R².
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = sum::sum(xs.iter().copied()) / n;
    let my = sum::sum(ys.iter().copied()) / n;
    let sxx = sum::sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = sum::sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let syy = sum::sum(ys.iter().map(|y| (y - my) * (y - my)));
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res = sum::sum(xs.iter().zip(ys).map(|(x, y)| {
        let r = y - (intercept + slope * x);
        r * r
    }));
    let r_squared = if syy > 1e-300 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r_squared)
}

/// `Ω(t) = ∫_{T^d} sin²(tω)/ω² dξ` by the grid average on a box of half width `n`.
pub fn omega_l2_integral(dim: usize, t: f64, n: usize) -> Result<f64, PropagatorError> {
    Shape::new(dim, n)?;
    octant_points(dim, n)?;
    let mut acc = CompensatedSum::new();
    for_each_octant_frequency(dim, n, |_, w2, weight| {
        let g = sin_over(t, w2.sqrt());
        acc.add(weight * g * g);
    });
    let cells = (2.0 * n as f64).powi(dim as i32);
    Ok((2.0 * PI).powi(dim as i32) * acc.value() / cells)
}
