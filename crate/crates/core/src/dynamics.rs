//! Nonlinear lattice wave equation `∂_t² u − Δu = μ|u|^{p−1}u`.
//!
//! Time stepping is Strang splitting in Fourier space: a half step of the
//! exact free flow, a pointwise kick `v ← v + dt·μ|u|^{p−1}u`, another half
//! step. A Picard iteration on the Duhamel formula serves as an independent
//! solver on short intervals.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{laplacian, LatticeError, LatticeField, Shape, StatePair};
use crate::propagator::{LinearFlow, PropagatorError};
use crate::sum::CompensatedSum;

/// Sup-norm beyond which a run counts as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// Picard sweeps allowed before giving up.
pub const PICARD_MAX_ITER: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error("nonlinearity power must exceed 1, got {0}")]
    BadPower(f64),
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("time span must be finite, got {0}")]
    BadSpan(f64),
    #[error("record stride must be at least 1")]
    BadStride,
    #[error("virial analysis needs real data, imaginary part reaches {0:e}")]
    RealDataRequired(f64),
    #[error("virial analysis needs stored states at uniform spacing and at least 3 samples")]
    VirialSamples,
    #[error("Picard iteration did not converge within {iterations} sweeps (last contraction factor {last_factor})")]
    HorizonExceeded { iterations: usize, last_factor: f64 },
    #[error("no amplitude up to {max_amplitude} gives energy below -{margin}")]
    AmplitudeSearchFailed { max_amplitude: f64, margin: f64 },
    #[error("unknown coupling {0:?}, expected focusing, defocusing or free")]
    UnknownCoupling(String),
    #[error("unknown scheme {0:?}, expected strang or picard")]
    UnknownScheme(String),
}

/// Sign `μ` of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `μ = +1`.
    Focusing,
    /// `μ = −1`.
    Defocusing,
    /// `μ = 0`, the free equation.
    Free,
}

impl Coupling {
    pub fn sign(self) -> f64 {
        match self {
            Coupling::Focusing => 1.0,
            Coupling::Defocusing => -1.0,
            Coupling::Free => 0.0,
        }
    }
}

impl FromStr for Coupling {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "focusing" | "1" | "+1" => Ok(Coupling::Focusing),
            "defocusing" | "-1" => Ok(Coupling::Defocusing),
            "free" | "0" => Ok(Coupling::Free),
            other => Err(DynamicsError::UnknownCoupling(other.to_string())),
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coupling::Focusing => "focusing",
            Coupling::Defocusing => "defocusing",
            Coupling::Free => "free",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    StrangSplit,
    Picard,
}

impl FromStr for Scheme {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strang" | "strang_split" => Ok(Scheme::StrangSplit),
            "picard" => Ok(Scheme::Picard),
            other => Err(DynamicsError::UnknownScheme(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub p: f64,
    pub coupling: Coupling,
    /// Positive step size; the sign of `t_span` sets the direction.
    pub dt: f64,
    pub t_span: f64,
    pub scheme: Scheme,
    /// Record every `record_stride`-th step.
    pub record_stride: usize,
    /// Keep full states at record points, not only diagnostics.
    pub store_states: bool,
}

impl EvolutionConfig {
    /// Strang splitting recording every step with states kept.
    pub fn new(p: f64, coupling: Coupling, dt: f64, t_span: f64) -> Result<Self, DynamicsError> {
        let cfg = Self { p, coupling, dt, t_span, scheme: Scheme::StrangSplit, record_stride: 1, store_states: true };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn without_states(mut self) -> Self {
        self.store_states = false;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(DynamicsError::BadPower(self.p));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::BadStep(self.dt));
        }
        if !self.t_span.is_finite() {
            return Err(DynamicsError::BadSpan(self.t_span));
        }
        if self.record_stride == 0 {
            return Err(DynamicsError::BadStride);
        }
        Ok(())
    }

    /// Number of steps and the signed step that lands exactly on `t_span`.
    pub fn steps(&self) -> (usize, f64) {
        let n = (self.t_span.abs() / self.dt).round().max(1.0) as usize;
        if self.t_span == 0.0 {
            return (0, 0.0);
        }
        (n, self.t_span / n as f64)
    }
}

/// `|u|^{p−1}u`, computed as `exp((p−1) ln|u|)·u` with `0 ↦ 0`.
pub fn power_nonlinearity(u: Complex64, p: f64) -> Complex64 {
    let a = u.norm();
    if a == 0.0 {
        return Complex64::default();
    }
    u * ((p - 1.0) * a.ln()).exp()
}

fn power_sum(values: &[Complex64], exponent: f64) -> f64 {
    values
        .iter()
        .map(|z| {
            let a = z.norm();
            if a == 0.0 {
                0.0
            } else {
                (exponent * a.ln()).exp()
            }
        })
        .collect::<CompensatedSum>()
        .value()
}

/// `½‖u‖²_{Ḣ¹} + ½‖v‖²_{ℓ²} − (μ/(p+1)) Σ|u|^{p+1}`.
pub fn nonlinear_energy(state: &StatePair, p: f64, coupling: Coupling) -> f64 {
    let potential = if coupling == Coupling::Free { 0.0 } else { power_sum(state.u.values(), p + 1.0) };
    0.5 * state.x_norm_sqr() - coupling.sign() / (p + 1.0) * potential
}

/// `(Σ ω²|û|² + Σ|v̂|²)/len`, the squared phase-space norm from Fourier data.
fn x_norm_sqr_hat(omega: &[f64], u_hat: &[Complex64], v_hat: &[Complex64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for ((u, v), w) in u_hat.iter().zip(v_hat).zip(omega) {
        acc.add(w * w * u.norm_sqr() + v.norm_sqr());
    }
    acc.value() / omega.len() as f64
}

/// Strang-split integrator holding the state in Fourier space.
pub struct SplitStepper {
    flow: LinearFlow,
    u_hat: Vec<Complex64>,
    v_hat: Vec<Complex64>,
    work: Vec<Complex64>,
    p: f64,
    mu: f64,
    t: f64,
}

/// Kick stage found a non-finite or oversized displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overflow {
    pub sup: f64,
}

impl SplitStepper {
    pub fn new(init: &StatePair, p: f64, coupling: Coupling) -> Result<Self, DynamicsError> {
        Self::new_at(init, 0.0, p, coupling)
    }

    /// Starts the clock at `t0` instead of zero; profiles are taken relative to it.
    pub fn new_at(init: &StatePair, t0: f64, p: f64, coupling: Coupling) -> Result<Self, DynamicsError> {
        init.u.validate()?;
        init.v.validate()?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(DynamicsError::BadPower(p));
        }
        let flow = LinearFlow::new(init.shape());
        let mut u_hat = init.u.values().to_vec();
        let mut v_hat = init.v.values().to_vec();
        flow.forward(&mut u_hat);
        flow.forward(&mut v_hat);
        let work = vec![Complex64::default(); u_hat.len()];
        Ok(Self { flow, u_hat, v_hat, work, p, mu: coupling.sign(), t: t0 })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn shape(&self) -> Shape {
        self.flow.shape()
    }

    /// One step of signed size `dt`.
    pub fn step(&mut self, dt: f64) -> Result<(), Overflow> {
        self.flow.rotate(&mut self.u_hat, &mut self.v_hat, 0.5 * dt);
        if self.mu != 0.0 {
            self.work.copy_from_slice(&self.u_hat);
            self.flow.inverse(&mut self.work);
            let mut sup = 0.0f64;
            let mut finite = true;
            for z in self.work.iter_mut() {
                let a = z.norm();
                finite &= a.is_finite();
                sup = sup.max(a);
                *z = power_nonlinearity(*z, self.p) * (self.mu * dt);
            }
            if !finite || sup > BLOWUP_THRESHOLD {
                return Err(Overflow { sup: if finite { sup } else { f64::INFINITY } });
            }
            self.flow.forward(&mut self.work);
            for (v, k) in self.v_hat.iter_mut().zip(&self.work) {
                *v += k;
            }
        }
        self.flow.rotate(&mut self.u_hat, &mut self.v_hat, 0.5 * dt);
        self.t += dt;
        Ok(())
    }

    /// Current state in physical space.
    pub fn state(&self) -> StatePair {
        let mut u = self.u_hat.clone();
        let mut v = self.v_hat.clone();
        self.flow.inverse(&mut u);
        self.flow.inverse(&mut v);
        let shape = self.shape();
        StatePair { u: LatticeField::from_values_unchecked(shape, u), v: LatticeField::from_values_unchecked(shape, v) }
    }

    /// Fourier coefficients of the free profile `U_0(−t)ũ(t)`.
    pub fn profile_hat(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut u = self.u_hat.clone();
        let mut v = self.v_hat.clone();
        self.flow.rotate(&mut u, &mut v, -self.t);
        (u, v)
    }

    /// `U_0(−t)ũ(t)` in physical space.
    pub fn profile(&self) -> StatePair {
        let (mut u, mut v) = self.profile_hat();
        self.flow.inverse(&mut u);
        self.flow.inverse(&mut v);
        let shape = self.shape();
        StatePair { u: LatticeField::from_values_unchecked(shape, u), v: LatticeField::from_values_unchecked(shape, v) }
    }

    /// `‖a − b‖_X` for two Fourier-space states on this box.
    pub fn x_distance_hat(&self, a: &(Vec<Complex64>, Vec<Complex64>), b: &(Vec<Complex64>, Vec<Complex64>)) -> f64 {
        let du: Vec<Complex64> = a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect();
        let dv: Vec<Complex64> = a.1.iter().zip(&b.1).map(|(x, y)| x - y).collect();
        x_norm_sqr_hat(self.flow.omega(), &du, &dv).sqrt()
    }
}

/// Scalar diagnostics at one record point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub energy: f64,
    /// `Σ|u|^{p+1}`.
    pub potential: f64,
    /// `Σ|u|²`.
    pub virial: f64,
    pub x_norm: f64,
    pub sup: f64,
}

impl Diagnostics {
    fn of(t: f64, state: &StatePair, p: f64, coupling: Coupling) -> Self {
        let potential = power_sum(state.u.values(), p + 1.0);
        let xsq = state.x_norm_sqr();
        Self {
            t,
            energy: 0.5 * xsq - coupling.sign() / (p + 1.0) * potential,
            potential,
            virial: state.u.values().iter().map(|z| z.norm_sqr()).collect::<CompensatedSum>().value(),
            x_norm: xsq.sqrt(),
            sup: state.u.values().iter().fold(0.0f64, |m, z| m.max(z.norm())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// Sup-norm crossed [`BLOWUP_THRESHOLD`] between the two times.
    BlowUp {
        last_finite: f64,
        first_overflow: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: EvolutionConfig,
    pub times: Vec<f64>,
    /// Empty unless the configuration stores states.
    pub states: Vec<StatePair>,
    pub diagnostics: Vec<Diagnostics>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn blew_up(&self) -> bool {
        matches!(self.outcome, Outcome::BlowUp { .. })
    }

    /// Largest `|E(t) − E(0)|` over the record points.
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.diagnostics.first().map_or(0.0, |d| d.energy);
        self.diagnostics.iter().fold(0.0, |m, d| m.max((d.energy - e0).abs()))
    }

    pub fn final_state(&self) -> Option<&StatePair> {
        self.states.last()
    }

    /// CSV with columns `t,energy,potential,virial,x_norm,sup`.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("t,energy,potential,virial,x_norm,sup\n");
        for d in &self.diagnostics {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                d.t, d.energy, d.potential, d.virial, d.x_norm, d.sup
            ));
        }
        out
    }

    fn record(&mut self, t: f64, state: StatePair) {
        self.diagnostics.push(Diagnostics::of(t, &state, self.config.p, self.config.coupling));
        self.times.push(t);
        if self.config.store_states {
            self.states.push(state);
        }
    }
}

/// Integrates with the configured scheme.
pub fn evolve(init: &StatePair, cfg: &EvolutionConfig) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    if cfg.scheme == Scheme::Picard {
        return picard_solve(init, cfg).map(|(traj, _)| traj);
    }
    let mut stepper = SplitStepper::new(init, cfg.p, cfg.coupling)?;
    let mut traj = Trajectory {
        config: *cfg,
        times: Vec::new(),
        states: Vec::new(),
        diagnostics: Vec::new(),
        outcome: Outcome::Completed,
    };
    traj.record(0.0, init.clone());
    let (steps, dt) = cfg.steps();
    for k in 1..=steps {
        let before = stepper.time();
        if stepper.step(dt).is_err() {
            traj.outcome = Outcome::BlowUp { last_finite: before, first_overflow: before + dt };
            return Ok(traj);
        }
        if k % cfg.record_stride == 0 || k == steps {
            let state = stepper.state();
            let sup = state.u.values().iter().fold(0.0f64, |m, z| m.max(z.norm()));
            if !state.is_finite() || sup > BLOWUP_THRESHOLD {
                traj.outcome = Outcome::BlowUp { last_finite: before, first_overflow: stepper.time() };
                return Ok(traj);
            }
            traj.record(stepper.time(), state);
        }
    }
    Ok(traj)
}

/// Convergence record of a Picard solve.
#[derive(Debug, Clone, Serialize)]
pub struct PicardStats {
    pub iterations: usize,
    /// `sup_t ‖ũ_{m+1}(t) − ũ_m(t)‖_X` per sweep.
    pub differences: Vec<f64>,
    /// Ratios of consecutive differences.
    pub contraction_factors: Vec<f64>,
}

/// Rough contraction horizon `c / ‖F‖_X^{p−1}` of the Duhamel map.
pub fn contraction_horizon(init: &StatePair, p: f64, c: f64) -> f64 {
    let norm = init.x_norm().max(init.u.values().iter().fold(0.0f64, |m, z| m.max(z.norm())));
    if norm == 0.0 {
        f64::INFINITY
    } else {
        c / norm.powf(p - 1.0)
    }
}

type HatState = (Vec<Complex64>, Vec<Complex64>);

/// Fixed point of `ũ(t) = U_0(t)F + ∫_0^t U_0(t−s)(0, μ|u|^{p−1}u)(s) ds`
/// on the grid `t_j = j·dt`, with the integral by the composite trapezoid rule.
pub fn picard_solve(init: &StatePair, cfg: &EvolutionConfig) -> Result<(Trajectory, PicardStats), DynamicsError> {
    cfg.validate()?;
    init.u.validate()?;
    init.v.validate()?;
    let shape = init.shape();
    let flow = LinearFlow::new(shape);
    let (steps, dt) = cfg.steps();
    let times: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
    let mu = cfg.coupling.sign();

    let mut f_u = init.u.values().to_vec();
    let mut f_v = init.v.values().to_vec();
    flow.forward(&mut f_u);
    flow.forward(&mut f_v);
    let free = |extra: Option<&HatState>, t: f64| -> HatState {
        let mut u = f_u.clone();
        let mut v = f_v.clone();
        if let Some((iu, iv)) = extra {
            u.iter_mut().zip(iu).for_each(|(a, b)| *a += b);
            v.iter_mut().zip(iv).for_each(|(a, b)| *a += b);
        }
        flow.rotate(&mut u, &mut v, t);
        (u, v)
    };
    let mut current: Vec<HatState> = times.iter().map(|&t| free(None, t)).collect();
    let mut stats = PicardStats { iterations: 0, differences: Vec::new(), contraction_factors: Vec::new() };
    let len = shape.len();

    loop {
        if stats.iterations >= PICARD_MAX_ITER {
            return Err(DynamicsError::HorizonExceeded {
                iterations: stats.iterations,
                last_factor: stats.contraction_factors.last().copied().unwrap_or(f64::NAN),
            });
        }
        // W(s) = U_0(−s)(0, N̂(u(s))), integrated cumulatively.
        let mut acc: HatState = (vec![Complex64::default(); len], vec![Complex64::default(); len]);
        let mut prev_w: Option<HatState> = None;
        let mut next = Vec::with_capacity(times.len());
        for (j, &t) in times.iter().enumerate() {
            let mut w_u = vec![Complex64::default(); len];
            let mut w_v = current[j].0.clone();
            if mu != 0.0 {
                flow.inverse(&mut w_v);
                w_v.iter_mut().for_each(|z| *z = power_nonlinearity(*z, cfg.p) * mu);
                flow.forward(&mut w_v);
            } else {
                w_v.iter_mut().for_each(|z| *z = Complex64::default());
            }
            flow.rotate(&mut w_u, &mut w_v, -t);
            if let Some((pu, pv)) = &prev_w {
                let h = 0.5 * dt;
                for i in 0..len {
                    acc.0[i] += h * (pu[i] + w_u[i]);
                    acc.1[i] += h * (pv[i] + w_v[i]);
                }
            }
            prev_w = Some((w_u, w_v));
            next.push(free(Some(&acc), t));
        }
        let diff = next
            .iter()
            .zip(&current)
            .map(|(a, b)| {
                let du: Vec<Complex64> = a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect();
                let dv: Vec<Complex64> = a.1.iter().zip(&b.1).map(|(x, y)| x - y).collect();
                x_norm_sqr_hat(flow.omega(), &du, &dv).sqrt()
            })
            .fold(0.0f64, f64::max);
        let scale = next.iter().map(|s| x_norm_sqr_hat(flow.omega(), &s.0, &s.1).sqrt()).fold(0.0f64, f64::max);
        stats.iterations += 1;
        if let Some(&last) = stats.differences.last() {
            stats.contraction_factors.push(if last > 0.0 { diff / last } else { 0.0 });
        }
        stats.differences.push(diff);
        current = next;
        if !diff.is_finite() {
            return Err(DynamicsError::HorizonExceeded { iterations: stats.iterations, last_factor: f64::INFINITY });
        }
        if diff <= 1e-14 * scale.max(f64::MIN_POSITIVE) || diff == 0.0 {
            break;
        }
    }

    let mut traj = Trajectory {
        config: *cfg,
        times: Vec::new(),
        states: Vec::new(),
        diagnostics: Vec::new(),
        outcome: Outcome::Completed,
    };
    for (j, (&t, (u_hat, v_hat))) in times.iter().zip(current).enumerate() {
        if j % cfg.record_stride != 0 && j != steps {
            continue;
        }
        let (mut u, mut v) = (u_hat, v_hat);
        flow.inverse(&mut u);
        flow.inverse(&mut v);
        let state = StatePair {
            u: LatticeField::from_values_unchecked(shape, u),
            v: LatticeField::from_values_unchecked(shape, v),
        };
        traj.record(t, state);
    }
    Ok((traj, stats))
}

/// Virial quantities at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialPoint {
    pub t: f64,
    /// `F = Σu²`.
    pub f: f64,
    /// `F′ = 2Σ u ∂_t u`.
    pub df: f64,
    /// `F″ = 2Σ(u ∂_t²u + (∂_t u)²)` with `∂_t²u = Δu + μ|u|^{p−1}u`.
    pub ddf: f64,
    /// Second difference of `F` in time; absent at the ends.
    pub ddf_fd: Option<f64>,
    /// `Σ|u|^{p+1} − Σ|∇u|² − (2α+1)Σ(∂_t u)²`.
    pub h: f64,
    /// `(F^{−α})″ = −αF^{−α−2}(F″F − (α+1)F′²)`.
    pub concavity: f64,
    /// `Σu²·Σ(∂_t u)² − (Σ u ∂_t u)²`.
    pub cauchy_schwarz_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VirialSeries {
    pub alpha: f64,
    pub points: Vec<VirialPoint>,
}

impl VirialSeries {
    /// Largest `|F″ − F″_fd|` over interior samples.
    pub fn max_second_derivative_mismatch(&self) -> f64 {
        self.points.iter().filter_map(|p| p.ddf_fd.map(|fd| (fd - p.ddf).abs())).fold(0.0, f64::max)
    }

    pub fn max_concavity(&self) -> f64 {
        self.points.iter().map(|p| p.concavity).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Virial functional along a stored real trajectory, with `α = (p − 1)/4`.
pub fn virial_series(traj: &Trajectory) -> Result<VirialSeries, DynamicsError> {
    let n = traj.states.len();
    if n < 3 || n != traj.times.len() {
        return Err(DynamicsError::VirialSamples);
    }
    let h = traj.times[1] - traj.times[0];
    let uniform = traj.times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    if !uniform {
        return Err(DynamicsError::VirialSamples);
    }
    let imag = traj.states.iter().map(|s| s.u.max_imag().max(s.v.max_imag())).fold(0.0, f64::max);
    let scale = traj.states.iter().map(|s| s.x_norm()).fold(0.0, f64::max).max(1.0);
    if imag > 1e-9 * scale {
        return Err(DynamicsError::RealDataRequired(imag));
    }
    let p = traj.config.p;
    let mu = traj.config.coupling.sign();
    let alpha = (p - 1.0) / 4.0;
    let mut points = Vec::with_capacity(n);
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        let u: Vec<f64> = s.u.values().iter().map(|z| z.re).collect();
        let v: Vec<f64> = s.v.values().iter().map(|z| z.re).collect();
        let lap = laplacian(&s.u)?;
        let sum = |it: &mut dyn Iterator<Item = f64>| it.collect::<CompensatedSum>().value();
        let f = sum(&mut u.iter().map(|x| x * x));
        let uv = sum(&mut u.iter().zip(&v).map(|(a, b)| a * b));
        let vv = sum(&mut v.iter().map(|x| x * x));
        let accel = sum(&mut u
            .iter()
            .zip(lap.values())
            .map(|(&a, l)| a * (l.re + mu * power_nonlinearity(Complex64::new(a, 0.0), p).re)));
        let potential = power_sum(s.u.values(), p + 1.0);
        let grad = s.u.gradient_energy();
        let ddf = 2.0 * (accel + vv);
        let df = 2.0 * uv;
        let concavity = if f > 0.0 { -alpha * f.powf(-alpha - 2.0) * (ddf * f - (alpha + 1.0) * df * df) } else { 0.0 };
        points.push(VirialPoint {
            t,
            f,
            df,
            ddf,
            ddf_fd: None,
            h: potential - grad - (2.0 * alpha + 1.0) * vv,
            concavity,
            cauchy_schwarz_gap: f * vv - uv * uv,
        });
    }
    for j in 1..n - 1 {
        points[j].ddf_fd = Some((points[j + 1].f - 2.0 * points[j].f + points[j - 1].f) / (h * h));
    }
    Ok(VirialSeries { alpha, points })
}

/// Focusing initial data with negative energy.
#[derive(Debug, Clone)]
pub struct BlowupData {
    pub state: StatePair,
    pub amplitude: f64,
    /// `½Σ|∇f|² − (1/(p+1))Σ|f|^{p+1}`.
    pub energy: f64,
    /// Same with weight `2/(p+1)` on the potential term.
    pub energy_double_weight: f64,
    /// `Σ f g`.
    pub fg: f64,
}

/// `f = A·1_{|x|_∞ ≤ radius}`, `g = 0`, with `A` doubled from `amplitude`
/// until the energy drops below `−margin`.
pub fn build_blowup_data(
    shape: Shape,
    p: f64,
    amplitude: f64,
    radius: usize,
    margin: f64,
) -> Result<BlowupData, DynamicsError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(DynamicsError::BadPower(p));
    }
    let r = radius as i64;
    let indicator = LatticeField::from_real_fn(shape, |x| if x.iter().all(|c| c.abs() <= r) { 1.0 } else { 0.0 })?;
    let grad = indicator.gradient_energy();
    let count = indicator.values().iter().filter(|z| z.re != 0.0).count() as f64;
    let energy_at = |a: f64, w: f64| 0.5 * a * a * grad - w / (p + 1.0) * a.powf(p + 1.0) * count;
    let max_amplitude = amplitude.max(1e-3) * 2f64.powi(40);
    let mut a = amplitude.max(1e-3);
    while energy_at(a, 1.0) > -margin {
        a *= 2.0;
        if a > max_amplitude || !energy_at(a, 1.0).is_finite() {
            return Err(DynamicsError::AmplitudeSearchFailed { max_amplitude, margin });
        }
    }
    let u = indicator.scaled(Complex64::new(a, 0.0));
    let v = LatticeField::zeros(shape);
    let fg = u.inner(&v)?.re;
    let state = StatePair::new(u, v)?;
    let energy = nonlinear_energy(&state, p, Coupling::Focusing);
    Ok(BlowupData { energy_double_weight: energy_at(a, 2.0), state, amplitude: a, energy, fg })
}
