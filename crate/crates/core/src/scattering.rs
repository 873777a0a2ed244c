//! Strichartz norms, wave operators and asymptotic states.
//!
//! Asymptotic states are free profiles `U_0(−t)ũ(t)` read off at the end of
//! a finite window. The wave operator starts from `ũ(−T) = U_0(−T)F_−`, so
//! the ideal datum at `t = −∞` is replaced by a truncation whose error is
//! monitored by doubling `T`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{nonlinear_energy, Coupling, DynamicsError, SplitStepper, Trajectory};
use crate::lattice::{lp_norm, Exponent, LatticeError, LatticeField, Shape, StatePair};
use crate::propagator::{wraparound_risk, LinearFlow, PropagatorError};
use crate::spectral::{apply_multiplier, MultiplierSpec, SpectralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatterError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("time exponent q must be at least 1, got {0}")]
    BadTimeExponent(f64),
    #[error("space exponent r must be at least 1, got {0}")]
    BadSpaceExponent(f64),
    #[error("trajectory holds no stored states")]
    NoStates,
    #[error("window T must be positive and finite, got {0}")]
    BadWindow(f64),
    #[error("blow-up during evolution between t = {last_finite} and t = {first_overflow}")]
    BlowUp { last_finite: f64, first_overflow: f64 },
    #[error("focusing data fails the smallness gate: {norm} >= delta = {delta}")]
    NotSmall { norm: f64, delta: f64 },
}

/// Spatial regularity of a Strichartz norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevLevel {
    /// `ℓ^r`.
    Zero,
    /// `Ẇ^{1,r}`, i.e. `‖F^{-1}(ω F u)‖_{ℓ^r}`.
    One,
}

fn spatial_norm(f: &LatticeField, r: f64, level: SobolevLevel) -> Result<f64, ScatterError> {
    let exponent = Exponent::new(r)?;
    match level {
        SobolevLevel::Zero => Ok(lp_norm(f, exponent)?),
        SobolevLevel::One => Ok(lp_norm(&apply_multiplier(f, MultiplierSpec::OmegaPower { s: 1.0 })?, exponent)?),
    }
}

fn time_norm(times: &[f64], values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().copied().fold(0.0, f64::max);
    }
    let integral: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]).abs() * (v[0].powf(q) + v[1].powf(q)))
        .sum();
    integral.powf(1.0 / q)
}

fn check_exponents(q: f64, r: f64) -> Result<(), ScatterError> {
    if q.is_nan() || q < 1.0 {
        return Err(ScatterError::BadTimeExponent(q));
    }
    if r.is_nan() || r < 1.0 {
        return Err(ScatterError::BadSpaceExponent(r));
    }
    Ok(())
}

/// `L_t^q X_x^r` norm of the displacement over the stored samples, by the
/// trapezoid rule in time.
pub fn strichartz_norm(traj: &Trajectory, q: f64, r: f64, level: SobolevLevel) -> Result<f64, ScatterError> {
    check_exponents(q, r)?;
    if traj.states.is_empty() {
        return Err(ScatterError::NoStates);
    }
    let values = traj.states.iter().map(|s| spatial_norm(&s.u, r, level)).collect::<Result<Vec<_>, _>>()?;
    Ok(time_norm(&traj.times, &values, q))
}

/// Level-one norm of the displacement plus level-zero norm of the velocity.
pub fn state_strichartz_norm(traj: &Trajectory, q: f64, r: f64) -> Result<f64, ScatterError> {
    check_exponents(q, r)?;
    if traj.states.is_empty() {
        return Err(ScatterError::NoStates);
    }
    let v_values =
        traj.states.iter().map(|s| spatial_norm(&s.v, r, SobolevLevel::Zero)).collect::<Result<Vec<_>, _>>()?;
    Ok(strichartz_norm(traj, q, r, SobolevLevel::One)? + time_norm(&traj.times, &v_values, q))
}

/// Run parameters shared by the wave operator and the completeness check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterConfig {
    pub p: f64,
    pub coupling: Coupling,
    pub dt: f64,
    /// Residual samples on the outer half window.
    pub residual_samples: usize,
    /// Energy samples over the whole run.
    pub energy_samples: usize,
    /// Relative tolerance on `‖F_+(T) − F_+(2T)‖_X`.
    pub cauchy_tol: f64,
    /// Relative tolerance on `|‖F_+‖²_X − ‖F_−‖²_X|`.
    pub energy_tol: f64,
    /// Smallness gate for focusing data.
    pub delta: f64,
    /// Also run with window `2T` and compare.
    pub cauchy_check: bool,
}

impl ScatterConfig {
    pub fn new(p: f64, coupling: Coupling, dt: f64) -> Self {
        Self {
            p,
            coupling,
            dt,
            residual_samples: 16,
            energy_samples: 32,
            cauchy_tol: 1e-3,
            energy_tol: 1e-3,
            delta: 0.5,
            cauchy_check: true,
        }
    }
}

/// Result of one evolution between two times.
struct ProfileRun {
    final_profile: (Vec<Complex64>, Vec<Complex64>),
    residual_profiles: Vec<(f64, (Vec<Complex64>, Vec<Complex64>))>,
    energies: Vec<(f64, f64)>,
    stepper: SplitStepper,
}

fn run_profiles(init: &StatePair, t0: f64, t1: f64, cfg: &ScatterConfig) -> Result<ProfileRun, ScatterError> {
    let mut stepper = SplitStepper::new_at(init, t0, cfg.p, cfg.coupling)?;
    let span = t1 - t0;
    let steps = (span.abs() / cfg.dt).round().max(1.0) as usize;
    let dt = span / steps as f64;
    let half = steps / 2;
    let res_every = ((steps - half) / cfg.residual_samples.max(1)).max(1);
    let energy_every = (steps / cfg.energy_samples.max(1)).max(1);
    let mut residual_profiles = Vec::new();
    let mut energies = vec![(t0, nonlinear_energy(init, cfg.p, cfg.coupling))];
    for k in 1..=steps {
        let before = stepper.time();
        if stepper.step(dt).is_err() {
            return Err(ScatterError::BlowUp { last_finite: before, first_overflow: before + dt });
        }
        if k >= half && ((k - half) % res_every == 0 || k == steps) {
            residual_profiles.push((stepper.time(), stepper.profile_hat()));
        }
        if k % energy_every == 0 || k == steps {
            energies.push((stepper.time(), nonlinear_energy(&stepper.state(), cfg.p, cfg.coupling)));
        }
    }
    Ok(ProfileRun { final_profile: stepper.profile_hat(), residual_profiles, energies, stepper })
}

fn to_state(flow: &LinearFlow, hat: &(Vec<Complex64>, Vec<Complex64>)) -> StatePair {
    let shape = flow.shape();
    let mut u = hat.0.clone();
    let mut v = hat.1.clone();
    flow.inverse(&mut u);
    flow.inverse(&mut v);
    StatePair { u: LatticeField::from_values_unchecked(shape, u), v: LatticeField::from_values_unchecked(shape, v) }
}

/// Comparison of asymptotic states from windows `T` and `2T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyCheck {
    pub window: f64,
    pub difference: f64,
    pub relative: f64,
    pub passed: bool,
}

/// Outcome of a wave-operator run.
#[derive(Debug, Clone)]
pub struct ScatterReport {
    pub window: f64,
    pub f_minus: StatePair,
    pub f_plus: StatePair,
    /// `(t, ‖U_0(−t)ũ(t) − F_+‖_X)` on `[T/2, T]`.
    pub residuals: Vec<(f64, f64)>,
    pub norm_minus_sqr: f64,
    pub norm_plus_sqr: f64,
    /// `(t, E(t))` along the run.
    pub energies: Vec<(f64, f64)>,
    /// `|‖F_+‖²_X − ‖F_−‖²_X| / ‖F_−‖²_X`.
    pub energy_gap: f64,
    pub energy_ok: bool,
    pub residual_nonincreasing: bool,
    pub cauchy: Option<CauchyCheck>,
    /// Box narrower than `2T` plus margin: waves wrap around the torus.
    pub wraparound_warning: bool,
}

impl ScatterReport {
    pub fn converged(&self) -> bool {
        self.energy_ok && self.residual_nonincreasing && self.cauchy.is_none_or(|c| c.passed)
    }

    pub fn summary(&self) -> ScatterSummary {
        ScatterSummary {
            window: self.window,
            norm_minus: self.norm_minus_sqr.sqrt(),
            norm_plus: self.norm_plus_sqr.sqrt(),
            energy_gap: self.energy_gap,
            energy_ok: self.energy_ok,
            residual_nonincreasing: self.residual_nonincreasing,
            cauchy: self.cauchy,
            converged: self.converged(),
            wraparound_warning: self.wraparound_warning,
            residuals: self.residuals.clone(),
            energies: self.energies.clone(),
        }
    }

    /// CSV with columns `t,residual`.
    pub fn residuals_csv(&self) -> String {
        residual_csv(&self.residuals)
    }
}

fn residual_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("t,residual\n");
    for (t, r) in rows {
        out.push_str(&format!("{t:.16e},{r:.16e}\n"));
    }
    out
}

/// Serializable part of a report, without the states.
#[derive(Debug, Clone, Serialize)]
pub struct ScatterSummary {
    pub window: f64,
    pub norm_minus: f64,
    pub norm_plus: f64,
    pub energy_gap: f64,
    pub energy_ok: bool,
    pub residual_nonincreasing: bool,
    pub cauchy: Option<CauchyCheck>,
    pub converged: bool,
    pub wraparound_warning: bool,
    pub residuals: Vec<(f64, f64)>,
    pub energies: Vec<(f64, f64)>,
}

fn residual_series(run: &ProfileRun) -> Vec<(f64, f64)> {
    run.residual_profiles.iter().map(|(t, hat)| (*t, run.stepper.x_distance_hat(hat, &run.final_profile))).collect()
}

fn nonincreasing(series: &[(f64, f64)], tol: f64) -> bool {
    series.windows(2).all(|w| w[1].1 <= w[0].1 + tol)
}

fn forward_once(
    f_minus: &StatePair,
    window: f64,
    cfg: &ScatterConfig,
) -> Result<(ProfileRun, StatePair), ScatterError> {
    let flow = LinearFlow::new(f_minus.shape());
    let start = flow.solve(f_minus, -window)?;
    let run = run_profiles(&start, -window, window, cfg)?;
    let f_plus = to_state(&flow, &run.final_profile);
    Ok((run, f_plus))
}

/// Approximates `F_+ = S F_−` by evolving from `−T` to `T`.
pub fn wave_operator_forward(
    f_minus: &StatePair,
    window: f64,
    cfg: &ScatterConfig,
) -> Result<ScatterReport, ScatterError> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(ScatterError::BadWindow(window));
    }
    f_minus.u.validate()?;
    f_minus.v.validate()?;
    let (run, f_plus) = forward_once(f_minus, window, cfg)?;
    let norm_minus_sqr = f_minus.x_norm_sqr();
    let norm_plus_sqr = f_plus.x_norm_sqr();
    let scale = norm_minus_sqr.max(f64::MIN_POSITIVE);
    let energy_gap = (norm_plus_sqr - norm_minus_sqr).abs() / scale;
    let residuals = residual_series(&run);
    let cauchy = if cfg.cauchy_check {
        let (_, wide) = forward_once(f_minus, 2.0 * window, cfg)?;
        let difference = wide.difference(&f_plus)?.x_norm();
        let relative = difference / norm_minus_sqr.sqrt().max(f64::MIN_POSITIVE);
        Some(CauchyCheck { window: 2.0 * window, difference, relative, passed: relative < cfg.cauchy_tol })
    } else {
        None
    };
    let tol = 1e-10 * norm_minus_sqr.sqrt();
    Ok(ScatterReport {
        window,
        residual_nonincreasing: nonincreasing(&residuals, tol),
        residuals,
        energy_ok: energy_gap <= cfg.energy_tol,
        energy_gap,
        energies: run.energies,
        norm_minus_sqr,
        norm_plus_sqr,
        f_minus: f_minus.clone(),
        f_plus,
        cauchy,
        wraparound_warning: wraparound_risk(f_minus.shape().half_width(), 2.0 * window),
    })
}

/// Smallness of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallnessGate {
    pub x_norm: f64,
    /// `‖f‖_{ℓ²} + ‖g‖_{ℓ^{2d/(d+2)}}`.
    pub auxiliary_norm: f64,
    pub delta: f64,
    pub small: bool,
}

pub fn smallness_gate(state: &StatePair, delta: f64) -> Result<SmallnessGate, ScatterError> {
    let d = state.shape().dim() as f64;
    let x_norm = state.x_norm();
    let auxiliary_norm =
        lp_norm(&state.u, Exponent::Finite(2.0))? + lp_norm(&state.v, Exponent::Finite(2.0 * d / (d + 2.0)))?;
    Ok(SmallnessGate { x_norm, auxiliary_norm, delta, small: x_norm < delta && auxiliary_norm < delta })
}

/// Both asymptotic states of a solution through `F_0` at `t = 0`.
#[derive(Debug, Clone)]
pub struct CompletenessReport {
    pub window: f64,
    pub gate: SmallnessGate,
    pub f_zero: StatePair,
    pub f_plus: StatePair,
    pub f_minus: StatePair,
    /// Residuals on `[T/2, T]` and on `[−T, −T/2]`.
    pub residuals_plus: Vec<(f64, f64)>,
    pub residuals_minus: Vec<(f64, f64)>,
    pub energies: Vec<(f64, f64)>,
    pub wraparound_warning: bool,
}

impl CompletenessReport {
    /// Residual at `|t| = T/2`, the first point of each outer half window.
    pub fn half_window_residuals(&self) -> (f64, f64) {
        let first = |s: &[(f64, f64)]| s.first().map_or(0.0, |r| r.1);
        (first(&self.residuals_plus), first(&self.residuals_minus))
    }

    pub fn summary(&self) -> CompletenessSummary {
        let (plus, minus) = self.half_window_residuals();
        CompletenessSummary {
            window: self.window,
            gate: self.gate,
            norm_zero: self.f_zero.x_norm(),
            norm_plus: self.f_plus.x_norm(),
            norm_minus: self.f_minus.x_norm(),
            half_window_residual_plus: plus,
            half_window_residual_minus: minus,
            scattering_map_change: self.f_plus.difference(&self.f_minus).map(|d| d.x_norm()).unwrap_or(f64::NAN),
            wraparound_warning: self.wraparound_warning,
            residuals_plus: self.residuals_plus.clone(),
            residuals_minus: self.residuals_minus.clone(),
        }
    }

    pub fn residuals_csv(&self) -> String {
        let mut rows = self.residuals_minus.clone();
        rows.extend_from_slice(&self.residuals_plus);
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        residual_csv(&rows)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletenessSummary {
    pub window: f64,
    pub gate: SmallnessGate,
    pub norm_zero: f64,
    pub norm_plus: f64,
    pub norm_minus: f64,
    pub half_window_residual_plus: f64,
    pub half_window_residual_minus: f64,
    /// `‖F_+ − F_−‖_X`, the action of the scattering map on this datum.
    pub scattering_map_change: f64,
    pub wraparound_warning: bool,
    pub residuals_plus: Vec<(f64, f64)>,
    pub residuals_minus: Vec<(f64, f64)>,
}

/// Evolves `F_0` to `±T` and extracts `F_±`. Focusing data must pass the
/// smallness gate; defocusing and free data only record it.
pub fn asymptotic_completeness(
    f_zero: &StatePair,
    window: f64,
    cfg: &ScatterConfig,
) -> Result<CompletenessReport, ScatterError> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(ScatterError::BadWindow(window));
    }
    f_zero.u.validate()?;
    f_zero.v.validate()?;
    let gate = smallness_gate(f_zero, cfg.delta)?;
    if cfg.coupling == Coupling::Focusing && !gate.small {
        return Err(ScatterError::NotSmall { norm: gate.x_norm.max(gate.auxiliary_norm), delta: cfg.delta });
    }
    let flow = LinearFlow::new(f_zero.shape());
    let fwd = run_profiles(f_zero, 0.0, window, cfg)?;
    let bwd = run_profiles(f_zero, 0.0, -window, cfg)?;
    let mut energies = bwd.energies.clone();
    energies.extend_from_slice(&fwd.energies[1..]);
    energies.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(CompletenessReport {
        window,
        gate,
        f_zero: f_zero.clone(),
        f_plus: to_state(&flow, &fwd.final_profile),
        f_minus: to_state(&flow, &bwd.final_profile),
        residuals_plus: residual_series(&fwd),
        residuals_minus: residual_series(&bwd),
        energies,
        wraparound_warning: wraparound_risk(f_zero.shape().half_width(), window),
    })
}

/// `A·exp(−|x|²/w²)` displacement with zero velocity.
pub fn gaussian_bump(shape: Shape, amplitude: f64, width: f64) -> Result<StatePair, ScatterError> {
    let u = LatticeField::from_real_fn(shape, |x| {
        let r2: f64 = x.iter().map(|&c| (c * c) as f64).sum();
        amplitude * (-r2 / (width * width)).exp()
    })?;
    Ok(StatePair::new(u, LatticeField::zeros(shape))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, EvolutionConfig};

    fn bump(dim: usize, n: usize, amp: f64) -> StatePair {
        gaussian_bump(Shape::new(dim, n).unwrap(), amp, 1.5).unwrap()
    }

    #[test]
    fn zero_trajectory_has_zero_norm() {
        let shape = Shape::new(2, 8).unwrap();
        let traj =
            evolve(&StatePair::zeros(shape), &EvolutionConfig::new(3.0, Coupling::Free, 0.1, 1.0).unwrap()).unwrap();
        assert_eq!(strichartz_norm(&traj, 4.0, 4.0, SobolevLevel::Zero).unwrap(), 0.0);
        assert_eq!(state_strichartz_norm(&traj, 4.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn infinite_time_exponent_is_sample_max() {
        let init = bump(2, 12, 1.0);
        let traj = evolve(&init, &EvolutionConfig::new(3.0, Coupling::Free, 0.1, 3.0).unwrap()).unwrap();
        let direct = traj.states.iter().map(|s| lp_norm(&s.u, Exponent::Finite(4.0)).unwrap()).fold(0.0, f64::max);
        assert_eq!(strichartz_norm(&traj, f64::INFINITY, 4.0, SobolevLevel::Zero).unwrap(), direct);
    }

    #[test]
    fn strichartz_norm_grows_with_window() {
        let init = bump(2, 16, 1.0);
        let short = evolve(&init, &EvolutionConfig::new(3.0, Coupling::Free, 0.1, 4.0).unwrap()).unwrap();
        let long = evolve(&init, &EvolutionConfig::new(3.0, Coupling::Free, 0.1, 8.0).unwrap()).unwrap();
        let a = strichartz_norm(&short, 4.0, 4.0, SobolevLevel::One).unwrap();
        let b = strichartz_norm(&long, 4.0, 4.0, SobolevLevel::One).unwrap();
        assert!(b >= a);
    }

    #[test]
    fn linear_strichartz_norm_is_stable_under_step_halving() {
        let init = bump(3, 16, 1.0);
        let norm = |dt: f64| {
            let traj = evolve(&init, &EvolutionConfig::new(3.0, Coupling::Free, dt, 10.0).unwrap()).unwrap();
            strichartz_norm(&traj, 4.0, 4.0, SobolevLevel::Zero).unwrap()
        };
        let (a, b) = (norm(0.2), norm(0.1));
        assert!(((a - b) / b).abs() < 0.01, "{a} vs {b}");
    }

    #[test]
    fn bad_exponents_rejected() {
        let traj = evolve(&bump(1, 8, 1.0), &EvolutionConfig::new(3.0, Coupling::Free, 0.1, 1.0).unwrap()).unwrap();
        assert!(matches!(strichartz_norm(&traj, 0.5, 2.0, SobolevLevel::Zero), Err(ScatterError::BadTimeExponent(_))));
        assert!(matches!(strichartz_norm(&traj, 2.0, 0.5, SobolevLevel::Zero), Err(ScatterError::BadSpaceExponent(_))));
    }

    #[test]
    fn free_wave_operator_is_identity() {
        let f = bump(2, 16, 1.0);
        let cfg = ScatterConfig::new(5.0, Coupling::Free, 0.1);
        let report = wave_operator_forward(&f, 10.0, &cfg).unwrap();
        assert!(report.f_plus.difference(&f).unwrap().x_norm() < 1e-11);
        assert!(report.residuals.iter().all(|r| r.1 < 1e-11));
        assert!(report.converged());
    }

    #[test]
    fn completeness_trivial_cases() {
        let shape = Shape::new(2, 8).unwrap();
        let cfg = ScatterConfig::new(5.0, Coupling::Defocusing, 0.1);
        let report = asymptotic_completeness(&StatePair::zeros(shape), 5.0, &cfg).unwrap();
        assert_eq!(report.f_plus.x_norm(), 0.0);
        assert_eq!(report.f_minus.x_norm(), 0.0);
        let f = bump(2, 8, 1.0);
        let free = asymptotic_completeness(&f, 5.0, &ScatterConfig::new(5.0, Coupling::Free, 0.1)).unwrap();
        assert!(free.f_plus.difference(&f).unwrap().x_norm() < 1e-11);
        assert!(free.f_minus.difference(&f).unwrap().x_norm() < 1e-11);
    }

    #[test]
    fn focusing_large_data_is_gated() {
        let f = bump(2, 8, 10.0);
        let cfg = ScatterConfig::new(5.0, Coupling::Focusing, 0.1);
        assert!(matches!(asymptotic_completeness(&f, 5.0, &cfg), Err(ScatterError::NotSmall { .. })));
    }

    #[test]
    fn halving_delta_keeps_small_runs_stable() {
        for (amp, p) in [(0.1, 5.0), (0.05, 7.0), (0.2, 9.0)] {
            let f = bump(2, 12, amp);
            let mut cfg = ScatterConfig::new(p, Coupling::Focusing, 0.1);
            cfg.delta = 2.0;
            asymptotic_completeness(&f, 10.0, &cfg).unwrap();
            cfg.delta = 1.0;
            match asymptotic_completeness(&f, 10.0, &cfg) {
                Ok(_) | Err(ScatterError::NotSmall { .. }) => {}
                Err(e) => panic!("unexpected {e}"),
            }
        }
    }
}
