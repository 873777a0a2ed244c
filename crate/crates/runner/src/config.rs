//! TOML experiment configuration.
//!
//! Every section is optional; each experiment fills in its own defaults.
//! Unknown keys are rejected so typos surface as configuration errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::RunnerError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the experiment named on the command line when present.
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub phase: PhaseSection,
    #[serde(default)]
    pub newton: NewtonSection,
    #[serde(default)]
    pub plan: PlanSection,
    #[serde(default)]
    pub tolerance: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: Option<usize>,
    /// Fixed half-width `N`; kernel experiments pick `N` from `t` when absent.
    pub half_width: Option<usize>,
    /// Upper bound on the time-dependent half-width.
    pub cap: Option<usize>,
    /// Support radius of random or indicator data.
    pub radius: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub times: Option<Vec<f64>>,
    /// Dyadic sequence `start, 2 start, …, end` when `times` is absent.
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub dt: Option<f64>,
    pub span: Option<f64>,
    pub stride: Option<usize>,
    pub window: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub p: Option<f64>,
    pub coupling: Option<String>,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
    /// `random` or `bump`.
    pub initial: Option<String>,
    /// Energy margin for blow-up data.
    pub margin: Option<f64>,
    pub delta: Option<f64>,
    /// Kernel norm exponent; absent means the sup-norm.
    pub norm_exponent: Option<u32>,
    pub log_correction: Option<bool>,
    /// Also run the dt-halving order check.
    pub order_check: Option<bool>,
    /// Also run the defocusing twin of blow-up data.
    pub twin: Option<bool>,
    pub cauchy_check: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    pub points: Option<Vec<Vec<f64>>>,
    /// Number of random points per dimension when `points` is absent.
    pub samples: Option<usize>,
    /// Space range for the one-dimensional kernel table.
    pub x_max: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonSection {
    pub polynomial: Option<String>,
    /// Expected Newton distance as a rational string, e.g. `"4/3"`.
    pub expected_distance: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub variant: Option<String>,
    /// Rational string such as `"5"` or `"71/21"`.
    pub p: Option<String>,
    pub eps: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub slope_target: Option<f64>,
    pub slope_tol: Option<f64>,
    pub energy_tol: Option<f64>,
    pub cauchy_tol: Option<f64>,
    pub agreement_tol: Option<f64>,
    pub contraction_max: Option<f64>,
    pub concavity_tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub bessel_tol: Option<f64>,
    pub mismatch_tol: Option<f64>,
    pub floor: Option<f64>,
    pub spread: Option<f64>,
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, RunnerError> {
        toml::from_str(text).map_err(|e| RunnerError::Config { field: "<file>".into(), reason: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunnerError::Io { path: path.to_owned(), source })?;
        Self::parse(&text).map_err(|e| match e {
            RunnerError::Config { reason, .. } => RunnerError::Config { field: path.display().to_string(), reason },
            other => other,
        })
    }

    /// Range checks on fields shared by all experiments.
    pub fn validate(&self) -> Result<(), RunnerError> {
        if let Some(d) = self.grid.dim {
            check("grid.dim", (1..=5).contains(&d), "must be in 1..=5")?;
        }
        if let Some(n) = self.grid.half_width {
            check("grid.half_width", (1..=512).contains(&n), "must be in 1..=512")?;
        }
        if let Some(n) = self.grid.cap {
            check("grid.cap", n >= 1, "must be positive")?;
        }
        if let Some(times) = &self.time.times {
            let ok = !times.is_empty()
                && times.iter().all(|t| t.is_finite() && *t > 0.0)
                && times.windows(2).all(|w| w[0] < w[1]);
            check("time.times", ok, "must be positive and strictly increasing")?;
        }
        for (field, value) in [
            ("time.start", self.time.start),
            ("time.end", self.time.end),
            ("time.dt", self.time.dt),
            ("time.span", self.time.span),
            ("time.window", self.time.window),
            ("physics.amplitude", self.physics.amplitude),
            ("physics.width", self.physics.width),
            ("physics.delta", self.physics.delta),
        ] {
            if let Some(v) = value {
                check(field, v.is_finite() && v > 0.0, "must be positive and finite")?;
            }
        }
        if let Some(s) = self.time.stride {
            check("time.stride", s >= 1, "must be at least 1")?;
        }
        if let Some(p) = self.physics.p {
            check("physics.p", p.is_finite() && p > 1.0, "must be finite and greater than 1")?;
        }
        if let Some(m) = self.physics.margin {
            check("physics.margin", m.is_finite() && m >= 0.0, "must be nonnegative")?;
        }
        if let Some(k) = self.physics.norm_exponent {
            check("physics.norm_exponent", k >= 2, "must be at least 2")?;
        }
        if let Some(x) = self.phase.x_max {
            check("phase.x_max", (0..=10_000).contains(&x), "must be in 0..=10000")?;
        }
        Ok(())
    }
}

pub fn check(field: &str, ok: bool, reason: &str) -> Result<(), RunnerError> {
    if ok {
        Ok(())
    } else {
        Err(RunnerError::Config { field: field.into(), reason: reason.into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = ExperimentConfig::parse(
            "experiment = \"decay\"\nseed = 3\n[grid]\ndim = 2\n[time]\nstart = 20.0\nend = 80.0\n[tolerance]\nslope_tol = 0.1\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment.as_deref(), Some("decay"));
        assert_eq!(cfg.grid.dim, Some(2));
        assert_eq!(cfg.time.end, Some(80.0));
        assert_eq!(cfg.tolerance.slope_tol, Some(0.1));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ExperimentConfig::parse("[grid]\ndimension = 2\n").unwrap_err();
        assert!(err.to_string().contains("dimension"), "{err}");
    }

    #[test]
    fn range_error_names_field() {
        let cfg = ExperimentConfig::parse("[grid]\ndim = 7\n").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("grid.dim"), "{err}");
        let cfg = ExperimentConfig::parse("[time]\ntimes = [4.0, 2.0]\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("time.times"));
    }
}
