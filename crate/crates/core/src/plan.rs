//! Exact exponent bookkeeping for the small-data scattering arguments.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("dimension {0} outside 2..=5")]
    BadDimension(u32),
    #[error("the embedded plan needs dimension at least 3, got {0}")]
    NeedsDimensionThree(u32),
    #[error("eps = {0} outside (0, 1/100]")]
    BadEps(BigRational),
    #[error("p = {p} below the threshold {threshold} (sigma = {sigma}, beta = {beta})")]
    BelowThreshold { p: BigRational, threshold: BigRational, sigma: String, beta: BigRational },
    #[error("plan check {0:?} failed")]
    CheckFailed(String),
    #[error("unknown plan variant {0:?}")]
    UnknownVariant(String),
}

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Default weakening for the strict decay exponents in dimensions 2 and 4.
pub fn default_eps() -> BigRational {
    r(1, 1000)
}

/// Uniform decay exponent of the Green kernel, weakened by `eps` where the
/// sharp rate carries a logarithm or is not attained.
pub fn beta_d(dim: u32, eps: &BigRational) -> Result<BigRational, PlanError> {
    if !eps.is_positive() || *eps > r(1, 100) {
        return Err(PlanError::BadEps(eps.clone()));
    }
    match dim {
        2 => Ok(r(3, 4) - eps),
        3 => Ok(r(7, 6)),
        4 => Ok(r(3, 2) - eps),
        5 => Ok(r(11, 6)),
        d => Err(PlanError::BadDimension(d)),
    }
}

/// Larger root of `β p² − (3β + 1) p − 1 = 0`, i.e. of `β = (p + 1)/(p(p − 3))`.
pub fn p_d(dim: u32, eps: &BigRational) -> Result<f64, PlanError> {
    let b = to_f64(&beta_d(dim, eps)?);
    let c = 3.0 * b + 1.0;
    Ok((c + (c * c + 4.0 * b).sqrt()) / (2.0 * b))
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Admissibility in reciprocal form: `1/q, 1/r ∈ [0, 1/2]`,
/// `1/q + σ/r ≤ σ/2`, excluding `(q, r, σ) = (2, ∞, 1)`.
pub fn is_admissible_recip(inv_q: &BigRational, inv_r: &BigRational, sigma: &BigRational) -> bool {
    let half = r(1, 2);
    if inv_q.is_negative() || inv_r.is_negative() || *inv_q > half || *inv_r > half {
        return false;
    }
    if *inv_q == half && inv_r.is_zero() && sigma.is_one() {
        return false;
    }
    inv_q + sigma * inv_r <= sigma * &half
}

/// Floating admissibility; `q` or `r` may be infinite, values below 2 are rejected.
pub fn is_admissible(q: f64, r: f64, sigma: f64) -> bool {
    if q.is_nan() || r.is_nan() || q < 2.0 || r < 2.0 || sigma <= 0.0 {
        return false;
    }
    if q == 2.0 && r.is_infinite() && sigma == 1.0 {
        return false;
    }
    1.0 / q + sigma / r <= sigma / 2.0 + 1e-14
}

/// Which exponent scheme to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanVariant {
    /// Plain `ℓ^r` spaces, any dimension.
    Direct,
    /// Derivative spaces combined with the Sobolev embedding, dimension ≥ 3.
    Embedded,
}

impl FromStr for PlanVariant {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(PlanVariant::Direct),
            "embedded" => Ok(PlanVariant::Embedded),
            other => Err(PlanError::UnknownVariant(other.to_string())),
        }
    }
}

impl fmt::Display for PlanVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanVariant::Direct => "direct",
            PlanVariant::Embedded => "embedded",
        })
    }
}

/// Smallest admissible `p` for the variant.
pub fn threshold(variant: PlanVariant, dim: u32, beta: &BigRational) -> BigRational {
    let d = r(dim as i64, 1);
    match variant {
        PlanVariant::Direct => BigRational::one() + r(2, 1) / beta + r(2, 1) / &d,
        PlanVariant::Embedded => &d * (beta + r(2, 1)) / (beta * (&d - r(2, 1))),
    }
}

/// Dispersion exponent demanded by `p`; `None` where the defining
/// denominator is not positive.
pub fn sigma(variant: PlanVariant, dim: u32, p: &BigRational) -> Option<BigRational> {
    let d = r(dim as i64, 1);
    let den = match variant {
        PlanVariant::Direct => (p - BigRational::one() - r(2, 1) / &d) / r(2, 1),
        PlanVariant::Embedded => p * (r(1, 2) - d.recip()) - r(1, 2),
    };
    den.is_positive().then(|| den.recip())
}

/// One verified relation of a plan.
#[derive(Debug, Clone, Serialize)]
pub struct PlanCheck {
    pub name: String,
    pub holds: bool,
}

/// Reciprocals `1/q_i`, `1/r_i` for `i = 1..5` with the derived quantities.
#[derive(Debug, Clone)]
pub struct ExponentPlan {
    pub variant: PlanVariant,
    pub dim: u32,
    pub p: BigRational,
    pub eps: BigRational,
    pub beta: BigRational,
    pub sigma: BigRational,
    pub threshold: BigRational,
    pub inv_q: [BigRational; 5],
    pub inv_r: [BigRational; 5],
    pub checks: Vec<PlanCheck>,
}

impl ExponentPlan {
    /// Reciprocal pairs required to be admissible, in the order 1, 2, 3, 5, dual.
    pub fn designated_pairs(&self) -> [(BigRational, BigRational); 5] {
        let d_inv = r(1, self.dim as i64);
        let one = BigRational::one();
        let dual_q = (&one - &self.inv_q[1]) / &self.p;
        let dual_r_base = (&one - &self.inv_r[1]) / &self.p;
        let [q1, q2, q3, _, q5] = self.inv_q.clone();
        let [r1, r2, r3, _, r5] = self.inv_r.clone();
        match self.variant {
            PlanVariant::Direct => {
                [(q1, r1), (q2, r2), (q3, r3), (q5, r5), (dual_q, (&one - &self.inv_r[1] + &d_inv) / &self.p)]
            }
            PlanVariant::Embedded => [(q1, r1), (q2, r2), (q3, r3), (q5, r5 + &d_inv), (dual_q, dual_r_base + &d_inv)],
        }
    }

    pub fn all_checks_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    fn run_checks(&self) -> Vec<PlanCheck> {
        let one = BigRational::one();
        let d_inv = r(1, self.dim as i64);
        let pm1 = &self.p - &one;
        let (q, rr) = (&self.inv_q, &self.inv_r);
        let mut checks = Vec::new();
        let mut push = |name: &str, holds: bool| checks.push(PlanCheck { name: name.to_string(), holds });
        push("q4 + q5 = 1 - q3", &q[3] + &q[4] == &one - &q[2]);
        match self.variant {
            PlanVariant::Direct => {
                push("r4 + r5 = 1 - r3 + 1/d", &rr[3] + &rr[4] == &one - &rr[2] + &d_inv);
                push("q1 = (p-1) q4", q[3] == &q[0] * &pm1);
                push("r1 = (p-1) r4", rr[3] == &rr[0] * &pm1);
            }
            PlanVariant::Embedded => {
                push("r4 + r5 = 1 - r3", &rr[3] + &rr[4] == &one - &rr[2]);
                push("1/q4 = (p-1)/q1", q[3] == &pm1 * &q[0]);
                push("1/r4 + (p-1)/d = (p-1)/r1", &rr[3] + &pm1 * &d_inv == &pm1 * &rr[0]);
            }
        }
        let positive = q.iter().chain(rr.iter()).all(|x| x.is_positive());
        push("all exponents finite and positive", positive);
        for (i, (a, b)) in self.designated_pairs().iter().enumerate() {
            push(&format!("pair {} admissible", i + 1), is_admissible_recip(a, b, &self.beta));
        }
        push("beta >= sigma", self.beta >= self.sigma);
        checks
    }

    pub fn record(&self) -> PlanRecord {
        let s = |x: &BigRational| x.to_string();
        PlanRecord {
            variant: self.variant,
            dim: self.dim,
            p: s(&self.p),
            eps: s(&self.eps),
            beta: s(&self.beta),
            sigma: s(&self.sigma),
            threshold: s(&self.threshold),
            inv_q: self.inv_q.iter().map(s).collect(),
            inv_r: self.inv_r.iter().map(s).collect(),
            designated_pairs: self.designated_pairs().iter().map(|(a, b)| (s(a), s(b))).collect(),
            checks: self.checks.clone(),
        }
    }
}

/// Serializable plan with rationals as strings.
#[derive(Debug, Clone, Serialize)]
pub struct PlanRecord {
    pub variant: PlanVariant,
    pub dim: u32,
    pub p: String,
    pub eps: String,
    pub beta: String,
    pub sigma: String,
    pub threshold: String,
    pub inv_q: Vec<String>,
    pub inv_r: Vec<String>,
    pub designated_pairs: Vec<(String, String)>,
    pub checks: Vec<PlanCheck>,
}

/// Builds and verifies the plan; fails below threshold or if any relation breaks.
pub fn exponent_plan(
    variant: PlanVariant,
    dim: u32,
    p: &BigRational,
    eps: &BigRational,
) -> Result<ExponentPlan, PlanError> {
    let beta = beta_d(dim, eps)?;
    if variant == PlanVariant::Embedded && dim < 3 {
        return Err(PlanError::NeedsDimensionThree(dim));
    }
    let threshold = threshold(variant, dim, &beta);
    let sig = sigma(variant, dim, p);
    if *p < threshold {
        return Err(PlanError::BelowThreshold {
            p: p.clone(),
            threshold,
            sigma: sig.map_or_else(|| "undefined".to_string(), |s| s.to_string()),
            beta,
        });
    }
    let sigma = sig.expect("sigma is defined above the threshold");
    let one = BigRational::one();
    let half = r(1, 2);
    let d_inv = r(1, dim as i64);
    let pm1 = p - &one;
    let q2 = &beta / (r(2, 1) * (&beta + &one));
    let (inv_q, inv_r) = match variant {
        PlanVariant::Direct => {
            let q4 = &one - &sigma / r(2, 1);
            let q1 = &q4 / &pm1;
            let r1 = &half - &q4 / (&pm1 * &sigma);
            let q3 = &sigma / r(4, 1);
            ([q1, q2.clone(), q3.clone(), q4, q3], [r1, q2, r(1, 4), &half + &d_inv, r(1, 4)])
        }
        PlanVariant::Embedded => {
            let q1 = &sigma * (&half - &d_inv - (&pm1 * r(2, 1)).recip());
            let r1 = &d_inv + (&pm1 * r(2, 1)).recip();
            let q3 = &sigma / r(8, 1);
            let q5 = &sigma * (r(3, 8) - &d_inv);
            let q4 = &one - &sigma * (&half - &d_inv);
            ([q1, q2.clone(), q3, q4, q5], [r1, q2, r(3, 8), half, r(1, 8)])
        }
    };
    let mut plan = ExponentPlan {
        variant,
        dim,
        p: p.clone(),
        eps: eps.clone(),
        beta,
        sigma,
        threshold,
        inv_q,
        inv_r,
        checks: Vec::new(),
    };
    plan.checks = plan.run_checks();
    if let Some(bad) = plan.checks.iter().find(|c| !c.holds) {
        return Err(PlanError::CheckFailed(bad.name.clone()));
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps() -> BigRational {
        default_eps()
    }

    #[test]
    fn p_d_matches_quadratic_formula() {
        let p3 = (27.0 + 897f64.sqrt()) / 14.0;
        assert!((p_d(3, &eps()).unwrap() - p3).abs() < 1e-12);
        let p5 = (39.0 + 1785f64.sqrt()) / 22.0;
        assert!((p_d(5, &eps()).unwrap() - p5).abs() < 1e-12);
        for d in 2..=5 {
            let p = p_d(d, &eps()).unwrap();
            let b = to_f64(&beta_d(d, &eps()).unwrap());
            assert!(p > 3.0);
            assert!(((p + 1.0) / (p * (p - 3.0)) - b).abs() < 1e-12);
        }
        assert!((4.0679 - p3).abs() < 1e-4);
        assert!(p_d(6, &eps()).is_err());
    }

    #[test]
    fn admissibility_examples() {
        assert!(is_admissible(f64::INFINITY, 2.0, 0.3));
        assert!(!is_admissible(2.0, f64::INFINITY, 1.0));
        assert!(is_admissible_recip(&r(1, 4), &r(1, 4), &r(7, 6)));
        assert!(!is_admissible_recip(&r(1, 2), &BigRational::zero(), &BigRational::one()));
        assert!(!is_admissible(1.5, 4.0, 1.0));
        // 1/4 + (7/6)/4 = 13/24 against 14/24.
        assert!(is_admissible(4.0, 4.0, 7.0 / 6.0));
    }

    #[test]
    fn direct_plan_in_three_dimensions() {
        let plan = exponent_plan(PlanVariant::Direct, 3, &r(5, 1), &eps()).unwrap();
        assert_eq!(plan.sigma, r(3, 5));
        assert_eq!(plan.inv_q[3], r(7, 10));
        assert_eq!(plan.inv_q[0].recip(), r(40, 7));
        assert!(plan.all_checks_hold());
    }

    #[test]
    fn threshold_point_has_sigma_equal_beta() {
        let p = r(71, 21);
        assert_eq!(threshold(PlanVariant::Direct, 3, &r(7, 6)), p);
        let plan = exponent_plan(PlanVariant::Direct, 3, &p, &eps()).unwrap();
        assert_eq!(plan.sigma, plan.beta);
        // The listed boundary value 73/21 is above the threshold, so sigma < beta there.
        let above = exponent_plan(PlanVariant::Direct, 3, &r(73, 21), &eps()).unwrap();
        assert!(above.sigma < above.beta);
    }

    #[test]
    fn embedded_four_dimensions_is_below_threshold_at_four() {
        let th = threshold(PlanVariant::Embedded, 4, &beta_d(4, &eps()).unwrap());
        assert!(to_f64(&th) > 4.66 && to_f64(&th) < 4.68);
        match exponent_plan(PlanVariant::Embedded, 4, &r(4, 1), &eps()) {
            Err(PlanError::BelowThreshold { threshold, .. }) => assert_eq!(threshold, th),
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(exponent_plan(PlanVariant::Embedded, 4, &r(5, 1), &eps()).unwrap().all_checks_hold());
    }

    #[test]
    fn embedded_needs_three_dimensions() {
        assert_eq!(
            exponent_plan(PlanVariant::Embedded, 2, &r(9, 1), &eps()).unwrap_err(),
            PlanError::NeedsDimensionThree(2)
        );
    }

    #[test]
    fn plans_hold_above_threshold() {
        for variant in [PlanVariant::Direct, PlanVariant::Embedded] {
            for d in 2..=5 {
                if variant == PlanVariant::Embedded && d < 3 {
                    continue;
                }
                let th = threshold(variant, d, &beta_d(d, &eps()).unwrap());
                for k in 0..10 {
                    let p = &th + r(k, 3);
                    let plan = exponent_plan(variant, d, &p, &eps()).unwrap();
                    assert!(plan.all_checks_hold(), "{variant} d={d} p={p}");
                }
            }
        }
    }

    #[test]
    fn threshold_equivalence_on_straddling_grid() {
        for variant in [PlanVariant::Direct, PlanVariant::Embedded] {
            for d in 2..=5 {
                if variant == PlanVariant::Embedded && d < 3 {
                    continue;
                }
                let beta = beta_d(d, &eps()).unwrap();
                let th = threshold(variant, d, &beta);
                for k in -25..25 {
                    let p = &th + r(k, 50);
                    let s = sigma(variant, d, &p).unwrap();
                    assert_eq!(p >= th, beta >= s, "{variant} d={d} p={p}");
                }
            }
        }
    }

    #[test]
    fn record_serializes_rationals_as_strings() {
        let plan = exponent_plan(PlanVariant::Direct, 3, &r(5, 1), &eps()).unwrap();
        let json = serde_json::to_value(plan.record()).unwrap();
        assert_eq!(json["sigma"], "3/5");
        assert_eq!(json["variant"], "direct");
    }
}
