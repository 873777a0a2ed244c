//! Decay budgets `(β, ρ)` standing for bounds `t^β log^ρ t`, in exact rationals.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BudgetError {
    #[error("decay exponent must be nonpositive, got {0}")]
    PositiveExponent(Rational64),
    #[error("unknown monomial kind {0:?}")]
    UnknownKind(String),
    #[error("power must be at least 2, got {0}")]
    BadPower(u32),
}

/// Budget `(β, ρ)`, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecayBudget {
    beta: Rational64,
    rho: u32,
}

impl DecayBudget {
    pub const ZERO: DecayBudget = DecayBudget { beta: Rational64::new_raw(0, 1), rho: 0 };

    pub fn new(beta: Rational64, rho: u32) -> Result<Self, BudgetError> {
        if beta > Rational64::zero() {
            return Err(BudgetError::PositiveExponent(beta));
        }
        Ok(Self { beta, rho })
    }

    /// `(-num/den, 0)`.
    pub fn power(num: i64, den: i64) -> Self {
        Self { beta: Rational64::new(-num, den), rho: 0 }
    }

    pub fn beta(&self) -> Rational64 {
        self.beta
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }
}

impl fmt::Display for DecayBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.beta, self.rho)
    }
}

impl PartialOrd for DecayBudget {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DecayBudget {
    fn cmp(&self, other: &Self) -> Ordering {
        self.beta.cmp(&other.beta).then(self.rho.cmp(&other.rho))
    }
}

/// Budget of a product of independent oscillatory factors: componentwise sum.
pub fn budget_add(a: DecayBudget, b: DecayBudget) -> DecayBudget {
    DecayBudget { beta: a.beta + b.beta, rho: a.rho + b.rho }
}

/// Splitting off `m` nondegenerate quadratic directions adds `(-m/2, 0)`.
pub fn quadratic_split(b: DecayBudget, m: u32) -> DecayBudget {
    budget_add(b, DecayBudget::power(m as i64, 2))
}

/// Planar normal forms with known budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonomialKind {
    /// `x^k`, `k ≥ 2`.
    Power { k: u32 },
    /// `x²y ± xy²`.
    CubicPair,
    /// `x²y ± y²`.
    CubicSquare,
    /// `x²y ± y² ± x⁴`.
    CubicSquareQuartic,
}

impl std::str::FromStr for MonomialKind {
    type Err = BudgetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match compact.as_str() {
            "x^2y+-xy^2" | "cubic_pair" => Ok(MonomialKind::CubicPair),
            "x^2y+-y^2" | "cubic_square" => Ok(MonomialKind::CubicSquare),
            "x^2y+-y^2+-x^4" | "cubic_square_quartic" => Ok(MonomialKind::CubicSquareQuartic),
            other => {
                let k = other
                    .strip_prefix("x^")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| BudgetError::UnknownKind(s.to_string()))?;
                if k < 2 {
                    return Err(BudgetError::BadPower(k));
                }
                Ok(MonomialKind::Power { k })
            }
        }
    }
}

/// Van der Corput budget of a normal form.
pub fn monomial_budget(kind: MonomialKind) -> DecayBudget {
    match kind {
        MonomialKind::Power { k } => DecayBudget::power(1, k as i64),
        MonomialKind::CubicPair => DecayBudget::power(2, 3),
        MonomialKind::CubicSquare | MonomialKind::CubicSquareQuartic => DecayBudget::power(3, 4),
    }
}

/// Tabulated variant where the pure power `x^k` is listed as `(-k, 0)`.
///
/// Van der Corput only yields `-1/k` for `x^k`; compositions always use
/// [`monomial_budget`].
pub fn monomial_budget_as_listed(kind: MonomialKind) -> DecayBudget {
    match kind {
        MonomialKind::Power { k } => DecayBudget::power(k as i64, 1),
        other => monomial_budget(other),
    }
}

/// Degeneracy class of a critical frequency in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyClass {
    NonDegenerate,
    /// Secant–cosine degeneracy, no component at `±π/2`.
    Gamma1,
    /// Exactly two components at `±π/2`.
    Gamma2,
    /// All three components at `±π/2`.
    Gamma3,
}

/// Budget for a degeneracy class in dimension three, composed from normal forms.
pub fn class_budget_3d(class: DegeneracyClass) -> DecayBudget {
    match class {
        DegeneracyClass::NonDegenerate => quadratic_split(DecayBudget::ZERO, 3),
        DegeneracyClass::Gamma3 => quadratic_split(monomial_budget(MonomialKind::CubicPair), 1),
        DegeneracyClass::Gamma2 => quadratic_split(monomial_budget(MonomialKind::CubicSquare), 1),
        DegeneracyClass::Gamma1 => quadratic_split(monomial_budget(MonomialKind::Power { k: 3 }), 2),
    }
}

/// All four three-dimensional budgets in the order nondegenerate, Γ_3, Γ_2, Γ_1.
pub fn budget_table_3d() -> [(DegeneracyClass, DecayBudget); 4] {
    [DegeneracyClass::NonDegenerate, DegeneracyClass::Gamma3, DegeneracyClass::Gamma2, DegeneracyClass::Gamma1]
        .map(|c| (c, class_budget_3d(c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn three_half_steps() {
        let h = DecayBudget::power(1, 2);
        assert_eq!(budget_add(budget_add(h, h), h), DecayBudget::power(3, 2));
    }

    #[test]
    fn half_plus_two_thirds() {
        assert_eq!(budget_add(DecayBudget::power(1, 2), DecayBudget::power(2, 3)), DecayBudget::power(7, 6));
    }

    #[test]
    fn zero_is_neutral() {
        let b = DecayBudget::new(r(-5, 4), 1).unwrap();
        assert_eq!(budget_add(b, DecayBudget::ZERO), b);
    }

    #[test]
    fn catalog_values() {
        assert_eq!(monomial_budget(MonomialKind::CubicPair).beta(), r(-2, 3));
        assert_eq!(monomial_budget(MonomialKind::CubicSquare).beta(), r(-3, 4));
        assert_eq!(monomial_budget(MonomialKind::CubicSquareQuartic).beta(), r(-3, 4));
        assert_eq!(monomial_budget(MonomialKind::Power { k: 3 }).beta(), r(-1, 3));
        assert_eq!(monomial_budget_as_listed(MonomialKind::Power { k: 3 }).beta(), r(-3, 1));
    }

    #[test]
    fn gamma2_composition() {
        assert_eq!(
            budget_add(DecayBudget::power(1, 2), monomial_budget(MonomialKind::CubicSquare)),
            DecayBudget::power(5, 4)
        );
    }

    #[test]
    fn table_matches_expected_rationals() {
        let table = budget_table_3d();
        let betas: Vec<Rational64> = table.iter().map(|(_, b)| b.beta()).collect();
        assert_eq!(betas, vec![r(-3, 2), r(-7, 6), r(-5, 4), r(-4, 3)]);
        assert!(table.iter().all(|(_, b)| b.rho() == 0));
    }

    #[test]
    fn quadratic_split_adds_half_per_direction() {
        let b = DecayBudget::power(1, 3);
        assert_eq!(quadratic_split(b, 2), DecayBudget::power(4, 3));
    }

    #[test]
    fn positive_exponent_rejected() {
        assert!(DecayBudget::new(r(1, 2), 0).is_err());
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("x^4".parse::<MonomialKind>().unwrap(), MonomialKind::Power { k: 4 });
        assert_eq!("x^2y +- xy^2".parse::<MonomialKind>().unwrap(), MonomialKind::CubicPair);
        assert!("x^1".parse::<MonomialKind>().is_err());
        assert!("sin".parse::<MonomialKind>().is_err());
    }

    fn budget() -> impl Strategy<Value = DecayBudget> {
        (0i64..40, 1i64..12, 0u32..4).prop_map(|(n, d, rho)| DecayBudget::new(r(-n, d), rho).unwrap())
    }

    proptest! {
        #[test]
        fn order_is_total_and_addition_monotone(a in budget(), b in budget(), c in budget()) {
            prop_assert!(a <= b || b <= a);
            if a <= b {
                prop_assert!(budget_add(a, c) <= budget_add(b, c));
                prop_assert!(budget_add(c, a) <= budget_add(c, b));
            }
        }

        #[test]
        fn addition_commutes(a in budget(), b in budget()) {
            prop_assert_eq!(budget_add(a, b), budget_add(b, a));
        }
    }
}
