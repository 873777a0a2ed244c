use std::collections::BTreeMap;

use serde::Serialize;

/// Comparison applied by a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
    LessThan,
    GreaterThan,
}

impl Bound {
    fn holds(self, value: f64, limit: f64) -> bool {
        match self {
            Bound::AtMost => value <= limit,
            Bound::AtLeast => value >= limit,
            Bound::LessThan => value < limit,
            Bound::GreaterThan => value > limit,
        }
    }
}

/// `scalars[scalar] <bound> limit`, so a verdict can be recomputed from the
/// record alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub scalar: String,
    pub bound: Bound,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub config: serde_json::Value,
    pub scalars: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub artifacts: Vec<String>,
    pub wall_seconds: f64,
}

impl ResultRecord {
    pub fn new(experiment: &str, config: serde_json::Value) -> Self {
        Self {
            experiment: experiment.into(),
            config,
            scalars: BTreeMap::new(),
            verdicts: Vec::new(),
            artifacts: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    pub fn scalar(&mut self, name: &str, value: f64) {
        self.scalars.insert(name.into(), value);
    }

    /// Booleans are stored as 0/1 scalars.
    pub fn flag(&mut self, name: &str, value: bool) {
        self.scalar(name, if value { 1.0 } else { 0.0 });
    }

    /// Records `value` under `scalar` and a verdict on it.
    pub fn verdict(&mut self, name: &str, scalar: &str, value: f64, bound: Bound, limit: f64) {
        self.scalar(scalar, value);
        self.verdicts.push(Verdict {
            name: name.into(),
            scalar: scalar.into(),
            bound,
            limit,
            pass: bound.holds(value, limit),
        });
    }

    /// A boolean requirement on a stored flag.
    pub fn require(&mut self, name: &str, scalar: &str, value: bool) {
        self.verdict(name, scalar, if value { 1.0 } else { 0.0 }, Bound::AtLeast, 1.0);
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Recomputes each verdict from `scalars`.
    pub fn consistent(&self) -> bool {
        self.verdicts.iter().all(|v| self.scalars.get(&v.scalar).is_some_and(|&x| v.bound.holds(x, v.limit) == v.pass))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_follow_scalars() {
        let mut r = ResultRecord::new("x", serde_json::Value::Null);
        r.verdict("small", "gap", 1e-3, Bound::LessThan, 1e-2);
        r.require("flag", "ok", false);
        assert!(!r.passed());
        assert!(r.consistent());
        assert_eq!(r.verdicts.iter().filter(|v| v.pass).count(), 1);
        // NaN fails every bound.
        r.verdict("nan", "z", f64::NAN, Bound::AtMost, 1.0);
        assert!(!r.verdicts[2].pass);
    }
}
