//! Newton polygons of bivariate Taylor supports in exact arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::poly::Poly;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NewtonError {
    #[error("support set is empty")]
    EmptySupport,
    #[error("exponent ({0}, {1}) appears twice")]
    DuplicateExponent(u32, u32),
    #[error("coefficient of exponent ({0}, {1}) is zero")]
    ZeroCoefficient(u32, u32),
    #[error("constant term present; a Taylor support starts at order one")]
    ConstantTerm,
    #[error("cannot parse polynomial {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exponent `(a, b)` of the monomial `x^a y^b`.
pub type Exponent2 = (u32, u32);

/// Exponents with nonzero rational coefficients, sorted by exponent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    terms: BTreeMap<Exponent2, BigRational>,
}

impl SupportSet {
    pub fn new(terms: impl IntoIterator<Item = (Exponent2, BigRational)>) -> Result<Self, NewtonError> {
        let mut map = BTreeMap::new();
        for ((a, b), c) in terms {
            if c.is_zero() {
                return Err(NewtonError::ZeroCoefficient(a, b));
            }
            if (a, b) == (0, 0) {
                return Err(NewtonError::ConstantTerm);
            }
            if map.insert((a, b), c).is_some() {
                return Err(NewtonError::DuplicateExponent(a, b));
            }
        }
        if map.is_empty() {
            return Err(NewtonError::EmptySupport);
        }
        Ok(Self { terms: map })
    }

    /// Integer coefficients, convenient for literals.
    pub fn from_ints(terms: &[(Exponent2, i64)]) -> Result<Self, NewtonError> {
        Self::new(terms.iter().map(|&(e, c)| (e, int(c))))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent2, &BigRational)> {
        self.terms.iter()
    }

    pub fn exponents(&self) -> impl Iterator<Item = Exponent2> + '_ {
        self.terms.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, e: Exponent2) -> Option<&BigRational> {
        self.terms.get(&e)
    }

    /// Same polynomial with `x` and `y` exchanged.
    pub fn swapped(&self) -> SupportSet {
        SupportSet { terms: self.terms.iter().map(|(&(a, b), c)| ((b, a), c.clone())).collect() }
    }

    /// Univariate `y ↦ S(x0, y)`.
    pub fn restrict_x(&self, x0: &BigRational) -> Poly {
        let deg = self.terms.keys().map(|&(_, b)| b as usize).max().unwrap_or(0);
        let mut coeffs = vec![BigRational::zero(); deg + 1];
        for (&(a, b), c) in &self.terms {
            coeffs[b as usize] = &coeffs[b as usize] + c * pow(x0, a);
        }
        Poly::new(coeffs)
    }
}

fn pow(x: &BigRational, k: u32) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x)
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (&(a, b), c)) in self.terms.iter().enumerate() {
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if !mag.is_one() {
                write!(f, "{mag}*")?;
            }
            match a {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{a}")?,
            }
            match b {
                0 => {}
                1 => write!(f, "y")?,
                _ => write!(f, "y^{b}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for SupportSet {
    type Err = NewtonError;

    /// Accepts sums like `x^2y - 3/2*y^2 + x^4`; repeated monomials are combined.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| NewtonError::Parse { input: s.to_string(), reason: reason.to_string() };
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(NewtonError::EmptySupport);
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        for (i, ch) in compact.char_indices() {
            if (ch == '+' || ch == '-') && i > 0 {
                pieces.push(&compact[start..i]);
                start = i;
            }
        }
        pieces.push(&compact[start..]);
        let mut acc: BTreeMap<Exponent2, BigRational> = BTreeMap::new();
        for piece in pieces {
            let (negative, body) = match piece.as_bytes().first() {
                Some(b'-') => (true, &piece[1..]),
                Some(b'+') => (false, &piece[1..]),
                _ => (false, piece),
            };
            if body.is_empty() {
                return Err(err("dangling sign"));
            }
            let split = body.find(['x', 'y']).unwrap_or(body.len());
            let coef_text = body[..split].trim_end_matches('*');
            let mut coef = if coef_text.is_empty() {
                BigRational::one()
            } else {
                parse_rational(coef_text).ok_or_else(|| err("bad coefficient"))?
            };
            if negative {
                coef = -coef;
            }
            let (mut a, mut b) = (0u32, 0u32);
            let mut rest = &body[split..];
            while !rest.is_empty() {
                let var = rest.as_bytes()[0];
                rest = rest[1..].trim_start_matches('*');
                let mut k = 1u32;
                if let Some(tail) = rest.strip_prefix('^') {
                    let end = tail.find(|c: char| !c.is_ascii_digit()).unwrap_or(tail.len());
                    k = tail[..end].parse().map_err(|_| err("bad exponent"))?;
                    rest = tail[end..].trim_start_matches('*');
                }
                match var {
                    b'x' => a += k,
                    b'y' => b += k,
                    _ => return Err(err("unexpected character")),
                }
            }
            let entry = acc.entry((a, b)).or_insert_with(BigRational::zero);
            *entry = &*entry + coef;
        }
        SupportSet::new(acc.into_iter().filter(|(_, c)| !c.is_zero()))
    }
}

fn parse_rational(text: &str) -> Option<BigRational> {
    match text.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n.parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(text.parse().ok()?)),
    }
}

/// Compact edge between consecutive vertices; the polygon lies in `normal · z ≥ level`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: Exponent2,
    pub to: Exponent2,
    /// Primitive inward normal with positive entries.
    pub normal: (u64, u64),
    pub level: u64,
}

impl Edge {
    /// Weight `γ = normal / level` making the edge `γ`-homogeneous of degree one.
    pub fn weight(&self) -> (BigRational, BigRational) {
        let l = BigInt::from(self.level);
        (BigRational::new(BigInt::from(self.normal.0), l.clone()), BigRational::new(BigInt::from(self.normal.1), l))
    }

    fn contains(&self, e: Exponent2) -> bool {
        self.normal.0 * e.0 as u64 + self.normal.1 * e.1 as u64 == self.level
    }
}

/// Face of minimal dimension meeting the diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrincipalFace {
    Vertex(Exponent2),
    Edge(Edge),
    /// Ray `{x = x0, y ≥ y0}` from the first vertex.
    Vertical(Exponent2),
    /// Ray `{y = y0, x ≥ x0}` from the last vertex.
    Horizontal(Exponent2),
}

impl PrincipalFace {
    pub fn is_compact(&self) -> bool {
        matches!(self, PrincipalFace::Vertex(_) | PrincipalFace::Edge(_))
    }

    /// Dimension of the face (0 or 1).
    pub fn dimension(&self) -> u32 {
        match self {
            PrincipalFace::Vertex(_) => 0,
            _ => 1,
        }
    }

    fn contains(&self, e: Exponent2) -> bool {
        match self {
            PrincipalFace::Vertex(v) => *v == e,
            PrincipalFace::Edge(edge) => edge.contains(e),
            PrincipalFace::Vertical((x0, y0)) => e.0 == *x0 && e.1 >= *y0,
            PrincipalFace::Horizontal((x0, y0)) => e.1 == *y0 && e.0 >= *x0,
        }
    }
}

impl fmt::Display for PrincipalFace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrincipalFace::Vertex((a, b)) => write!(f, "vertex ({a}, {b})"),
            PrincipalFace::Edge(e) => write!(f, "edge {}x + {}y = {}", e.normal.0, e.normal.1, e.level),
            PrincipalFace::Vertical((a, b)) => write!(f, "ray x = {a}, y >= {b}"),
            PrincipalFace::Horizontal((a, b)) => write!(f, "ray y = {b}, x >= {a}"),
        }
    }
}

/// Convex hull of `∪ (γ + R²₊)` over the support.
#[derive(Debug, Clone)]
pub struct NewtonPolyhedron {
    support: SupportSet,
    /// Counterclockwise: from the top-left vertex down to the bottom-right one.
    vertices: Vec<Exponent2>,
    edges: Vec<Edge>,
    distance: BigRational,
    principal_face: PrincipalFace,
}

impl NewtonPolyhedron {
    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn vertices(&self) -> &[Exponent2] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn newton_distance(&self) -> &BigRational {
        &self.distance
    }

    pub fn principal_face(&self) -> &PrincipalFace {
        &self.principal_face
    }

    /// `2 − dim` of the principal face.
    pub fn k_s(&self) -> u32 {
        2 - self.principal_face.dimension()
    }

    /// Half-plane membership test.
    pub fn contains(&self, point: (&BigRational, &BigRational)) -> bool {
        let (x, y) = point;
        let first = self.vertices[0];
        let last = *self.vertices.last().unwrap();
        if *x < int(first.0 as i64) || *y < int(last.1 as i64) {
            return false;
        }
        self.edges.iter().all(|e| x * int(e.normal.0 as i64) + y * int(e.normal.1 as i64) >= int(e.level as i64))
    }
}

fn cross(o: Exponent2, a: Exponent2, b: Exponent2) -> i64 {
    let (ox, oy) = (o.0 as i64, o.1 as i64);
    (a.0 as i64 - ox) * (b.1 as i64 - oy) - (a.1 as i64 - oy) * (b.0 as i64 - ox)
}

pub fn build_polyhedron(support: &SupportSet) -> Result<NewtonPolyhedron, NewtonError> {
    if support.is_empty() {
        return Err(NewtonError::EmptySupport);
    }
    // Pareto-minimal staircase: x strictly increasing, y strictly decreasing.
    let mut stair: Vec<Exponent2> = Vec::new();
    for e in support.exponents() {
        if stair.last().is_none_or(|s| e.1 < s.1) {
            stair.push(e);
        }
    }
    let mut hull: Vec<Exponent2> = Vec::new();
    for p in stair {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let edges: Vec<Edge> = hull
        .windows(2)
        .map(|w| {
            let (a1, b1) = (w[0].0 as u64, w[0].1 as u64);
            let (a2, b2) = (w[1].0 as u64, w[1].1 as u64);
            let (n1, n2) = (b1 - b2, a2 - a1);
            let g = n1.gcd(&n2);
            let normal = (n1 / g, n2 / g);
            Edge { from: w[0], to: w[1], normal, level: normal.0 * a1 + normal.1 * b1 }
        })
        .collect();

    let first = hull[0];
    let last = *hull.last().unwrap();
    let (distance, principal_face) = if let Some(&v) = hull.iter().find(|v| v.0 == v.1) {
        (int(v.0 as i64), PrincipalFace::Vertex(v))
    } else if first.0 > first.1 {
        (int(first.0 as i64), PrincipalFace::Vertical(first))
    } else if last.1 > last.0 {
        (int(last.1 as i64), PrincipalFace::Horizontal(last))
    } else {
        // The diagonal crosses the chain strictly inside one edge.
        let e =
            edges.iter().find(|e| e.from.0 < e.from.1 && e.to.0 > e.to.1).expect("chain crosses the diagonal").clone();
        let d = BigRational::new(BigInt::from(e.level), BigInt::from(e.normal.0 + e.normal.1));
        (d, PrincipalFace::Edge(e))
    };
    Ok(NewtonPolyhedron { support: support.clone(), vertices: hull, edges, distance, principal_face })
}

/// Terms of `S` whose exponents lie on the principal face.
pub fn principal_restriction(support: &SupportSet, poly: &NewtonPolyhedron) -> SupportSet {
    SupportSet {
        terms: support
            .terms
            .iter()
            .filter(|(e, _)| poly.principal_face.contains(**e))
            .map(|(e, c)| (*e, c.clone()))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptedness {
    Adapted,
    NotAdapted,
    Inconclusive,
}

impl fmt::Display for Adaptedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Adaptedness::Adapted => "adapted",
            Adaptedness::NotAdapted => "not_adapted",
            Adaptedness::Inconclusive => "inconclusive",
        })
    }
}

/// Outcome of the adaptedness test in the given coordinates.
#[derive(Debug, Clone)]
pub struct AdaptedCheck {
    pub verdict: Adaptedness,
    pub newton_distance: BigRational,
    /// Largest multiplicity of a real root `y ≠ 0` of `S_π(±1, y)`; zero if none.
    pub max_root_order: u32,
    /// Equal to the Newton distance when adapted, unknown otherwise.
    pub height: Option<BigRational>,
    pub reason: String,
}

impl AdaptedCheck {
    /// Oscillatory exponent `-1/h` when the height is known.
    pub fn decay_exponent(&self) -> Option<BigRational> {
        self.height.as_ref().map(|h| -h.recip())
    }
}

/// Largest multiplicity of a nonzero real root of `p`.
pub fn max_nonzero_root_order(p: &Poly) -> u32 {
    let y = Poly::from_ints(&[0, 1]);
    p.square_free_decomposition()
        .into_iter()
        .filter_map(|(mut g, m)| {
            if g.coeffs().first().is_none_or(|c| c.is_zero()) {
                g = g.div_rem(&y).0;
            }
            (g.count_real_roots(None, None) > 0).then_some(m)
        })
        .max()
        .unwrap_or(0)
}

/// Adaptedness of the given coordinates.
///
/// Vertex and unbounded principal faces are always adapted. For a compact
/// edge, roots of `S_π(±1, y)` away from `y = 0` of order above the Newton
/// distance rule adaptedness out, lower orders confirm it, and equality is
/// left undecided.
pub fn adapted_check_2d(support: &SupportSet) -> Result<AdaptedCheck, NewtonError> {
    let poly = build_polyhedron(support)?;
    let d = poly.newton_distance().clone();
    let restricted = principal_restriction(support, &poly);
    let order =
        [int(1), int(-1)].iter().map(|x0| max_nonzero_root_order(&restricted.restrict_x(x0))).max().unwrap_or(0);
    let (verdict, reason) = match poly.principal_face() {
        PrincipalFace::Vertex(_) => (Adaptedness::Adapted, "principal face is a vertex".to_string()),
        PrincipalFace::Vertical(_) | PrincipalFace::Horizontal(_) => {
            (Adaptedness::Adapted, "principal face is unbounded".to_string())
        }
        PrincipalFace::Edge(_) => {
            let m = int(order as i64);
            if m < d {
                (Adaptedness::Adapted, format!("nonzero root order {order} below distance {d}"))
            } else if m > d {
                (Adaptedness::NotAdapted, format!("nonzero root order {order} exceeds distance {d}"))
            } else {
                (Adaptedness::Inconclusive, format!("nonzero root order {order} equals distance {d}"))
            }
        }
    };
    let height = (verdict == Adaptedness::Adapted).then(|| d.clone());
    Ok(AdaptedCheck { verdict, newton_distance: d, max_root_order: order, height, reason })
}

/// Whether every monomial satisfies `γ · α = ρ`.
pub fn is_gamma_homogeneous(support: &SupportSet, gamma: (&BigRational, &BigRational), rho: &BigRational) -> bool {
    support.exponents().all(|(a, b)| gamma.0 * int(a as i64) + gamma.1 * int(b as i64) == *rho)
}

/// Serializable summary with rationals rendered as strings.
#[derive(Debug, Clone, Serialize)]
pub struct NewtonReport {
    pub polynomial: String,
    pub vertices: Vec<Exponent2>,
    pub edges: Vec<EdgeReport>,
    pub newton_distance: String,
    pub principal_face: String,
    pub k_s: u32,
    pub principal_part: String,
    pub verdict: Adaptedness,
    pub max_root_order: u32,
    pub height: Option<String>,
    pub decay_exponent: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeReport {
    pub from: Exponent2,
    pub to: Exponent2,
    pub normal: (u64, u64),
    pub level: u64,
}

pub fn newton_report(support: &SupportSet) -> Result<NewtonReport, NewtonError> {
    let poly = build_polyhedron(support)?;
    let check = adapted_check_2d(support)?;
    Ok(NewtonReport {
        polynomial: support.to_string(),
        vertices: poly.vertices.clone(),
        edges: poly
            .edges
            .iter()
            .map(|e| EdgeReport { from: e.from, to: e.to, normal: e.normal, level: e.level })
            .collect(),
        newton_distance: poly.distance.to_string(),
        principal_face: poly.principal_face.to_string(),
        k_s: poly.k_s(),
        principal_part: principal_restriction(support, &poly).to_string(),
        verdict: check.verdict.clone(),
        max_root_order: check.max_root_order,
        height: check.height.as_ref().map(|h| h.to_string()),
        decay_exponent: check.decay_exponent().map(|b| b.to_string()),
        reason: check.reason,
    })
}

impl NewtonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn s(text: &str) -> SupportSet {
        text.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        let p = s("x^2y - 3/2*y^2 + x^4");
        assert_eq!(p.coefficient((2, 1)), Some(&r(1, 1)));
        assert_eq!(p.coefficient((0, 2)), Some(&r(-3, 2)));
        assert_eq!(p.coefficient((4, 0)), Some(&r(1, 1)));
        assert_eq!(s(&p.to_string()), p);
        assert_eq!(s("x*y + xy").coefficient((1, 1)), Some(&r(2, 1)));
        assert!("".parse::<SupportSet>().is_err());
        assert!("x - x".parse::<SupportSet>().is_err());
        assert!("x^ + y".parse::<SupportSet>().is_err());
        assert_eq!("1 + x".parse::<SupportSet>(), Err(NewtonError::ConstantTerm));
    }

    #[test]
    fn cubic_pair_distance() {
        let p = build_polyhedron(&s("x^2y + xy^2")).unwrap();
        assert_eq!(p.vertices(), &[(1, 2), (2, 1)]);
        assert_eq!(p.newton_distance(), &r(3, 2));
        assert!(matches!(p.principal_face(), PrincipalFace::Edge(_)));
        assert_eq!(p.k_s(), 1);
    }

    #[test]
    fn cubic_square_distance() {
        let p = build_polyhedron(&s("x^2y + y^2")).unwrap();
        assert_eq!(p.newton_distance(), &r(4, 3));
    }

    #[test]
    fn quartic_edge() {
        let p = build_polyhedron(&s("x^2y - y^2 + x^4")).unwrap();
        assert_eq!(p.newton_distance(), &r(4, 3));
        match p.principal_face() {
            PrincipalFace::Edge(e) => {
                assert_eq!((e.normal, e.level), ((1, 2), 4));
                assert_eq!((e.from, e.to), ((0, 2), (4, 0)));
            }
            other => panic!("unexpected face {other}"),
        }
        // (2,1) lies on the edge, so it is not a vertex.
        assert_eq!(p.vertices(), &[(0, 2), (4, 0)]);
    }

    #[test]
    fn principal_parts() {
        let p = s("x^2y + xy^2");
        assert_eq!(principal_restriction(&p, &build_polyhedron(&p).unwrap()), p);
        let q = s("x^2y - y^2 + x^4");
        assert_eq!(principal_restriction(&q, &build_polyhedron(&q).unwrap()), q);
        let h = s("x^2y + x^5y^5");
        assert_eq!(principal_restriction(&h, &build_polyhedron(&h).unwrap()), s("x^2y"));
    }

    #[test]
    fn adaptedness_examples() {
        let c = adapted_check_2d(&s("x^2y + xy^2")).unwrap();
        assert_eq!(c.verdict, Adaptedness::Adapted);
        assert_eq!(c.max_root_order, 1);
        assert_eq!(c.height, Some(r(3, 2)));
        assert_eq!(c.decay_exponent(), Some(r(-2, 3)));

        let c = adapted_check_2d(&s("x^2y - y^2")).unwrap();
        assert_eq!(c.verdict, Adaptedness::Adapted);
        assert_eq!(c.decay_exponent(), Some(r(-3, 4)));

        let c = adapted_check_2d(&s("y^2")).unwrap();
        assert_eq!(c.verdict, Adaptedness::Adapted);
        assert_eq!(c.newton_distance, r(2, 1));
        assert_eq!(c.max_root_order, 0);
    }

    #[test]
    fn square_of_parabola_is_not_adapted() {
        // (y - x²)² has S_π(1, y) = (y - 1)², order 2 > 4/3.
        let c = adapted_check_2d(&s("y^2 - 2x^2y + x^4")).unwrap();
        assert_eq!(c.verdict, Adaptedness::NotAdapted);
        assert_eq!(c.max_root_order, 2);
        assert_eq!(c.height, None);
    }

    #[test]
    fn order_equal_to_distance_is_undecided() {
        // (y - x)²(y + 2x)²: distance 2, two double roots.
        let c = adapted_check_2d(&s("y^4 + 2xy^3 - 3x^2y^2 - 4x^3y + 4x^4")).unwrap();
        assert_eq!(c.newton_distance, r(2, 1));
        assert_eq!(c.max_root_order, 2);
        assert_eq!(c.verdict, Adaptedness::Inconclusive);
    }

    #[test]
    fn irrational_double_root_detected() {
        // (y² - 2x²)³: roots ±√2 of order 3 > distance 3.
        let p = s("y^6 - 6x^2y^4 + 12x^4y^2 - 8x^6");
        let c = adapted_check_2d(&p).unwrap();
        assert_eq!(c.max_root_order, 3);
        assert_eq!(c.newton_distance, r(3, 1));
        assert_eq!(c.verdict, Adaptedness::Inconclusive);
    }

    #[test]
    fn homogeneity() {
        assert!(is_gamma_homogeneous(&s("x^2y + xy^2"), (&r(1, 3), &r(1, 3)), &r(1, 1)));
        assert!(is_gamma_homogeneous(&s("x^2y + y^2"), (&r(1, 4), &r(1, 2)), &r(1, 1)));
        assert!(!is_gamma_homogeneous(&s("x + y"), (&r(1, 1), &r(1, 1)), &r(2, 1)));
    }

    #[test]
    fn edge_weight_makes_face_homogeneous() {
        let p = s("x^2y - y^2 + x^4");
        let poly = build_polyhedron(&p).unwrap();
        let PrincipalFace::Edge(e) = poly.principal_face() else { panic!() };
        let (g1, g2) = e.weight();
        assert_eq!((g1.clone(), g2.clone()), (r(1, 4), r(1, 2)));
        assert!(is_gamma_homogeneous(&p, (&g1, &g2), &r(1, 1)));
    }

    #[test]
    fn rays_and_vertices() {
        let p = build_polyhedron(&s("x^3 + x^3y^4")).unwrap();
        assert_eq!(p.principal_face(), &PrincipalFace::Vertical((3, 0)));
        assert_eq!(p.newton_distance(), &r(3, 1));
        let p = build_polyhedron(&s("x^2y^2 + x^5 + y^7")).unwrap();
        assert_eq!(p.principal_face(), &PrincipalFace::Vertex((2, 2)));
        assert_eq!(p.k_s(), 2);
    }

    #[test]
    fn report_serializes() {
        let json = newton_report(&s("x^2y + xy^2")).unwrap().to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["newton_distance"], "3/2");
        assert_eq!(v["verdict"], "adapted");
        assert_eq!(v["decay_exponent"], "-2/3");
    }

    fn support() -> impl Strategy<Value = SupportSet> {
        proptest::collection::btree_map((0u32..7, 0u32..7), -5i64..=5, 1..6).prop_filter_map("valid", |m| {
            SupportSet::new(m.into_iter().filter(|(_, c)| *c != 0).map(|(e, c)| (e, int(c)))).ok()
        })
    }

    proptest! {
        #[test]
        fn distance_is_swap_invariant(p in support()) {
            let a = build_polyhedron(&p).unwrap();
            let b = build_polyhedron(&p.swapped()).unwrap();
            prop_assert_eq!(a.newton_distance(), b.newton_distance());
        }

        #[test]
        fn distance_agrees_with_membership(p in support()) {
            let poly = build_polyhedron(&p).unwrap();
            let d = poly.newton_distance().clone();
            prop_assert!(poly.contains((&d, &d)));
            let below = &d - r(1, 1000);
            prop_assert!(!poly.contains((&below, &below)));
            for (a, b) in p.exponents() {
                prop_assert!(poly.contains((&int(a as i64), &int(b as i64))));
            }
            for v in poly.vertices() {
                prop_assert!(p.coefficient(*v).is_some());
            }
        }

        #[test]
        fn interior_points_change_nothing(p in support(), pick in 0usize..6, i in 1u32..3, j in 1u32..3) {
            let base = p.exponents().nth(pick % p.len()).unwrap();
            let extra = (base.0 + i, base.1 + j);
            prop_assume!(p.coefficient(extra).is_none());
            let mut terms: Vec<_> = p.terms().map(|(e, c)| (*e, c.clone())).collect();
            terms.push((extra, int(7)));
            let q = SupportSet::new(terms).unwrap();
            let a = build_polyhedron(&p).unwrap();
            let b = build_polyhedron(&q).unwrap();
            prop_assert_eq!(a.vertices(), b.vertices());
            prop_assert_eq!(a.newton_distance(), b.newton_distance());
            prop_assert_eq!(principal_restriction(&p, &a), principal_restriction(&q, &b));
        }
    }
}
