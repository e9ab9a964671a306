//! Concrete points of the order encoded by a tree.
//!
//! A point assigns one value per branch vertex, root down to the level just
//! above the leaves; the branch itself is always derived from the values. At
//! an endpoint-bearing vertex the branch takes the right child exactly when
//! the value is the endpoint (`0` for `w*`, `Top` for the dotted labels); at
//! a shuffle vertex the value's colour picks the left child of that colour.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::tree::{left_children_by_rank, CodingTree, Label};

/// One coordinate of a point. Discrete labels carry integers, dense labels
/// exact rationals, and `Top` is the greatest point of the dotted labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Rat(BigRational),
    Top,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(k) => write!(f, "{k}"),
            Value::Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Value::Top => write!(f, "top"),
        }
    }
}

/// A point of the encoded order: values indexed by level, root first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Point {
    pub values: Vec<Value>,
}

impl Point {
    pub fn new(values: Vec<Value>) -> Self {
        Point { values }
    }

    /// Value at `level` in a tree of the given height (levels `height..1`).
    pub fn at_level(&self, height: u32, level: u32) -> &Value {
        &self.values[(height - level) as usize]
    }

    pub fn set_at_level(&mut self, height: u32, level: u32, v: Value) {
        self.values[(height - level) as usize] = v;
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Error)]
pub enum PointError {
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("empty interval: lower bound not below upper bound")]
    EmptyInterval,
    #[error("interval is infinite")]
    InfiniteInterval,
    #[error("interval endpoints given in reverse order")]
    IntervalReversed,
    #[error("level {level} out of range (height {height})")]
    LevelOutOfRange { level: u32, height: u32 },
}

/// Report from [`validate_point`]; empty iff the point fits the tree.
#[derive(Debug, Clone, Default)]
pub struct PointReport {
    pub problems: Vec<String>,
}

impl PointReport {
    pub fn is_valid(&self) -> bool {
        self.problems.is_empty()
    }
}

impl fmt::Display for PointReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.problems.is_empty() {
            write!(f, "valid")
        } else {
            write!(f, "{}", self.problems.join("; "))
        }
    }
}

/// Colour of a rational: numerator in lowest terms, mod `n`, mapped into
/// `0..n`.
pub fn col(q: &BigRational, n: u32) -> u32 {
    let modulus = BigInt::from(n);
    let mut r = q.numer() % &modulus;
    if r.is_negative() {
        r += &modulus;
    }
    r.to_u32().expect("residue fits in u32")
}

/// Smallest-denominator rational strictly between `a` and `b` with the given
/// colour. Denominators are searched in ascending order and numerators
/// ascending within each denominator, so the result is reproducible.
pub fn between(
    a: &BigRational,
    b: &BigRational,
    colour: u32,
    n: u32,
) -> Result<BigRational, PointError> {
    if a >= b {
        return Err(PointError::EmptyInterval);
    }
    let mut denom = BigInt::one();
    loop {
        let d = BigRational::from_integer(denom.clone());
        let lo: BigInt = (a * &d).floor().to_integer() + 1;
        let hi: BigInt = (b * &d).ceil().to_integer() - 1;
        let mut p = lo;
        while p <= hi {
            let r = BigRational::new(p.clone(), denom.clone());
            if col(&r, n) == colour {
                return Ok(r);
            }
            p += 1;
        }
        denom += 1;
    }
}

/// Midpoint of two rationals; the deterministic colourless interior pick.
pub fn midpoint(a: &BigRational, b: &BigRational) -> BigRational {
    (a + b) / BigRational::from_integer(BigInt::from(2))
}

/// Whether `v` lies in the value domain of `label`.
pub(crate) fn fits(label: Label, v: &Value) -> bool {
    match (label, v) {
        (Label::Z, Value::Int(_)) => true,
        (Label::WStar, Value::Int(k)) => *k <= 0,
        (Label::Q | Label::Qn(_), Value::Rat(_)) => true,
        (Label::QDot | Label::QnDot(_), Value::Rat(_) | Value::Top) => true,
        _ => false,
    }
}

/// Whether `v` is the endpoint of `label`'s order.
fn is_endpoint(label: Label, v: &Value) -> bool {
    matches!(
        (label, v),
        (Label::WStar, Value::Int(0)) | (Label::QDot | Label::QnDot(_), Value::Top)
    )
}

/// Child index selected by `v` at a vertex of the given label, or an error
/// string when `v` does not fit the label.
fn route(t: &CodingTree, vertex: usize, v: &Value) -> Result<usize, String> {
    let label = t.vertex(vertex).label;
    if !fits(label, v) {
        return Err(format!(
            "value {v} does not fit label {label} at vertex {vertex}"
        ));
    }
    let children = &t.vertex(vertex).children;
    match label {
        Label::Z | Label::Q => Ok(children[0]),
        Label::WStar | Label::QDot => {
            if is_endpoint(label, v) {
                Ok(*children.last().unwrap())
            } else {
                Ok(children[0])
            }
        }
        Label::Qn(n) | Label::QnDot(n) => {
            if is_endpoint(label, v) {
                return Ok(*children.last().unwrap());
            }
            let r = match v {
                Value::Rat(r) => r,
                _ => unreachable!("fits() admits only rationals here"),
            };
            let m = col(r, n) as usize;
            Ok(left_children_by_rank(t, vertex)[m])
        }
        Label::Singleton => Err(format!("vertex {vertex} is a leaf")),
    }
}

/// The branch a point takes: vertex ids from root to leaf (`height + 1`
/// entries). Fails with the routing problem when the point does not fit.
pub fn branch(t: &CodingTree, p: &Point) -> Result<Vec<usize>, PointError> {
    let h = t.height();
    if p.values.len() != h as usize {
        return Err(PointError::InvalidPoint(format!(
            "point has {} values, tree height is {h}",
            p.values.len()
        )));
    }
    let mut out = Vec::with_capacity(h as usize + 1);
    let mut v = t.root();
    out.push(v);
    for value in &p.values {
        v = route(t, v, value).map_err(PointError::InvalidPoint)?;
        out.push(v);
    }
    Ok(out)
}

/// Checks every point constraint against the tree and reports all problems.
pub fn validate_point(t: &CodingTree, p: &Point) -> PointReport {
    let mut report = PointReport::default();
    let h = t.height();
    if p.values.len() != h as usize {
        report.problems.push(format!(
            "point has {} values, tree height is {h}",
            p.values.len()
        ));
        return report;
    }
    let mut v = t.root();
    for value in &p.values {
        match route(t, v, value) {
            Ok(next) => v = next,
            Err(msg) => {
                report.problems.push(msg);
                return report;
            }
        }
    }
    report
}

pub(crate) fn value_cmp(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.cmp(y),
        (Value::Rat(x), Value::Rat(y)) => x.cmp(y),
        (Value::Top, Value::Top) => Ordering::Equal,
        (Value::Top, Value::Rat(_)) => Ordering::Greater,
        (Value::Rat(_), Value::Top) => Ordering::Less,
        _ => unreachable!("valid points never mix integers with rationals at one vertex"),
    }
}

fn ensure_valid(t: &CodingTree, p: &Point) -> Result<(), PointError> {
    let report = validate_point(t, p);
    if report.is_valid() {
        Ok(())
    } else {
        Err(PointError::InvalidPoint(report.to_string()))
    }
}

/// Total-order comparison: points differ first at their topmost differing
/// level, and the values there decide.
pub fn compare(t: &CodingTree, p: &Point, q: &Point) -> Result<Ordering, PointError> {
    ensure_valid(t, p)?;
    ensure_valid(t, q)?;
    for (a, b) in p.values.iter().zip(q.values.iter()) {
        match value_cmp(a, b) {
            Ordering::Equal => continue,
            other => return Ok(other),
        }
    }
    Ok(Ordering::Equal)
}

/// The all-defaults point: endpoint values (rightmost branch) at endpoint
/// labels, zero everywhere else.
pub fn default_point(t: &CodingTree) -> Point {
    let h = t.height();
    let mut values = Vec::with_capacity(h as usize);
    let mut v = t.root();
    for _ in 0..h {
        let label = t.vertex(v).label;
        let value = match label {
            Label::Z => Value::Int(0),
            Label::WStar => Value::Int(0),
            Label::Q => Value::Rat(BigRational::zero()),
            Label::QDot | Label::QnDot(_) => Value::Top,
            Label::Qn(_) => Value::Rat(BigRational::zero()),
            Label::Singleton => unreachable!("leaves carry no value"),
        };
        v = route(t, v, &value).expect("default value always fits");
        values.push(value);
    }
    Point::new(values)
}

fn random_rational(rng: &mut ChaCha8Rng, magnitude: i64) -> BigRational {
    let m = magnitude.max(1);
    let num = rng.random_range(-m..=m);
    let den = rng.random_range(1..=m);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn random_value(rng: &mut ChaCha8Rng, label: Label, magnitude: i64) -> Value {
    let m = magnitude.max(1);
    match label {
        Label::Z => Value::Int(rng.random_range(-m..=m)),
        Label::WStar => Value::Int(rng.random_range(-m..=0)),
        Label::Q => Value::Rat(random_rational(rng, m)),
        Label::QDot => {
            if rng.random_range(0..=2 * m) == 0 {
                Value::Top
            } else {
                Value::Rat(random_rational(rng, m))
            }
        }
        Label::Qn(n) => Value::Rat(random_coloured(rng, m, n)),
        Label::QnDot(n) => {
            if rng.random_range(0..=2 * m) == 0 {
                Value::Top
            } else {
                Value::Rat(random_coloured(rng, m, n))
            }
        }
        Label::Singleton => unreachable!("leaves carry no value"),
    }
}

fn random_coloured(rng: &mut ChaCha8Rng, magnitude: i64, n: u32) -> BigRational {
    let target = rng.random_range(0..n);
    let r = random_rational(rng, magnitude);
    if col(&r, n) == target {
        r
    } else {
        let one = BigRational::one();
        between(&(&r - &one), &(&r + &one), target, n).expect("colour classes are dense")
    }
}

/// Seed-deterministic random point. Integer values stay within
/// `±magnitude`, rational values start from numerator and denominator within
/// `magnitude` and are nudged to a uniformly chosen colour.
pub fn random_point(t: &CodingTree, seed: u64, magnitude: i64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_point_with(t, &mut rng, magnitude)
}

/// Same as [`random_point`] but drawing from a caller-owned stream.
pub fn random_point_with(t: &CodingTree, rng: &mut ChaCha8Rng, magnitude: i64) -> Point {
    let h = t.height();
    let mut values = Vec::with_capacity(h as usize);
    let mut v = t.root();
    for _ in 0..h {
        let value = random_value(rng, t.vertex(v).label, magnitude);
        v = route(t, v, &value).expect("sampled value always fits");
        values.push(value);
    }
    Point::new(values)
}

/// Random point at or below `f`: with a small probability `f` itself,
/// otherwise the branch copies `f` above a uniformly chosen level, drops
/// strictly below it there, and is sampled freely further down.
pub fn random_point_below(
    t: &CodingTree,
    f: &Point,
    rng: &mut ChaCha8Rng,
    magnitude: i64,
) -> Point {
    let h = t.height();
    if h == 0 || rng.random_range(0..16) == 0 {
        return f.clone();
    }
    let m = magnitude.max(1);
    let diverge = rng.random_range(1..=h);
    let mut values = Vec::with_capacity(h as usize);
    let mut v = t.root();
    for level in (1..=h).rev() {
        let label = t.vertex(v).label;
        let value = match level.cmp(&diverge) {
            Ordering::Greater => f.at_level(h, level).clone(),
            Ordering::Equal => strictly_below(rng, label, f.at_level(h, level), m),
            Ordering::Less => random_value(rng, label, m),
        };
        v = route(t, v, &value).expect("sampled value always fits");
        values.push(value);
    }
    Point::new(values)
}

/// A fresh value strictly below `bound` in `label`'s order.
fn strictly_below(rng: &mut ChaCha8Rng, label: Label, bound: &Value, magnitude: i64) -> Value {
    let drop = rng.random_range(1..=magnitude);
    match bound {
        Value::Int(k) => Value::Int(k - drop),
        Value::Rat(r) => {
            let lo = r - BigRational::from_integer(BigInt::from(drop + 1));
            match label.colours() {
                Some(n) => {
                    let target = rng.random_range(0..n);
                    Value::Rat(between(&lo, r, target, n).expect("colour classes are dense"))
                }
                None => Value::Rat(midpoint(&lo, r)),
            }
        }
        Value::Top => {
            let r = random_rational(rng, magnitude);
            match label.colours() {
                Some(n) => {
                    let target = rng.random_range(0..n);
                    let one = BigRational::one();
                    if col(&r, n) == target {
                        Value::Rat(r)
                    } else {
                        Value::Rat(
                            between(&(&r - &one), &(&r + &one), target, n)
                                .expect("colour classes are dense"),
                        )
                    }
                }
                None => Value::Rat(r),
            }
        }
    }
}

/// Immediate successor, when one exists. Discreteness is decided at the
/// bottom level: only `Z` (always) and `w*` (below its endpoint) step up;
/// everything above is untouched because no label has a least element.
pub fn successor(t: &CodingTree, p: &Point) -> Result<Option<Point>, PointError> {
    ensure_valid(t, p)?;
    let h = t.height();
    if h == 0 {
        return Ok(None);
    }
    let b = branch(t, p)?;
    let bottom = t.vertex(b[h as usize - 1]).label;
    let value = p.at_level(h, 1);
    let next = match (bottom, value) {
        (Label::Z, Value::Int(k)) => Some(Value::Int(k + 1)),
        (Label::WStar, Value::Int(k)) if *k < 0 => Some(Value::Int(k + 1)),
        (Label::WStar, Value::Int(_)) => None,
        _ => None,
    };
    Ok(next.map(|v| {
        let mut q = p.clone();
        q.set_at_level(h, 1, v);
        q
    }))
}

/// Immediate predecessor, when one exists (for `w*` always; stepping below
/// the endpoint flips the branch back to the left child).
pub fn predecessor(t: &CodingTree, p: &Point) -> Result<Option<Point>, PointError> {
    ensure_valid(t, p)?;
    let h = t.height();
    if h == 0 {
        return Ok(None);
    }
    let b = branch(t, p)?;
    let bottom = t.vertex(b[h as usize - 1]).label;
    let value = p.at_level(h, 1);
    let prev = match (bottom, value) {
        (Label::Z | Label::WStar, Value::Int(k)) => Some(Value::Int(k - 1)),
        _ => None,
    };
    Ok(prev.map(|v| {
        let mut q = p.clone();
        q.set_at_level(h, 1, v);
        q
    }))
}

/// Whether `p` and `q` are finitely far apart: equal, or separated only at a
/// discrete bottom level.
pub fn fin_equiv(t: &CodingTree, p: &Point, q: &Point) -> Result<bool, PointError> {
    ensure_valid(t, p)?;
    ensure_valid(t, q)?;
    if p == q {
        return Ok(true);
    }
    let h = t.height() as usize;
    if p.values[..h - 1] != q.values[..h - 1] {
        return Ok(false);
    }
    let b = branch(t, p)?;
    let bottom = t.vertex(b[h - 1]).label;
    Ok(matches!(bottom, Label::Z | Label::WStar))
}

/// All points of the closed interval `[p, q]`, in order. Errors when the
/// interval is infinite.
pub fn enumerate_interval(t: &CodingTree, p: &Point, q: &Point) -> Result<Vec<Point>, PointError> {
    match compare(t, p, q)? {
        Ordering::Greater => return Err(PointError::IntervalReversed),
        Ordering::Equal => return Ok(vec![p.clone()]),
        Ordering::Less => {}
    }
    if !fin_equiv(t, p, q)? {
        return Err(PointError::InfiniteInterval);
    }
    let h = t.height();
    let (a, b) = match (p.at_level(h, 1), q.at_level(h, 1)) {
        (Value::Int(a), Value::Int(b)) => (*a, *b),
        _ => unreachable!("finite intervals have integer bottoms"),
    };
    Ok((a..=b)
        .map(|k| {
            let mut r = p.clone();
            r.set_at_level(h, 1, Value::Int(k));
            r
        })
        .collect())
}

/// Whether `p` and `q` agree at every level strictly above `i` — the
/// level-`i` block partition of the order.
pub fn level_equiv(
    t: &CodingTree,
    p: &Point,
    q: &Point,
    i: u32,
) -> Result<bool, PointError> {
    let h = t.height();
    if i > h {
        return Err(PointError::LevelOutOfRange { level: i, height: h });
    }
    ensure_valid(t, p)?;
    ensure_valid(t, q)?;
    let cut = (h - i) as usize;
    Ok(p.values[..cut] == q.values[..cut])
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(k) => json!({ "int": k }),
        Value::Rat(r) => json!({ "rat": format!("{}/{}", r.numer(), r.denom()) }),
        Value::Top => json!({ "top": true }),
    }
}

pub fn value_from_json(v: &Json) -> Result<Value, PointError> {
    let obj = v
        .as_object()
        .ok_or_else(|| PointError::InvalidPoint(format!("bad value {v}")))?;
    if let Some(k) = obj.get("int") {
        let k = k
            .as_i64()
            .ok_or_else(|| PointError::InvalidPoint(format!("bad integer {k}")))?;
        return Ok(Value::Int(k));
    }
    if let Some(r) = obj.get("rat") {
        let s = r
            .as_str()
            .ok_or_else(|| PointError::InvalidPoint(format!("bad rational {r}")))?;
        return Ok(Value::Rat(parse_rational(s)?));
    }
    if obj.get("top").and_then(Json::as_bool) == Some(true) {
        return Ok(Value::Top);
    }
    Err(PointError::InvalidPoint(format!("bad value {v}")))
}

/// Parses `p/q` or a bare integer into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, PointError> {
    let bad = || PointError::InvalidPoint(format!("bad rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

pub fn point_to_json(p: &Point) -> Json {
    json!({ "values": p.values.iter().map(value_to_json).collect::<Vec<_>>() })
}

pub fn point_from_json(v: &Json) -> Result<Point, PointError> {
    let values = v
        .get("values")
        .and_then(Json::as_array)
        .ok_or_else(|| PointError::InvalidPoint("missing \"values\" array".into()))?;
    Ok(Point::new(
        values
            .iter()
            .map(value_from_json)
            .collect::<Result<Vec<_>, _>>()?,
    ))
}

pub fn point_from_json_str(s: &str) -> Result<Point, PointError> {
    let v: Json =
        serde_json::from_str(s).map_err(|e| PointError::InvalidPoint(e.to_string()))?;
    point_from_json(&v)
}
