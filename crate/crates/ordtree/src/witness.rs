//! Executable witnesses for lower 1-transitivity.
//!
//! Given anchors `f` and `g`, the initial segments below them split into
//! strata: the points first differing from the anchor at level `i`. The
//! witness maps a point by copying the target anchor above `i`, pushing the
//! level-`i` value through a memoized segment isomorphism, and carrying the
//! values below `i` over unchanged (left forests at a level are isomorphic
//! with colours matched by subtree rank, so the carried values stay valid).
//!
//! Segment isomorphisms between discrete values are closed-form shifts;
//! between dense values they are built lazily, back and forth, one query at
//! a time. Only consistency of the recorded pairs is promised — the specific
//! images are an implementation choice.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::point::{
    between, branch, col, compare, fits, level_equiv, midpoint, point_to_json, random_point_below,
    validate_point, value_cmp, value_to_json, Point, PointError, Value,
};
use crate::tree::{
    label_lower_equiv, left_children_by_rank, signature, validate, CodingTree, Label, TreeError,
};

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("labels {0} and {1} are not lower-equivalent")]
    LabelMismatch(Label, Label),
    #[error("bad segment anchor: {0}")]
    BadAnchor(String),
    #[error("value {0} lies above the segment anchor")]
    OutOfSegment(Value),
    #[error("point is not strictly below the anchor")]
    NotStrictlyBelow,
    #[error("point first differs from the anchor at level {found}, not {expected}")]
    NotInGamma { expected: u32, found: u32 },
    #[error("trees have different signatures")]
    SignatureMismatch,
    #[error(transparent)]
    Point(#[from] PointError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Order isomorphism between the value segments `(-∞, a]` and `(-∞, b]` of
/// two lower-equivalent labels, with `a ↦ b`.
///
/// Discrete pairs are total shifts. Dense pairs grow a memo of aligned
/// pairs: a new query lands strictly between the images of its memoized
/// neighbours, colour-preserving below the anchors when the labels are
/// shuffles. Repeated queries always return the recorded image.
#[derive(Debug, Clone)]
pub struct SegmentIso {
    source_label: Label,
    target_label: Label,
    anchor_source: Value,
    anchor_target: Value,
    kind: SegmentKind,
}

#[derive(Debug, Clone)]
enum SegmentKind {
    /// `v ↦ v + shift`, image of the whole discrete segment.
    Shift(i64),
    /// Lazily matched dense segments; `colours` is the shuffle width when
    /// colour preservation applies.
    Dense {
        forward: BTreeMap<BigRational, BigRational>,
        backward: BTreeMap<BigRational, BigRational>,
        colours: Option<u32>,
    },
}

impl SegmentIso {
    pub fn new(
        source_label: Label,
        a: Value,
        target_label: Label,
        b: Value,
    ) -> Result<Self, WitnessError> {
        if !label_lower_equiv(source_label, target_label) {
            return Err(WitnessError::LabelMismatch(source_label, target_label));
        }
        if !fits(source_label, &a) {
            return Err(WitnessError::BadAnchor(format!(
                "{a} does not fit {source_label}"
            )));
        }
        if !fits(target_label, &b) {
            return Err(WitnessError::BadAnchor(format!(
                "{b} does not fit {target_label}"
            )));
        }
        let kind = match (&a, &b) {
            (Value::Int(x), Value::Int(y)) => SegmentKind::Shift(y - x),
            _ => SegmentKind::Dense {
                forward: BTreeMap::new(),
                backward: BTreeMap::new(),
                colours: source_label.colours(),
            },
        };
        Ok(SegmentIso {
            source_label,
            target_label,
            anchor_source: a,
            anchor_target: b,
            kind,
        })
    }

    pub fn source_label(&self) -> Label {
        self.source_label
    }

    pub fn target_label(&self) -> Label {
        self.target_label
    }

    /// Image of `v ≤ a`.
    pub fn image(&mut self, v: &Value) -> Result<Value, WitnessError> {
        if value_cmp(v, &self.anchor_source) == std::cmp::Ordering::Greater {
            return Err(WitnessError::OutOfSegment(v.clone()));
        }
        if *v == self.anchor_source {
            return Ok(self.anchor_target.clone());
        }
        match &mut self.kind {
            SegmentKind::Shift(shift) => match v {
                Value::Int(x) => Ok(Value::Int(x + *shift)),
                _ => Err(WitnessError::OutOfSegment(v.clone())),
            },
            SegmentKind::Dense { forward, backward, colours } => {
                let r = match v {
                    Value::Rat(r) => r.clone(),
                    // Top below a distinct anchor cannot occur: Top is the
                    // greatest value of its label.
                    _ => return Err(WitnessError::OutOfSegment(v.clone())),
                };
                if let Some(img) = forward.get(&r) {
                    return Ok(Value::Rat(img.clone()));
                }
                let lower = forward.range(..r.clone()).next_back().map(|(_, i)| i.clone());
                let upper = forward
                    .range(r.clone()..)
                    .next()
                    .map(|(_, i)| i.clone())
                    .or_else(|| match &self.anchor_target {
                        Value::Rat(b) => Some(b.clone()),
                        _ => None,
                    });
                let colour = colours.map(|n| (col(&r, n), n));
                let img = pick_strictly_between(lower.as_ref(), upper.as_ref(), colour);
                forward.insert(r.clone(), img.clone());
                backward.insert(img.clone(), r);
                Ok(Value::Rat(img))
            }
        }
    }

    /// Preimage of `w ≤ b`; shares the memo with [`SegmentIso::image`], so
    /// round trips are exact on every queried pair.
    pub fn preimage(&mut self, w: &Value) -> Result<Value, WitnessError> {
        if value_cmp(w, &self.anchor_target) == std::cmp::Ordering::Greater {
            return Err(WitnessError::OutOfSegment(w.clone()));
        }
        if *w == self.anchor_target {
            return Ok(self.anchor_source.clone());
        }
        match &mut self.kind {
            SegmentKind::Shift(shift) => match w {
                Value::Int(y) => Ok(Value::Int(y - *shift)),
                _ => Err(WitnessError::OutOfSegment(w.clone())),
            },
            SegmentKind::Dense { forward, backward, colours } => {
                let r = match w {
                    Value::Rat(r) => r.clone(),
                    _ => return Err(WitnessError::OutOfSegment(w.clone())),
                };
                if let Some(src) = backward.get(&r) {
                    return Ok(Value::Rat(src.clone()));
                }
                let lower = backward.range(..r.clone()).next_back().map(|(_, s)| s.clone());
                let upper = backward
                    .range(r.clone()..)
                    .next()
                    .map(|(_, s)| s.clone())
                    .or_else(|| match &self.anchor_source {
                        Value::Rat(a) => Some(a.clone()),
                        _ => None,
                    });
                let colour = colours.map(|n| (col(&r, n), n));
                let src = pick_strictly_between(lower.as_ref(), upper.as_ref(), colour);
                backward.insert(r.clone(), src.clone());
                forward.insert(src.clone(), r);
                Ok(Value::Rat(src))
            }
        }
    }
}

/// Deterministic rational strictly between the bounds (`None` meaning
/// unbounded on that side), of the requested colour when one applies.
fn pick_strictly_between(
    lower: Option<&BigRational>,
    upper: Option<&BigRational>,
    colour: Option<(u32, u32)>,
) -> BigRational {
    let one = BigRational::one();
    match (lower, upper, colour) {
        (Some(l), Some(u), Some((c, n))) => between(l, u, c, n).expect("bounds are strict"),
        (Some(l), Some(u), None) => midpoint(l, u),
        (Some(l), None, Some((c, n))) => between(l, &(l + &one), c, n).expect("nonempty"),
        (Some(l), None, None) => l + &one,
        (None, Some(u), Some((c, n))) => between(&(u - &one), u, c, n).expect("nonempty"),
        (None, Some(u), None) => u - &one,
        (None, None, Some((c, n))) => {
            between(&(-&one), &one, c, n).expect("nonempty")
        }
        (None, None, None) => BigRational::zero(),
    }
}

/// Builds a segment isomorphism between two anchored values.
pub fn segment_iso(
    source_label: Label,
    a: Value,
    target_label: Label,
    b: Value,
) -> Result<SegmentIso, WitnessError> {
    SegmentIso::new(source_label, a, target_label, b)
}

/// Label- and level-preserving bijection between the left forests of two
/// same-level vertices, matching subtrees by canonical code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestIso {
    pub map: BTreeMap<usize, usize>,
}

/// The unique isomorphism between the left forests of `v1` and `v2` in one
/// tree. Fails only on invalid trees.
pub fn forest_iso_map(t: &CodingTree, v1: usize, v2: usize) -> Result<ForestIso, WitnessError> {
    forest_iso_between(t, v1, t, v2)
}

/// Cross-tree variant of [`forest_iso_map`].
pub fn forest_iso_between(
    t1: &CodingTree,
    v1: usize,
    t2: &CodingTree,
    v2: usize,
) -> Result<ForestIso, WitnessError> {
    let ranked1 = left_children_by_rank(t1, v1);
    let ranked2 = left_children_by_rank(t2, v2);
    if ranked1.len() != ranked2.len() {
        return Err(WitnessError::Tree(TreeError::NotIsomorphic(v1, v2)));
    }
    let mut map = BTreeMap::new();
    for (&c1, &c2) in ranked1.iter().zip(ranked2.iter()) {
        if crate::tree::iso_code(t1, c1) != crate::tree::iso_code(t2, c2) {
            return Err(WitnessError::Tree(TreeError::NotIsomorphic(v1, v2)));
        }
        pair_whole_subtrees(t1, c1, t2, c2, &mut map);
    }
    Ok(ForestIso { map })
}

fn pair_whole_subtrees(
    t1: &CodingTree,
    v1: usize,
    t2: &CodingTree,
    v2: usize,
    map: &mut BTreeMap<usize, usize>,
) {
    map.insert(v1, v2);
    let ranked1 = left_children_by_rank(t1, v1);
    let ranked2 = left_children_by_rank(t2, v2);
    for (&c1, &c2) in ranked1.iter().zip(ranked2.iter()) {
        pair_whole_subtrees(t1, c1, t2, c2, map);
    }
    if let (Some(r1), Some(r2)) = (
        t1.vertex(v1).right_child(),
        t2.vertex(v2).right_child(),
    ) {
        pair_whole_subtrees(t1, r1, t2, r2, map);
    }
}

/// The topmost level where `p` differs from the anchor `f`; requires
/// `p < f`, so the value there is strictly smaller.
pub fn gamma_index(t: &CodingTree, f: &Point, p: &Point) -> Result<u32, WitnessError> {
    if compare(t, p, f)? != std::cmp::Ordering::Less {
        return Err(WitnessError::NotStrictlyBelow);
    }
    let h = t.height();
    for (idx, (pv, fv)) in p.values.iter().zip(f.values.iter()).enumerate() {
        if pv != fv {
            return Ok(h - idx as u32);
        }
    }
    unreachable!("strictly smaller points differ somewhere")
}

fn splice(h: u32, above: &Point, at: Value, below: &Point, level: u32) -> Point {
    let cut = (h - level) as usize;
    let mut values = Vec::with_capacity(h as usize);
    values.extend_from_slice(&above.values[..cut]);
    values.push(at);
    values.extend_from_slice(&below.values[cut + 1..]);
    Point::new(values)
}

/// The stratum map at level `i`: target-anchor values above `i`, the segment
/// image at `i`, the source values below. Membership of `p` in the level-`i`
/// stratum is recomputed, not trusted.
pub fn phi_i(
    t: &CodingTree,
    f: &Point,
    g: &Point,
    i: u32,
    p: &Point,
) -> Result<Point, WitnessError> {
    let mut w = Witness::new(t.clone(), f.clone(), t.clone(), g.clone())?;
    let found = gamma_index(t, f, p)?;
    if found != i {
        return Err(WitnessError::NotInGamma { expected: i, found });
    }
    w.map(p)
}

/// Trace of one witness query, for audit export.
#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub direction: &'static str,
    pub point: Point,
    pub image: Point,
    pub level: Option<u32>,
    pub segment_pair: Option<(Value, Value)>,
}

impl TraceEntry {
    pub fn to_json(&self) -> Json {
        json!({
            "direction": self.direction,
            "point": point_to_json(&self.point),
            "image": point_to_json(&self.image),
            "level": self.level,
            "segment_pair": self.segment_pair.as_ref().map(|(a, b)| {
                json!([value_to_json(a), value_to_json(b)])
            }),
        })
    }
}

/// An initial-segment isomorphism `(-∞, f] → (-∞, g]`, built stratum by
/// stratum with one memoized segment isomorphism per level. Queries mutate
/// the memo, so a witness needs exclusive access; distinct witnesses are
/// independent.
#[derive(Debug)]
pub struct Witness {
    source: CodingTree,
    target: CodingTree,
    f: Point,
    g: Point,
    branch_f: Vec<usize>,
    branch_g: Vec<usize>,
    segments: BTreeMap<u32, SegmentIso>,
    trace: Vec<TraceEntry>,
}

impl Witness {
    fn new(
        source: CodingTree,
        f: Point,
        target: CodingTree,
        g: Point,
    ) -> Result<Self, WitnessError> {
        let fr = validate_point(&source, &f);
        if !fr.is_valid() {
            return Err(WitnessError::Point(PointError::InvalidPoint(fr.to_string())));
        }
        let gr = validate_point(&target, &g);
        if !gr.is_valid() {
            return Err(WitnessError::Point(PointError::InvalidPoint(gr.to_string())));
        }
        let branch_f = branch(&source, &f)?;
        let branch_g = branch(&target, &g)?;
        Ok(Witness {
            source,
            target,
            f,
            g,
            branch_f,
            branch_g,
            segments: BTreeMap::new(),
            trace: Vec::new(),
        })
    }

    pub fn anchors(&self) -> (&Point, &Point) {
        (&self.f, &self.g)
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn trace_json(&self) -> Json {
        Json::Array(self.trace.iter().map(TraceEntry::to_json).collect())
    }

    fn segment_at(&mut self, level: u32) -> Result<&mut SegmentIso, WitnessError> {
        let h = self.source.height();
        if !self.segments.contains_key(&level) {
            let vf = self.branch_f[(h - level) as usize];
            let vg = self.branch_g[(h - level) as usize];
            let iso = SegmentIso::new(
                self.source.label(vf),
                self.f.at_level(h, level).clone(),
                self.target.label(vg),
                self.g.at_level(h, level).clone(),
            )?;
            self.segments.insert(level, iso);
        }
        Ok(self.segments.get_mut(&level).unwrap())
    }

    /// Image of `p ≤ f`.
    pub fn map(&mut self, p: &Point) -> Result<Point, WitnessError> {
        if *p == self.f {
            self.trace.push(TraceEntry {
                direction: "map",
                point: p.clone(),
                image: self.g.clone(),
                level: None,
                segment_pair: None,
            });
            return Ok(self.g.clone());
        }
        let i = gamma_index(&self.source, &self.f, p)?;
        let h = self.source.height();
        let src_val = p.at_level(h, i).clone();
        let img_val = self.segment_at(i)?.image(&src_val)?;
        let result = splice(h, &self.g, img_val.clone(), p, i);
        debug_assert!(
            validate_point(&self.target, &result).is_valid(),
            "witness image must be a valid point: {}",
            validate_point(&self.target, &result)
        );
        self.trace.push(TraceEntry {
            direction: "map",
            point: p.clone(),
            image: result.clone(),
            level: Some(i),
            segment_pair: Some((src_val, img_val)),
        });
        Ok(result)
    }

    /// Preimage of `q ≤ g`; exact inverse of [`Witness::map`] on queried
    /// points.
    pub fn inverse(&mut self, q: &Point) -> Result<Point, WitnessError> {
        if *q == self.g {
            self.trace.push(TraceEntry {
                direction: "inverse",
                point: q.clone(),
                image: self.f.clone(),
                level: None,
                segment_pair: None,
            });
            return Ok(self.f.clone());
        }
        let i = gamma_index(&self.target, &self.g, q)?;
        let h = self.target.height();
        let img_val = q.at_level(h, i).clone();
        let src_val = self.segment_at(i)?.preimage(&img_val)?;
        let result = splice(h, &self.f, src_val.clone(), q, i);
        debug_assert!(
            validate_point(&self.source, &result).is_valid(),
            "witness preimage must be a valid point: {}",
            validate_point(&self.source, &result)
        );
        self.trace.push(TraceEntry {
            direction: "inverse",
            point: q.clone(),
            image: result.clone(),
            level: Some(i),
            segment_pair: Some((src_val, img_val)),
        });
        Ok(result)
    }
}

/// Witness between two anchors of one tree.
pub fn initial_segment_witness(
    t: &CodingTree,
    f: &Point,
    g: &Point,
) -> Result<Witness, WitnessError> {
    Witness::new(t.clone(), f.clone(), t.clone(), g.clone())
}

/// Witness across two trees; requires equal signatures, which pair the
/// levels, the label classes, the left forests and the subtree-rank colours.
pub fn cross_tree_witness(
    t1: &CodingTree,
    f: &Point,
    t2: &CodingTree,
    g: &Point,
) -> Result<Witness, WitnessError> {
    if signature(t1)? != signature(t2)? {
        return Err(WitnessError::SignatureMismatch);
    }
    Witness::new(t1.clone(), f.clone(), t2.clone(), g.clone())
}

/// The level-`i` block of `p`, named by its branch vertex at level `i`
/// together with the values strictly above. Two points share a block exactly
/// when both components agree.
pub fn expanded_vertex(
    t: &CodingTree,
    p: &Point,
    i: u32,
) -> Result<(usize, Vec<Value>), PointError> {
    let h = t.height();
    if i > h {
        return Err(PointError::LevelOutOfRange { level: i, height: h });
    }
    let b = branch(t, p)?;
    let cut = (h - i) as usize;
    Ok((b[cut], p.values[..cut].to_vec()))
}

/// Outcome of [`invariance_check`].
#[derive(Debug, Clone, Default)]
pub struct InvarianceReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl InvarianceReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples pairs below `f` and checks that the witness to `g` preserves the
/// level-`i` block partition in both directions of the equivalence.
pub fn invariance_check(
    t: &CodingTree,
    i: u32,
    f: &Point,
    g: &Point,
    sample_count: usize,
    seed: u64,
) -> Result<InvarianceReport, WitnessError> {
    let report = validate(t);
    if !report.is_valid() {
        return Err(WitnessError::Tree(TreeError::InvalidTree(report.to_string())));
    }
    let h = t.height();
    if i > h {
        return Err(WitnessError::Point(PointError::LevelOutOfRange {
            level: i,
            height: h,
        }));
    }
    let mut witness = initial_segment_witness(t, f, g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = InvarianceReport::default();
    for _ in 0..sample_count {
        let p = random_point_below(t, f, &mut rng, 5);
        let q = random_point_below(t, f, &mut rng, 5);
        let before = level_equiv(t, &p, &q, i)?;
        let fp = witness.map(&p)?;
        let fq = witness.map(&q)?;
        let after = level_equiv(t, &fp, &fq, i)?;
        out.checked += 1;
        if before != after {
            out.violations.push(format!(
                "level {i}: {p} ~ {q} is {before}, but {fp} ~ {fq} is {after}"
            ));
        }
    }
    Ok(out)
}
