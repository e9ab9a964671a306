//! Finite levelled labelled trees that describe how a countable linear order
//! is assembled from discrete shifts, dense shuffles and endpoint
//! concatenations.
//!
//! A tree is stored as a flat vertex table with an explicit root. Nothing is
//! enforced at construction time beyond index validity: [`validate`] reports
//! the structural rules (V1–V7) individually, so invalid trees can be built,
//! inspected and repaired (see [`canonicalize`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Value as Json};
use thiserror::Error;

/// Vertex label: the order type a vertex contributes.
///
/// `Qn(n)` / `QnDot(n)` are dense shuffles of `n ≥ 2` interleaved part
/// classes; the `Dot` forms carry a greatest point (their last child is the
/// designated right child).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Z,
    WStar,
    Q,
    QDot,
    Qn(u32),
    QnDot(u32),
    Singleton,
}

/// Lower-equivalence class of a label. Two labels compare interchangeably at
/// a level exactly when their classes are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelClass {
    /// `Z` and `w*`.
    Discrete,
    /// `Q` and `Qd`.
    Dense,
    /// `Q_n` and `Qd_n`, keyed by the number of part classes.
    Mix(u32),
    /// Leaves.
    Leaf,
}

impl Label {
    /// Number of children the label demands.
    pub fn arity(self) -> usize {
        match self {
            Label::Z | Label::Q => 1,
            Label::WStar | Label::QDot => 2,
            Label::Qn(n) => n as usize,
            Label::QnDot(n) => n as usize + 1,
            Label::Singleton => 0,
        }
    }

    /// Whether the label's order has a greatest point (and hence the vertex
    /// has a designated right child).
    pub fn has_endpoint(self) -> bool {
        matches!(self, Label::WStar | Label::QDot | Label::QnDot(_))
    }

    /// Whether the label's order is dense (no point has a successor).
    pub fn is_dense(self) -> bool {
        matches!(self, Label::Q | Label::QDot | Label::Qn(_) | Label::QnDot(_))
    }

    /// Number of colours when the label is a dense shuffle.
    pub fn colours(self) -> Option<u32> {
        match self {
            Label::Qn(n) | Label::QnDot(n) => Some(n),
            _ => None,
        }
    }

    pub fn class(self) -> LabelClass {
        match self {
            Label::Z | Label::WStar => LabelClass::Discrete,
            Label::Q | Label::QDot => LabelClass::Dense,
            Label::Qn(n) | Label::QnDot(n) => LabelClass::Mix(n),
            Label::Singleton => LabelClass::Leaf,
        }
    }

    /// Tag used inside canonical codes. Chosen so that endpoint-bearing
    /// labels sort before their endpoint-free partners.
    fn code_tag(self) -> String {
        match self {
            Label::Singleton => "1".into(),
            Label::WStar => "a".into(),
            Label::Z => "b".into(),
            Label::QDot => "c".into(),
            Label::Q => "d".into(),
            Label::QnDot(n) => format!("e{n}"),
            Label::Qn(n) => format!("f{n}"),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Z => write!(f, "Z"),
            Label::WStar => write!(f, "w*"),
            Label::Q => write!(f, "Q"),
            Label::QDot => write!(f, "Qd"),
            Label::Qn(n) => write!(f, "Q_{n}"),
            Label::QnDot(n) => write!(f, "Qd_{n}"),
            Label::Singleton => write!(f, "1"),
        }
    }
}

impl fmt::Display for LabelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelClass::Discrete => write!(f, "Z"),
            LabelClass::Dense => write!(f, "Q"),
            LabelClass::Mix(n) => write!(f, "Q_{n}"),
            LabelClass::Leaf => write!(f, "1"),
        }
    }
}

/// Decides whether two labels may share a level.
pub fn label_lower_equiv(a: Label, b: Label) -> bool {
    a.class() == b.class()
}

/// One vertex of a [`CodingTree`]. Children are ordered; when the label has
/// an endpoint the last child is the right child and all others are left
/// children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub label: Label,
    pub level: u32,
    pub children: Vec<usize>,
}

impl Vertex {
    pub fn right_child(&self) -> Option<usize> {
        if self.label.has_endpoint() {
            self.children.last().copied()
        } else {
            None
        }
    }

    pub fn left_children(&self) -> &[usize] {
        if self.label.has_endpoint() && !self.children.is_empty() {
            &self.children[..self.children.len() - 1]
        } else {
            &self.children
        }
    }
}

/// A rooted levelled labelled tree stored as a vertex table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingTree {
    vertices: Vec<Vertex>,
    root: usize,
}

/// Canonical code of a subtree; equal codes mean isomorphic subtrees (labels
/// and levels preserved, left-child multisets unordered, right child matched
/// to right child). Codes are plain strings, stable across runs.
pub type IsoCode = String;

/// A level-indexed summary of a tree: one `(label class, left-forest code)`
/// pair per level, top-down. Equality of signatures is the decision rule for
/// lower isomorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature(pub Vec<(LabelClass, IsoCode)>);

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (class, forest)) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{class} [{forest}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("vertex id {0} out of range")]
    BadVertexId(usize),
    #[error("vertex {0} is not a parent")]
    NotAParent(usize),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid input tree: {0}")]
    InvalidInput(String),
    #[error("level {level} out of range (height {height})")]
    LevelOutOfRange { level: u32, height: u32 },
    #[error("decode error: {0}")]
    Decode(String),
    #[error("left forests are not isomorphic at vertices {0} and {1}")]
    NotIsomorphic(usize, usize),
}

/// Which structural rule a violation breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// V1: single root, unique parents, everything reachable, root level =
    /// height.
    Rootedness(String),
    /// V2: parent level = child level + 1; leaves exactly at level 0.
    Levelling { vertex: usize, detail: String },
    /// V3: arity matches label.
    Arity { vertex: usize, expected: usize, found: usize },
    /// V4: same-level labels lower-equivalent.
    LabelMix { level: u32, a: usize, b: usize },
    /// V5: same-level left forests isomorphic.
    ForestMix { level: u32, a: usize, b: usize },
    /// V6: left siblings pairwise non-isomorphic.
    IsomorphicLeftSiblings { parent: usize, a: usize, b: usize },
    /// V7: every vertex is a leaf or above one.
    Grounding { vertex: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Rootedness(d) => write!(f, "V1 {d}"),
            Violation::Levelling { vertex, detail } => write!(f, "V2 vertex {vertex}: {detail}"),
            Violation::Arity { vertex, expected, found } => {
                write!(f, "V3 vertex {vertex}: expected {expected} children, found {found}")
            }
            Violation::LabelMix { level, a, b } => {
                write!(f, "V4 level {level}: labels at vertices {a} and {b} not lower-equivalent")
            }
            Violation::ForestMix { level, a, b } => {
                write!(f, "V5 level {level}: left forests at vertices {a} and {b} differ")
            }
            Violation::IsomorphicLeftSiblings { parent, a, b } => {
                write!(f, "V6 parent {parent}: left children {a} and {b} carry isomorphic subtrees")
            }
            Violation::Grounding { vertex } => {
                write!(f, "V7 vertex {vertex}: not a leaf and not above one")
            }
        }
    }
}

/// Result of [`validate`]: empty iff the tree satisfies every rule.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            write!(f, "valid")
        } else {
            for (i, v) in self.violations.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

impl CodingTree {
    /// Builds a tree from a vertex table. Only index validity is checked;
    /// run [`validate`] for the structural rules.
    pub fn new(vertices: Vec<Vertex>, root: usize) -> Result<Self, TreeError> {
        if root >= vertices.len() {
            return Err(TreeError::BadVertexId(root));
        }
        for v in &vertices {
            if let Some(&c) = v.children.iter().find(|&&c| c >= vertices.len()) {
                return Err(TreeError::BadVertexId(c));
            }
        }
        Ok(CodingTree { vertices, root })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn vertex(&self, id: usize) -> &Vertex {
        &self.vertices[id]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Root level. Equals the leaf distance for valid trees.
    pub fn height(&self) -> u32 {
        self.vertices[self.root].level
    }

    pub fn label(&self, id: usize) -> Label {
        self.vertices[id].label
    }

    /// Vertices grouped by level, each group in id order.
    pub fn by_level(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut map: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (id, v) in self.vertices.iter().enumerate() {
            map.entry(v.level).or_default().push(id);
        }
        map
    }

    /// Ids of the whole subtree rooted at `v`, preorder. Cycle-safe.
    pub fn subtree(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if seen[u] {
                continue;
            }
            seen[u] = true;
            out.push(u);
            for &c in self.vertices[u].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }
}

/// Checks the structural rules V1–V7 one by one and reports every violation
/// with the offending vertices.
pub fn validate(t: &CodingTree) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = t.vertices.len();

    // V1: parent uniqueness, single root, reachability, root level = height.
    let mut parent_count = vec![0usize; n];
    for v in &t.vertices {
        for &c in &v.children {
            parent_count[c] += 1;
        }
    }
    if parent_count[t.root] != 0 {
        report
            .violations
            .push(Violation::Rootedness(format!("root {} has a parent", t.root)));
    }
    for (id, &k) in parent_count.iter().enumerate() {
        if id != t.root && k == 0 {
            report
                .violations
                .push(Violation::Rootedness(format!("vertex {id} is a second root")));
        }
        if k > 1 {
            report
                .violations
                .push(Violation::Rootedness(format!("vertex {id} has {k} parents")));
        }
    }
    let reach = t.subtree(t.root);
    if reach.len() != n {
        let missing: Vec<usize> = (0..n).filter(|i| !reach.contains(i)).collect();
        report.violations.push(Violation::Rootedness(format!(
            "vertices {missing:?} unreachable from the root"
        )));
    }
    let max_depth = {
        // longest root-to-descendant edge distance, cycle-safe
        let mut depth = vec![None::<u32>; n];
        depth[t.root] = Some(0);
        let mut best = 0;
        for &u in &reach {
            if let Some(d) = depth[u] {
                best = best.max(d);
                for &c in &t.vertices[u].children {
                    if depth[c].is_none() {
                        depth[c] = Some(d + 1);
                    }
                }
            }
        }
        best
    };
    if t.vertices[t.root].level != max_depth {
        report.violations.push(Violation::Rootedness(format!(
            "root level {} differs from tree height {max_depth}",
            t.vertices[t.root].level
        )));
    }

    // V2: level decrements along edges; leaves exactly at level 0.
    for (id, v) in t.vertices.iter().enumerate() {
        for &c in &v.children {
            if t.vertices[c].level + 1 != v.level {
                report.violations.push(Violation::Levelling {
                    vertex: c,
                    detail: format!(
                        "level {} under parent {id} of level {}",
                        t.vertices[c].level, v.level
                    ),
                });
            }
        }
        if v.children.is_empty() && v.level != 0 {
            report.violations.push(Violation::Levelling {
                vertex: id,
                detail: format!("leaf at level {}", v.level),
            });
        }
        if !v.children.is_empty() && v.level == 0 {
            report.violations.push(Violation::Levelling {
                vertex: id,
                detail: "parent vertex at level 0".into(),
            });
        }
    }

    // V3: arity matches label.
    for (id, v) in t.vertices.iter().enumerate() {
        if v.children.len() != v.label.arity() {
            report.violations.push(Violation::Arity {
                vertex: id,
                expected: v.label.arity(),
                found: v.children.len(),
            });
        }
    }

    // V4: labels at a level pairwise lower-equivalent.
    for (level, ids) in t.by_level() {
        for pair in ids.windows(2) {
            if !label_lower_equiv(t.vertices[pair[0]].label, t.vertices[pair[1]].label) {
                report.violations.push(Violation::LabelMix {
                    level,
                    a: pair[0],
                    b: pair[1],
                });
            }
        }
    }

    // V5: left forests at a level pairwise isomorphic.
    for (level, ids) in t.by_level() {
        for pair in ids.windows(2) {
            if forest_code(t, t.vertices[pair[0]].left_children())
                != forest_code(t, t.vertices[pair[1]].left_children())
            {
                report.violations.push(Violation::ForestMix {
                    level,
                    a: pair[0],
                    b: pair[1],
                });
            }
        }
    }

    // V6: left siblings pairwise non-isomorphic.
    for (id, v) in t.vertices.iter().enumerate() {
        let lefts = v.left_children();
        for i in 0..lefts.len() {
            for j in i + 1..lefts.len() {
                if iso_code(t, lefts[i]) == iso_code(t, lefts[j]) {
                    report.violations.push(Violation::IsomorphicLeftSiblings {
                        parent: id,
                        a: lefts[i],
                        b: lefts[j],
                    });
                }
            }
        }
    }

    // V7: every vertex sits above a leaf. Automatic for well-formed finite
    // trees; can only fire on tables that already break V1.
    for (id, _) in t.vertices.iter().enumerate() {
        let grounded = t
            .subtree(id)
            .iter()
            .any(|&u| t.vertices[u].children.is_empty());
        if !grounded {
            report.violations.push(Violation::Grounding { vertex: id });
        }
    }

    report
}

/// Canonical code of the subtree rooted at `v`.
pub fn iso_code(t: &CodingTree, v: usize) -> IsoCode {
    let mut on_path = vec![false; t.vertices.len()];
    iso_code_inner(t, v, &mut on_path)
}

fn iso_code_inner(t: &CodingTree, v: usize, on_path: &mut Vec<bool>) -> IsoCode {
    if on_path[v] {
        return "#loop".into();
    }
    let vert = &t.vertices[v];
    if vert.children.is_empty() {
        return vert.label.code_tag();
    }
    on_path[v] = true;
    let mut lefts: Vec<IsoCode> = vert
        .left_children()
        .iter()
        .map(|&c| iso_code_inner(t, c, on_path))
        .collect();
    lefts.sort();
    let mut code = vert.label.code_tag();
    code.push('(');
    code.push_str(&lefts.join(","));
    if let Some(r) = vert.right_child() {
        code.push(';');
        code.push_str(&iso_code_inner(t, r, on_path));
    }
    code.push(')');
    on_path[v] = false;
    code
}

/// Code of a forest given by the roots of its trees: the sorted multiset of
/// subtree codes.
pub fn forest_code(t: &CodingTree, roots: &[usize]) -> IsoCode {
    let mut codes: Vec<IsoCode> = roots.iter().map(|&r| iso_code(t, r)).collect();
    codes.sort();
    codes.join("|")
}

/// The left forest of `v`: roots of the subtrees hanging off its left
/// children.
pub fn left_forest(t: &CodingTree, v: usize) -> Result<Vec<usize>, TreeError> {
    if v >= t.vertices.len() {
        return Err(TreeError::BadVertexId(v));
    }
    if t.vertices[v].children.is_empty() {
        return Err(TreeError::NotAParent(v));
    }
    Ok(t.vertices[v].left_children().to_vec())
}

/// Ranks of the left children of `v` in canonical code order. `ranked[m]` is
/// the child carrying the rank-`m` subtree; points coloured `m` route there.
pub fn left_children_by_rank(t: &CodingTree, v: usize) -> Vec<usize> {
    let mut lefts: Vec<(IsoCode, usize)> = t.vertices[v]
        .left_children()
        .iter()
        .map(|&c| (iso_code(t, c), c))
        .collect();
    lefts.sort();
    lefts.into_iter().map(|(_, c)| c).collect()
}

/// Colour of a left child among its siblings: its rank in code order.
pub fn colour_of_child(t: &CodingTree, parent: usize, child: usize) -> Option<u32> {
    left_children_by_rank(t, parent)
        .iter()
        .position(|&c| c == child)
        .map(|m| m as u32)
}

/// Vertex-to-vertex map of a tree isomorphism.
pub type VertexMap = BTreeMap<usize, usize>;

/// The unique isomorphism between two valid trees, if one exists.
pub fn tree_iso(t1: &CodingTree, t2: &CodingTree) -> Option<VertexMap> {
    if iso_code(t1, t1.root) != iso_code(t2, t2.root) {
        return None;
    }
    let mut map = VertexMap::new();
    pair_subtrees(t1, t1.root, t2, t2.root, &mut map);
    Some(map)
}

fn pair_subtrees(t1: &CodingTree, v1: usize, t2: &CodingTree, v2: usize, map: &mut VertexMap) {
    map.insert(v1, v2);
    // Left children are matched by code; validity (V6) makes the matching
    // unique. The right children are matched to each other directly.
    let ranked1 = left_children_by_rank(t1, v1);
    let ranked2 = left_children_by_rank(t2, v2);
    for (&c1, &c2) in ranked1.iter().zip(ranked2.iter()) {
        pair_subtrees(t1, c1, t2, c2, map);
    }
    if let (Some(r1), Some(r2)) = (t1.vertices[v1].right_child(), t2.vertices[v2].right_child()) {
        pair_subtrees(t1, r1, t2, r2, map);
    }
}

/// Per-level summary used to decide lower isomorphism.
pub fn signature(t: &CodingTree) -> Result<Signature, TreeError> {
    let report = validate(t);
    if !report.is_valid() {
        return Err(TreeError::InvalidTree(report.to_string()));
    }
    let mut levels: Vec<(LabelClass, IsoCode)> = Vec::new();
    for (_, ids) in t.by_level().into_iter().rev() {
        // V4 and V5 make any representative of the level canonical.
        let rep = ids[0];
        let class = t.vertices[rep].label.class();
        let forest = forest_code(t, t.vertices[rep].left_children());
        levels.push((class, forest));
    }
    Ok(Signature(levels))
}

/// Decision rule for lower isomorphism of two trees: signature equality.
pub fn lower_isomorphic(t1: &CodingTree, t2: &CodingTree) -> Result<bool, TreeError> {
    Ok(signature(t1)? == signature(t2)?)
}

/// Merges isomorphic left siblings bottom-up, relabelling shuffle vertices by
/// their remaining class count (`Q_k`, or `Q` when a single class remains).
/// Accepts trees that satisfy every rule except V6; idempotent; the identity
/// on valid trees.
pub fn canonicalize(t: &CodingTree) -> Result<CodingTree, TreeError> {
    let report = validate(t);
    let blocking: Vec<&Violation> = report
        .violations
        .iter()
        .filter(|v| !matches!(v, Violation::IsomorphicLeftSiblings { .. }))
        .collect();
    if !blocking.is_empty() {
        let msgs: Vec<String> = blocking.iter().map(|v| v.to_string()).collect();
        return Err(TreeError::InvalidInput(msgs.join("; ")));
    }

    let mut work = t.clone();
    let height = work.vertices[work.root].level;
    for level in 1..=height {
        let ids: Vec<usize> = work
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.level == level && !v.children.is_empty())
            .map(|(id, _)| id)
            .collect();
        for id in ids {
            let lefts = work.vertices[id].left_children().to_vec();
            if lefts.len() < 2 {
                continue;
            }
            // Group by subtree code, keeping the first sibling of each class.
            let mut kept: Vec<usize> = Vec::new();
            let mut seen: BTreeSet<IsoCode> = BTreeSet::new();
            for c in lefts {
                if seen.insert(iso_code(&work, c)) {
                    kept.push(c);
                }
            }
            let k = kept.len() as u32;
            if kept.len() == work.vertices[id].left_children().len() {
                continue;
            }
            let right = work.vertices[id].right_child();
            let label = match (work.vertices[id].label, k) {
                (Label::Qn(_), 1) => Label::Q,
                (Label::Qn(_), k) => Label::Qn(k),
                (Label::QnDot(_), 1) => Label::QDot,
                (Label::QnDot(_), k) => Label::QnDot(k),
                (other, _) => other,
            };
            let mut children = kept;
            children.extend(right);
            work.vertices[id].label = label;
            work.vertices[id].children = children;
        }
    }
    Ok(compact(&work))
}

/// Drops vertices unreachable from the root, renumbering in old-id order.
fn compact(t: &CodingTree) -> CodingTree {
    let mut reach = t.subtree(t.root);
    reach.sort_unstable();
    let mut remap = vec![usize::MAX; t.vertices.len()];
    for (new, &old) in reach.iter().enumerate() {
        remap[old] = new;
    }
    let vertices = reach
        .iter()
        .map(|&old| {
            let v = &t.vertices[old];
            Vertex {
                label: v.label,
                level: v.level,
                children: v.children.iter().map(|&c| remap[c]).collect(),
            }
        })
        .collect();
    CodingTree {
        vertices,
        root: remap[t.root],
    }
}

/// Cuts the tree at `level`: keeps the part at levels ≥ `level`, turns the
/// cut vertices into leaves, rebases levels to zero and re-canonicalizes
/// (cutting can make formerly distinct left siblings equal).
pub fn truncate(t: &CodingTree, level: u32) -> Result<CodingTree, TreeError> {
    let height = t.vertices[t.root].level;
    if level > height {
        return Err(TreeError::LevelOutOfRange { level, height });
    }
    let mut work = t.clone();
    for v in work.vertices.iter_mut() {
        if v.level == level {
            v.label = Label::Singleton;
            v.children.clear();
        }
    }
    for v in work.vertices.iter_mut() {
        if v.level >= level {
            v.level -= level;
        }
    }
    canonicalize(&compact(&work))
}

/// Splits the rank-`class_rank` left-child class of every vertex at `level`
/// into `1 + copies` isomorphic siblings, bumping the shuffle labels to
/// match. This is the inverse of the merge performed by [`canonicalize`] and
/// produces trees that break V6 while satisfying every other rule.
pub fn split_left_class(
    t: &CodingTree,
    level: u32,
    class_rank: usize,
    copies: usize,
) -> Result<CodingTree, TreeError> {
    let report = validate(t);
    if !report.is_valid() {
        return Err(TreeError::InvalidTree(report.to_string()));
    }
    if copies == 0 {
        return Ok(t.clone());
    }
    let ids: Vec<usize> = t
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| v.level == level)
        .map(|(id, _)| id)
        .collect();
    for &id in &ids {
        if !t.vertices[id].label.is_dense() {
            return Err(TreeError::InvalidInput(format!(
                "vertex {id} at level {level} has label {}, which admits no split",
                t.vertices[id].label
            )));
        }
        if class_rank >= t.vertices[id].left_children().len() {
            return Err(TreeError::InvalidInput(format!(
                "vertex {id} has no left-child class of rank {class_rank}"
            )));
        }
    }
    let mut work = t.clone();
    for &id in &ids {
        let target = left_children_by_rank(t, id)[class_rank];
        for _ in 0..copies {
            let copy_root = deep_copy(&mut work, target);
            let right = work.vertices[id].right_child();
            let insert_at = match right {
                Some(_) => work.vertices[id].children.len() - 1,
                None => work.vertices[id].children.len(),
            };
            work.vertices[id].children.insert(insert_at, copy_root);
        }
        let n_left = work.vertices[id].left_children().len() as u32;
        work.vertices[id].label = match work.vertices[id].label {
            Label::Q | Label::Qn(_) => Label::Qn(n_left),
            Label::QDot | Label::QnDot(_) => Label::QnDot(n_left),
            other => other,
        };
    }
    Ok(work)
}

/// Appends a structural copy of the subtree at `src` and returns its new
/// root id.
fn deep_copy(t: &mut CodingTree, src: usize) -> usize {
    let v = t.vertices[src].clone();
    let children = v
        .children
        .iter()
        .map(|&c| deep_copy(t, c))
        .collect::<Vec<_>>();
    t.vertices.push(Vertex {
        label: v.label,
        level: v.level,
        children,
    });
    t.vertices.len() - 1
}

fn label_to_json(label: Label) -> Json {
    match label {
        Label::Z => json!("Z"),
        Label::WStar => json!("w*"),
        Label::Q => json!("Q"),
        Label::QDot => json!("Qd"),
        Label::Qn(n) => json!({ "Qn": n }),
        Label::QnDot(n) => json!({ "QnDot": n }),
        Label::Singleton => json!("1"),
    }
}

fn label_from_json(v: &Json) -> Result<Label, TreeError> {
    match v {
        Json::String(s) => match s.as_str() {
            "Z" => Ok(Label::Z),
            "w*" => Ok(Label::WStar),
            "Q" => Ok(Label::Q),
            "Qd" => Ok(Label::QDot),
            "1" => Ok(Label::Singleton),
            other => Err(TreeError::Decode(format!("unknown label {other:?}"))),
        },
        Json::Object(map) => {
            let (key, n) = map
                .iter()
                .next()
                .ok_or_else(|| TreeError::Decode("empty label object".into()))?;
            let n = n
                .as_u64()
                .ok_or_else(|| TreeError::Decode("label arity must be an integer".into()))?;
            if map.len() != 1 || n < 2 {
                return Err(TreeError::Decode(format!("malformed label {map:?}")));
            }
            match key.as_str() {
                "Qn" => Ok(Label::Qn(n as u32)),
                "QnDot" => Ok(Label::QnDot(n as u32)),
                other => Err(TreeError::Decode(format!("unknown label key {other:?}"))),
            }
        }
        other => Err(TreeError::Decode(format!("malformed label {other}"))),
    }
}

/// Serializes a tree to the wire schema.
pub fn to_json(t: &CodingTree) -> Json {
    let vertices: Vec<Json> = t
        .vertices
        .iter()
        .enumerate()
        .map(|(id, v)| {
            json!({
                "id": id,
                "label": label_to_json(v.label),
                "level": v.level,
                "children": v.children,
                "right_child": v.right_child(),
            })
        })
        .collect();
    json!({ "vertices": vertices, "root": t.root })
}

pub fn to_json_string(t: &CodingTree) -> String {
    to_json(t).to_string()
}

/// Decodes the wire schema. Rejects tables that are not trees: duplicate or
/// dangling ids, a vertex with two parents, a right-child marker that does
/// not point at the last child. Label/level/arity discipline is left to
/// [`validate`].
pub fn from_json_str(s: &str) -> Result<CodingTree, TreeError> {
    let v: Json = serde_json::from_str(s).map_err(|e| TreeError::Decode(e.to_string()))?;
    from_json(&v)
}

pub fn from_json(v: &Json) -> Result<CodingTree, TreeError> {
    let obj = v
        .as_object()
        .ok_or_else(|| TreeError::Decode("expected a JSON object".into()))?;
    let raw = obj
        .get("vertices")
        .and_then(Json::as_array)
        .ok_or_else(|| TreeError::Decode("missing \"vertices\" array".into()))?;
    let root_id = obj
        .get("root")
        .and_then(Json::as_u64)
        .ok_or_else(|| TreeError::Decode("missing \"root\" id".into()))?;

    let mut ids = Vec::with_capacity(raw.len());
    let mut id_index: BTreeMap<u64, usize> = BTreeMap::new();
    for (index, rv) in raw.iter().enumerate() {
        let id = rv
            .get("id")
            .and_then(Json::as_u64)
            .ok_or_else(|| TreeError::Decode(format!("vertex {index} missing \"id\"")))?;
        if id_index.insert(id, index).is_some() {
            return Err(TreeError::Decode(format!("duplicate vertex id {id}")));
        }
        ids.push(id);
    }

    let mut vertices = Vec::with_capacity(raw.len());
    for rv in raw {
        let id = rv.get("id").and_then(Json::as_u64).unwrap();
        let label = label_from_json(
            rv.get("label")
                .ok_or_else(|| TreeError::Decode(format!("vertex {id} missing \"label\"")))?,
        )?;
        let level = rv
            .get("level")
            .and_then(Json::as_u64)
            .ok_or_else(|| TreeError::Decode(format!("vertex {id} missing \"level\"")))?
            as u32;
        let children_raw = rv
            .get("children")
            .and_then(Json::as_array)
            .ok_or_else(|| TreeError::Decode(format!("vertex {id} missing \"children\"")))?;
        let mut children = Vec::with_capacity(children_raw.len());
        for c in children_raw {
            let cid = c
                .as_u64()
                .ok_or_else(|| TreeError::Decode(format!("vertex {id}: bad child id {c}")))?;
            let index = *id_index
                .get(&cid)
                .ok_or_else(|| TreeError::Decode(format!("vertex {id}: dangling child {cid}")))?;
            children.push(index);
        }
        let right = rv.get("right_child").cloned().unwrap_or(Json::Null);
        let vert = Vertex {
            label,
            level,
            children,
        };
        match (&right, vert.right_child()) {
            (Json::Null, None) => {}
            (Json::Number(n), Some(expected)) => {
                let declared = n
                    .as_u64()
                    .and_then(|id| id_index.get(&id).copied())
                    .ok_or_else(|| TreeError::Decode(format!("vertex {id}: bad right_child")))?;
                if declared != expected {
                    return Err(TreeError::Decode(format!(
                        "vertex {id}: right_child must be the last child"
                    )));
                }
            }
            _ => {
                return Err(TreeError::Decode(format!(
                    "vertex {id}: right_child inconsistent with label {label}"
                )));
            }
        }
        vertices.push(vert);
    }

    let root = *id_index
        .get(&root_id)
        .ok_or_else(|| TreeError::Decode(format!("root id {root_id} not among vertices")))?;

    // Reject anything that is not tree-shaped.
    let mut parent_count = vec![0usize; vertices.len()];
    for v in &vertices {
        for &c in &v.children {
            parent_count[c] += 1;
        }
    }
    for (index, &k) in parent_count.iter().enumerate() {
        if k > 1 {
            return Err(TreeError::Decode(format!(
                "vertex id {} has {k} parents",
                ids[index]
            )));
        }
    }
    if parent_count[root] != 0 {
        return Err(TreeError::Decode("root has a parent".into()));
    }

    CodingTree::new(vertices, root)
}

/// Graphviz rendering: one node per vertex with label and level, right-child
/// edges in bold.
pub fn to_dot(t: &CodingTree) -> String {
    let mut out = String::from("digraph coding_tree {\n");
    for (id, v) in t.vertices.iter().enumerate() {
        out.push_str(&format!("  n{id} [label=\"{} @{}\"];\n", v.label, v.level));
    }
    for (id, v) in t.vertices.iter().enumerate() {
        let right = v.right_child();
        for &c in &v.children {
            if Some(c) == right {
                out.push_str(&format!("  n{id} -> n{c} [style=bold];\n"));
            } else {
                out.push_str(&format!("  n{id} -> n{c};\n"));
            }
        }
    }
    out.push_str("}\n");
    out
}
