//! Symbolic toolkit for countable linear orders that look the same below
//! every point.
//!
//! Orders are described by a small expression language (`Z`, `w*`, `Q`,
//! `Qd`, shuffles `Q_n(...)`, products and tails), compiled into finite
//! levelled labelled trees, and classified by per-level signatures. Points
//! of an encoded order are finite value sequences with an exact total-order
//! comparator, and initial-segment isomorphisms between any two anchors can
//! be materialized and audited query by query.
//!
//! - [`expr`]: parse, print, elaborate and compile order expressions.
//! - [`tree`]: the tree type, validation, isomorphism codes, signatures,
//!   canonicalization, truncation and serialization.
//! - [`point`]: value domains, coloured rationals, comparison, sampling,
//!   neighbours and interval enumeration.
//! - [`witness`]: segment and forest isomorphisms, stratum maps and
//!   initial-segment witnesses with trace export.

pub mod expr;
pub mod point;
pub mod tree;
pub mod witness;

pub use expr::{compile, compile_str, elaborate, parse, print, CompileError, ExprError, OrderExpr, ParseError};
pub use point::{
    between, branch, col, compare, default_point, enumerate_interval, fin_equiv, level_equiv,
    midpoint, point_from_json, point_from_json_str, point_to_json, predecessor, random_point,
    random_point_below, random_point_with, successor, validate_point, Point, PointError,
    PointReport, Value,
};
pub use tree::{
    canonicalize, forest_code, from_json, from_json_str, iso_code, label_lower_equiv, left_forest,
    lower_isomorphic, signature, split_left_class, to_dot, to_json, to_json_string, tree_iso,
    truncate, validate, CodingTree, IsoCode, Label, LabelClass, Signature, TreeError,
    ValidationReport, Vertex, VertexMap, Violation,
};
pub use witness::{
    cross_tree_witness, expanded_vertex, forest_iso_between, forest_iso_map, gamma_index,
    initial_segment_witness, invariance_check, phi_i, segment_iso, ForestIso, InvarianceReport,
    SegmentIso, TraceEntry, Witness, WitnessError,
};
