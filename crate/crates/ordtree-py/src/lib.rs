//! Python bindings: trees, points and witnesses as plain classes.
//!
//! Points cross the boundary as JSON strings or ready-made `Point` objects;
//! comparisons come back as -1/0/1. Errors surface as `ValueError`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ordtree::{point, tree, witness};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A compiled coding tree.
#[pyclass(name = "Tree")]
struct PyTree {
    inner: tree::CodingTree,
}

/// One point of the order a tree encodes.
#[pyclass(name = "Point")]
struct PyPoint {
    inner: point::Point,
}

#[pymethods]
impl PyPoint {
    fn to_json(&self) -> String {
        point::point_to_json(&self.inner).to_string()
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyPoint {
            inner: point::point_from_json_str(s).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Point{}", self.inner)
    }

    fn __eq__(&self, other: &PyPoint) -> bool {
        self.inner == other.inner
    }
}

#[pymethods]
impl PyTree {
    /// Parse and compile an order expression.
    #[staticmethod]
    fn compile(expr: &str) -> PyResult<Self> {
        Ok(PyTree {
            inner: ordtree::compile_str(expr).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyTree {
            inner: tree::from_json_str(s).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        tree::to_json_string(&self.inner)
    }

    fn to_dot(&self) -> String {
        tree::to_dot(&self.inner)
    }

    /// Structural-rule violations, one string each; empty means valid.
    fn validate(&self) -> Vec<String> {
        tree::validate(&self.inner)
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.inner.height()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    /// Per-level `(label class, left-forest code)` pairs, top-down.
    fn signature(&self) -> PyResult<Vec<(String, String)>> {
        Ok(tree::signature(&self.inner)
            .map_err(err)?
            .0
            .into_iter()
            .map(|(class, forest)| (class.to_string(), forest))
            .collect())
    }

    fn is_isomorphic(&self, other: &PyTree) -> bool {
        tree::tree_iso(&self.inner, &other.inner).is_some()
    }

    fn lower_isomorphic(&self, other: &PyTree) -> PyResult<bool> {
        tree::lower_isomorphic(&self.inner, &other.inner).map_err(err)
    }

    fn canonicalize(&self) -> PyResult<PyTree> {
        Ok(PyTree {
            inner: tree::canonicalize(&self.inner).map_err(err)?,
        })
    }

    fn truncate(&self, level: u32) -> PyResult<PyTree> {
        Ok(PyTree {
            inner: tree::truncate(&self.inner, level).map_err(err)?,
        })
    }

    fn default_point(&self) -> PyPoint {
        PyPoint {
            inner: point::default_point(&self.inner),
        }
    }

    #[pyo3(signature = (seed, magnitude = 5))]
    fn random_point(&self, seed: u64, magnitude: i64) -> PyPoint {
        PyPoint {
            inner: point::random_point(&self.inner, seed, magnitude),
        }
    }

    /// -1, 0 or 1.
    fn compare(&self, p: &PyPoint, q: &PyPoint) -> PyResult<i32> {
        Ok(point::compare(&self.inner, &p.inner, &q.inner).map_err(err)? as i32)
    }

    fn validate_point(&self, p: &PyPoint) -> Vec<String> {
        point::validate_point(&self.inner, &p.inner).problems
    }

    fn successor(&self, p: &PyPoint) -> PyResult<Option<PyPoint>> {
        Ok(point::successor(&self.inner, &p.inner)
            .map_err(err)?
            .map(|inner| PyPoint { inner }))
    }

    fn predecessor(&self, p: &PyPoint) -> PyResult<Option<PyPoint>> {
        Ok(point::predecessor(&self.inner, &p.inner)
            .map_err(err)?
            .map(|inner| PyPoint { inner }))
    }

    fn fin_equiv(&self, p: &PyPoint, q: &PyPoint) -> PyResult<bool> {
        point::fin_equiv(&self.inner, &p.inner, &q.inner).map_err(err)
    }

    fn enumerate_interval(&self, p: &PyPoint, q: &PyPoint) -> PyResult<Vec<PyPoint>> {
        Ok(point::enumerate_interval(&self.inner, &p.inner, &q.inner)
            .map_err(err)?
            .into_iter()
            .map(|inner| PyPoint { inner })
            .collect())
    }

    fn level_equiv(&self, p: &PyPoint, q: &PyPoint, level: u32) -> PyResult<bool> {
        point::level_equiv(&self.inner, &p.inner, &q.inner, level).map_err(err)
    }

    /// Initial-segment witness from `f` to `g` within this tree.
    fn witness(&self, f: &PyPoint, g: &PyPoint) -> PyResult<PyWitness> {
        Ok(PyWitness {
            inner: witness::initial_segment_witness(&self.inner, &f.inner, &g.inner)
                .map_err(err)?,
        })
    }

    /// Witness from `(self, f)` into `(other, g)`; the signatures must match.
    fn cross_witness(&self, f: &PyPoint, other: &PyTree, g: &PyPoint) -> PyResult<PyWitness> {
        Ok(PyWitness {
            inner: witness::cross_tree_witness(&self.inner, &f.inner, &other.inner, &g.inner)
                .map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Tree(vertices={}, height={})",
            self.inner.vertex_count(),
            self.inner.height()
        )
    }
}

/// A growing initial-segment isomorphism between two anchors.
#[pyclass(name = "Witness")]
struct PyWitness {
    inner: witness::Witness,
}

#[pymethods]
impl PyWitness {
    fn map(&mut self, p: &PyPoint) -> PyResult<PyPoint> {
        Ok(PyPoint {
            inner: self.inner.map(&p.inner).map_err(err)?,
        })
    }

    fn inverse(&mut self, q: &PyPoint) -> PyResult<PyPoint> {
        Ok(PyPoint {
            inner: self.inner.inverse(&q.inner).map_err(err)?,
        })
    }

    /// JSON audit trail of every query answered so far.
    fn trace_json(&self) -> String {
        self.inner.trace_json().to_string()
    }
}

/// Canonical form of an expression (round-trips through the parser).
#[pyfunction]
fn parse(expr: &str) -> PyResult<String> {
    Ok(ordtree::print(&ordtree::parse(expr).map_err(err)?))
}

#[pymodule]
fn ordtree_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTree>()?;
    m.add_class::<PyPoint>()?;
    m.add_class::<PyWitness>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    Ok(())
}
