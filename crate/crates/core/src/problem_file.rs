//! JSON problem files.
//!
//! A quadratic-program file:
//!
//! ```json
//! {
//!   "Q": [1, 1, 1],            // diagonal entries (a diagonal matrix is also accepted)
//!   "c": [0, 0, 0],
//!   "S": [[1, 1, 1]],          // row-major, n_r x n_x
//!   "W_b": [[1]],              // row-major, n_r x n_b
//!   "b": [0],
//!   "tau_x": 1,                // scalar or n_x entries, default 1
//!   "tau_nu": 1,               // scalar or n_r entries (n_x for ADD-SP), default 1
//!   "tau_mu": 1,               // optional, ADD-SP edge multipliers
//!   "t_c": 1, "t_b": 1,        // disturbance strengths, default 1
//!   "graph": {"kind": "line", "n": 3}   // optional; or {"n": 3, "edges": [[1, 2], [2, 3]]}
//! }
//! ```
//!
//! A resource-allocation file wraps its data in `"resource_allocation"`:
//! `q` (scalar with `n`, or array), optional `c`, `d`, `graph`, the four
//! time constants `tau_x`, `tau_delta`, `tau_nu`, `tau_mu`, and `t_c`
//! (default 0), `t_b` (default 1).
//!
//! Every parse error names the offending key.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::graph::{GraphKind, OrientedGraph};
use crate::model::{DisturbanceConfig, QuadraticProgram, TimeConstants, TimeScale};
use crate::resource_allocation::{RaTimeConstants, ResourceAllocationProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct QpFile {
    pub program: QuadraticProgram,
    pub time_constants: TimeConstants,
    pub disturbance: DisturbanceConfig,
    pub graph: Option<OrientedGraph>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemFile {
    Qp(QpFile),
    ResourceAllocation(ResourceAllocationProblem),
}

impl ProblemFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::problem_file("<root>", format!("not valid JSON: {e}")))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self> {
        let Value::Object(obj) = value else {
            return Err(Error::problem_file("<root>", "expected a JSON object"));
        };
        match obj.get("resource_allocation") {
            Some(Value::Object(ra)) => parse_ra(ra).map(ProblemFile::ResourceAllocation),
            Some(_) => Err(Error::problem_file("resource_allocation", "expected an object")),
            None => parse_qp(obj).map(ProblemFile::Qp),
        }
    }
}

fn parse_qp(obj: &Map<String, Value>) -> Result<QpFile> {
    check_keys(
        obj,
        "",
        &["Q", "c", "S", "W_b", "b", "tau_x", "tau_nu", "tau_mu", "t_c", "t_b", "graph"],
    )?;
    let q = diagonal(required(obj, "Q")?, "Q")?;
    let c = vector(required(obj, "c")?, "c")?;
    let s = matrix(required(obj, "S")?, "S")?;
    let w_b = matrix(required(obj, "W_b")?, "W_b")?;
    let b = vector(required(obj, "b")?, "b")?;
    let program = QuadraticProgram::new(
        DVector::from_vec(q),
        DVector::from_vec(c),
        s,
        w_b,
        DVector::from_vec(b),
    )?;
    let time_constants = TimeConstants {
        tau_x: time_scale(obj, "tau_x")?,
        tau_nu: time_scale(obj, "tau_nu")?,
        tau_delta: TimeScale::default(),
        tau_mu: time_scale(obj, "tau_mu")?,
    };
    let disturbance = DisturbanceConfig {
        t_c: strength(optional_scalar(obj, "t_c", 1.0)?, "t_c")?,
        t_b: strength(optional_scalar(obj, "t_b", 1.0)?, "t_b")?,
    };
    let graph = obj.get("graph").map(|g| graph(g, "graph")).transpose()?;
    Ok(QpFile {
        program,
        time_constants,
        disturbance,
        graph,
    })
}

fn parse_ra(obj: &Map<String, Value>) -> Result<ResourceAllocationProblem> {
    let key = |k: &str| format!("resource_allocation.{k}");
    check_keys(
        obj,
        "resource_allocation.",
        &["q", "n", "c", "d", "graph", "tau_x", "tau_delta", "tau_nu", "tau_mu", "t_c", "t_b"],
    )?;
    let q = match required(obj, "q").map_err(|_| Error::problem_file(key("q"), "missing"))? {
        Value::Array(_) => vector(&obj["q"], &key("q"))?,
        v => {
            let q = scalar(v, &key("q"))?;
            let n = obj
                .get("n")
                .ok_or_else(|| Error::problem_file(key("n"), "required when q is a scalar"))?;
            vec![q; count(n, &key("n"))?]
        }
    };
    let n = q.len();
    let zeros_or = |k: &str| -> Result<Vec<f64>> {
        obj.get(k).map_or(Ok(vec![0.0; n]), |v| vector(v, &key(k)))
    };
    let (c, d) = (zeros_or("c")?, zeros_or("d")?);
    let graph = match obj.get("graph") {
        Some(g) => graph(g, &key("graph"))?,
        None => OrientedGraph::line(n)?,
    };
    let tau_of = |k: &str| -> Result<f64> {
        obj.get(k).map_or(Ok(1.0), |v| scalar(v, &key(k)))
    };
    let tau = RaTimeConstants {
        tau_x: tau_of("tau_x")?,
        tau_delta: tau_of("tau_delta")?,
        tau_nu: tau_of("tau_nu")?,
        tau_mu: tau_of("tau_mu")?,
    };
    let t_c = obj.get("t_c").map_or(Ok(0.0), |v| scalar(v, &key("t_c")))?;
    let t_b = obj.get("t_b").map_or(Ok(1.0), |v| scalar(v, &key("t_b")))?;
    let disturbance = DisturbanceConfig {
        t_c: strength(t_c, &key("t_c"))?,
        t_b: strength(t_b, &key("t_b"))?,
    };
    ResourceAllocationProblem::new(q, c, d, graph, tau, disturbance)
}

/// Parse a graph object: `{"kind": ..., "n": ...}` or `{"n": ..., "edges": [[i, j], ...]}`
/// with 1-based labels.
pub fn graph(v: &Value, key: &str) -> Result<OrientedGraph> {
    let Value::Object(obj) = v else {
        return Err(Error::problem_file(key, "expected an object"));
    };
    let sub = |k: &str| format!("{key}.{k}");
    let n = count(
        obj.get("n").ok_or_else(|| Error::problem_file(sub("n"), "missing"))?,
        &sub("n"),
    )?;
    match (obj.get("kind"), obj.get("edges")) {
        (Some(_), Some(_)) => Err(Error::problem_file(key, "give either `kind` or `edges`, not both")),
        (Some(Value::String(s)), None) => {
            let kind: GraphKind = s.parse().map_err(|e: Error| Error::problem_file(sub("kind"), e.to_string()))?;
            OrientedGraph::generate(kind, n).map_err(|e| Error::problem_file(key, e.to_string()))
        }
        (Some(_), None) => Err(Error::problem_file(sub("kind"), "expected a string")),
        (None, Some(Value::Array(edges))) => {
            let mut pairs = Vec::with_capacity(edges.len());
            for (i, e) in edges.iter().enumerate() {
                let k = format!("{}[{i}]", sub("edges"));
                match e {
                    Value::Array(p) if p.len() == 2 => pairs.push((count(&p[0], &k)?, count(&p[1], &k)?)),
                    _ => return Err(Error::problem_file(k, "expected a pair [i, j]")),
                }
            }
            OrientedGraph::from_one_based(n, &pairs).map_err(|e| Error::problem_file(sub("edges"), e.to_string()))
        }
        (None, Some(_)) => Err(Error::problem_file(sub("edges"), "expected an array of pairs")),
        (None, None) => Err(Error::problem_file(key, "needs `kind` or `edges`")),
    }
}

fn check_keys(obj: &Map<String, Value>, prefix: &str, allowed: &[&str]) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::problem_file(format!("{prefix}{k}"), "unknown key")),
        None => Ok(()),
    }
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::problem_file(key, "missing"))
}

fn scalar(v: &Value, key: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::problem_file(key, format!("expected a number, got {v}")))
}

fn count(v: &Value, key: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Error::problem_file(key, format!("expected a nonnegative integer, got {v}")))
}

fn optional_scalar(obj: &Map<String, Value>, key: &str, default: f64) -> Result<f64> {
    obj.get(key).map_or(Ok(default), |v| scalar(v, key))
}

fn strength(t: f64, key: &str) -> Result<f64> {
    if t >= 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(Error::problem_file(key, format!("must be nonnegative, got {t}")))
    }
}

fn vector(v: &Value, key: &str) -> Result<Vec<f64>> {
    let Value::Array(items) = v else {
        return Err(Error::problem_file(key, "expected an array of numbers"));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, x)| scalar(x, &format!("{key}[{i}]")))
        .collect()
}

fn matrix(v: &Value, key: &str) -> Result<DMatrix<f64>> {
    let Value::Array(rows) = v else {
        return Err(Error::problem_file(key, "expected an array of rows"));
    };
    if rows.is_empty() {
        return Err(Error::problem_file(key, "matrix has no rows"));
    }
    let rows: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| vector(r, &format!("{key}[{i}]")))
        .collect::<Result<_>>()?;
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::problem_file(key, "rows must be nonempty and of equal length"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// `Q` as its diagonal; a full matrix is accepted only if it is diagonal.
fn diagonal(v: &Value, key: &str) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) if items.iter().all(Value::is_array) && !items.is_empty() => {
            let m = matrix(v, key)?;
            if !m.is_square() {
                return Err(Error::problem_file(key, "matrix form must be square"));
            }
            let off = (0..m.nrows()).any(|i| (0..m.ncols()).any(|j| i != j && m[(i, j)] != 0.0));
            if off {
                return Err(Error::problem_file(key, "only diagonal Q is supported"));
            }
            Ok(m.diagonal().iter().copied().collect())
        }
        _ => vector(v, key),
    }
}

fn time_scale(obj: &Map<String, Value>, key: &str) -> Result<TimeScale> {
    match obj.get(key) {
        None => Ok(TimeScale::default()),
        Some(Value::Array(_)) => Ok(TimeScale::Diagonal(vector(&obj[key], key)?)),
        Some(v) => Ok(TimeScale::Uniform(scalar(v, key)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VANILLA: &str = r#"{
        "Q": [1, 1, 1, 1, 1], "c": [0, 0, 0, 0, 0],
        "S": [[1, 1, 1, 1, 1]], "W_b": [[1]], "b": [2],
        "tau_x": 1, "tau_nu": 1, "t_c": 1, "t_b": 1
    }"#;

    fn key_of(e: Error) -> String {
        match e {
            Error::ProblemFile { key, .. } => key,
            other => panic!("expected a problem-file error, got {other:?}"),
        }
    }

    #[test]
    fn parses_quadratic_program() {
        let ProblemFile::Qp(f) = ProblemFile::parse(VANILLA).unwrap() else {
            panic!("expected a QP file");
        };
        assert_eq!((f.program.n_x(), f.program.n_r(), f.program.n_b()), (5, 1, 1));
        assert_eq!(f.disturbance, DisturbanceConfig::default());
        assert!(f.graph.is_none());
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            (r#"{"Q": [1, "x"], "c": [0, 0], "S": [[1, 1]], "W_b": [[1]], "b": [0]}"#, "Q[1]"),
            (r#"{"Q": [1, 1], "S": [[1, 1]], "W_b": [[1]], "b": [0]}"#, "c"),
            (r#"{"Q": [1, 1], "c": [0, 0], "S": [[1, 1], [1]], "W_b": [[1]], "b": [0]}"#, "S"),
            (r#"{"Q": [1, 1], "c": [0, 0], "S": [[1, 1]], "W_b": 3, "b": [0]}"#, "W_b"),
            (r#"{"Q": [1, 1], "c": [0, 0], "S": [[1, 1]], "W_b": [[1]], "b": [0], "tau_x": "a"}"#, "tau_x"),
            (r#"{"Q": [1, 1], "c": [0, 0], "S": [[1, 1]], "W_b": [[1]], "b": [0], "t_b": null}"#, "t_b"),
            (r#"{"Q": [[1, 2], [0, 1]], "c": [0, 0], "S": [[1, 1]], "W_b": [[1]], "b": [0]}"#, "Q"),
            (r#"{"Q": [1, 1], "c": [0, 0], "S": [[1, 1]], "W_b": [[1]], "b": [0], "extra": 1}"#, "extra"),
            (r#"{"Q": [1, 1], "c": [0, 0], "S": [[1, 1]], "W_b": [[1]], "b": [0], "graph": {"n": 2, "kind": "tree"}}"#, "graph.kind"),
            (r#"{"resource_allocation": {"q": 1}}"#, "resource_allocation.n"),
            (r#"{"Q": [1, 1], "c": [0, 0], "S": [[1, 1]], "W_b": [[1]], "b": [0], "t_c": -1}"#, "t_c"),
            (r#"[1, 2]"#, "<root>"),
            (r#"{"Q": [1, 1],"#, "<root>"),
        ];
        for (text, key) in cases {
            assert_eq!(key_of(ProblemFile::parse(text).unwrap_err()), key, "{text}");
        }
    }

    #[test]
    fn diagonal_matrix_form_of_q_is_accepted() {
        let text = r#"{"Q": [[2, 0], [0, 3]], "c": [0, 0], "S": [[1, 1]], "W_b": [[1]], "b": [0]}"#;
        let ProblemFile::Qp(f) = ProblemFile::parse(text).unwrap() else { panic!() };
        assert_eq!(f.program.q_diag().as_slice(), &[2.0, 3.0]);
    }

    #[test]
    fn graphs_from_kind_or_edges() {
        let a = graph(&serde_json::json!({"kind": "line", "n": 3}), "g").unwrap();
        let b = graph(&serde_json::json!({"n": 3, "edges": [[1, 2], [2, 3]]}), "g").unwrap();
        assert_eq!(a.laplacian(), b.laplacian());
        assert!(graph(&serde_json::json!({"n": 3, "edges": [[0, 1]]}), "g").is_err());
    }

    #[test]
    fn parses_resource_allocation() {
        let text = r#"{"resource_allocation": {"q": 2, "n": 4, "graph": {"kind": "star", "n": 4}, "tau_nu": 0.5}}"#;
        let ProblemFile::ResourceAllocation(ra) = ProblemFile::parse(text).unwrap() else {
            panic!("expected a resource-allocation file");
        };
        assert_eq!(ra.q(), &[2.0; 4]);
        assert_eq!(ra.tau.tau_nu, 0.5);
        assert!(ra.in_standard_setting());
    }
}
