//! Python bindings: the graph type with its structural operations and
//! separation queries, plus module functions for rule checks, adjustment,
//! identification, and model simulation. Structured results cross the
//! boundary as JSON strings.

use cyclid_core::adjustment::{check_general_adjustment_report, find_adjustment_sets, AdjustmentSpec};
use cyclid_core::calculus::{check_ignorability, check_mechanism_change, check_rule, Rule, RuleQuery};
use cyclid_core::dmg::{Dmg as CoreDmg, NodeId, NodeSet};
use cyclid_core::identify::{apt_order, consolidated_district, id as run_id, IdQuery};
use cyclid_core::scm::{DiscreteScm, LinearScm};
use cyclid_core::separation::{self, Notion, SeparationQuery};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::collections::BTreeMap;

fn err(e: cyclid_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_set(ids: Vec<String>) -> NodeSet {
    ids.into_iter().map(NodeId::new).collect()
}

fn from_set(s: &NodeSet) -> Vec<String> {
    s.iter().map(|v| v.to_string()).collect()
}

/// Immutable directed mixed graph.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Dmg {
    inner: CoreDmg,
}

#[pymethods]
impl Dmg {
    /// Parses the JSON graph format.
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        Ok(Dmg {
            inner: CoreDmg::from_json(json).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn nodes(&self) -> Vec<String> {
        self.inner.node_ids().iter().map(|v| v.to_string()).collect()
    }

    fn outputs(&self) -> Vec<String> {
        from_set(&self.inner.outputs())
    }

    fn inputs(&self) -> Vec<String> {
        from_set(&self.inner.inputs())
    }

    fn components(&self) -> Vec<Vec<String>> {
        self.inner
            .strongly_connected_components()
            .components
            .iter()
            .map(from_set)
            .collect()
    }

    fn ancestors(&self, s: Vec<String>) -> PyResult<Vec<String>> {
        Ok(from_set(&self.inner.ancestors(&to_set(s)).map_err(err)?))
    }

    fn descendants(&self, s: Vec<String>) -> PyResult<Vec<String>> {
        Ok(from_set(&self.inner.descendants(&to_set(s)).map_err(err)?))
    }

    fn marginalize(&self, w: Vec<String>) -> PyResult<Dmg> {
        Ok(Dmg {
            inner: self.inner.marginalize(&to_set(w)).map_err(err)?,
        })
    }

    fn induced_dmg(&self) -> Dmg {
        Dmg {
            inner: self.inner.induced_dmg(),
        }
    }

    fn intervene(&self, w: Vec<String>) -> PyResult<Dmg> {
        Ok(Dmg {
            inner: self.inner.intervene(&to_set(w)).map_err(err)?,
        })
    }

    fn extend(&self) -> PyResult<Dmg> {
        Ok(Dmg {
            inner: self.inner.extend().map_err(err)?,
        })
    }

    fn acyclify(&self) -> Dmg {
        Dmg {
            inner: self.inner.acyclify(),
        }
    }

    fn twin_graph(&self, w: Vec<String>) -> PyResult<Dmg> {
        Ok(Dmg {
            inner: self.inner.twin_graph(&to_set(w)).map_err(err)?,
        })
    }

    fn input_confound(&self) -> Dmg {
        Dmg {
            inner: self.inner.input_confound(),
        }
    }

    #[pyo3(signature = (a, b, c=vec![]))]
    fn sigma_separated(&self, a: Vec<String>, b: Vec<String>, c: Vec<String>) -> PyResult<bool> {
        separation::sigma_separated(
            &self.inner,
            &SeparationQuery::sigma(to_set(a), to_set(b), to_set(c)),
        )
        .map_err(err)
    }

    #[pyo3(signature = (a, b, c=vec![]))]
    fn d_separated(&self, a: Vec<String>, b: Vec<String>, c: Vec<String>) -> PyResult<bool> {
        separation::d_separated(
            &self.inner,
            &SeparationQuery::new(to_set(a), to_set(b), to_set(c), Notion::D),
        )
        .map_err(err)
    }

    fn consolidated_district(&self, b: Vec<String>) -> PyResult<Vec<String>> {
        Ok(from_set(
            &consolidated_district(&self.inner, &to_set(b)).map_err(err)?,
        ))
    }

    fn apt_order(&self) -> Vec<String> {
        apt_order(&self.inner)
            .order()
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Checks one rule of causal calculus; returns (applicable, conclusion).
#[pyfunction]
#[pyo3(signature = (graph, rule, x, y, z=vec![], w=vec![], condition_on_inputs=false))]
fn calculus_rule(
    graph: &Dmg,
    rule: u8,
    x: Vec<String>,
    y: Vec<String>,
    z: Vec<String>,
    w: Vec<String>,
    condition_on_inputs: bool,
) -> PyResult<(bool, Option<String>)> {
    let q = RuleQuery {
        rule: Rule::from_number(rule).map_err(err)?,
        x: to_set(x),
        y: to_set(y),
        z: to_set(z),
        w: to_set(w),
        condition_on_inputs,
    };
    let v = check_rule(&graph.inner, &q).map_err(err)?;
    Ok((v.applicable, v.conclusion))
}

/// Mechanism-change criterion.
#[pyfunction]
fn mechanism_change(graph: &Dmg, a: Vec<String>, b: Vec<String>, i: Vec<String>) -> PyResult<bool> {
    check_mechanism_change(&graph.inner, &to_set(a), &to_set(b), &to_set(i)).map_err(err)
}

/// Counterfactual ignorability on the twin graph.
#[pyfunction]
#[pyo3(signature = (graph, y, x, z=vec![], strong=false))]
fn ignorability(
    graph: &Dmg,
    y: Vec<String>,
    x: Vec<String>,
    z: Vec<String>,
    strong: bool,
) -> PyResult<bool> {
    check_ignorability(&graph.inner, &to_set(y), &to_set(x), &to_set(z), strong).map_err(err)
}

/// General adjustment criterion; roles given as a JSON object. Returns a
/// JSON report with the per-condition outcomes and the formula text.
#[pyfunction]
fn adjustment_check(graph: &Dmg, roles_json: &str) -> PyResult<String> {
    let spec: AdjustmentSpec =
        serde_json::from_str(roles_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = check_general_adjustment_report(&graph.inner, &spec).map_err(err)?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}

/// Exhaustive adjustment-set search; returns a JSON list of assignments.
#[pyfunction]
#[pyo3(signature = (graph, y, x, c=vec![], s=vec![], w=vec![], max_size=4))]
fn adjustment_find(
    graph: &Dmg,
    y: Vec<String>,
    x: Vec<String>,
    c: Vec<String>,
    s: Vec<String>,
    w: Vec<String>,
    max_size: usize,
) -> PyResult<String> {
    let found = find_adjustment_sets(
        &graph.inner,
        &to_set(y),
        &to_set(x),
        &to_set(c),
        &to_set(s),
        &to_set(w),
        max_size,
    )
    .map_err(err)?;
    Ok(serde_json::to_string(&found).expect("assignments serialize"))
}

/// Runs the generalized ID algorithm; returns (identifiable, estimand text,
/// estimand tree JSON).
#[pyfunction]
#[pyo3(signature = (graph, y, r#do=vec![]))]
fn identify(graph: &Dmg, y: Vec<String>, r#do: Vec<String>) -> PyResult<(bool, Option<String>, Option<String>)> {
    let e = run_id(
        &graph.inner,
        &IdQuery {
            y: to_set(y),
            w: to_set(r#do),
        },
    )
    .map_err(err)?;
    if e.is_fail() {
        Ok((false, None, None))
    } else {
        let tree = serde_json::to_string(&e).expect("estimand serializes");
        Ok((true, Some(e.render()), Some(tree)))
    }
}

/// Observational law of a linear model given as JSON; returns JSON with the
/// node order, mean, and covariance.
#[pyfunction]
#[pyo3(signature = (model_json, inputs=None))]
fn linear_law(model_json: &str, inputs: Option<BTreeMap<String, f64>>) -> PyResult<String> {
    let m: LinearScm =
        serde_json::from_str(model_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let xj: BTreeMap<NodeId, f64> = inputs
        .unwrap_or_default()
        .into_iter()
        .map(|(k, v)| (NodeId::new(k), v))
        .collect();
    let (mean, cov) = m.observational_law(&xj).map_err(err)?;
    let order: Vec<String> = m.outputs().iter().map(|v| v.to_string()).collect();
    let cov_rows: Vec<Vec<f64>> = (0..cov.nrows())
        .map(|r| (0..cov.ncols()).map(|c| cov[(r, c)]).collect())
        .collect();
    Ok(serde_json::json!({
        "order": order,
        "mean": mean.iter().copied().collect::<Vec<f64>>(),
        "cov": cov_rows,
    })
    .to_string())
}

/// Enumerates the joint tables of a discrete model given as JSON.
#[pyfunction]
fn discrete_joint(model_json: &str) -> PyResult<String> {
    let m: DiscreteScm =
        serde_json::from_str(model_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let joint = m.enumerate_joint().map_err(err)?;
    let tables: Vec<serde_json::Value> = joint
        .tables
        .iter()
        .map(|(key, table)| {
            let assignment: BTreeMap<String, usize> = joint
                .inputs
                .iter()
                .zip(key)
                .map(|((j, _), &v)| (j.to_string(), v))
                .collect();
            serde_json::json!({ "inputs": assignment, "probs": table.values() })
        })
        .collect();
    Ok(serde_json::json!({
        "outputs": joint
            .outputs
            .iter()
            .map(|(v, k)| serde_json::json!({"id": v.to_string(), "domain": k}))
            .collect::<Vec<_>>(),
        "tables": tables,
    })
    .to_string())
}

#[pymodule]
fn cyclid(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dmg>()?;
    m.add_function(wrap_pyfunction!(calculus_rule, m)?)?;
    m.add_function(wrap_pyfunction!(mechanism_change, m)?)?;
    m.add_function(wrap_pyfunction!(ignorability, m)?)?;
    m.add_function(wrap_pyfunction!(adjustment_check, m)?)?;
    m.add_function(wrap_pyfunction!(adjustment_find, m)?)?;
    m.add_function(wrap_pyfunction!(identify, m)?)?;
    m.add_function(wrap_pyfunction!(linear_law, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_joint, m)?)?;
    Ok(())
}
