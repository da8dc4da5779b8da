//! The three rules of causal calculus, mechanism-change checks, and
//! counterfactual ignorability, all compiled to sigma-separation on derived
//! graphs.
//!
//! A rule query is decided on the extended intervened graph: intervene on
//! the non-input part of `W`, then attach an indicator input `I_v` to every
//! output. Rule 1 tests `Y _||_ X | Z`, rule 2 tests `Y _||_ I_X | X, Z`,
//! rule 3 tests `Y _||_ I_X | Z`.

use crate::dmg::{Dmg, NodeSet};
use crate::error::{Error, Result};
use crate::separation::{sigma_separated, SeparationQuery};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    One,
    Two,
    Three,
}

impl Rule {
    pub fn number(self) -> u8 {
        match self {
            Rule::One => 1,
            Rule::Two => 2,
            Rule::Three => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Rule> {
        match n {
            1 => Ok(Rule::One),
            2 => Ok(Rule::Two),
            3 => Ok(Rule::Three),
            _ => Err(Error::MalformedQuery(format!("no rule {n}"))),
        }
    }
}

/// Applicability query for one rule. `w` must contain every input node of
/// the graph; `condition_on_inputs` additionally conditions each separation
/// on the intervened nodes `w \ J`, which is sound because their values are
/// held fixed, and is off by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleQuery {
    pub rule: Rule,
    pub x: NodeSet,
    pub y: NodeSet,
    pub z: NodeSet,
    #[serde(default)]
    pub w: NodeSet,
    #[serde(default)]
    pub condition_on_inputs: bool,
}

/// Outcome of a rule check, carrying the exact graph and separation query
/// used so a verdict can be audited.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleVerdict {
    pub applicable: bool,
    pub separation_checked: SeparationQuery,
    pub graph_used: Dmg,
    pub conclusion: Option<String>,
}

fn render_kernel(y: &NodeSet, given: &[(&str, &NodeSet)]) -> String {
    let list = |s: &NodeSet| {
        s.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut parts: Vec<String> = Vec::new();
    for (prefix, set) in given {
        if set.is_empty() {
            continue;
        }
        if prefix.is_empty() {
            parts.push(list(set));
        } else {
            parts.push(format!("{prefix}({})", list(set)));
        }
    }
    if parts.is_empty() {
        format!("P({})", list(y))
    } else {
        format!("P({} | {})", list(y), parts.join(", "))
    }
}

fn conclusion_for(q: &RuleQuery, w_do: &NodeSet) -> String {
    let (lhs, rhs) = match q.rule {
        Rule::One => (
            render_kernel(&q.y, &[("", &q.x), ("", &q.z), ("do", w_do)]),
            render_kernel(&q.y, &[("", &q.z), ("do", w_do)]),
        ),
        Rule::Two => (
            render_kernel(&q.y, &[("do", &q.x), ("", &q.z), ("do", w_do)]),
            render_kernel(&q.y, &[("", &q.x), ("", &q.z), ("do", w_do)]),
        ),
        Rule::Three => (
            render_kernel(&q.y, &[("do", &q.x), ("", &q.z), ("do", w_do)]),
            render_kernel(&q.y, &[("", &q.z), ("do", w_do)]),
        ),
    };
    format!("{lhs} = {rhs}")
}

/// Indicator set `{I_v : v in x}`.
pub fn indicator_set(x: &NodeSet) -> NodeSet {
    x.iter().map(Dmg::indicator_id).collect()
}

fn validate_rule_query(g: &Dmg, q: &RuleQuery) -> Result<()> {
    let outputs = g.outputs();
    let inputs = g.inputs();
    for (name, set) in [("x", &q.x), ("y", &q.y), ("z", &q.z)] {
        if !set.is_subset(&outputs) {
            return Err(Error::MalformedQuery(format!(
                "{name} must contain only output nodes"
            )));
        }
    }
    if q.y.is_empty() {
        return Err(Error::MalformedQuery("y must be non-empty".into()));
    }
    if !q.w.is_subset(&g.node_set()) {
        return Err(Error::MalformedQuery("w references unknown nodes".into()));
    }
    if !inputs.is_subset(&q.w) {
        return Err(Error::MalformedQuery(
            "w must contain every input node of the graph".into(),
        ));
    }
    let sets = [&q.x, &q.y, &q.z];
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if !sets[i].is_disjoint(sets[j]) {
                return Err(Error::MalformedQuery("x, y, z must be pairwise disjoint".into()));
            }
        }
    }
    if sets.iter().any(|s| !s.is_disjoint(&q.w)) {
        return Err(Error::MalformedQuery("w must be disjoint from x, y, z".into()));
    }
    Ok(())
}

/// Checks one rule of causal calculus on the induced DMG `g`.
pub fn check_rule(g: &Dmg, q: &RuleQuery) -> Result<RuleVerdict> {
    validate_rule_query(g, q)?;
    let w_do: NodeSet = q.w.difference(&g.inputs()).cloned().collect();
    let ghat = g.intervene(&w_do)?.extend()?;
    let (a, b, mut c) = match q.rule {
        Rule::One => (q.y.clone(), q.x.clone(), q.z.clone()),
        Rule::Two => (
            q.y.clone(),
            indicator_set(&q.x),
            q.x.union(&q.z).cloned().collect(),
        ),
        Rule::Three => (q.y.clone(), indicator_set(&q.x), q.z.clone()),
    };
    if q.condition_on_inputs {
        c.extend(w_do.iter().cloned());
    }
    let sep = SeparationQuery::sigma(a, b, c);
    let applicable = sigma_separated(&ghat, &sep)?;
    Ok(RuleVerdict {
        applicable,
        conclusion: applicable.then(|| conclusion_for(q, &w_do)),
        separation_checked: sep,
        graph_used: ghat,
    })
}

/// Mechanism-change criterion: `P(X_a | X_b, do(X_J))` does not depend on
/// the inputs in `i` iff `a` and `i` are sigma-separated by `b` together
/// with the remaining inputs.
pub fn check_mechanism_change(g: &Dmg, a: &NodeSet, b: &NodeSet, i: &NodeSet) -> Result<bool> {
    let inputs = g.inputs();
    let outputs = g.outputs();
    if !i.is_subset(&inputs) {
        return Err(Error::MalformedQuery("i must contain only input nodes".into()));
    }
    if !a.is_subset(&outputs) || !b.is_subset(&outputs) {
        return Err(Error::MalformedQuery("a and b must contain only output nodes".into()));
    }
    let mut c = b.clone();
    c.extend(inputs.difference(i).cloned());
    sigma_separated(g, &SeparationQuery::sigma(a.clone(), i.clone(), c))
}

/// Counterfactual ignorability on the twin graph. `strong` additionally
/// requires the factual outcome to be separated from the treatment.
pub fn check_ignorability(
    g: &Dmg,
    y: &NodeSet,
    x: &NodeSet,
    z: &NodeSet,
    strong: bool,
) -> Result<bool> {
    let outputs = g.outputs();
    for (name, set) in [("y", y), ("x", x), ("z", z)] {
        if !set.is_subset(&outputs) {
            return Err(Error::MalformedQuery(format!(
                "{name} must contain only output nodes"
            )));
        }
    }
    if !y.is_disjoint(x) || !y.is_disjoint(z) || !x.is_disjoint(z) {
        return Err(Error::MalformedQuery("y, x, z must be pairwise disjoint".into()));
    }
    let (twin, map) = g.twin_graph_with_map(x)?;
    let y_do: NodeSet = y.iter().map(|v| map[v].clone()).collect();
    let a: NodeSet = if strong {
        y.union(&y_do).cloned().collect()
    } else {
        y_do
    };
    sigma_separated(&twin, &SeparationQuery::sigma(a, x.clone(), z.clone()))
}
