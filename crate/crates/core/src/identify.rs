//! Identification of causal effects: consolidated districts, apt-orders,
//! sub-graph construction, and the generalized ID algorithm producing
//! symbolic estimands.
//!
//! The algorithm shrinks the consolidated district of each queried set by
//! alternating ancestral closure and district closure; whenever the closure
//! of the target is both ancestral and a district, the effect is a marginal
//! of conditionals of the observed law. Products over districts are always
//! expanded into per-component factors and sorted by one fixed apt-order,
//! which keeps discrete-table evaluation well defined.

use crate::dmg::{Dmg, NodeId, NodeSet};
use crate::error::{Error, Result};
use crate::scm::{DiscreteJoint, Table};
use serde::Serialize;
use std::collections::BTreeMap;

/// Total order that is topological across strongly connected components and
/// contiguous within each component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AptOrder {
    order: Vec<NodeId>,
    pos: BTreeMap<NodeId, usize>,
}

impl AptOrder {
    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn position(&self, id: &NodeId) -> Result<usize> {
        self.pos
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNode(id.clone()))
    }

    /// Strict predecessors of a set: everything ordered at or before some
    /// member, minus the set itself.
    pub fn pred_lt(&self, s: &NodeSet) -> Result<NodeSet> {
        let mut max = 0usize;
        for v in s {
            max = max.max(self.position(v)?);
        }
        Ok(self
            .order
            .iter()
            .take(max + 1)
            .filter(|v| !s.contains(*v))
            .cloned()
            .collect())
    }

    fn min_position(&self, s: &NodeSet) -> usize {
        s.iter()
            .map(|v| self.pos[v])
            .min()
            .unwrap_or(usize::MAX)
    }
}

/// Deterministic apt-order: Kahn's algorithm on the component condensation
/// with lexicographic tie-breaking, members of each component sorted.
pub fn apt_order(g: &Dmg) -> AptOrder {
    let parts = g.strongly_connected_components();
    let ncomp = parts.components.len();
    let mut indegree = vec![0usize; ncomp];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for (tail, head) in g.directed_edges() {
        let ct = parts.component_of[&tail];
        let ch = parts.component_of[&head];
        if ct != ch {
            out[ct].push(ch);
        }
    }
    for o in &mut out {
        o.sort_unstable();
        o.dedup();
    }
    for o in &out {
        for &c in o {
            indegree[c] += 1;
        }
    }
    // ready components keyed by their smallest member for determinism
    let mut ready: std::collections::BTreeSet<(NodeId, usize)> = (0..ncomp)
        .filter(|&c| indegree[c] == 0)
        .map(|c| (parts.components[c].iter().next().unwrap().clone(), c))
        .collect();
    let mut order: Vec<NodeId> = Vec::with_capacity(g.len());
    while let Some(entry) = ready.iter().next().cloned() {
        ready.remove(&entry);
        let c = entry.1;
        order.extend(parts.components[c].iter().cloned());
        for &n in &out[c] {
            indegree[n] -= 1;
            if indegree[n] == 0 {
                ready.insert((parts.components[n].iter().next().unwrap().clone(), n));
            }
        }
    }
    let pos = order
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i))
        .collect();
    AptOrder { order, pos }
}

/// Checks the two apt-order axioms directly; used by the test suites.
pub fn is_apt_order(g: &Dmg, order: &[NodeId]) -> Result<bool> {
    if order.len() != g.len() {
        return Ok(false);
    }
    let pos: BTreeMap<&NodeId, usize> = order.iter().enumerate().map(|(i, v)| (v, i)).collect();
    for v in g.node_ids() {
        let sc = g.scc_of(v)?;
        let anc = g.ancestors(&std::iter::once(v.clone()).collect())?;
        for w in anc.difference(&sc) {
            if pos[w] >= pos[v] {
                return Ok(false);
            }
        }
        // contiguity: everything between two component members is a member
        let lo = sc.iter().map(|m| pos[m]).min().unwrap();
        let hi = sc.iter().map(|m| pos[m]).max().unwrap();
        if hi - lo + 1 != sc.len() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Consolidated district of `b`: closure under bidirected adjacency and
/// shared strongly connected components, restricted to output nodes.
pub fn consolidated_district(g: &Dmg, b: &NodeSet) -> Result<NodeSet> {
    let outputs = g.outputs();
    if !b.is_subset(&outputs) {
        for v in b {
            g.index_of(v)?;
        }
        return Err(Error::MalformedQuery(
            "consolidated districts are defined over output nodes".into(),
        ));
    }
    let mut seen: NodeSet = b.clone();
    let mut stack: Vec<NodeId> = b.iter().cloned().collect();
    while let Some(v) = stack.pop() {
        let mut step: NodeSet = g.scc_of(&v)?;
        step.extend(g.spouses_of(&std::iter::once(v.clone()).collect())?);
        for w in step {
            if outputs.contains(&w) && seen.insert(w.clone()) {
                stack.push(w);
            }
        }
    }
    Ok(seen)
}

/// All consolidated districts, a partition of the output nodes.
pub fn all_consolidated_districts(g: &Dmg) -> Vec<NodeSet> {
    let mut remaining = g.outputs();
    let mut out = Vec::new();
    while let Some(v) = remaining.iter().next().cloned() {
        let d = consolidated_district(g, &std::iter::once(v).collect())
            .expect("outputs are valid district seeds");
        for w in &d {
            remaining.remove(w);
        }
        out.push(d);
    }
    out
}

/// Graph of the sub-model on `c`: the induced subgraph on `c` and its
/// parents, with the external parents turned into input nodes.
pub fn subgraph_for(g: &Dmg, c: &NodeSet) -> Result<Dmg> {
    if c.is_empty() {
        return Err(Error::EmptyTarget);
    }
    if !c.is_subset(&g.outputs()) {
        for v in c {
            g.index_of(v)?;
        }
        return Err(Error::MalformedQuery("sub-model target must be output nodes".into()));
    }
    let pa = g.parents_of(c)?;
    let keep: NodeSet = c.union(&pa).cloned().collect();
    let external: NodeSet = pa.difference(c).cloned().collect();
    g.induced_subgraph(&keep)?.intervene(&external)
}

// ── Estimands ──────────────────────────────────────────────────────────────

/// Symbolic expression over observational kernels.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimand {
    /// Observational term `P(target | given ; do(do_set))`.
    Kernel {
        target: NodeSet,
        given: NodeSet,
        do_set: NodeSet,
    },
    /// Conditional of the child's distribution.
    Conditional {
        child: Box<Estimand>,
        target: NodeSet,
        given: NodeSet,
    },
    /// Integral of the child over `over`.
    Marginal { child: Box<Estimand>, over: NodeSet },
    /// Product of factors with pairwise disjoint targets, in apt-order.
    Product { factors: Vec<Estimand> },
    Fail,
}

impl Estimand {
    pub fn is_fail(&self) -> bool {
        matches!(self, Estimand::Fail)
    }

    /// The variables the expression is a distribution over.
    pub fn dist_vars(&self) -> NodeSet {
        match self {
            Estimand::Kernel { target, .. } => target.clone(),
            Estimand::Conditional { target, .. } => target.clone(),
            Estimand::Marginal { child, over } => {
                child.dist_vars().difference(over).cloned().collect()
            }
            Estimand::Product { factors } => {
                factors.iter().flat_map(|f| f.dist_vars()).collect()
            }
            Estimand::Fail => NodeSet::new(),
        }
    }

    pub fn render(&self) -> String {
        fn list(s: &NodeSet) -> String {
            s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        }
        match self {
            Estimand::Kernel {
                target,
                given,
                do_set,
            } => {
                let mut out = format!("P({}", list(target));
                if !given.is_empty() {
                    out.push_str(&format!(" | {}", list(given)));
                }
                if !do_set.is_empty() {
                    out.push_str(&format!(" ; do({})", list(do_set)));
                }
                out.push(')');
                out
            }
            Estimand::Conditional {
                child,
                target,
                given,
            } => {
                let head = if given.is_empty() {
                    format!("P({})", list(target))
                } else {
                    format!("P({} | {})", list(target), list(given))
                };
                format!("{head}{{{}}}", child.render())
            }
            Estimand::Marginal { child, over } => {
                format!("∫_{{{}}} {}", list(over), child.render())
            }
            Estimand::Product { factors } => factors
                .iter()
                .map(|f| match f {
                    Estimand::Kernel { .. } | Estimand::Conditional { .. } => f.render(),
                    _ => format!("({})", f.render()),
                })
                .collect::<Vec<_>>()
                .join(" · "),
            Estimand::Fail => "FAIL".into(),
        }
    }

    fn eval(&self, base: &Table) -> Result<Table> {
        match self {
            Estimand::Kernel { target, given, .. } => base.conditional(target, given),
            Estimand::Conditional {
                child,
                target,
                given,
            } => child.eval(base)?.conditional(target, given),
            Estimand::Marginal { child, over } => child.eval(base)?.marginal(over),
            Estimand::Product { factors } => {
                let mut acc = Table::scalar(1.0);
                for f in factors {
                    acc = acc.product(&f.eval(base)?)?;
                }
                Ok(acc)
            }
            Estimand::Fail => Err(Error::MalformedQuery("cannot evaluate FAIL".into())),
        }
    }
}

/// Identification query: target `y` and intervention set `w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdQuery {
    pub y: NodeSet,
    pub w: NodeSet,
}

fn product_sorted(order: &AptOrder, mut factors: Vec<Estimand>) -> Estimand {
    // flatten nested products, then sort by apt position of the targets
    let mut flat = Vec::new();
    while let Some(f) = factors.pop() {
        match f {
            Estimand::Product { factors: inner } => factors.extend(inner),
            other => flat.push(other),
        }
    }
    flat.sort_by_key(|f| order.min_position(&f.dist_vars()));
    if flat.len() == 1 {
        flat.pop().unwrap()
    } else {
        Estimand::Product { factors: flat }
    }
}

/// `Q[D]` for a union of consolidated districts: the apt-order-sorted
/// product of `P(S | Pred(S) ∩ V ; do(J))` over the components inside `d`.
fn materialize_q(g: &Dmg, order: &AptOrder, d: &NodeSet) -> Result<Estimand> {
    let outputs = g.outputs();
    let inputs = g.inputs();
    let mut factors = Vec::new();
    let mut seen: NodeSet = NodeSet::new();
    for v in d {
        if seen.contains(v) {
            continue;
        }
        let s = g.scc_of(v)?;
        debug_assert!(s.is_subset(d), "districts are unions of components");
        seen.extend(s.iter().cloned());
        let given: NodeSet = order.pred_lt(&s)?.intersection(&outputs).cloned().collect();
        factors.push(Estimand::Kernel {
            target: s,
            given,
            do_set: inputs.clone(),
        });
    }
    Ok(product_sorted(order, factors))
}

fn id_cd(
    g: &Dmg,
    order: &AptOrder,
    c: &NodeSet,
    d: &NodeSet,
    q_d: Estimand,
) -> Result<Estimand> {
    // A <- Anc over the sub-model graph, intersected with D; directed edges
    // among D are untouched by the sub-model construction.
    let g_d = g.induced_subgraph(d)?;
    let a = g_d.ancestors(c)?;
    let q_a = if a == *d {
        q_d
    } else {
        Estimand::Marginal {
            over: d.difference(&a).cloned().collect(),
            child: Box::new(q_d),
        }
    };
    if a == *c {
        return Ok(q_a);
    }
    if a == *d {
        return Ok(Estimand::Fail);
    }
    // C ⊊ A ⊊ D: rebuild the district of C inside the sub-model on A from
    // conditionals of Q[A] and recurse.
    let g_a = g.induced_subgraph(&a)?;
    let cd = consolidated_district(&g_a, c)?;
    let mut factors = Vec::new();
    let mut seen: NodeSet = NodeSet::new();
    for v in &cd {
        if seen.contains(v) {
            continue;
        }
        let s = g_a.scc_of(v)?;
        seen.extend(s.iter().cloned());
        let given: NodeSet = order
            .pred_lt(&s)?
            .intersection(&a)
            .cloned()
            .collect();
        factors.push(Estimand::Conditional {
            child: Box::new(q_a.clone()),
            target: s,
            given,
        });
    }
    let q_cd = product_sorted(order, factors);
    id_cd(g, order, c, &cd, q_cd)
}

/// Generalized identification of `P(y | do(w))` from the observed law
/// `P(V | do(J))` on the induced DMG `g`. `Fail` is an answer, not an
/// error.
pub fn id(g: &Dmg, q: &IdQuery) -> Result<Estimand> {
    let outputs = g.outputs();
    if q.y.is_empty() {
        return Err(Error::EmptyTarget);
    }
    if !q.y.is_subset(&outputs) {
        for v in &q.y {
            g.index_of(v)?;
        }
        return Err(Error::MalformedQuery("y must contain only output nodes".into()));
    }
    if !q.w.is_subset(&g.node_set()) {
        return Err(Error::MalformedQuery("w references unknown nodes".into()));
    }
    if !q.y.is_disjoint(&q.w) {
        return Err(Error::MalformedQuery("y and w must be disjoint".into()));
    }
    let order = apt_order(g);
    let w_v: NodeSet = q.w.intersection(&outputs).cloned().collect();
    let rest: NodeSet = outputs.difference(&w_v).cloned().collect();
    let g_rest = g.induced_subgraph(&rest)?;
    let h = g_rest.ancestors(&q.y)?;
    let g_h = g.induced_subgraph(&h)?;

    let mut district_terms = Vec::new();
    for c in all_consolidated_districts(&g_h) {
        let d = consolidated_district(g, &c)?;
        let q_d = materialize_q(g, &order, &d)?;
        let term = id_cd(g, &order, &c, &d, q_d)?;
        if term.is_fail() {
            return Ok(Estimand::Fail);
        }
        district_terms.push(term);
    }
    let q_h = product_sorted(&order, district_terms);
    let over: NodeSet = h.difference(&q.y).cloned().collect();
    Ok(if over.is_empty() {
        q_h
    } else {
        Estimand::Marginal {
            child: Box::new(q_h),
            over,
        }
    })
}

/// Interprets an estimand against an enumerated observed law at one input
/// assignment. The result is a table whose distribution variables are the
/// estimand's targets; intervened variables appear as free parameters.
/// Conditioning on zero-mass events surfaces as [`Error::DomainGap`].
pub fn evaluate_estimand(
    e: &Estimand,
    joint: &DiscreteJoint,
    inputs: &BTreeMap<NodeId, usize>,
) -> Result<Table> {
    let out = evaluate_estimand_lenient(e, joint, inputs)?;
    if out.has_gap() {
        return Err(Error::DomainGap(
            "estimand conditions on a zero-probability event".into(),
        ));
    }
    Ok(out)
}

/// As [`evaluate_estimand`], but zero-mass conditioning events stay in the
/// result as NaN gaps instead of failing, so callers can compare the
/// defined entries pointwise.
pub fn evaluate_estimand_lenient(
    e: &Estimand,
    joint: &DiscreteJoint,
    inputs: &BTreeMap<NodeId, usize>,
) -> Result<Table> {
    let base = joint.table_for(inputs)?;
    e.eval(base)
}
