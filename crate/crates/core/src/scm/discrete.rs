//! Finite-domain models with explicit per-loop mechanisms.
//!
//! Mechanisms are given per strongly connected component of the structure
//! graph; sub-loop mechanisms are optional and demanded lazily by
//! interventions that split a component. Global compatibility of nested
//! registered loops is checked by [`DiscreteScm::validate_compatibility`].

use crate::dmg::{Dmg, NodeId, NodeKind, NodeSet};
use crate::error::{Error, Result};
use crate::scm::table::Table;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Hard cap on the product of all node domain sizes for enumeration.
pub const MAX_STATE_SPACE: u128 = 1_000_000;

/// Cap on the number of registered loops the compatibility validator accepts.
pub const MAX_REGISTERED_LOOPS: usize = 12;

/// Deterministic mechanism for one loop: a table from assignments of the
/// loop's external parents (sorted, mixed-radix, last parent fastest) to
/// value tuples for the loop members (sorted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    #[serde(rename = "loop")]
    pub scope: Vec<NodeId>,
    pub parents: Vec<NodeId>,
    pub table: Vec<Vec<usize>>,
}

/// A compatibility violation: the joint mechanism of `sup` fixes values that
/// the registered mechanism of `sub` contradicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityViolation {
    pub sub: Vec<NodeId>,
    pub sup: Vec<NodeId>,
    pub assignment: BTreeMap<NodeId, usize>,
    pub expected: Vec<usize>,
    pub got: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScm {
    outputs: Vec<(NodeId, usize)>,
    inputs: Vec<(NodeId, usize)>,
    noises: Vec<(NodeId, Vec<f64>)>,
    edges: Vec<(NodeId, NodeId)>,
    mechanisms: BTreeMap<Vec<NodeId>, Mechanism>,
    pinned: BTreeMap<NodeId, usize>,
}

/// Exactly enumerated family of observed-variable tables, one per input
/// assignment (in the order of [`DiscreteScm::inputs`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    pub inputs: Vec<(NodeId, usize)>,
    pub outputs: Vec<(NodeId, usize)>,
    pub tables: BTreeMap<Vec<usize>, Table>,
}

impl DiscreteJoint {
    pub fn table_for(&self, assignment: &BTreeMap<NodeId, usize>) -> Result<&Table> {
        let key: Vec<usize> = self
            .inputs
            .iter()
            .map(|(j, _)| {
                assignment
                    .get(j)
                    .copied()
                    .ok_or_else(|| Error::UnknownNode(j.clone()))
            })
            .collect::<Result<_>>()?;
        self.tables
            .get(&key)
            .ok_or_else(|| Error::MalformedQuery("input assignment out of range".into()))
    }
}

impl DiscreteScm {
    pub fn new(
        outputs: Vec<(NodeId, usize)>,
        inputs: Vec<(NodeId, usize)>,
        noises: Vec<(NodeId, Vec<f64>)>,
        edges: Vec<(NodeId, NodeId)>,
        mechanisms: Vec<Mechanism>,
    ) -> Result<DiscreteScm> {
        let mut m = DiscreteScm {
            outputs,
            inputs,
            noises,
            edges,
            mechanisms: BTreeMap::new(),
            pinned: BTreeMap::new(),
        };
        m.outputs.sort();
        m.inputs.sort();
        m.noises.sort_by(|a, b| a.0.cmp(&b.0));
        m.edges.sort();
        m.edges.dedup();
        for (id, dist) in &m.noises {
            if dist.is_empty() || dist.iter().any(|p| *p < 0.0) {
                return Err(Error::Parse(format!("invalid noise distribution at `{id}`")));
            }
            if (dist.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Parse(format!("noise at `{id}` does not sum to one")));
            }
        }
        for (_, k) in m.outputs.iter().chain(m.inputs.iter()) {
            if *k == 0 {
                return Err(Error::Parse("empty domain".into()));
            }
        }
        let graph = m.structure_graph()?;
        for mech in mechanisms {
            m.register_mechanism(&graph, mech)?;
        }
        // every component of observed nodes needs its mechanism
        for comp in graph.strongly_connected_components().components {
            let scope: Vec<NodeId> = comp.iter().cloned().collect();
            if scope.iter().all(|v| m.is_output(v)) && !m.mechanisms.contains_key(&scope) {
                return Err(Error::MissingSubLoopMechanism(fmt_scope(&scope)));
            }
        }
        Ok(m)
    }

    fn register_mechanism(&mut self, graph: &Dmg, mut mech: Mechanism) -> Result<()> {
        mech.scope.sort();
        mech.parents.sort();
        for v in &mech.scope {
            if !self.is_output(v) {
                return Err(Error::Parse(format!("mechanism scope node `{v}` is not an output")));
            }
        }
        let scope_set: NodeSet = mech.scope.iter().cloned().collect();
        // scope must be a loop of the structure graph
        let scc = graph.scc_of(&mech.scope[0])?;
        if !scope_set.is_subset(&scc) {
            return Err(Error::Parse(format!(
                "mechanism scope {} is not a loop",
                fmt_scope(&mech.scope)
            )));
        }
        if graph
            .enumerate_loops(&scope_set)
            .map(|ls| !ls.contains(&scope_set))
            .unwrap_or(true)
        {
            return Err(Error::Parse(format!(
                "mechanism scope {} is not a loop",
                fmt_scope(&mech.scope)
            )));
        }
        let want_parents: Vec<NodeId> = graph
            .parents_of(&scope_set)?
            .difference(&scope_set)
            .cloned()
            .collect();
        if mech.parents != want_parents {
            return Err(Error::Parse(format!(
                "mechanism for {} declares parents {:?}, graph implies {:?}",
                fmt_scope(&mech.scope),
                mech.parents,
                want_parents
            )));
        }
        let rows: usize = mech
            .parents
            .iter()
            .map(|p| self.domain(p).expect("parent domain exists"))
            .product();
        if mech.table.len() != rows {
            return Err(Error::Parse(format!(
                "mechanism for {} has {} rows, expected {rows}",
                fmt_scope(&mech.scope),
                mech.table.len()
            )));
        }
        for row in &mech.table {
            if row.len() != mech.scope.len() {
                return Err(Error::Parse("mechanism row width mismatch".into()));
            }
            for (v, val) in mech.scope.iter().zip(row) {
                if *val >= self.domain(v).expect("scope domain exists") {
                    return Err(Error::Parse(format!("mechanism value out of domain for `{v}`")));
                }
            }
        }
        self.mechanisms.insert(mech.scope.clone(), mech);
        Ok(())
    }

    pub fn outputs(&self) -> &[(NodeId, usize)] {
        &self.outputs
    }

    pub fn inputs(&self) -> &[(NodeId, usize)] {
        &self.inputs
    }

    pub fn noises(&self) -> &[(NodeId, Vec<f64>)] {
        &self.noises
    }

    pub fn mechanisms(&self) -> impl Iterator<Item = &Mechanism> {
        self.mechanisms.values()
    }

    pub fn pinned(&self) -> &BTreeMap<NodeId, usize> {
        &self.pinned
    }

    pub fn domain(&self, v: &NodeId) -> Option<usize> {
        self.outputs
            .iter()
            .chain(self.inputs.iter())
            .find(|(id, _)| id == v)
            .map(|(_, k)| *k)
            .or_else(|| {
                self.noises
                    .iter()
                    .find(|(id, _)| id == v)
                    .map(|(_, d)| d.len())
            })
    }

    fn is_output(&self, v: &NodeId) -> bool {
        self.outputs.iter().any(|(id, _)| id == v)
    }

    /// The full structure graph with inputs, outputs, and noise nodes as
    /// latents.
    pub fn graph_plus(&self) -> Dmg {
        self.structure_graph().expect("validated at construction")
    }

    fn structure_graph(&self) -> Result<Dmg> {
        let mut nodes: Vec<(NodeId, NodeKind)> = self
            .outputs
            .iter()
            .map(|(v, _)| (v.clone(), NodeKind::Output))
            .collect();
        nodes.extend(self.inputs.iter().map(|(j, _)| (j.clone(), NodeKind::Input)));
        nodes.extend(self.noises.iter().map(|(u, _)| (u.clone(), NodeKind::Latent)));
        Dmg::new(nodes, self.edges.clone(), Vec::new())
    }

    /// Latent projection of the structure graph; what the graphical queries
    /// operate on.
    pub fn induced_dmg(&self) -> Dmg {
        self.graph_plus().induced_dmg()
    }

    fn state_space(&self) -> u128 {
        let mut total: u128 = 1;
        for (_, k) in self.outputs.iter().chain(self.inputs.iter()) {
            total = total.saturating_mul(*k as u128);
        }
        for (_, d) in &self.noises {
            total = total.saturating_mul(d.len() as u128);
        }
        total
    }

    /// Solves the observed variables for one full noise-and-input
    /// assignment, component by component in topological order.
    fn solve(&self, order: &[NodeSet], assignment: &mut BTreeMap<NodeId, usize>) -> Result<()> {
        for comp in order {
            let scope: Vec<NodeId> = comp.iter().cloned().collect();
            let mech = self
                .mechanisms
                .get(&scope)
                .ok_or_else(|| Error::MissingSubLoopMechanism(fmt_scope(&scope)))?;
            let mut row = 0usize;
            for p in &mech.parents {
                let k = self.domain(p).expect("parent domain");
                row = row * k + assignment[p];
            }
            let vals = &mech.table[row];
            for (v, val) in mech.scope.iter().zip(vals) {
                assignment.insert(v.clone(), *val);
            }
        }
        Ok(())
    }

    /// Output components in a topological order of the condensation.
    fn component_order(&self, graph: &Dmg) -> Vec<NodeSet> {
        let parts = graph.strongly_connected_components();
        let mut comps: Vec<NodeSet> = parts
            .components
            .iter()
            .filter(|c| c.iter().all(|v| self.is_output(v)))
            .cloned()
            .collect();
        // topological: repeatedly pick a component whose external parents
        // are all solved or exogenous
        let mut order = Vec::new();
        let mut solved: NodeSet = self
            .inputs
            .iter()
            .map(|(j, _)| j.clone())
            .chain(self.noises.iter().map(|(u, _)| u.clone()))
            .collect();
        while !comps.is_empty() {
            let pos = comps
                .iter()
                .position(|c| {
                    graph
                        .parents_of(c)
                        .expect("component nodes exist")
                        .difference(c)
                        .all(|p| solved.contains(p))
                })
                .expect("condensation is acyclic");
            let c = comps.remove(pos);
            for v in &c {
                solved.insert(v.clone());
            }
            order.push(c);
        }
        order
    }

    /// Enumerates the exact family of observed joint tables, one per
    /// assignment of the (unpinned) inputs.
    pub fn enumerate_joint(&self) -> Result<DiscreteJoint> {
        let total = self.state_space();
        if total > MAX_STATE_SPACE {
            return Err(Error::StateSpaceTooLarge {
                states: total,
                max: MAX_STATE_SPACE,
            });
        }
        let graph = self.graph_plus();
        let order = self.component_order(&graph);
        let out_vars: Vec<(NodeId, usize)> = self.outputs.clone();
        let out_size: usize = out_vars.iter().map(|(_, k)| *k).product();

        let free_inputs: Vec<(NodeId, usize)> = self
            .inputs
            .iter()
            .filter(|(j, _)| !self.pinned.contains_key(j))
            .cloned()
            .collect();
        let mut tables = BTreeMap::new();
        let mut input_assign = vec![0usize; free_inputs.len()];
        loop {
            let mut base: BTreeMap<NodeId, usize> = self.pinned.clone();
            for ((j, _), &v) in free_inputs.iter().zip(&input_assign) {
                base.insert(j.clone(), v);
            }
            let mut probs = vec![0.0f64; out_size];
            let mut noise_assign = vec![0usize; self.noises.len()];
            loop {
                let mut weight = 1.0f64;
                let mut assignment = base.clone();
                for ((u, dist), &v) in self.noises.iter().zip(&noise_assign) {
                    weight *= dist[v];
                    assignment.insert(u.clone(), v);
                }
                if weight > 0.0 {
                    self.solve(&order, &mut assignment)?;
                    let mut idx = 0usize;
                    for (v, k) in &out_vars {
                        idx = idx * k + assignment[v];
                    }
                    probs[idx] += weight;
                }
                if !increment(&mut noise_assign, &self.noises.iter().map(|(_, d)| d.len()).collect::<Vec<_>>()) {
                    break;
                }
            }
            let table = Table::new(out_vars.clone(), out_vars.iter().map(|(v, _)| v.clone()).collect(), probs)?;
            let key: Vec<usize> = self
                .inputs
                .iter()
                .map(|(j, _)| base[j])
                .collect();
            tables.insert(key, table);
            if !increment(
                &mut input_assign,
                &free_inputs.iter().map(|(_, k)| *k).collect::<Vec<_>>(),
            ) {
                break;
            }
        }
        Ok(DiscreteJoint {
            inputs: self.inputs.clone(),
            outputs: out_vars,
            tables,
        })
    }

    /// Perfect intervention: the targets become pinned inputs, every loop
    /// mechanism meeting a target is dropped, and the remaining components
    /// are re-solved from registered sub-loop mechanisms. Fails with
    /// [`Error::MissingSubLoopMechanism`] when the intervention splits a
    /// component whose pieces were never registered.
    pub fn intervene(&self, values: &BTreeMap<NodeId, usize>) -> Result<DiscreteScm> {
        let mut m = self.clone();
        let mut targets: NodeSet = NodeSet::new();
        for (v, val) in values {
            if let Some(k) = self.domain(v) {
                if *val >= k {
                    return Err(Error::MalformedQuery(format!(
                        "intervention value {val} out of domain for `{v}`"
                    )));
                }
            } else {
                return Err(Error::UnknownNode(v.clone()));
            }
            if self.is_output(v) {
                targets.insert(v.clone());
            } else if self.inputs.iter().any(|(j, _)| j == v) {
                m.pinned.insert(v.clone(), *val);
            } else {
                return Err(Error::MalformedQuery(format!(
                    "cannot intervene on noise node `{v}`"
                )));
            }
        }
        if targets.is_empty() {
            return Ok(m);
        }
        m.edges.retain(|(_, h)| !targets.contains(h));
        // noises whose every child was intervened no longer feed anything
        m.noises.retain(|(u, _)| m.edges.iter().any(|(t, _)| t == u));
        let moved: Vec<(NodeId, usize)> = m
            .outputs
            .iter()
            .filter(|(v, _)| targets.contains(v))
            .cloned()
            .collect();
        m.outputs.retain(|(v, _)| !targets.contains(v));
        for (v, k) in moved {
            m.pinned.insert(v.clone(), values[&v]);
            m.inputs.push((v, k));
        }
        m.inputs.sort();
        m.mechanisms
            .retain(|scope, _| scope.iter().all(|v| !targets.contains(v)));
        // every remaining component needs a registered mechanism
        let graph = m.structure_graph()?;
        for comp in graph.strongly_connected_components().components {
            if comp.iter().all(|v| m.is_output(v)) {
                let scope: Vec<NodeId> = comp.iter().cloned().collect();
                if !m.mechanisms.contains_key(&scope) {
                    return Err(Error::MissingSubLoopMechanism(fmt_scope(&scope)));
                }
            }
        }
        Ok(m)
    }

    /// Checks the global-compatibility implication for every nested pair of
    /// registered loops over every assignment of the outer loop's parents.
    pub fn validate_compatibility(&self) -> Result<Vec<CompatibilityViolation>> {
        if self.mechanisms.len() > MAX_REGISTERED_LOOPS {
            return Err(Error::GraphTooLarge {
                nodes: self.mechanisms.len(),
                max: MAX_REGISTERED_LOOPS,
            });
        }
        let mut violations = Vec::new();
        for (sup_scope, sup) in &self.mechanisms {
            let sup_set: NodeSet = sup_scope.iter().cloned().collect();
            for (sub_scope, sub) in &self.mechanisms {
                if sub_scope == sup_scope {
                    continue;
                }
                let sub_set: NodeSet = sub_scope.iter().cloned().collect();
                if !sub_set.is_subset(&sup_set) {
                    continue;
                }
                let dims: Vec<usize> = sup
                    .parents
                    .iter()
                    .map(|p| self.domain(p).expect("parent domain"))
                    .collect();
                let mut row_assign = vec![0usize; sup.parents.len()];
                loop {
                    let mut assignment: BTreeMap<NodeId, usize> = sup
                        .parents
                        .iter()
                        .cloned()
                        .zip(row_assign.iter().copied())
                        .collect();
                    let mut row = 0usize;
                    for (p, k) in sup.parents.iter().zip(&dims) {
                        row = row * k + assignment[p];
                    }
                    for (v, val) in sup.scope.iter().zip(&sup.table[row]) {
                        assignment.insert(v.clone(), *val);
                    }
                    // evaluate the sub-loop mechanism on the same point
                    let mut sub_row = 0usize;
                    for p in &sub.parents {
                        let k = self.domain(p).expect("parent domain");
                        sub_row = sub_row * k + assignment[p];
                    }
                    let got = sub.table[sub_row].clone();
                    let expected: Vec<usize> =
                        sub.scope.iter().map(|v| assignment[v]).collect();
                    if got != expected {
                        violations.push(CompatibilityViolation {
                            sub: sub_scope.clone(),
                            sup: sup_scope.clone(),
                            assignment,
                            expected,
                            got,
                        });
                    }
                    if !increment(&mut row_assign, &dims) {
                        break;
                    }
                }
            }
        }
        Ok(violations)
    }

    /// Sub-model on `c`: outputs restricted to `c`, the external non-noise
    /// parents of `c` re-kinded as inputs (their incoming edges cut), noise
    /// parents kept, and exactly the mechanisms with scope inside `c`.
    pub fn sub_model(&self, c: &NodeSet) -> Result<DiscreteScm> {
        if c.is_empty() {
            return Err(Error::EmptyTarget);
        }
        for v in c {
            if !self.is_output(v) {
                return Err(Error::MalformedQuery(format!(
                    "sub-model target `{v}` is not an output"
                )));
            }
        }
        let gp = self.graph_plus();
        let pa = gp.parents_of(c)?;
        let outputs: Vec<(NodeId, usize)> = self
            .outputs
            .iter()
            .filter(|(v, _)| c.contains(v))
            .cloned()
            .collect();
        let mut inputs: Vec<(NodeId, usize)> = self
            .inputs
            .iter()
            .filter(|(j, _)| pa.contains(j))
            .cloned()
            .collect();
        inputs.extend(
            self.outputs
                .iter()
                .filter(|(v, _)| pa.contains(v) && !c.contains(v))
                .cloned(),
        );
        let noises: Vec<(NodeId, Vec<f64>)> = self
            .noises
            .iter()
            .filter(|(u, _)| pa.contains(u))
            .cloned()
            .collect();
        let edges: Vec<(NodeId, NodeId)> = self
            .edges
            .iter()
            .filter(|(t, h)| c.contains(h) && (c.contains(t) || pa.contains(t)))
            .cloned()
            .collect();
        let mechanisms: Vec<Mechanism> = self
            .mechanisms
            .values()
            .filter(|m| m.scope.iter().all(|v| c.contains(v)))
            .cloned()
            .collect();
        DiscreteScm::new(outputs, inputs, noises, edges, mechanisms)
    }

    /// i.i.d. draws of the output variables at the given input assignment.
    pub fn sample(
        &self,
        xj: &BTreeMap<NodeId, usize>,
        n: usize,
        seed: u64,
    ) -> Result<Vec<Vec<usize>>> {
        if n == 0 {
            return Err(Error::MalformedQuery("sample size must be at least 1".into()));
        }
        let graph = self.graph_plus();
        let order = self.component_order(&graph);
        let mut base = self.pinned.clone();
        for (j, k) in &self.inputs {
            if base.contains_key(j) {
                continue;
            }
            let v = *xj.get(j).ok_or_else(|| Error::UnknownNode(j.clone()))?;
            if v >= *k {
                return Err(Error::MalformedQuery(format!("input value out of domain for `{j}`")));
            }
            base.insert(j.clone(), v);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut assignment = base.clone();
            for (u, dist) in &self.noises {
                assignment.insert(u.clone(), sample_categorical(&mut rng, dist));
            }
            self.solve(&order, &mut assignment)?;
            rows.push(self.outputs.iter().map(|(v, _)| assignment[v]).collect());
        }
        Ok(rows)
    }
}

fn sample_categorical(rng: &mut ChaCha12Rng, dist: &[f64]) -> usize {
    use rand::Rng;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

fn increment(assign: &mut [usize], dims: &[usize]) -> bool {
    for i in (0..assign.len()).rev() {
        assign[i] += 1;
        if assign[i] < dims[i] {
            return true;
        }
        assign[i] = 0;
    }
    false
}

fn fmt_scope(scope: &[NodeId]) -> String {
    scope
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

// ── The extended model ─────────────────────────────────────────────────────

/// Suffix value used for the observational regime of an indicator input.
pub fn obs_value(domain: usize) -> usize {
    domain
}

impl DiscreteScm {
    /// Extended model: adds an indicator input `I_v` for every output `v`
    /// with domain `dom(v) + 1` (the last value is the observational
    /// regime), and compiles each component mechanism so that indicated
    /// nodes pass their indicator value through while the rest solve the
    /// mutilated component from registered sub-loop mechanisms.
    pub fn extend(&self) -> Result<DiscreteScm> {
        if !self.pinned.is_empty() {
            return Err(Error::MalformedQuery(
                "cannot extend a model with pinned inputs".into(),
            ));
        }
        let graph = self.graph_plus();
        let mut outputs = self.outputs.clone();
        outputs.sort();
        let mut inputs = self.inputs.clone();
        let mut edges = self.edges.clone();
        for (v, k) in &outputs {
            let ind = Dmg::indicator_id(v);
            if self.domain(&ind).is_some() {
                return Err(Error::NameCollision(ind));
            }
            inputs.push((ind.clone(), k + 1));
            edges.push((ind, v.clone()));
        }

        let mut mechanisms: Vec<Mechanism> = Vec::new();
        for comp in graph.strongly_connected_components().components {
            if !comp.iter().all(|v| self.is_output(v)) {
                continue;
            }
            let scope: Vec<NodeId> = comp.iter().cloned().collect();
            let old = &self.mechanisms[&scope];
            let mut parents: Vec<NodeId> = old.parents.clone();
            parents.extend(scope.iter().map(Dmg::indicator_id));
            parents.sort();
            let dims: Vec<usize> = parents
                .iter()
                .map(|p|

                    self.domain(p).unwrap_or_else(|| {
                        // indicator parent: dom(v) + 1
                        let v = NodeId::new(p.as_str().strip_prefix("I_").expect("indicator"));
                        self.domain(&v).expect("indicated node") + 1
                    })
                )
                .collect();
            let rows: usize = dims.iter().product();
            let mut table = Vec::with_capacity(rows);
            let mut row_assign = vec![0usize; parents.len()];
            loop {
                let assignment: BTreeMap<NodeId, usize> = parents
                    .iter()
                    .cloned()
                    .zip(row_assign.iter().copied())
                    .collect();
                table.push(self.solve_indicated(&graph, &scope, &assignment)?);
                if !increment(&mut row_assign, &dims) {
                    break;
                }
            }
            mechanisms.push(Mechanism {
                scope,
                parents,
                table,
            });
        }
        DiscreteScm::new(outputs, inputs, self.noises.clone(), edges, mechanisms)
    }

    /// One row of an extended component mechanism: nodes whose indicator is
    /// not the observational value take it verbatim; the rest solve the
    /// component mutilated at the indicated nodes, sub-loop by sub-loop.
    fn solve_indicated(
        &self,
        graph: &Dmg,
        scope: &[NodeId],
        assignment: &BTreeMap<NodeId, usize>,
    ) -> Result<Vec<usize>> {
        let mut intervened: BTreeMap<NodeId, usize> = BTreeMap::new();
        for v in scope {
            let dom = self.domain(v).expect("scope domain");
            let ind = assignment[&Dmg::indicator_id(v)];
            if ind != obs_value(dom) {
                intervened.insert(v.clone(), ind);
            }
        }
        let mut values: BTreeMap<NodeId, usize> = assignment.clone();
        values.extend(intervened.iter().map(|(k, v)| (k.clone(), *v)));
        if intervened.len() < scope.len() {
            // components of the mutilated loop over the free members only;
            // edges through intervened members carry fixed values and do not
            // constrain the solve order
            let free: NodeSet = scope
                .iter()
                .filter(|v| !intervened.contains_key(*v))
                .cloned()
                .collect();
            let free_nodes: Vec<(NodeId, NodeKind)> = free
                .iter()
                .map(|v| (v.clone(), NodeKind::Output))
                .collect();
            let free_edges: Vec<(NodeId, NodeId)> = free
                .iter()
                .flat_map(|t| {
                    free.iter()
                        .filter(|h| graph.has_directed(t, h))
                        .map(|h| (t.clone(), h.clone()))
                        .collect::<Vec<_>>()
                })
                .collect();
            let cut = Dmg::new(free_nodes, free_edges, Vec::new())?;
            let mut comps: Vec<NodeSet> = cut.strongly_connected_components().components;
            let mut solved: NodeSet = values.keys().cloned().collect();
            while !comps.is_empty() {
                let pos = comps
                    .iter()
                    .position(|c| {
                        cut.parents_of(c)
                            .expect("component nodes exist")
                            .difference(c)
                            .all(|p| solved.contains(p))
                    })
                    .ok_or_else(|| Error::MissingSubLoopMechanism(fmt_scope(scope)))?;
                let comp = comps.remove(pos);
                let sub_scope: Vec<NodeId> = comp.iter().cloned().collect();
                let mech = self
                    .mechanisms
                    .get(&sub_scope)
                    .ok_or_else(|| Error::MissingSubLoopMechanism(fmt_scope(&sub_scope)))?;
                let mut row = 0usize;
                for p in &mech.parents {
                    let k = self.domain(p).expect("parent domain");
                    row = row * k + values[p];
                }
                for (v, val) in mech.scope.iter().zip(&mech.table[row]) {
                    values.insert(v.clone(), *val);
                    solved.insert(v.clone());
                }
            }
        }
        Ok(scope.iter().map(|v| values[v]).collect())
    }
}

// ── Serialization ──────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct NoiseJson {
    id: NodeId,
    dist: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DiscreteScmJson {
    outputs: BTreeMap<NodeId, usize>,
    #[serde(default)]
    inputs: BTreeMap<NodeId, usize>,
    #[serde(default)]
    noise: Vec<NoiseJson>,
    edges: Vec<(NodeId, NodeId)>,
    mechanisms: Vec<Mechanism>,
    #[serde(default)]
    pinned: BTreeMap<NodeId, usize>,
}

impl Serialize for DiscreteScm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DiscreteScmJson {
            outputs: self.outputs.iter().cloned().collect(),
            inputs: self.inputs.iter().cloned().collect(),
            noise: self
                .noises
                .iter()
                .map(|(id, dist)| NoiseJson {
                    id: id.clone(),
                    dist: dist.clone(),
                })
                .collect(),
            edges: self.edges.clone(),
            mechanisms: self.mechanisms.values().cloned().collect(),
            pinned: self.pinned.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteScm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = DiscreteScmJson::deserialize(d)?;
        let mut m = DiscreteScm::new(
            j.outputs.into_iter().collect(),
            j.inputs.into_iter().collect(),
            j.noise.into_iter().map(|n| (n.id, n.dist)).collect(),
            j.edges,
            j.mechanisms,
        )
        .map_err(|e| D::Error::custom(e.to_string()))?;
        m.pinned = j.pinned;
        Ok(m)
    }
}
