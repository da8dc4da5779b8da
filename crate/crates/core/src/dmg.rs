//! Directed mixed graphs with node kinds, cycles, and the structural
//! operations every query in this crate is built from.
//!
//! A [`Dmg`] holds output, input, and latent nodes together with directed
//! and bidirected edge sets. Graphs are immutable values: every operation
//! returns a new graph. A graph with latent nodes plays the role of the
//! full structure `G+`; projecting the latents away yields the induced DMG
//! that the separation, calculus, and identification modules operate on.

use crate::error::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Opaque node identifier, unique within a graph.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(NodeId(String::deserialize(d)?))
    }
}

/// Set of node identifiers; ordered for deterministic iteration.
pub type NodeSet = BTreeSet<NodeId>;

/// Convenience constructor for a [`NodeSet`] from string-likes.
pub fn node_set<I, S>(ids: I) -> NodeSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    ids.into_iter().map(|s| NodeId::new(s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Output,
    Input,
    Latent,
}

/// Partition of the node set into strongly connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccPartition {
    /// Components sorted by their lexicographically smallest member.
    pub components: Vec<NodeSet>,
    pub component_of: BTreeMap<NodeId, usize>,
}

/// Immutable directed mixed graph.
///
/// Invariants enforced at construction:
/// - edge endpoints are declared nodes,
/// - input and latent nodes have no directed parents,
/// - latent nodes touch no bidirected edge and have at least one child,
/// - bidirected edges join two distinct non-latent nodes.
///
/// Directed self-loops `v -> v` are stored but ignored by separation; a node
/// is in its own strongly connected component either way.
#[derive(Clone)]
pub struct Dmg {
    ids: Vec<NodeId>,
    kinds: Vec<NodeKind>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    spouses: Vec<Vec<usize>>,
    scc_id: Vec<usize>,
}

impl PartialEq for Dmg {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
            && self.kinds == other.kinds
            && self.children == other.children
            && self.spouses == other.spouses
    }
}

impl Eq for Dmg {}

impl fmt::Debug for Dmg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dmg({} nodes, ", self.ids.len())?;
        write!(
            f,
            "{} directed, {} bidirected)",
            self.directed_edges().len(),
            self.bidirected_edges().len()
        )
    }
}

impl Dmg {
    pub fn new(
        nodes: Vec<(NodeId, NodeKind)>,
        directed: Vec<(NodeId, NodeId)>,
        bidirected: Vec<(NodeId, NodeId)>,
    ) -> Result<Self> {
        let mut sorted = nodes;
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in sorted.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidGraph(format!(
                    "duplicate node id `{}`",
                    pair[0].0
                )));
            }
        }
        if sorted.iter().any(|(id, _)| id.as_str().is_empty()) {
            return Err(Error::InvalidGraph("empty node identifier".into()));
        }
        let ids: Vec<NodeId> = sorted.iter().map(|(id, _)| id.clone()).collect();
        let kinds: Vec<NodeKind> = sorted.iter().map(|(_, k)| *k).collect();
        let n = ids.len();
        let pos = |id: &NodeId| -> Result<usize> {
            ids.binary_search(id)
                .map_err(|_| Error::UnknownNode(id.clone()))
        };

        let mut children = vec![BTreeSet::new(); n];
        let mut parents = vec![BTreeSet::new(); n];
        let mut spouses = vec![BTreeSet::new(); n];
        for (tail, head) in &directed {
            let t = pos(tail)?;
            let h = pos(head)?;
            if kinds[h] != NodeKind::Output {
                return Err(Error::InvalidGraph(format!(
                    "directed edge into non-output node `{head}`"
                )));
            }
            children[t].insert(h);
            parents[h].insert(t);
        }
        for (a, b) in &bidirected {
            let i = pos(a)?;
            let j = pos(b)?;
            if i == j {
                return Err(Error::InvalidGraph(format!("bidirected self-loop at `{a}`")));
            }
            if kinds[i] == NodeKind::Latent || kinds[j] == NodeKind::Latent {
                return Err(Error::InvalidGraph(format!(
                    "bidirected edge touches latent node (`{a}` -- `{b}`)"
                )));
            }
            spouses[i].insert(j);
            spouses[j].insert(i);
        }
        for v in 0..n {
            if kinds[v] == NodeKind::Latent && children[v].is_empty() {
                return Err(Error::InvalidGraph(format!(
                    "latent node `{}` has no children",
                    ids[v]
                )));
            }
        }

        let children: Vec<Vec<usize>> = children.into_iter().map(|s| s.into_iter().collect()).collect();
        let parents: Vec<Vec<usize>> = parents.into_iter().map(|s| s.into_iter().collect()).collect();
        let spouses: Vec<Vec<usize>> = spouses.into_iter().map(|s| s.into_iter().collect()).collect();
        let scc_id = tarjan_scc(&children);
        Ok(Dmg {
            ids,
            kinds,
            children,
            parents,
            spouses,
            scc_id,
        })
    }

    /// Builds a graph from string literals; handy in tests and examples.
    pub fn build(
        nodes: &[(&str, NodeKind)],
        directed: &[(&str, &str)],
        bidirected: &[(&str, &str)],
    ) -> Result<Self> {
        Dmg::new(
            nodes.iter().map(|(s, k)| (NodeId::new(*s), *k)).collect(),
            directed
                .iter()
                .map(|(a, b)| (NodeId::new(*a), NodeId::new(*b)))
                .collect(),
            bidirected
                .iter()
                .map(|(a, b)| (NodeId::new(*a), NodeId::new(*b)))
                .collect(),
        )
    }

    /// All-output graph from edge lists; nodes are collected from the edges
    /// plus the explicitly listed ids.
    pub fn outputs_only(
        extra_nodes: &[&str],
        directed: &[(&str, &str)],
        bidirected: &[(&str, &str)],
    ) -> Result<Self> {
        let mut ids: BTreeSet<&str> = extra_nodes.iter().copied().collect();
        for (a, b) in directed.iter().chain(bidirected.iter()) {
            ids.insert(a);
            ids.insert(b);
        }
        let nodes: Vec<(&str, NodeKind)> = ids.into_iter().map(|s| (s, NodeKind::Output)).collect();
        Dmg::build(&nodes, directed, bidirected)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn node_set(&self) -> NodeSet {
        self.ids.iter().cloned().collect()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.ids.binary_search(id).is_ok()
    }

    pub fn kind(&self, id: &NodeId) -> Result<NodeKind> {
        Ok(self.kinds[self.index_of(id)?])
    }

    pub fn kind_set(&self, kind: NodeKind) -> NodeSet {
        self.ids
            .iter()
            .zip(&self.kinds)
            .filter(|(_, k)| **k == kind)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn outputs(&self) -> NodeSet {
        self.kind_set(NodeKind::Output)
    }

    pub fn inputs(&self) -> NodeSet {
        self.kind_set(NodeKind::Input)
    }

    pub fn latents(&self) -> NodeSet {
        self.kind_set(NodeKind::Latent)
    }

    pub fn directed_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (t, ch) in self.children.iter().enumerate() {
            for &h in ch {
                out.push((self.ids[t].clone(), self.ids[h].clone()));
            }
        }
        out.sort();
        out
    }

    pub fn bidirected_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (i, sp) in self.spouses.iter().enumerate() {
            for &j in sp {
                if i < j {
                    out.push((self.ids[i].clone(), self.ids[j].clone()));
                }
            }
        }
        out.sort();
        out
    }

    pub fn has_directed(&self, tail: &NodeId, head: &NodeId) -> bool {
        match (self.index_of(tail), self.index_of(head)) {
            (Ok(t), Ok(h)) => self.children[t].binary_search(&h).is_ok(),
            _ => false,
        }
    }

    pub fn has_bidirected(&self, a: &NodeId, b: &NodeId) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Ok(i), Ok(j)) => self.spouses[i].binary_search(&j).is_ok(),
            _ => false,
        }
    }

    pub(crate) fn index_of(&self, id: &NodeId) -> Result<usize> {
        self.ids
            .binary_search(id)
            .map_err(|_| Error::UnknownNode(id.clone()))
    }

    pub(crate) fn id_at(&self, i: usize) -> &NodeId {
        &self.ids[i]
    }

    pub(crate) fn kind_at(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    pub(crate) fn children_idx(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub(crate) fn parents_idx(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn spouses_idx(&self, i: usize) -> &[usize] {
        &self.spouses[i]
    }

    pub(crate) fn scc_ids(&self) -> &[usize] {
        &self.scc_id
    }

    pub(crate) fn index_set(&self, s: &NodeSet) -> Result<Vec<usize>> {
        s.iter().map(|id| self.index_of(id)).collect()
    }

    fn ids_of(&self, idxs: impl IntoIterator<Item = usize>) -> NodeSet {
        idxs.into_iter().map(|i| self.ids[i].clone()).collect()
    }

    /// Warnings for latent nodes whose child sets are nested; such latents
    /// could be gathered together without changing the induced DMG.
    pub fn latent_redundancy_warnings(&self) -> Vec<String> {
        let latents: Vec<usize> = (0..self.len())
            .filter(|&i| self.kinds[i] == NodeKind::Latent)
            .collect();
        let mut warnings = Vec::new();
        for &u1 in &latents {
            for &u2 in &latents {
                if u1 == u2 {
                    continue;
                }
                let c1: BTreeSet<usize> = self.children[u1].iter().copied().collect();
                let c2: BTreeSet<usize> = self.children[u2].iter().copied().collect();
                if c1.is_subset(&c2) {
                    warnings.push(format!(
                        "latent `{}` has children contained in those of `{}`",
                        self.ids[u1], self.ids[u2]
                    ));
                }
            }
        }
        warnings
    }

    fn check_no_latents(&self) -> Result<()> {
        for (i, k) in self.kinds.iter().enumerate() {
            if *k == NodeKind::Latent {
                return Err(Error::LatentInQuery(self.ids[i].clone()));
            }
        }
        Ok(())
    }
}

// ── Structural queries ─────────────────────────────────────────────────────

impl Dmg {
    /// Partition into strongly connected components over directed edges.
    pub fn strongly_connected_components(&self) -> SccPartition {
        let ncomp = self.scc_id.iter().copied().max().map_or(0, |m| m + 1);
        let mut members: Vec<NodeSet> = vec![NodeSet::new(); ncomp];
        for (v, &c) in self.scc_id.iter().enumerate() {
            members[c].insert(self.ids[v].clone());
        }
        members.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
        let mut component_of = BTreeMap::new();
        for (c, comp) in members.iter().enumerate() {
            for id in comp {
                component_of.insert(id.clone(), c);
            }
        }
        SccPartition {
            components: members,
            component_of,
        }
    }

    /// The strongly connected component containing `v`.
    pub fn scc_of(&self, v: &NodeId) -> Result<NodeSet> {
        let i = self.index_of(v)?;
        let c = self.scc_id[i];
        Ok(self.ids_of((0..self.len()).filter(|&w| self.scc_id[w] == c)))
    }

    /// All loops contained in `within`: subsets whose members are mutually
    /// reachable by directed walks staying inside the subset. Singletons are
    /// loops regardless of self-edges. `within` must lie in one strongly
    /// connected component.
    pub fn enumerate_loops(&self, within: &NodeSet) -> Result<Vec<NodeSet>> {
        let idxs = self.index_set(within)?;
        if idxs.is_empty() {
            return Ok(Vec::new());
        }
        let c0 = self.scc_id[idxs[0]];
        if idxs.iter().any(|&i| self.scc_id[i] != c0) {
            return Err(Error::SccBoundViolation);
        }
        let k = idxs.len();
        let mut loops = Vec::new();
        for mask in 1u32..(1 << k) {
            let subset: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| idxs[b]).collect();
            if self.is_loop_idx(&subset) {
                loops.push(self.ids_of(subset));
            }
        }
        loops.sort_by(|a, b| (a.len(), a.iter().next()).cmp(&(b.len(), b.iter().next())).then(a.cmp(b)));
        Ok(loops)
    }

    /// Mutual reachability of every ordered pair within `subset`, using only
    /// directed edges whose endpoints stay in the subset.
    fn is_loop_idx(&self, subset: &[usize]) -> bool {
        if subset.len() == 1 {
            return true;
        }
        let inside: BTreeSet<usize> = subset.iter().copied().collect();
        for &start in subset {
            let mut seen = BTreeSet::new();
            let mut stack = vec![start];
            seen.insert(start);
            while let Some(v) = stack.pop() {
                for &w in &self.children[v] {
                    if inside.contains(&w) && seen.insert(w) {
                        stack.push(w);
                    }
                }
            }
            if subset.iter().any(|t| !seen.contains(t)) {
                return false;
            }
        }
        true
    }

    fn closure(&self, seed: &[usize], step: impl Fn(usize) -> Vec<usize>) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = seed.iter().copied().collect();
        let mut stack: Vec<usize> = seed.to_vec();
        while let Some(v) = stack.pop() {
            for w in step(v) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Reflexive-transitive closure along directed edges, backwards.
    pub fn ancestors(&self, s: &NodeSet) -> Result<NodeSet> {
        let seed = self.index_set(s)?;
        Ok(self.ids_of(self.closure(&seed, |v| self.parents[v].clone())))
    }

    /// Reflexive-transitive closure along directed edges, forwards.
    pub fn descendants(&self, s: &NodeSet) -> Result<NodeSet> {
        let seed = self.index_set(s)?;
        Ok(self.ids_of(self.closure(&seed, |v| self.children[v].clone())))
    }

    pub fn parents_of(&self, s: &NodeSet) -> Result<NodeSet> {
        let seed = self.index_set(s)?;
        Ok(self.ids_of(seed.iter().flat_map(|&v| self.parents[v].iter().copied())))
    }

    pub fn children_of(&self, s: &NodeSet) -> Result<NodeSet> {
        let seed = self.index_set(s)?;
        Ok(self.ids_of(seed.iter().flat_map(|&v| self.children[v].iter().copied())))
    }

    pub fn spouses_of(&self, s: &NodeSet) -> Result<NodeSet> {
        let seed = self.index_set(s)?;
        Ok(self.ids_of(seed.iter().flat_map(|&v| self.spouses[v].iter().copied())))
    }
}

// ── Graph transformations ──────────────────────────────────────────────────

impl Dmg {
    /// Latent projection of the graph onto its nodes minus `w`.
    ///
    /// Directed rule: `v1 -> v2` survives iff some directed walk from `v1`
    /// to `v2` runs entirely through marginalized nodes. Bidirected rule:
    /// `v1 <-> v2` iff a marginalized common ancestor emits directed walks
    /// through `w` to both ends, or a bidirected edge sits on such a pair of
    /// walks (including the corner cases of a direct bidirected edge and of
    /// a single marginalized fork node). Input nodes cannot be marginalized.
    pub fn marginalize(&self, w: &NodeSet) -> Result<Dmg> {
        let widx = self.index_set(w)?;
        for &i in &widx {
            if self.kinds[i] == NodeKind::Input {
                return Err(Error::InputMarginalization(self.ids[i].clone()));
            }
        }
        let in_w = {
            let mut mask = vec![false; self.len()];
            for &i in &widx {
                mask[i] = true;
            }
            mask
        };
        let keep: Vec<usize> = (0..self.len()).filter(|&i| !in_w[i]).collect();

        // anc_w[v] = {v} plus marginalized nodes reaching v through w only.
        let mut anc_w: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.len()];
        for &v in &keep {
            let mut seen = BTreeSet::from([v]);
            let mut stack = vec![v];
            while let Some(x) = stack.pop() {
                for &p in &self.parents[x] {
                    if in_w[p] && seen.insert(p) {
                        stack.push(p);
                    }
                }
            }
            anc_w[v] = seen;
        }

        let nodes: Vec<(NodeId, NodeKind)> = keep
            .iter()
            .map(|&i| (self.ids[i].clone(), self.kinds[i]))
            .collect();
        let mut directed = Vec::new();
        for &v1 in &keep {
            for &v2 in &keep {
                if anc_w[v2]
                    .iter()
                    .any(|&s| self.children[v1].binary_search(&s).is_ok())
                {
                    directed.push((self.ids[v1].clone(), self.ids[v2].clone()));
                }
            }
        }
        let mut bidirected = Vec::new();
        for (a, &v1) in keep.iter().enumerate() {
            for &v2 in keep.iter().skip(a + 1) {
                let fork = anc_w[v1].intersection(&anc_w[v2]).any(|&u| in_w[u]);
                let arc = fork
                    || anc_w[v1].iter().any(|&x| {
                        self.spouses[x]
                            .iter()
                            .any(|y| anc_w[v2].contains(y))
                    });
                if arc {
                    bidirected.push((self.ids[v1].clone(), self.ids[v2].clone()));
                }
            }
        }
        Dmg::new(nodes, directed, bidirected)
    }

    /// Induced DMG of a graph with latent nodes: keeps outputs and inputs
    /// with their directed edges and joins two outputs by a bidirected edge
    /// iff they share a latent parent.
    pub fn induced_dmg(&self) -> Dmg {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.kinds[i] != NodeKind::Latent)
            .collect();
        let nodes: Vec<(NodeId, NodeKind)> = keep
            .iter()
            .map(|&i| (self.ids[i].clone(), self.kinds[i]))
            .collect();
        let mut directed = Vec::new();
        for &t in &keep {
            for &h in &self.children[t] {
                if self.kinds[h] != NodeKind::Latent {
                    directed.push((self.ids[t].clone(), self.ids[h].clone()));
                }
            }
        }
        let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
        for u in 0..self.len() {
            if self.kinds[u] != NodeKind::Latent {
                continue;
            }
            for (a, &v) in self.children[u].iter().enumerate() {
                for &w in self.children[u].iter().skip(a + 1) {
                    pairs.insert((v.min(w), v.max(w)));
                }
            }
        }
        let mut bidirected: Vec<(NodeId, NodeId)> = pairs
            .into_iter()
            .map(|(i, j)| (self.ids[i].clone(), self.ids[j].clone()))
            .collect();
        for (i, sp) in self.spouses.iter().enumerate() {
            for &j in sp {
                if i < j {
                    bidirected.push((self.ids[i].clone(), self.ids[j].clone()));
                }
            }
        }
        Dmg::new(nodes, directed, bidirected).expect("projection of a valid graph is valid")
    }

    /// Perfect intervention at the graph level: removes every directed edge
    /// into `w` and every bidirected edge touching `w`, and re-kinds `w` as
    /// input nodes.
    pub fn intervene(&self, w: &NodeSet) -> Result<Dmg> {
        let widx = self.index_set(w)?;
        for &i in &widx {
            if self.kinds[i] == NodeKind::Latent {
                return Err(Error::MalformedQuery(format!(
                    "cannot intervene on latent node `{}`",
                    self.ids[i]
                )));
            }
        }
        let mut in_w = vec![false; self.len()];
        for &i in &widx {
            in_w[i] = true;
        }
        let nodes: Vec<(NodeId, NodeKind)> = (0..self.len())
            .map(|i| {
                let kind = if in_w[i] { NodeKind::Input } else { self.kinds[i] };
                (self.ids[i].clone(), kind)
            })
            .collect();
        let mut directed = Vec::new();
        for t in 0..self.len() {
            for &h in &self.children[t] {
                if !in_w[h] {
                    directed.push((self.ids[t].clone(), self.ids[h].clone()));
                }
            }
        }
        let mut bidirected = Vec::new();
        for (i, sp) in self.spouses.iter().enumerate() {
            for &j in sp {
                if i < j && !in_w[i] && !in_w[j] {
                    bidirected.push((self.ids[i].clone(), self.ids[j].clone()));
                }
            }
        }
        Dmg::new(nodes, directed, bidirected)
    }

    /// Identifier of the indicator input attached to `v` by [`Dmg::extend`].
    pub fn indicator_id(v: &NodeId) -> NodeId {
        NodeId::new(format!("I_{v}"))
    }

    /// Extended DMG: adds a fresh input `I_v` with edge `I_v -> v` for every
    /// output node.
    pub fn extend(&self) -> Result<Dmg> {
        self.check_no_latents()?;
        let mut nodes: Vec<(NodeId, NodeKind)> = self
            .ids
            .iter()
            .cloned()
            .zip(self.kinds.iter().copied())
            .collect();
        let mut directed: Vec<(NodeId, NodeId)> = self.directed_edges();
        let bidirected = self.bidirected_edges();
        for (i, id) in self.ids.iter().enumerate() {
            if self.kinds[i] != NodeKind::Output {
                continue;
            }
            let ind = Dmg::indicator_id(id);
            if self.contains(&ind) {
                return Err(Error::NameCollision(ind));
            }
            nodes.push((ind.clone(), NodeKind::Input));
            directed.push((ind, id.clone()));
        }
        Dmg::new(nodes, directed, bidirected)
    }

    /// Acyclification: every node inherits the out-of-component parents of
    /// its strongly connected component, directed edges inside components are
    /// erased, members of a nontrivial component become pairwise bidirected,
    /// and bidirected edges lift to all members of the touched components.
    /// The result is an ADMG.
    pub fn acyclify(&self) -> Dmg {
        let n = self.len();
        let scc = &self.scc_id;
        let ncomp = scc.iter().copied().max().map_or(0, |m| m + 1);
        let mut comp_members: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
        for v in 0..n {
            comp_members[scc[v]].push(v);
        }
        let mut comp_parents: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncomp];
        for v in 0..n {
            for &p in &self.parents[v] {
                if scc[p] != scc[v] {
                    comp_parents[scc[v]].insert(p);
                }
            }
        }
        let mut comp_spouse: BTreeSet<(usize, usize)> = BTreeSet::new();
        for v in 0..n {
            for &w in &self.spouses[v] {
                comp_spouse.insert((scc[v].min(scc[w]), scc[v].max(scc[w])));
            }
        }

        let nodes: Vec<(NodeId, NodeKind)> = self
            .ids
            .iter()
            .cloned()
            .zip(self.kinds.iter().copied())
            .collect();
        let mut directed = Vec::new();
        for v in 0..n {
            for &p in &comp_parents[scc[v]] {
                directed.push((self.ids[p].clone(), self.ids[v].clone()));
            }
        }
        let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
        for members in &comp_members {
            for (a, &v) in members.iter().enumerate() {
                for &w in members.iter().skip(a + 1) {
                    pairs.insert((v.min(w), v.max(w)));
                }
            }
        }
        for &(c1, c2) in &comp_spouse {
            for &v in &comp_members[c1] {
                for &w in &comp_members[c2] {
                    if v != w {
                        pairs.insert((v.min(w), v.max(w)));
                    }
                }
            }
        }
        let bidirected: Vec<(NodeId, NodeId)> = pairs
            .into_iter()
            .map(|(i, j)| (self.ids[i].clone(), self.ids[j].clone()))
            .collect();
        Dmg::new(nodes, directed, bidirected).expect("acyclification of a valid graph is valid")
    }

    /// Twin graph for counterfactual queries: merges the graph with its
    /// `do(w)` mutilation on the shared non-descendants of `w`. Descendants
    /// of `w` are duplicated with a primed identifier; bidirected edges are
    /// duplicated across branches except at intervened copies.
    pub fn twin_graph(&self, w: &NodeSet) -> Result<Dmg> {
        Ok(self.twin_graph_with_map(w)?.0)
    }

    /// As [`Dmg::twin_graph`], additionally returning the map from each node
    /// to its counterpart in the interventional branch (identity on shared
    /// non-descendants).
    pub fn twin_graph_with_map(&self, w: &NodeSet) -> Result<(Dmg, BTreeMap<NodeId, NodeId>)> {
        self.check_no_latents()?;
        let widx = self.index_set(w)?;
        let desc = self.closure(&widx, |v| self.children[v].clone());
        let in_w: BTreeSet<usize> = widx.iter().copied().collect();

        let mut taken: BTreeSet<NodeId> = self.ids.iter().cloned().collect();
        let mut primed: BTreeMap<usize, NodeId> = BTreeMap::new();
        for &v in &desc {
            let mut cand = format!("{}'", self.ids[v]);
            while taken.contains(&NodeId::new(cand.clone())) {
                cand.push('\'');
            }
            let id = NodeId::new(cand);
            taken.insert(id.clone());
            primed.insert(v, id);
        }
        let copy = |v: usize| -> NodeId {
            primed.get(&v).cloned().unwrap_or_else(|| self.ids[v].clone())
        };

        let mut nodes: Vec<(NodeId, NodeKind)> = self
            .ids
            .iter()
            .cloned()
            .zip(self.kinds.iter().copied())
            .collect();
        for &v in &desc {
            let kind = if in_w.contains(&v) { NodeKind::Input } else { self.kinds[v] };
            nodes.push((primed[&v].clone(), kind));
        }

        let mut directed: Vec<(NodeId, NodeId)> = self.directed_edges();
        for t in 0..self.len() {
            for &h in &self.children[t] {
                if desc.contains(&h) && !in_w.contains(&h) {
                    directed.push((copy(t), primed[&h].clone()));
                }
            }
        }

        let mut pairs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        for (i, sp) in self.spouses.iter().enumerate() {
            for &j in sp {
                if i >= j {
                    continue;
                }
                let copies = |v: usize| -> Vec<NodeId> {
                    let mut cs = vec![self.ids[v].clone()];
                    if desc.contains(&v) && !in_w.contains(&v) {
                        cs.push(primed[&v].clone());
                    }
                    cs
                };
                for a in copies(i) {
                    for b in copies(j) {
                        let (x, y) = if a < b { (a.clone(), b) } else { (b, a.clone()) };
                        pairs.insert((x, y));
                    }
                }
            }
        }
        let bidirected: Vec<(NodeId, NodeId)> = pairs.into_iter().collect();

        let map: BTreeMap<NodeId, NodeId> = (0..self.len())
            .map(|v| (self.ids[v].clone(), copy(v)))
            .collect();
        Ok((Dmg::new(nodes, directed, bidirected)?, map))
    }

    /// Input-confounded graph: adds a bidirected edge between every pair of
    /// distinct input nodes.
    pub fn input_confound(&self) -> Dmg {
        let nodes: Vec<(NodeId, NodeKind)> = self
            .ids
            .iter()
            .cloned()
            .zip(self.kinds.iter().copied())
            .collect();
        let mut bidirected = self.bidirected_edges();
        let inputs: Vec<&NodeId> = self
            .ids
            .iter()
            .zip(&self.kinds)
            .filter(|(_, k)| **k == NodeKind::Input)
            .map(|(id, _)| id)
            .collect();
        for (a, j1) in inputs.iter().enumerate() {
            for j2 in inputs.iter().skip(a + 1) {
                if !self.has_bidirected(j1, j2) {
                    bidirected.push(((*j1).clone(), (*j2).clone()));
                }
            }
        }
        Dmg::new(nodes, self.directed_edges(), bidirected)
            .expect("adding input confounding preserves validity")
    }

    /// Induced sub-DMG on `keep`: retains both edge kinds among the kept
    /// nodes, with node kinds unchanged.
    pub fn induced_subgraph(&self, keep: &NodeSet) -> Result<Dmg> {
        let kidx = self.index_set(keep)?;
        let inside: BTreeSet<usize> = kidx.iter().copied().collect();
        let nodes: Vec<(NodeId, NodeKind)> = kidx
            .iter()
            .map(|&i| (self.ids[i].clone(), self.kinds[i]))
            .collect();
        let mut directed = Vec::new();
        let mut bidirected = Vec::new();
        for &t in &kidx {
            for &h in &self.children[t] {
                if inside.contains(&h) {
                    directed.push((self.ids[t].clone(), self.ids[h].clone()));
                }
            }
            for &s in &self.spouses[t] {
                if t < s && inside.contains(&s) {
                    bidirected.push((self.ids[t].clone(), self.ids[s].clone()));
                }
            }
        }
        Dmg::new(nodes, directed, bidirected)
    }
}

// ── Serialization ──────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: NodeId,
    kind: NodeKind,
}

#[derive(Serialize, Deserialize)]
struct DmgJson {
    nodes: Vec<NodeJson>,
    directed: Vec<(NodeId, NodeId)>,
    bidirected: Vec<(NodeId, NodeId)>,
}

impl Serialize for Dmg {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let json = DmgJson {
            nodes: self
                .ids
                .iter()
                .zip(&self.kinds)
                .map(|(id, k)| NodeJson {
                    id: id.clone(),
                    kind: *k,
                })
                .collect(),
            directed: self.directed_edges(),
            bidirected: self.bidirected_edges(),
        };
        json.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dmg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = DmgJson::deserialize(d)?;
        Dmg::new(
            json.nodes.into_iter().map(|n| (n.id, n.kind)).collect(),
            json.directed,
            json.bidirected,
        )
        .map_err(|e| D::Error::custom(e.to_string()))
    }
}

impl Dmg {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Dmg> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn tarjan_scc(children: &[Vec<usize>]) -> Vec<usize> {
    // Iterative Tarjan; component ids are then renumbered so that equal
    // graphs get identical labellings regardless of discovery order.
    let n = children.len();
    let mut idx = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut counter = 0usize;
    let mut ncomp = 0usize;

    for root in 0..n {
        if idx[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut ci)) = call.last_mut() {
            if *ci == 0 {
                idx[v] = counter;
                low[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *ci < children[v].len() {
                let w = children[v][*ci];
                *ci += 1;
                if idx[w] == usize::MAX {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(idx[w]);
                }
            } else {
                if low[v] == idx[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
                call.pop();
                if let Some(&mut (p, _)) = call.last_mut() {
                    low[p] = low[p].min(low[v]);
                }
            }
        }
    }

    // Renumber by smallest member index.
    let mut first = vec![usize::MAX; ncomp];
    for v in 0..n {
        first[comp[v]] = first[comp[v]].min(v);
    }
    let mut order: Vec<usize> = (0..ncomp).collect();
    order.sort_by_key(|&c| first[c]);
    let mut rank = vec![0usize; ncomp];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    comp.iter().map(|&c| rank[c]).collect()
}
