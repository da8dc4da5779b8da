//! Dense probability tables over named finite variables.
//!
//! A [`Table`] is a nonnegative array indexed by an assignment of its
//! variables, split into distribution variables (those the table is a
//! probability distribution over) and parameter variables (free
//! conditioning slots). Conditioning on a zero-mass event marks the
//! affected entries as gaps; gaps are absorbed by multiplication with an
//! exact zero and otherwise propagate, so a gap in a final result means the
//! computation genuinely divided by zero mass.

use crate::dmg::{NodeId, NodeSet};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Variables with domain sizes, sorted by identifier.
    vars: Vec<(NodeId, usize)>,
    /// Which variables the table is a distribution over.
    dist: NodeSet,
    values: Vec<f64>,
}

fn gap_mul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Table {
    pub fn new(vars: Vec<(NodeId, usize)>, dist: NodeSet, values: Vec<f64>) -> Result<Table> {
        let mut sorted = vars;
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let size: usize = sorted.iter().map(|(_, k)| *k).product();
        if size != values.len() {
            return Err(Error::Parse(format!(
                "table has {} values, expected {}",
                values.len(),
                size
            )));
        }
        for d in &dist {
            if !sorted.iter().any(|(v, _)| v == d) {
                return Err(Error::UnknownNode(d.clone()));
            }
        }
        Ok(Table {
            vars: sorted,
            dist,
            values,
        })
    }

    pub fn scalar(v: f64) -> Table {
        Table {
            vars: Vec::new(),
            dist: NodeSet::new(),
            values: vec![v],
        }
    }

    pub fn vars(&self) -> &[(NodeId, usize)] {
        &self.vars
    }

    pub fn dist_vars(&self) -> &NodeSet {
        &self.dist
    }

    pub fn param_vars(&self) -> NodeSet {
        self.vars
            .iter()
            .filter(|(v, _)| !self.dist.contains(v))
            .map(|(v, _)| v.clone())
            .collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain_of(&self, v: &NodeId) -> Option<usize> {
        self.vars.iter().find(|(w, _)| w == v).map(|(_, k)| *k)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn has_gap(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![0usize; self.vars.len()];
        let mut acc = 1usize;
        for (i, (_, k)) in self.vars.iter().enumerate().rev() {
            s[i] = acc;
            acc *= k;
        }
        s
    }

    /// Iterates assignments in row-major order of the sorted variable list.
    pub fn assignments(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let dims: Vec<usize> = self.vars.iter().map(|(_, k)| *k).collect();
        (0..self.values.len()).map(move |mut flat| {
            let mut a = vec![0usize; dims.len()];
            for i in (0..dims.len()).rev() {
                a[i] = flat % dims[i];
                flat /= dims[i];
            }
            a
        })
    }

    pub fn get(&self, assignment: &BTreeMap<NodeId, usize>) -> Result<f64> {
        let strides = self.strides();
        let mut flat = 0;
        for (i, (v, k)) in self.vars.iter().enumerate() {
            let val = *assignment
                .get(v)
                .ok_or_else(|| Error::UnknownNode(v.clone()))?;
            if val >= *k {
                return Err(Error::Parse(format!("value {val} out of domain for `{v}`")));
            }
            flat += strides[i] * val;
        }
        Ok(self.values[flat])
    }

    /// Sums out `over`, which must be distribution variables.
    pub fn marginal(&self, over: &NodeSet) -> Result<Table> {
        for v in over {
            if !self.dist.contains(v) {
                return Err(Error::MalformedQuery(format!(
                    "cannot marginalize non-distribution variable `{v}`"
                )));
            }
        }
        let keep: Vec<(NodeId, usize)> = self
            .vars
            .iter()
            .filter(|(v, _)| !over.contains(v))
            .cloned()
            .collect();
        let keep_size: usize = keep.iter().map(|(_, k)| *k).product();
        let mut out = vec![0.0f64; keep_size];
        let keep_pos: Vec<usize> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, (v, _))| !over.contains(v))
            .map(|(i, _)| i)
            .collect();
        let keep_dims: Vec<usize> = keep.iter().map(|(_, k)| *k).collect();
        for (flat, a) in self.assignments().enumerate() {
            let mut idx = 0usize;
            for (d, &p) in keep_pos.iter().enumerate() {
                idx = idx * keep_dims[d] + a[p];
            }
            out[idx] += self.values[flat];
        }
        let dist: NodeSet = self.dist.difference(over).cloned().collect();
        Table::new(keep, dist, out)
    }

    /// `P(target | given)` of the table's distribution; target and given
    /// must be distribution variables. Parameters stay parameters. Entries
    /// conditioned on zero mass become gaps (NaN).
    pub fn conditional(&self, target: &NodeSet, given: &NodeSet) -> Result<Table> {
        for v in target.iter().chain(given.iter()) {
            if !self.dist.contains(v) {
                return Err(Error::MalformedQuery(format!(
                    "conditional references non-distribution variable `{v}`"
                )));
            }
        }
        if !target.is_disjoint(given) {
            return Err(Error::MalformedQuery(
                "conditional target overlaps its conditioning set".into(),
            ));
        }
        let drop_num: NodeSet = self
            .dist
            .iter()
            .filter(|v| !target.contains(*v) && !given.contains(*v))
            .cloned()
            .collect();
        let num = self.marginal(&drop_num)?;
        let den = num.marginal(target)?;
        // broadcast divide
        let mut out = num.clone();
        let den_pos: Vec<usize> = out
            .vars
            .iter()
            .enumerate()
            .filter(|(_, (v, _))| den.vars.iter().any(|(w, _)| w == v))
            .map(|(i, _)| i)
            .collect();
        let den_dims: Vec<usize> = den.vars.iter().map(|(_, k)| *k).collect();
        for (flat, a) in num.assignments().enumerate() {
            let mut di = 0usize;
            for (d, &p) in den_pos.iter().enumerate() {
                di = di * den_dims[d] + a[p];
            }
            let d = den.values[flat_checked(di, &den)];
            out.values[flat] = if d == 0.0 { f64::NAN } else { num.values[flat] / d };
        }
        out.dist = target.clone();
        Ok(out)
    }

    /// Pointwise product with broadcasting over the union of variables.
    /// Distribution variables of the factors must be disjoint.
    pub fn product(&self, other: &Table) -> Result<Table> {
        if !self.dist.is_disjoint(&other.dist) {
            return Err(Error::MalformedQuery(
                "product factors share distribution variables".into(),
            ));
        }
        let mut vars: Vec<(NodeId, usize)> = self.vars.clone();
        for (v, k) in &other.vars {
            match vars.iter().find(|(w, _)| w == v) {
                Some((_, k2)) if k2 != k => {
                    return Err(Error::MalformedQuery(format!(
                        "variable `{v}` has conflicting domains {k2} and {k}"
                    )))
                }
                Some(_) => {}
                None => vars.push((v.clone(), *k)),
            }
        }
        vars.sort_by(|a, b| a.0.cmp(&b.0));
        let dims: Vec<usize> = vars.iter().map(|(_, k)| *k).collect();
        let size: usize = dims.iter().product();
        let pos_in = |t: &Table| -> Vec<Option<usize>> {
            vars.iter()
                .map(|(v, _)| t.vars.iter().position(|(w, _)| w == v))
                .collect()
        };
        let pa = pos_in(self);
        let pb = pos_in(other);
        let sa = self.strides();
        let sb = other.strides();
        let mut out = vec![0.0f64; size];
        let mut assign = vec![0usize; vars.len()];
        for slot in out.iter_mut() {
            let mut ia = 0usize;
            let mut ib = 0usize;
            for (d, &val) in assign.iter().enumerate() {
                if let Some(p) = pa[d] {
                    ia += sa[p] * val;
                }
                if let Some(p) = pb[d] {
                    ib += sb[p] * val;
                }
            }
            *slot = gap_mul(self.values[ia], other.values[ib]);
            // increment mixed-radix counter
            for d in (0..assign.len()).rev() {
                assign[d] += 1;
                if assign[d] < dims[d] {
                    break;
                }
                assign[d] = 0;
            }
        }
        let dist: NodeSet = self.dist.union(&other.dist).cloned().collect();
        Table::new(vars, dist, out)
    }

    /// Fixes `assign`ed variables to values, dropping those axes.
    pub fn restrict(&self, assign: &BTreeMap<NodeId, usize>) -> Result<Table> {
        for v in assign.keys() {
            if !self.vars.iter().any(|(w, _)| w == v) {
                return Err(Error::UnknownNode(v.clone()));
            }
        }
        let keep: Vec<(NodeId, usize)> = self
            .vars
            .iter()
            .filter(|(v, _)| !assign.contains_key(v))
            .cloned()
            .collect();
        let keep_dims: Vec<usize> = keep.iter().map(|(_, k)| *k).collect();
        let keep_size: usize = keep_dims.iter().product();
        let mut out = vec![0.0f64; keep_size];
        let keep_pos: Vec<usize> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, (v, _))| !assign.contains_key(v))
            .map(|(i, _)| i)
            .collect();
        for (flat, a) in self.assignments().enumerate() {
            if self
                .vars
                .iter()
                .enumerate()
                .any(|(i, (v, _))| assign.get(v).is_some_and(|&val| a[i] != val))
            {
                continue;
            }
            let mut idx = 0usize;
            for (d, &p) in keep_pos.iter().enumerate() {
                idx = idx * keep_dims[d] + a[p];
            }
            out[idx] = self.values[flat];
        }
        let dist: NodeSet = self
            .dist
            .iter()
            .filter(|v| !assign.contains_key(*v))
            .cloned()
            .collect();
        Table::new(keep, dist, out)
    }

    /// Largest absolute entry difference; the tables must have identical
    /// variable lists. NaN entries compare equal to NaN entries.
    pub fn max_abs_diff(&self, other: &Table) -> Result<f64> {
        if self.vars != other.vars {
            return Err(Error::MalformedQuery(
                "comparing tables over different variables".into(),
            ));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.values.iter().zip(&other.values) {
            if a.is_nan() && b.is_nan() {
                continue;
            }
            let d = (a - b).abs();
            if d.is_nan() {
                return Ok(f64::NAN);
            }
            worst = worst.max(d);
        }
        Ok(worst)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Checks that the error-free entries agree within `tol`; entries where
    /// either side is a gap are skipped (the event has zero mass).
    pub fn agrees_within(&self, other: &Table, tol: f64) -> Result<bool> {
        if self.vars != other.vars {
            return Err(Error::MalformedQuery(
                "comparing tables over different variables".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| a.is_nan() || b.is_nan() || (a - b).abs() <= tol))
    }
}

fn flat_checked(i: usize, t: &Table) -> usize {
    debug_assert!(i < t.values.len());
    i
}
