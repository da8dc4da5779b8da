//! Adjustment criteria on cyclic directed mixed graphs, with selection
//! bias, and closed-form Gaussian evaluation of the emitted formulas.
//!
//! The general criterion checks four sigma-separations on the extended
//! intervened graph and, on success, certifies
//! `P(Y|C,do(X),do(W)) = ∫ P(Y|X,Z,C,S=s,do(W)) dP(Z|C,do(W))`.
//! The corollary special cases (backdoor and friends) zero out roles and
//! delegate. Two further criteria handle selection bias without external
//! data and with partially external data.

use crate::calculus::indicator_set;
use crate::dmg::{Dmg, NodeId, NodeSet};
use crate::error::{Error, Result};
use crate::scm::{condition_gaussian, LinearScm};
use crate::separation::{sigma_separated, SeparationQuery};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Role assignment for the general adjustment criterion. `z0` is the core
/// adjustment set, `zplus` the additional one, `l` the marginalizable
/// helpers that never enter the formula, `c` context, `s` selection, and
/// `w` the default intervention set, which must contain every input node.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentSpec {
    pub y: NodeSet,
    pub x: NodeSet,
    #[serde(default)]
    pub c: NodeSet,
    #[serde(default)]
    pub z0: NodeSet,
    #[serde(default)]
    pub zplus: NodeSet,
    #[serde(default)]
    pub l: NodeSet,
    #[serde(default)]
    pub s: NodeSet,
    #[serde(default)]
    pub w: NodeSet,
}

impl AdjustmentSpec {
    pub fn z(&self) -> NodeSet {
        self.z0.union(&self.zplus).cloned().collect()
    }

    fn roles(&self) -> [(&'static str, &NodeSet); 8] {
        [
            ("y", &self.y),
            ("x", &self.x),
            ("c", &self.c),
            ("z0", &self.z0),
            ("zplus", &self.zplus),
            ("l", &self.l),
            ("s", &self.s),
            ("w", &self.w),
        ]
    }

    fn validate(&self, g: &Dmg) -> Result<()> {
        let nodes = g.node_set();
        let inputs = g.inputs();
        for (name, set) in self.roles() {
            if !set.is_subset(&nodes) {
                return Err(Error::MalformedSpec(format!("role {name} references unknown nodes")));
            }
        }
        if self.y.is_empty() {
            return Err(Error::MalformedSpec("y must be non-empty".into()));
        }
        let roles = self.roles();
        for i in 0..roles.len() {
            for j in i + 1..roles.len() {
                if !roles[i].1.is_disjoint(roles[j].1) {
                    return Err(Error::MalformedSpec(format!(
                        "roles {} and {} overlap",
                        roles[i].0, roles[j].0
                    )));
                }
            }
        }
        if !inputs.is_subset(&self.w) {
            return Err(Error::MalformedSpec(
                "w must contain every input node of the graph".into(),
            ));
        }
        for (name, set) in self.roles() {
            if name != "w" && !set.is_disjoint(&inputs) {
                return Err(Error::MalformedSpec(format!("role {name} contains input nodes")));
            }
        }
        Ok(())
    }
}

/// Which criterion produced a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaVariant {
    General,
    NoExternalData,
    PartialExternalData,
}

/// Adjustment formula descriptor. The marginalizable set `l` never appears,
/// so two specs differing only in `l` render identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustmentFormula {
    pub variant: FormulaVariant,
    /// The identified causal effect, e.g. `P(Y | C, do(X))`.
    pub target: String,
    /// The integrand kernel, e.g. `P(Y | X, Z, C, S=s)`.
    pub integrand: String,
    /// The mixing kernels, innermost first.
    pub mixing: Vec<String>,
    /// Full rendered formula.
    pub text: String,
}

fn list(s: &NodeSet) -> String {
    s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn kernel(target: &str, parts: &[String]) -> String {
    let nonempty: Vec<&String> = parts.iter().filter(|p| !p.is_empty()).collect();
    if nonempty.is_empty() {
        format!("P({target})")
    } else {
        format!(
            "P({target} | {})",
            nonempty.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        )
    }
}

fn given_plain(s: &NodeSet) -> String {
    if s.is_empty() {
        String::new()
    } else {
        list(s)
    }
}

fn given_selected(s: &NodeSet) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!("{}=s", list(s))
    }
}

fn given_do(s: &NodeSet) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!("do({})", list(s))
    }
}

fn general_formula(spec: &AdjustmentSpec, w_do: &NodeSet) -> AdjustmentFormula {
    let z = spec.z();
    let target = kernel(
        &list(&spec.y),
        &[given_plain(&spec.c), given_do(&spec.x), given_do(w_do)],
    );
    let integrand = kernel(
        &list(&spec.y),
        &[
            given_plain(&spec.x),
            given_plain(&z),
            given_plain(&spec.c),
            given_selected(&spec.s),
            given_do(w_do),
        ],
    );
    let mixing = kernel(&list(&z), &[given_plain(&spec.c), given_do(w_do)]);
    let text = if z.is_empty() {
        format!("{target} = {integrand}")
    } else {
        format!("{target} = ∫ {integrand} d{mixing}")
    };
    AdjustmentFormula {
        variant: FormulaVariant::General,
        target,
        integrand,
        mixing: vec![mixing],
        text,
    }
}

/// Per-condition report of a criterion check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustmentReport {
    pub applicable: bool,
    pub conditions: Vec<(String, bool)>,
    pub formula: Option<AdjustmentFormula>,
}

impl AdjustmentReport {
    pub fn into_pair(self) -> (bool, Option<AdjustmentFormula>) {
        (self.applicable, self.formula)
    }
}

/// General adjustment criterion: four sigma-separations on the extended
/// graph of `g` intervened at `w \ J`.
pub fn check_general_adjustment(g: &Dmg, spec: &AdjustmentSpec) -> Result<(bool, Option<AdjustmentFormula>)> {
    Ok(check_general_adjustment_report(g, spec)?.into_pair())
}

pub fn check_general_adjustment_report(g: &Dmg, spec: &AdjustmentSpec) -> Result<AdjustmentReport> {
    spec.validate(g)?;
    let w_do: NodeSet = spec.w.difference(&g.inputs()).cloned().collect();
    let ghat = g.intervene(&w_do)?.extend()?;
    let ix = indicator_set(&spec.x);
    let z = spec.z();
    let union = |sets: &[&NodeSet]| -> NodeSet {
        sets.iter().flat_map(|s| s.iter().cloned()).collect()
    };
    let checks: Vec<(String, SeparationQuery)> = vec![
        (
            "(Z0,L) _||_ I_X | C".into(),
            SeparationQuery::sigma(union(&[&spec.z0, &spec.l]), ix.clone(), spec.c.clone()),
        ),
        (
            "Y _||_ (I_X, Z+) | C,X,Z0,L".into(),
            SeparationQuery::sigma(
                spec.y.clone(),
                union(&[&ix, &spec.zplus]),
                union(&[&spec.c, &spec.x, &spec.z0, &spec.l]),
            ),
        ),
        (
            "Y _||_ S | C,X,Z".into(),
            SeparationQuery::sigma(spec.y.clone(), spec.s.clone(), union(&[&spec.c, &spec.x, &z])),
        ),
        (
            "L _||_ X | C,Z".into(),
            SeparationQuery::sigma(spec.l.clone(), spec.x.clone(), union(&[&spec.c, &z])),
        ),
    ];
    let mut conditions = Vec::new();
    let mut applicable = true;
    for (name, q) in checks {
        let ok = sigma_separated(&ghat, &q)?;
        applicable &= ok;
        conditions.push((name, ok));
    }
    Ok(AdjustmentReport {
        applicable,
        conditions,
        formula: applicable.then(|| general_formula(spec, &w_do)),
    })
}

/// The corollary's special cases; each demands certain roles empty and then
/// delegates to the general criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecialCase {
    Backdoor,
    ExtendedBackdoor,
    SelectionBackdoor,
    GeneralSelectionBackdoor,
}

impl SpecialCase {
    fn forbidden(self) -> &'static [&'static str] {
        match self {
            SpecialCase::Backdoor => &["c", "s", "l", "zplus"],
            SpecialCase::ExtendedBackdoor => &["c", "s"],
            SpecialCase::SelectionBackdoor => &["c", "l"],
            SpecialCase::GeneralSelectionBackdoor => &["c"],
        }
    }
}

pub fn check_special_case(
    g: &Dmg,
    spec: &AdjustmentSpec,
    case: SpecialCase,
) -> Result<(bool, Option<AdjustmentFormula>)> {
    for name in case.forbidden() {
        let set = match *name {
            "c" => &spec.c,
            "s" => &spec.s,
            "l" => &spec.l,
            "zplus" => &spec.zplus,
            _ => unreachable!(),
        };
        if !set.is_empty() {
            return Err(Error::CaseMismatch(format!(
                "{case:?} requires role {name} to be empty"
            )));
        }
    }
    check_general_adjustment(g, spec)
}

/// Adjustment purely from selection-biased data `P(V|S=s)`; requires an
/// input-free graph, no default interventions, and a non-empty selection
/// set.
pub fn check_selection_without_external(
    g: &Dmg,
    spec: &AdjustmentSpec,
) -> Result<(bool, Option<AdjustmentFormula>)> {
    Ok(check_selection_without_external_report(g, spec)?.into_pair())
}

pub fn check_selection_without_external_report(g: &Dmg, spec: &AdjustmentSpec) -> Result<AdjustmentReport> {
    spec.validate(g)?;
    if !g.inputs().is_empty() || !spec.w.is_empty() {
        return Err(Error::MalformedSpec(
            "selection-without-external-data requires an input-free graph and empty w".into(),
        ));
    }
    if spec.s.is_empty() {
        return Err(Error::MalformedSpec("selection set s must be non-empty".into()));
    }
    if !spec.l.is_empty() || !spec.c.is_empty() {
        return Err(Error::MalformedSpec(
            "selection-without-external-data uses no l or c roles".into(),
        ));
    }
    let ghat = g.extend()?;
    let g_dox = g.intervene(&spec.x)?;
    let ix = indicator_set(&spec.x);
    let z = spec.z();
    let union = |sets: &[&NodeSet]| -> NodeSet {
        sets.iter().flat_map(|s| s.iter().cloned()).collect()
    };
    let mut conditions = Vec::new();
    let mut applicable = true;
    let mut push = |name: &str, graph: &Dmg, q: SeparationQuery| -> Result<()> {
        let ok = sigma_separated(graph, &q)?;
        applicable &= ok;
        conditions.push((name.to_string(), ok));
        Ok(())
    };
    push(
        "Y _||_ S | do(X)",
        &g_dox,
        SeparationQuery::sigma(spec.y.clone(), spec.s.clone(), spec.x.clone()),
    )?;
    push(
        "Z0 _||_ I_X | S",
        &ghat,
        SeparationQuery::sigma(spec.z0.clone(), ix.clone(), spec.s.clone()),
    )?;
    push(
        "Y _||_ Z+ | Z0,S,do(X)",
        &g_dox,
        SeparationQuery::sigma(
            spec.y.clone(),
            spec.zplus.clone(),
            union(&[&spec.z0, &spec.s, &spec.x]),
        ),
    )?;
    push(
        "Y _||_ I_X | X,Z,S",
        &ghat,
        SeparationQuery::sigma(spec.y.clone(), ix, union(&[&spec.x, &z, &spec.s])),
    )?;
    let formula = applicable.then(|| {
        let target = kernel(&list(&spec.y), &[given_do(&spec.x)]);
        let integrand = kernel(
            &list(&spec.y),
            &[given_plain(&spec.x), given_plain(&z), given_selected(&spec.s)],
        );
        let mixing = kernel(&list(&z), &[given_selected(&spec.s)]);
        let text = if z.is_empty() {
            format!("{target} = {integrand}")
        } else {
            format!("{target} = ∫ {integrand} d{mixing}")
        };
        AdjustmentFormula {
            variant: FormulaVariant::NoExternalData,
            target,
            integrand,
            mixing: vec![mixing],
            text,
        }
    });
    Ok(AdjustmentReport {
        applicable,
        conditions,
        formula,
    })
}

/// Roles for adjustment with partially external data: biased data
/// `P(V|S=s)` plus unbiased samples of the B-part `Z0^B ∪ Z1^B`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialExternalSpec {
    pub y: NodeSet,
    pub x: NodeSet,
    #[serde(default)]
    pub z0a: NodeSet,
    #[serde(default)]
    pub z0b: NodeSet,
    #[serde(default)]
    pub z1a: NodeSet,
    #[serde(default)]
    pub z1b: NodeSet,
    #[serde(default)]
    pub z2: NodeSet,
    #[serde(default)]
    pub z3: NodeSet,
    #[serde(default)]
    pub l0: NodeSet,
    #[serde(default)]
    pub l1: NodeSet,
    pub s: NodeSet,
}

impl PartialExternalSpec {
    fn roles(&self) -> [(&'static str, &NodeSet); 11] {
        [
            ("y", &self.y),
            ("x", &self.x),
            ("z0a", &self.z0a),
            ("z0b", &self.z0b),
            ("z1a", &self.z1a),
            ("z1b", &self.z1b),
            ("z2", &self.z2),
            ("z3", &self.z3),
            ("l0", &self.l0),
            ("l1", &self.l1),
            ("s", &self.s),
        ]
    }

    pub fn z(&self) -> NodeSet {
        let mut z = NodeSet::new();
        for part in [&self.z0a, &self.z0b, &self.z1a, &self.z1b, &self.z2, &self.z3] {
            z.extend(part.iter().cloned());
        }
        z
    }

    pub fn z_le1_b(&self) -> NodeSet {
        self.z0b.union(&self.z1b).cloned().collect()
    }
}

/// The nine-condition criterion for partially external data. All statements
/// are read as sigma-separations.
pub fn check_partial_external(
    g: &Dmg,
    spec: &PartialExternalSpec,
) -> Result<(bool, Option<AdjustmentFormula>)> {
    Ok(check_partial_external_report(g, spec)?.into_pair())
}

pub fn check_partial_external_report(g: &Dmg, spec: &PartialExternalSpec) -> Result<AdjustmentReport> {
    let nodes = g.node_set();
    let roles = spec.roles();
    for (name, set) in roles {
        if !set.is_subset(&nodes) {
            return Err(Error::MalformedSpec(format!("role {name} references unknown nodes")));
        }
    }
    for i in 0..roles.len() {
        for j in i + 1..roles.len() {
            if !roles[i].1.is_disjoint(roles[j].1) {
                return Err(Error::MalformedSpec(format!(
                    "roles {} and {} overlap",
                    roles[i].0, roles[j].0
                )));
            }
        }
    }
    if !g.inputs().is_empty() {
        return Err(Error::MalformedSpec(
            "partial-external-data criterion requires an input-free graph".into(),
        ));
    }
    if spec.y.is_empty() {
        return Err(Error::MalformedSpec("y must be non-empty".into()));
    }
    let union = |sets: &[&NodeSet]| -> NodeSet {
        sets.iter().flat_map(|s| s.iter().cloned()).collect()
    };
    let z0 = union(&[&spec.z0a, &spec.z0b]);
    let z1 = union(&[&spec.z1a, &spec.z1b]);
    let z_le1 = union(&[&z0, &z1]);
    let z_le1_a = union(&[&spec.z0a, &spec.z1a]);
    let z_le1_b = spec.z_le1_b();
    let z_le2 = union(&[&z_le1, &spec.z2]);
    let z = union(&[&z_le2, &spec.z3]);
    let ghat = g.extend()?;
    let g_dox = g.intervene(&spec.x)?;
    let ix = indicator_set(&spec.x);

    let mut conditions = Vec::new();
    let mut applicable = true;
    let mut push = |name: &str, graph: &Dmg, q: SeparationQuery| -> Result<()> {
        let ok = sigma_separated(graph, &q)?;
        applicable &= ok;
        conditions.push((name.to_string(), ok));
        Ok(())
    };
    push(
        "(L0,Z0) _||_ I_X",
        &ghat,
        SeparationQuery::sigma(union(&[&spec.l0, &z0]), ix.clone(), NodeSet::new()),
    )?;
    push(
        "Y _||_ Z1 | L0,Z0,do(X)",
        &g_dox,
        SeparationQuery::sigma(spec.y.clone(), z1.clone(), union(&[&spec.l0, &z0, &spec.x])),
    )?;
    push(
        "Z<=1^A _||_ S | Z<=1^B",
        g,
        SeparationQuery::sigma(z_le1_a.clone(), spec.s.clone(), z_le1_b.clone()),
    )?;
    push(
        "L0 _||_ I_X | Z<=1",
        &ghat,
        SeparationQuery::sigma(spec.l0.clone(), ix.clone(), z_le1.clone()),
    )?;
    push(
        "Y _||_ S | Z<=1,do(X)",
        &g_dox,
        SeparationQuery::sigma(spec.y.clone(), spec.s.clone(), union(&[&z_le1, &spec.x])),
    )?;
    push(
        "(L1,Z2) _||_ I_X | S,Z<=1",
        &ghat,
        SeparationQuery::sigma(
            union(&[&spec.l1, &spec.z2]),
            ix.clone(),
            union(&[&spec.s, &z_le1]),
        ),
    )?;
    push(
        "Y _||_ Z3 | L1,S,Z<=2,do(X)",
        &g_dox,
        SeparationQuery::sigma(
            spec.y.clone(),
            spec.z3.clone(),
            union(&[&spec.l1, &spec.s, &z_le2, &spec.x]),
        ),
    )?;
    push(
        "L1 _||_ I_X | S,Z",
        &ghat,
        SeparationQuery::sigma(spec.l1.clone(), ix.clone(), union(&[&spec.s, &z])),
    )?;
    push(
        "Y _||_ I_X | X,S,Z",
        &ghat,
        SeparationQuery::sigma(spec.y.clone(), ix, union(&[&spec.x, &spec.s, &z])),
    )?;

    let formula = applicable.then(|| {
        let z_rest: NodeSet = z.difference(&z_le1_b).cloned().collect();
        let target = kernel(&list(&spec.y), &[given_do(&spec.x)]);
        let integrand = kernel(
            &list(&spec.y),
            &[given_selected(&spec.s), given_plain(&z), given_plain(&spec.x)],
        );
        let inner = kernel(
            &list(&z_rest),
            &[given_selected(&spec.s), given_plain(&z_le1_b)],
        );
        let outer = kernel(&list(&z_le1_b), &[]);
        let text = format!("{target} = ∫∫ {integrand} d{inner} d{outer}");
        AdjustmentFormula {
            variant: FormulaVariant::PartialExternalData,
            target,
            integrand,
            mixing: vec![inner, outer],
            text,
        }
    });
    Ok(AdjustmentReport {
        applicable,
        conditions,
        formula,
    })
}

/// One satisfying role assignment found by the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoleAssignment {
    pub z0: NodeSet,
    pub zplus: NodeSet,
    pub l: NodeSet,
}

/// Maximum candidate-pool size for the exhaustive search.
pub const MAX_POOL: usize = 16;

/// Exhaustively searches role assignments `(z0, zplus, l)` over the output
/// nodes not claimed by `y`, `x`, `c`, `s`, or `w`, keeping one
/// representative per distinct adjustment set `z0 ∪ zplus`, smallest sets
/// first.
pub fn find_adjustment_sets(
    g: &Dmg,
    y: &NodeSet,
    x: &NodeSet,
    c: &NodeSet,
    s: &NodeSet,
    w: &NodeSet,
    max_size: usize,
) -> Result<Vec<RoleAssignment>> {
    let taken: NodeSet = [y, x, c, s, w]
        .iter()
        .flat_map(|set| set.iter().cloned())
        .collect();
    let pool: Vec<NodeId> = g.outputs().difference(&taken).cloned().collect();
    if pool.len() > MAX_POOL {
        return Err(Error::PoolTooLarge {
            pool: pool.len(),
            max: MAX_POOL,
        });
    }
    let mut subsets: Vec<Vec<usize>> = (0..1u32 << pool.len())
        .map(|mask| (0..pool.len()).filter(|b| mask >> b & 1 == 1).collect())
        .filter(|idxs: &Vec<usize>| idxs.len() <= max_size)
        .collect();
    subsets.sort_by_key(|a| (a.len(), a.clone()));

    let mut found = Vec::new();
    for zidx in subsets {
        let zset: NodeSet = zidx.iter().map(|&i| pool[i].clone()).collect();
        let rest: Vec<NodeId> = pool
            .iter()
            .filter(|v| !zset.contains(*v))
            .cloned()
            .collect();
        // splits of z into (z0, z+), core-heavy first; helpers l smallest first
        let mut winner: Option<RoleAssignment> = None;
        'split: for split in (0..1u32 << zidx.len()).rev() {
            let z0: NodeSet = zidx
                .iter()
                .enumerate()
                .filter(|(b, _)| split >> b & 1 == 1)
                .map(|(_, &i)| pool[i].clone())
                .collect();
            let zplus: NodeSet = zset.difference(&z0).cloned().collect();
            for lmask in 0..1u32 << rest.len() {
                let l: NodeSet = (0..rest.len())
                    .filter(|b| lmask >> b & 1 == 1)
                    .map(|i| rest[i].clone())
                    .collect();
                let spec = AdjustmentSpec {
                    y: y.clone(),
                    x: x.clone(),
                    c: c.clone(),
                    z0: z0.clone(),
                    zplus: zplus.clone(),
                    l,
                    s: s.clone(),
                    w: w.clone(),
                };
                if check_general_adjustment(g, &spec)?.0 {
                    winner = Some(RoleAssignment {
                        z0,
                        zplus,
                        l: spec.l,
                    });
                    break 'split;
                }
            }
        }
        if let Some(a) = winner {
            found.push(a);
        }
    }
    Ok(found)
}

// ── Gaussian evaluation ────────────────────────────────────────────────────

/// Values the evaluation is carried out at.
#[derive(Debug, Clone, Default)]
pub struct AdjustmentValues {
    pub x: BTreeMap<NodeId, f64>,
    pub c: BTreeMap<NodeId, f64>,
    pub s: BTreeMap<NodeId, f64>,
    pub w: BTreeMap<NodeId, f64>,
    pub j: BTreeMap<NodeId, f64>,
}

/// Mean and covariance of the outcome block, variables in sorted order.
pub type GaussianLaw = (DVector<f64>, DMatrix<f64>);

fn indices(m: &LinearScm, set: &NodeSet) -> Result<Vec<usize>> {
    set.iter().map(|v| m.output_index(v)).collect()
}

fn values_for(set: &NodeSet, vals: &BTreeMap<NodeId, f64>) -> Result<Vec<f64>> {
    set.iter()
        .map(|v| {
            vals.get(v)
                .copied()
                .ok_or_else(|| Error::MalformedQuery(format!("missing value for `{v}`")))
        })
        .collect()
}

/// Affine regression of the `targets` block on the `regressors` block:
/// returns the coefficient matrix and the residual covariance.
fn regression(
    cov: &DMatrix<f64>,
    targets: &[usize],
    regressors: &[usize],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let sel = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| cov[(rows[r], cols[c])])
    };
    let tt = sel(targets, targets);
    if regressors.is_empty() {
        return Ok((DMatrix::zeros(targets.len(), 0), tt));
    }
    let rr = sel(regressors, regressors);
    let tr = sel(targets, regressors);
    let inv = rr
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| rr.lu().try_inverse())
        .filter(|m| m.iter().all(|x| x.is_finite()))
        .ok_or_else(|| Error::SingularConditioning("regressor covariance is singular".into()))?;
    let beta = &tr * inv;
    let resid = tt - &beta * tr.transpose();
    Ok((beta, resid))
}

/// Evaluates the general (or selection-without-external-data) adjustment
/// formula in closed form on a linear-Gaussian model: the mean and
/// covariance of `∫ P(Y | X, Z, C, S=s, do(W)) dμ(Z)` where the mixing
/// measure is `P(Z | C, do(W))` for the general variant and `P(Z | S=s)`
/// for the no-external-data variant.
pub fn evaluate_formula_gaussian(
    m: &LinearScm,
    spec: &AdjustmentSpec,
    variant: FormulaVariant,
    vals: &AdjustmentValues,
) -> Result<GaussianLaw> {
    let m_w = m.intervene(&vals.w)?;
    let (mean, cov) = m_w.observational_law(&vals.j)?;
    let z = spec.z();
    let y_idx = indices(m, &spec.y)?;
    let z_idx = indices(m, &z)?;

    // regressors in fixed order: x, z, c, s
    let mut reg_idx = Vec::new();
    let mut reg_mean_at = Vec::new(); // Some(value) for fixed regressors, None for z
    for (set, fixed) in [
        (&spec.x, Some(&vals.x)),
        (&z, None),
        (&spec.c, Some(&vals.c)),
        (&spec.s, Some(&vals.s)),
    ] {
        for v in set {
            reg_idx.push(m.output_index(v)?);
            match fixed {
                Some(map) => reg_mean_at.push(Some(
                    *map.get(v)
                        .ok_or_else(|| Error::MalformedQuery(format!("missing value for `{v}`")))?,
                )),
                None => reg_mean_at.push(None),
            }
        }
    }
    let (beta, resid) = regression(&cov, &y_idx, &reg_idx)?;

    // mixing measure over z
    let (z_mean, z_cov) = match variant {
        FormulaVariant::General => {
            let c_idx = indices(m, &spec.c)?;
            let c_vals = values_for(&spec.c, &vals.c)?;
            condition_gaussian(&mean, &cov, &z_idx, &c_idx, &c_vals)?
        }
        FormulaVariant::NoExternalData => {
            let s_idx = indices(m, &spec.s)?;
            let s_vals = values_for(&spec.s, &vals.s)?;
            condition_gaussian(&mean, &cov, &z_idx, &s_idx, &s_vals)?
        }
        FormulaVariant::PartialExternalData => {
            return Err(Error::MalformedQuery(
                "use evaluate_partial_external_gaussian for the partial-external variant".into(),
            ))
        }
    };

    // E[Y] = mu_Y + beta (r - mu_R) with r_z integrated under the mixing law
    let mut dev = DVector::zeros(reg_idx.len());
    let mut z_seen = 0usize;
    let mut beta_z = DMatrix::zeros(y_idx.len(), z_idx.len());
    for (k, &ri) in reg_idx.iter().enumerate() {
        match reg_mean_at[k] {
            Some(val) => dev[k] = val - mean[ri],
            None => {
                dev[k] = z_mean[z_seen] - mean[ri];
                beta_z.set_column(z_seen, &beta.column(k));
                z_seen += 1;
            }
        }
    }
    let out_mean = DVector::from_iterator(y_idx.len(), y_idx.iter().map(|&i| mean[i])) + &beta * dev;
    let out_cov = resid + &beta_z * z_cov * beta_z.transpose();
    Ok((out_mean, out_cov))
}

/// Closed-form evaluation of the partial-external-data double integral.
pub fn evaluate_partial_external_gaussian(
    m: &LinearScm,
    spec: &PartialExternalSpec,
    vals: &AdjustmentValues,
) -> Result<GaussianLaw> {
    let (mean, cov) = m.observational_law(&vals.j)?;
    let z = spec.z();
    let zb = spec.z_le1_b();
    let zr: NodeSet = z.difference(&zb).cloned().collect();
    let y_idx = indices(m, &spec.y)?;
    let zb_idx = indices(m, &zb)?;
    let zr_idx = indices(m, &zr)?;
    let s_idx = indices(m, &spec.s)?;
    let s_vals = values_for(&spec.s, &vals.s)?;

    // mixing measure over (zb, zr): zb from its marginal, zr | S=s, zb
    let given: Vec<usize> = s_idx.iter().chain(zb_idx.iter()).copied().collect();
    let (k_all, zr_resid) = regression(&cov, &zr_idx, &given)?;
    let k_s = k_all.columns(0, s_idx.len()).into_owned();
    let k_b = k_all.columns(s_idx.len(), zb_idx.len()).into_owned();
    let s_dev = DVector::from_iterator(
        s_idx.len(),
        s_idx.iter().zip(&s_vals).map(|(&i, &v)| v - mean[i]),
    );
    let zb_mean = DVector::from_iterator(zb_idx.len(), zb_idx.iter().map(|&i| mean[i]));
    let zb_cov = DMatrix::from_fn(zb_idx.len(), zb_idx.len(), |r, c| cov[(zb_idx[r], zb_idx[c])]);
    let zr_mean = DVector::from_iterator(zr_idx.len(), zr_idx.iter().map(|&i| mean[i])) + &k_s * s_dev;
    let zr_cov = zr_resid + &k_b * &zb_cov * k_b.transpose();
    let cross = &k_b * &zb_cov; // cov(zr, zb) under the mixing law

    // assemble the mixing law over z in the sorted z order
    let z_ids: Vec<&NodeId> = z.iter().collect();
    let pos = |id: &NodeId| z_ids.iter().position(|v| *v == id).expect("z member");
    let nz = z_ids.len();
    let mut z_mean = DVector::zeros(nz);
    let mut z_cov = DMatrix::zeros(nz, nz);
    let zb_ids: Vec<&NodeId> = zb.iter().collect();
    let zr_ids: Vec<&NodeId> = zr.iter().collect();
    for (a, id) in zb_ids.iter().enumerate() {
        z_mean[pos(id)] = zb_mean[a];
        for (b, id2) in zb_ids.iter().enumerate() {
            z_cov[(pos(id), pos(id2))] = zb_cov[(a, b)];
        }
        for (b, id2) in zr_ids.iter().enumerate() {
            z_cov[(pos(id), pos(id2))] = cross[(b, a)];
            z_cov[(pos(id2), pos(id))] = cross[(b, a)];
        }
    }
    for (a, id) in zr_ids.iter().enumerate() {
        z_mean[pos(id)] = zr_mean[a];
        for (b, id2) in zr_ids.iter().enumerate() {
            z_cov[(pos(id), pos(id2))] = zr_cov[(a, b)];
        }
    }

    // integrand regression of Y on (x, z, s)
    let mut reg_idx = Vec::new();
    let mut fixed_val: Vec<Option<f64>> = Vec::new();
    for v in &spec.x {
        reg_idx.push(m.output_index(v)?);
        fixed_val.push(Some(
            *vals
                .x
                .get(v)
                .ok_or_else(|| Error::MalformedQuery(format!("missing value for `{v}`")))?,
        ));
    }
    for v in &z {
        reg_idx.push(m.output_index(v)?);
        fixed_val.push(None);
    }
    for v in &spec.s {
        reg_idx.push(m.output_index(v)?);
        fixed_val.push(Some(
            *vals
                .s
                .get(v)
                .ok_or_else(|| Error::MalformedQuery(format!("missing value for `{v}`")))?,
        ));
    }
    let (beta, resid) = regression(&cov, &y_idx, &reg_idx)?;
    let mut dev = DVector::zeros(reg_idx.len());
    let mut beta_z = DMatrix::zeros(y_idx.len(), nz);
    let mut z_seen = 0usize;
    for (k, &ri) in reg_idx.iter().enumerate() {
        match fixed_val[k] {
            Some(v) => dev[k] = v - mean[ri],
            None => {
                dev[k] = z_mean[z_seen] - mean[ri];
                beta_z.set_column(z_seen, &beta.column(k));
                z_seen += 1;
            }
        }
    }
    let out_mean = DVector::from_iterator(y_idx.len(), y_idx.iter().map(|&i| mean[i])) + &beta * dev;
    let out_cov = resid + &beta_z * z_cov * beta_z.transpose();
    Ok((out_mean, out_cov))
}

/// Ground truth for the comparison: the law of `Y` given `C = c` in the
/// model intervened at `do(W=w, X=x)`, inputs fixed at `j`.
pub fn interventional_truth_gaussian(
    m: &LinearScm,
    spec_y: &NodeSet,
    spec_c: &NodeSet,
    vals: &AdjustmentValues,
) -> Result<GaussianLaw> {
    let mut doset = vals.w.clone();
    doset.extend(vals.x.iter().map(|(k, v)| (k.clone(), *v)));
    let cut = m.intervene(&doset)?;
    let (mean, cov) = cut.observational_law(&vals.j)?;
    let y_idx = indices(m, spec_y)?;
    let c_idx = indices(m, spec_c)?;
    let c_vals = values_for(spec_c, &vals.c)?;
    condition_gaussian(&mean, &cov, &y_idx, &c_idx, &c_vals)
}
