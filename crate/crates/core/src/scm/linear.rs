//! Cyclic linear-Gaussian models with closed-form laws.
//!
//! `X_V = B X_V + Gamma x_J + eps`, `eps ~ N(mu, Omega)`. Unique solvability
//! of the cycles is exactly invertibility of `I - B`; contractive cycles
//! (spectral radius below one) are the well-behaved special case the random
//! corpus generator enforces.

use crate::dmg::{Dmg, NodeId, NodeKind, NodeSet};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Partial correlations below this magnitude count as vanishing for the
/// Gaussian conditional-independence oracle.
pub const CI_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearScm {
    outputs: Vec<NodeId>,
    inputs: Vec<NodeId>,
    b: DMatrix<f64>,
    gamma: DMatrix<f64>,
    omega: DMatrix<f64>,
    mu: DVector<f64>,
}

impl LinearScm {
    /// Validates dimensions, invertibility of `I - B`, and symmetry plus
    /// positive semidefiniteness of `Omega`.
    pub fn new(
        outputs: Vec<NodeId>,
        inputs: Vec<NodeId>,
        b: DMatrix<f64>,
        gamma: DMatrix<f64>,
        omega: DMatrix<f64>,
        mu: DVector<f64>,
    ) -> Result<LinearScm> {
        let n = outputs.len();
        let k = inputs.len();
        if b.nrows() != n || b.ncols() != n || omega.nrows() != n || omega.ncols() != n {
            return Err(Error::Parse("coefficient matrix dimensions mismatch".into()));
        }
        if gamma.nrows() != n || gamma.ncols() != k {
            return Err(Error::Parse("input matrix dimensions mismatch".into()));
        }
        if mu.len() != n {
            return Err(Error::Parse("mean vector dimension mismatch".into()));
        }
        let mut sorted = outputs.clone();
        sorted.dedup();
        if (&omega - omega.transpose()).amax() > 1e-9 {
            return Err(Error::Parse("noise covariance not symmetric".into()));
        }
        let eig = omega.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l < -1e-9) {
            return Err(Error::Parse("noise covariance not positive semidefinite".into()));
        }
        let m = LinearScm {
            outputs,
            inputs,
            b,
            gamma,
            omega,
            mu,
        };
        m.solve_matrix()?;
        Ok(m)
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn output_index(&self, id: &NodeId) -> Result<usize> {
        self.outputs
            .iter()
            .position(|v| v == id)
            .ok_or_else(|| Error::UnknownNode(id.clone()))
    }

    fn input_index(&self, id: &NodeId) -> Result<usize> {
        self.inputs
            .iter()
            .position(|v| v == id)
            .ok_or_else(|| Error::UnknownNode(id.clone()))
    }

    /// `(I - B)^-1`, the linear solve the whole family rests on.
    fn solve_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.outputs.len();
        let eye = DMatrix::identity(n, n);
        (eye.clone() - &self.b)
            .lu()
            .try_inverse()
            .filter(|inv| inv.iter().all(|x| x.is_finite()))
            .ok_or_else(|| Error::SingularSystem("I - B is not invertible".into()))
    }

    /// The induced DMG read off the sparsity patterns: `v -> w` iff
    /// `B[w,v] != 0`, `j -> v` iff `Gamma[v,j] != 0`, `v <-> w` iff
    /// `Omega[v,w] != 0` off the diagonal.
    pub fn graph(&self) -> Dmg {
        let mut nodes: Vec<(NodeId, NodeKind)> = self
            .outputs
            .iter()
            .map(|v| (v.clone(), NodeKind::Output))
            .collect();
        nodes.extend(self.inputs.iter().map(|j| (j.clone(), NodeKind::Input)));
        let mut directed = Vec::new();
        for w in 0..self.outputs.len() {
            for v in 0..self.outputs.len() {
                if self.b[(w, v)] != 0.0 {
                    directed.push((self.outputs[v].clone(), self.outputs[w].clone()));
                }
            }
            for j in 0..self.inputs.len() {
                if self.gamma[(w, j)] != 0.0 {
                    directed.push((self.inputs[j].clone(), self.outputs[w].clone()));
                }
            }
        }
        let mut bidirected = Vec::new();
        for v in 0..self.outputs.len() {
            for w in v + 1..self.outputs.len() {
                if self.omega[(v, w)] != 0.0 {
                    bidirected.push((self.outputs[v].clone(), self.outputs[w].clone()));
                }
            }
        }
        Dmg::new(nodes, directed, bidirected).expect("sparsity pattern yields a valid graph")
    }

    /// Mean and covariance of the observed law at input values `xj`:
    /// mean `(I-B)^-1 (Gamma x_J + mu)`, covariance `(I-B)^-1 Omega (I-B)^-T`.
    pub fn observational_law(&self, xj: &BTreeMap<NodeId, f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let inv = self.solve_matrix()?;
        let xv = self.input_vector(xj)?;
        let mean = &inv * (&self.gamma * xv + &self.mu);
        let cov = &inv * &self.omega * inv.transpose();
        Ok((mean, cov))
    }

    fn input_vector(&self, xj: &BTreeMap<NodeId, f64>) -> Result<DVector<f64>> {
        let mut xv = DVector::zeros(self.inputs.len());
        for (k, v) in xj {
            xv[self.input_index(k)?] = *v;
        }
        Ok(xv)
    }

    /// Joint law over `[outputs..., inputs...]` when the inputs are driven
    /// by a Gaussian with the given mean and covariance.
    pub fn joint_law(
        &self,
        mean_j: &DVector<f64>,
        cov_j: &DMatrix<f64>,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.outputs.len();
        let k = self.inputs.len();
        if mean_j.len() != k || cov_j.nrows() != k || cov_j.ncols() != k {
            return Err(Error::Parse("input law dimensions mismatch".into()));
        }
        let inv = self.solve_matrix()?;
        let a = &inv * &self.gamma; // d X_V / d X_J
        let mean_v = &a * mean_j + &inv * &self.mu;
        let cov_vv = &a * cov_j * a.transpose() + &inv * &self.omega * inv.transpose();
        let cov_vj = &a * cov_j;
        let mut mean = DVector::zeros(n + k);
        mean.rows_mut(0, n).copy_from(&mean_v);
        mean.rows_mut(n, k).copy_from(mean_j);
        let mut cov = DMatrix::zeros(n + k, n + k);
        cov.view_mut((0, 0), (n, n)).copy_from(&cov_vv);
        cov.view_mut((0, n), (n, k)).copy_from(&cov_vj);
        cov.view_mut((n, 0), (k, n)).copy_from(&cov_vj.transpose());
        cov.view_mut((n, n), (k, k)).copy_from(cov_j);
        Ok((mean, cov))
    }

    /// Perfect intervention: rows of `B` and `Gamma` at the targets are
    /// zeroed and their noise becomes a point mass at the target value.
    pub fn intervene(&self, values: &BTreeMap<NodeId, f64>) -> Result<LinearScm> {
        let mut m = self.clone();
        for (id, val) in values {
            let i = self.output_index(id)?;
            for c in 0..m.b.ncols() {
                m.b[(i, c)] = 0.0;
            }
            for c in 0..m.gamma.ncols() {
                m.gamma[(i, c)] = 0.0;
            }
            for c in 0..m.omega.ncols() {
                m.omega[(i, c)] = 0.0;
                m.omega[(c, i)] = 0.0;
            }
            m.mu[i] = *val;
        }
        LinearScm::new(m.outputs, m.inputs, m.b, m.gamma, m.omega, m.mu)
    }

    /// Exact Gaussian conditional-independence oracle: true iff every
    /// partial correlation `rho(va, vb | c)` has magnitude below
    /// [`CI_TOLERANCE`]. Only valid for the Gaussian family.
    pub fn ci_gaussian(
        &self,
        xj: &BTreeMap<NodeId, f64>,
        a: &NodeSet,
        b: &NodeSet,
        c: &NodeSet,
    ) -> Result<bool> {
        let (_, cov) = self.observational_law(xj)?;
        let cidx: Vec<usize> = c.iter().map(|v| self.output_index(v)).collect::<Result<_>>()?;
        for va in a {
            for vb in b {
                let i = self.output_index(va)?;
                let j = self.output_index(vb)?;
                let rho = partial_correlation(&cov, i, j, &cidx)?;
                if rho.abs() >= CI_TOLERANCE {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// i.i.d. draws from the observed law; deterministic under a fixed seed.
    pub fn sample(&self, xj: &BTreeMap<NodeId, f64>, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::MalformedQuery("sample size must be at least 1".into()));
        }
        let inv = self.solve_matrix()?;
        let xv = self.input_vector(xj)?;
        let drive = &self.gamma * xv + &self.mu;
        let factor = psd_factor(&self.omega)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let dim = self.outputs.len();
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let eps = &factor * z + &drive;
            let x = &inv * eps;
            rows.push(x.iter().copied().collect());
        }
        Ok(rows)
    }
}

/// Symmetric square root of a positive semidefinite matrix, tolerating tiny
/// negative eigenvalues from roundoff.
fn psd_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < -1e-9) {
        return Err(Error::SingularSystem("covariance not positive semidefinite".into()));
    }
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * sqrt * eig.eigenvectors.transpose())
}

/// Conditional mean and covariance of the `targets` block given observed
/// values of the `given` block, by Schur complement.
pub fn condition_gaussian(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    targets: &[usize],
    given: &[usize],
    given_values: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let tt = select(cov, targets, targets);
    if given.is_empty() {
        return Ok((select_vec(mean, targets), tt));
    }
    let gg = select(cov, given, given);
    let tg = select(cov, targets, given);
    let inv = gg
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| gg.lu().try_inverse())
        .filter(|m| m.iter().all(|x| x.is_finite()))
        .ok_or_else(|| Error::SingularConditioning("conditioning block is singular".into()))?;
    let dev = DVector::from_iterator(given.len(), given.iter().zip(given_values).map(|(&g, &v)| v - mean[g]));
    let mean_t = select_vec(mean, targets) + &tg * &inv * dev;
    let cov_t = tt - &tg * inv * tg.transpose();
    Ok((mean_t, cov_t))
}

/// Partial correlation of coordinates `i`, `j` given the coordinate set `c`.
pub fn partial_correlation(cov: &DMatrix<f64>, i: usize, j: usize, c: &[usize]) -> Result<f64> {
    let zeros = vec![0.0; c.len()];
    let mean = DVector::zeros(cov.nrows());
    let (_, cc) = condition_gaussian(&mean, cov, &[i, j], c, &zeros)?;
    let (vi, vj, cij) = (cc[(0, 0)], cc[(1, 1)], cc[(0, 1)]);
    if vi < 1e-12 || vj < 1e-12 {
        // a conditionally deterministic coordinate is independent of everything
        return Ok(0.0);
    }
    Ok(cij / (vi * vj).sqrt())
}

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

fn select_vec(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

// ── Serialization ──────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct LinearScmJson {
    outputs: Vec<NodeId>,
    inputs: Vec<NodeId>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "Gamma")]
    gamma: Vec<Vec<f64>>,
    #[serde(rename = "Omega")]
    omega: Vec<Vec<f64>>,
    mu: Vec<f64>,
}

impl Serialize for LinearScm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
                .collect()
        };
        LinearScmJson {
            outputs: self.outputs.clone(),
            inputs: self.inputs.clone(),
            b: rows(&self.b),
            gamma: rows(&self.gamma),
            omega: rows(&self.omega),
            mu: self.mu.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearScm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = LinearScmJson::deserialize(d)?;
        let mat = |rows: &[Vec<f64>], nr: usize, nc: usize, name: &str| {
            if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
                return Err(D::Error::custom(format!("matrix {name} has wrong shape")));
            }
            Ok(DMatrix::from_fn(nr, nc, |r, c| rows[r][c]))
        };
        let n = j.outputs.len();
        let k = j.inputs.len();
        let b = mat(&j.b, n, n, "B")?;
        let gamma = mat(&j.gamma, n, k, "Gamma")?;
        let omega = mat(&j.omega, n, n, "Omega")?;
        let mu = DVector::from_vec(j.mu);
        LinearScm::new(j.outputs, j.inputs, b, gamma, omega, mu)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}
