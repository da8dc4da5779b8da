//! Seeded generators and canonical fixtures for the test corpora.
//!
//! Random directed mixed graphs with and without cycles, random cyclic
//! linear-Gaussian models with bounded spectral radius, and random discrete
//! models whose mechanisms are compatible by construction. Everything is
//! deterministic under a seed.

use crate::dmg::{Dmg, NodeId, NodeKind};
use crate::scm::{DiscreteScm, LinearScm, Mechanism};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

/// Deterministic RNG used throughout the corpora.
pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// The running example: treatment `X`, outcome `Y`, context `C`, selection
/// node `S` fed by the mediator `Z1`, the feedback cycle
/// `Z0 -> L1 -> W -> Z0`, and a confounding arc `L1 <-> Y`.
pub fn fig1() -> Dmg {
    Dmg::outputs_only(
        &[],
        &[
            ("X", "Z1"),
            ("X", "Y"),
            ("Z1", "Z2"),
            ("C", "Z0"),
            ("Z0", "X"),
            ("Z0", "L1"),
            ("L1", "W"),
            ("W", "Z0"),
            ("Z1", "S"),
            ("L2", "Y"),
            ("L2", "Z2"),
        ],
        &[("L1", "Y")],
    )
    .expect("fig1 graph is valid")
}

/// Random all-output DMG: each ordered pair carries a directed edge with
/// probability `p_dir` (increasing pairs only when `acyclic`), each
/// unordered pair a bidirected edge with probability `p_bi`.
pub fn random_dmg(rng: &mut ChaCha12Rng, n: usize, p_dir: f64, p_bi: f64, acyclic: bool) -> Dmg {
    let names: Vec<NodeId> = (0..n).map(|i| NodeId::new(format!("v{i}"))).collect();
    let mut directed = Vec::new();
    let mut bidirected = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || (acyclic && i > j) {
                continue;
            }
            if rng.random_bool(p_dir) {
                directed.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p_bi) {
                bidirected.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    let nodes: Vec<(NodeId, NodeKind)> = names
        .into_iter()
        .map(|id| (id, NodeKind::Output))
        .collect();
    Dmg::new(nodes, directed, bidirected).expect("random graph is valid")
}

fn signed(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    let mag = rng.random_range(lo..hi);
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Random cyclic linear-Gaussian model. Directed coefficients are rescaled
/// so the spectral radius of the coefficient matrix stays at or below 0.9
/// (bounded through the row-sum norm); the noise covariance is positive
/// definite with off-diagonal entries exactly on the sampled bidirected
/// pairs.
pub fn random_linear_scm(
    rng: &mut ChaCha12Rng,
    n_out: usize,
    n_in: usize,
    p_dir: f64,
    p_bi: f64,
) -> LinearScm {
    let outputs: Vec<NodeId> = (0..n_out).map(|i| NodeId::new(format!("v{i}"))).collect();
    let inputs: Vec<NodeId> = (0..n_in).map(|i| NodeId::new(format!("j{i}"))).collect();
    let mut b = DMatrix::zeros(n_out, n_out);
    for w in 0..n_out {
        for v in 0..n_out {
            if v != w && rng.random_bool(p_dir) {
                b[(w, v)] = signed(rng, 0.4, 0.9);
            }
        }
    }
    // the max row sum of |B| bounds the spectral radius from above
    let radius = (0..n_out)
        .map(|r| (0..n_out).map(|c| b[(r, c)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    if radius > 0.9 {
        b *= 0.9 / radius;
    }
    let mut gamma = DMatrix::zeros(n_out, n_in);
    for v in 0..n_out {
        for j in 0..n_in {
            if rng.random_bool(p_dir) {
                gamma[(v, j)] = signed(rng, 0.4, 0.9);
            }
        }
    }
    let mut omega = DMatrix::identity(n_out, n_out);
    for v in 0..n_out {
        for w in v + 1..n_out {
            if rng.random_bool(p_bi) {
                let c = rng.random_range(0.3..0.6);
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                omega[(v, v)] += c;
                omega[(w, w)] += c;
                omega[(v, w)] += s * c;
                omega[(w, v)] += s * c;
            }
        }
    }
    let mu = DVector::from_fn(n_out, |_, _| rng.random_range(-1.0..1.0));
    LinearScm::new(outputs, inputs, b, gamma, omega, mu).expect("generated model is valid")
}

/// Random acyclic binary discrete model: `n` outputs in topological order,
/// each XOR-ing a private noise bit into a random function of its parents
/// (keeping every conditional strictly positive), `n_confounders` latent
/// bits feeding two outputs each, and `n_in` binary inputs wired to random
/// outputs.
pub fn random_acyclic_discrete(
    rng: &mut ChaCha12Rng,
    n: usize,
    n_confounders: usize,
    n_in: usize,
) -> DiscreteScm {
    let id = |s: String| NodeId::new(s);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut parents: Vec<Vec<String>> = vec![Vec::new(); n];
    for j in 1..n {
        for i in 0..j {
            if rng.random_bool(0.4) {
                parents[j].push(names[i].clone());
                edges.push((id(names[i].clone()), id(names[j].clone())));
            }
        }
    }
    let mut inputs = Vec::new();
    for k in 0..n_in {
        let name = format!("j{k}");
        let target = rng.random_range(0..n);
        parents[target].push(name.clone());
        edges.push((id(name.clone()), id(names[target].clone())));
        inputs.push((id(name), 2usize));
    }
    let mut noises: Vec<(NodeId, Vec<f64>)> = Vec::new();
    for k in 0..n_confounders {
        if n < 2 {
            break;
        }
        let a = rng.random_range(0..n);
        let mut bn = rng.random_range(0..n);
        while bn == a {
            bn = rng.random_range(0..n);
        }
        let name = format!("u{k}");
        for t in [a, bn] {
            parents[t].push(name.clone());
            edges.push((id(name.clone()), id(names[t].clone())));
        }
        let p = rng.random_range(0.2..0.8);
        noises.push((id(name), vec![p, 1.0 - p]));
    }
    for (i, name) in names.iter().enumerate() {
        let nz = format!("e{name}");
        parents[i].push(nz.clone());
        edges.push((id(nz.clone()), id(name.clone())));
        let p = rng.random_range(0.2..0.8);
        noises.push((id(nz), vec![p, 1.0 - p]));
    }
    let mut mechanisms = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let mut pa: Vec<NodeId> = parents[i].iter().map(|s| id(s.clone())).collect();
        pa.sort();
        pa.dedup();
        let rows = 1usize << pa.len();
        let noise_name = format!("e{name}");
        // position of the private noise bit, counted from the fastest axis
        let noise_axis = pa.len()
            - 1
            - pa.iter()
                .position(|p| p.as_str() == noise_name)
                .expect("private noise is a parent");
        let base: Vec<usize> = (0..rows >> 1).map(|_| rng.random_range(0..2usize)).collect();
        let mut table = Vec::with_capacity(rows);
        for row in 0..rows {
            let noise_bit = row >> noise_axis & 1;
            let low = row & ((1usize << noise_axis) - 1);
            let rest = (row >> (noise_axis + 1)) << noise_axis | low;
            table.push(vec![base[rest] ^ noise_bit]);
        }
        mechanisms.push(Mechanism {
            scope: vec![id(name.clone())],
            parents: pa,
            table,
        });
    }
    let outputs: Vec<(NodeId, usize)> = names.iter().map(|s| (id(s.clone()), 2)).collect();
    DiscreteScm::new(outputs, inputs, noises, edges, mechanisms).expect("generated model is valid")
}

/// Random discrete model with a genuine feedback loop `y <=> z` inside the
/// chain `x -> {y,z} -> w`. Single-node mechanisms for `y` and `z` are
/// sampled first; the joint loop mechanism is their unique simultaneous
/// fixed point, so every sub-loop is registered and globally compatible,
/// and interventions that split the loop are well defined.
pub fn random_two_cycle_discrete(rng: &mut ChaCha12Rng) -> DiscreteScm {
    let id = |s: &str| NodeId::new(s);
    loop {
        // g_y : (uy, x, z) -> y, g_z : (uz, x, y) -> z; resample until every
        // external assignment has exactly one joint fixed point.
        let gy: Vec<usize> = (0..8).map(|_| rng.random_range(0..2usize)).collect();
        let gz: Vec<usize> = (0..8).map(|_| rng.random_range(0..2usize)).collect();
        let at = |t: &[usize], a: usize, b: usize, c: usize| t[a << 2 | b << 1 | c];
        let mut joint: BTreeMap<(usize, usize, usize), (usize, usize)> = BTreeMap::new();
        let mut unique = true;
        'outer: for uy in 0..2 {
            for uz in 0..2 {
                for x in 0..2 {
                    let fixed: Vec<(usize, usize)> = (0..4usize)
                        .map(|m| (m >> 1, m & 1))
                        .filter(|&(y, z)| at(&gy, uy, x, z) == y && at(&gz, uz, x, y) == z)
                        .collect();
                    if fixed.len() != 1 {
                        unique = false;
                        break 'outer;
                    }
                    joint.insert((uy, uz, x), fixed[0]);
                }
            }
        }
        if !unique {
            continue;
        }
        let probs: Vec<f64> = (0..4).map(|_| rng.random_range(0.2..0.8)).collect();
        let noises = vec![
            (id("uw"), vec![probs[0], 1.0 - probs[0]]),
            (id("ux"), vec![probs[1], 1.0 - probs[1]]),
            (id("uy"), vec![probs[2], 1.0 - probs[2]]),
            (id("uz"), vec![probs[3], 1.0 - probs[3]]),
        ];
        let edges = vec![
            (id("ux"), id("x")),
            (id("uy"), id("y")),
            (id("uz"), id("z")),
            (id("uw"), id("w")),
            (id("x"), id("y")),
            (id("x"), id("z")),
            (id("y"), id("z")),
            (id("z"), id("y")),
            (id("z"), id("w")),
        ];
        // joint loop mechanism over {y,z}: parents sorted [uy, uz, x]
        let joint_table: Vec<Vec<usize>> = (0..8usize)
            .map(|row| {
                let (y, z) = joint[&(row >> 2, row >> 1 & 1, row & 1)];
                vec![y, z]
            })
            .collect();
        let w_table: Vec<Vec<usize>> = (0..4).map(|_| vec![rng.random_range(0..2usize)]).collect();
        let mechanisms = vec![
            Mechanism {
                scope: vec![id("x")],
                parents: vec![id("ux")],
                table: vec![vec![0], vec![1]],
            },
            Mechanism {
                scope: vec![id("y"), id("z")],
                parents: vec![id("uy"), id("uz"), id("x")],
                table: joint_table,
            },
            Mechanism {
                scope: vec![id("y")],
                parents: vec![id("uy"), id("x"), id("z")],
                table: gy.iter().map(|&v| vec![v]).collect(),
            },
            Mechanism {
                scope: vec![id("z")],
                parents: vec![id("uz"), id("x"), id("y")],
                table: gz.iter().map(|&v| vec![v]).collect(),
            },
            Mechanism {
                scope: vec![id("w")],
                parents: vec![id("uw"), id("z")],
                table: w_table,
            },
        ];
        let outputs = vec![(id("w"), 2), (id("x"), 2), (id("y"), 2), (id("z"), 2)];
        return DiscreteScm::new(outputs, vec![], noises, edges, mechanisms)
            .expect("generated two-cycle model is valid");
    }
}

/// Front-door fixture: `x -> z -> y` with a latent confounder on `{x, y}`
/// and strictly positive private noises.
pub fn front_door_discrete() -> DiscreteScm {
    let id = |s: &str| NodeId::new(s);
    DiscreteScm::new(
        vec![(id("x"), 2), (id("y"), 2), (id("z"), 2)],
        vec![],
        vec![
            (id("u"), vec![0.4, 0.6]),
            (id("ex"), vec![0.7, 0.3]),
            (id("ez"), vec![0.8, 0.2]),
            (id("ey"), vec![0.75, 0.25]),
        ],
        vec![
            (id("u"), id("x")),
            (id("u"), id("y")),
            (id("ex"), id("x")),
            (id("ez"), id("z")),
            (id("ey"), id("y")),
            (id("x"), id("z")),
            (id("z"), id("y")),
        ],
        vec![
            Mechanism {
                scope: vec![id("x")],
                parents: vec![id("ex"), id("u")],
                table: vec![vec![0], vec![1], vec![1], vec![1]],
            },
            Mechanism {
                scope: vec![id("z")],
                parents: vec![id("ez"), id("x")],
                table: vec![vec![0], vec![1], vec![1], vec![0]],
            },
            Mechanism {
                scope: vec![id("y")],
                parents: vec![id("ey"), id("u"), id("z")],
                table: (0..8).map(|r| vec![(r ^ (r >> 1) ^ (r >> 2)) & 1]).collect(),
            },
        ],
    )
    .expect("front-door model is valid")
}

/// Bow fixture: `X -> Y` with `X <-> Y`; the classic non-identifiable pair.
pub fn bow() -> Dmg {
    Dmg::outputs_only(&[], &[("X", "Y")], &[("X", "Y")]).expect("bow graph is valid")
}

/// Backdoor fixture: `Z -> X -> Y`, `Z -> Y`.
pub fn backdoor() -> Dmg {
    Dmg::outputs_only(&[], &[("Z", "X"), ("X", "Y"), ("Z", "Y")], &[]).expect("backdoor graph is valid")
}
