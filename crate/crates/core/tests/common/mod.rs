//! Independent oracles shared by the integration and acceptance tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;

use fpgdd::rng::{seeded, Rng as ChaCha};

/// Minimum transport cost by enumerating every basic solution.
///
/// A vertex of the transportation polytope is supported on a spanning tree
/// of the bipartite row/column graph (`rows + cols - 1` cells). For every
/// such cell subset the flows are forced; peel leaves to recover them and
/// keep the cheapest nonnegative one.
pub fn brute_force_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (r, c) = (supply.len(), demand.len());
    let cells = r * c;
    let need = r + c - 1;
    let mut best = f64::INFINITY;
    let mut chosen: Vec<usize> = Vec::with_capacity(need);
    combinations(cells, need, 0, &mut chosen, &mut |subset| {
        if let Some(flows) = tree_flows(subset, supply, demand, r, c) {
            if flows.iter().all(|f| *f >= -1e-12) {
                let total: f64 = subset.iter().zip(&flows).map(|(&cell, f)| f * cost[cell]).sum();
                best = best.min(total);
            }
        }
    });
    best
}

fn combinations(n: usize, k: usize, start: usize, chosen: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let remaining = k - chosen.len();
    for x in start..=n - remaining {
        chosen.push(x);
        combinations(n, k, x + 1, chosen, visit);
        chosen.pop();
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut x = x;
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Flows on a spanning-tree support, or `None` if the cells contain a cycle.
fn tree_flows(subset: &[usize], supply: &[f64], demand: &[f64], r: usize, c: usize) -> Option<Vec<f64>> {
    let mut parent: Vec<usize> = (0..r + c).collect();
    for &cell in subset {
        let (a, b) = (find(&mut parent, cell / c), find(&mut parent, r + cell % c));
        if a == b {
            return None;
        }
        parent[a] = b;
    }
    let mut mass: Vec<f64> = supply.iter().chain(demand).copied().collect();
    let mut degree = vec![0usize; r + c];
    for &cell in subset {
        degree[cell / c] += 1;
        degree[r + cell % c] += 1;
    }
    let mut flows = vec![0.0; subset.len()];
    let mut done = vec![false; subset.len()];
    for _ in 0..subset.len() {
        let (e, leaf) = subset
            .iter()
            .enumerate()
            .filter(|(e, _)| !done[*e])
            .find_map(|(e, &cell)| {
                let (row, col) = (cell / c, r + cell % c);
                if degree[row] == 1 {
                    Some((e, row))
                } else if degree[col] == 1 {
                    Some((e, col))
                } else {
                    None
                }
            })?;
        let cell = subset[e];
        let other = if leaf < r { r + cell % c } else { cell / c };
        flows[e] = mass[leaf];
        mass[other] -= mass[leaf];
        mass[leaf] = 0.0;
        degree[leaf] -= 1;
        degree[other] -= 1;
        done[e] = true;
    }
    Some(flows)
}

/// A random point on the simplex with `k` entries (some may be zero).
pub fn random_simplex(rng: &mut ChaCha, k: usize, zero_prob: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k)
            .map(|_| if rng.random::<f64>() < zero_prob { 0.0 } else { rng.random::<f64>() })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

/// A random metric on `k` points: shortest-path closure of random positive weights.
pub fn random_metric(rng: &mut ChaCha, k: usize) -> Vec<f64> {
    let mut d = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let w = 0.1 + rng.random::<f64>();
            d[i * k + j] = w;
            d[j * k + i] = w;
        }
    }
    for via in 0..k {
        for i in 0..k {
            for j in 0..k {
                let alt = d[i * k + via] + d[via * k + j];
                if alt < d[i * k + j] {
                    d[i * k + j] = alt;
                }
            }
        }
    }
    d
}

/// Random connected symmetric affinity on `n` nodes; roughly a third of the
/// off-diagonal pairs are dropped, but a ring keeps the graph connected.
pub fn random_graph(seed: u64, n: usize) -> DMatrix<f64> {
    let mut rng = seeded(seed);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        w[(i, i)] = 0.5 + rng.random::<f64>();
        for j in i + 1..n {
            let ring = j == i + 1 || (i == 0 && j == n - 1);
            if ring || rng.random::<f64>() > 0.33 {
                let v = 0.05 + rng.random::<f64>();
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    w
}

/// `P^t` by repeated multiplication.
pub fn matrix_power(p: &DMatrix<f64>, t: u32) -> DMatrix<f64> {
    let mut out = DMatrix::identity(p.nrows(), p.ncols());
    for _ in 0..t {
        out = &out * p;
    }
    out
}

/// Squared diffusion distance straight from the definition:
/// `sum_k (P^t_ik - P^t_jk)^2 / pi_k`.
pub fn diffusion_distance_sq(pt: &DMatrix<f64>, pi: &[f64], i: usize, j: usize) -> f64 {
    (0..pi.len())
        .map(|k| (pt[(i, k)] - pt[(j, k)]).powi(2) / pi[k])
        .sum()
}
