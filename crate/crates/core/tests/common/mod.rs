//! Reference implementations used as oracles by the integration tests.
//! Nothing here calls into the library's numerical code.

#![allow(dead_code)]

use pathlap::dataset::draw_graph;
use pathlap::graphgen::{DirectedGraph, GraphModel, ModelKind};

pub const INF: usize = usize::MAX;

/// Floyd–Warshall on unit arc lengths. `symmetric` treats arcs as edges.
pub fn floyd_warshall(g: &DirectedGraph, symmetric: bool) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (u, v) in g.arcs() {
        d[u][v] = 1;
        if symmetric {
            d[v][u] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == INF {
                continue;
            }
            for j in 0..n {
                if d[k][j] != INF && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn max_finite(d: &[Vec<usize>]) -> usize {
    d.iter().flatten().copied().filter(|&x| x != INF).max().unwrap_or(0)
}

/// Dense `I − ε L_out` built straight from the arc list.
pub fn base_update(g: &DirectedGraph, eps: f64) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut p = vec![vec![0.0; n]; n];
    for (i, row) in p.iter_mut().enumerate() {
        row[i] = 1.0 - eps * g.out_degree(i) as f64;
    }
    for (u, v) in g.arcs() {
        p[u][v] += eps;
    }
    p
}

/// Dense `I − ε Σ_k e^{−αk} L_k` from Floyd–Warshall distances.
pub fn multi_hop_update(g: &DirectedGraph, alpha: f64, eps: f64) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let k_max = max_finite(&floyd_warshall(g, true));
    let d = floyd_warshall(g, false);
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut row_weight = 0.0;
        for j in 0..n {
            let k = d[i][j];
            if i != j && k != INF && k <= k_max {
                let w = (-alpha * k as f64).exp();
                p[i][j] = eps * w;
                row_weight += w;
            }
        }
        p[i][i] = 1.0 - eps * row_weight;
    }
    p
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

/// Left-Perron prediction of the consensus mean.
///
/// Power iteration `w ← Pᵀ w` from `w = 1/n` converges to `(P^∞)ᵀ 1/n`, and
/// `wᵀ φ(0)` is then the mean of the limit state. The powers are taken by
/// repeated squaring so that slow modes are reached in a few dozen steps.
pub fn perron_prediction(p: &[Vec<f64>], phi0: &[f64]) -> f64 {
    let n = p.len();
    let mut m = transpose(p);
    for _ in 0..64 {
        let mut next = matmul(&m, &m);
        // Pᵀ has unit column sums; restoring them keeps rounding from
        // compounding over 2^s steps.
        for j in 0..n {
            let total: f64 = next.iter().map(|row| row[j]).sum();
            for row in next.iter_mut() {
                row[j] /= total;
            }
        }
        let diff = next
            .iter()
            .flatten()
            .zip(m.iter().flatten())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        m = next;
        if diff < 1e-14 {
            break;
        }
    }
    let w: Vec<f64> = m.iter().map(|row| row.iter().sum::<f64>() / n as f64).collect();
    w.iter().zip(phi0).map(|(a, b)| a * b).sum()
}

pub fn ref_rmse(p: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - t[i]).powi(2);
    }
    (s / p.len() as f64).sqrt()
}

pub fn ref_mape(p: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut m = 0;
    for i in 0..p.len() {
        if t[i] != 0.0 {
            s += ((p[i] - t[i]) / t[i]).abs();
            m += 1;
        }
    }
    100.0 * s / m as f64
}

/// First connected directed graph for `kind` at `n`, scanning seeds upward.
pub fn connected_graph(kind: ModelKind, n: usize, p_b: f64, seed: u64) -> (u64, DirectedGraph) {
    let model = GraphModel::default_for(kind, n);
    (seed..)
        .find_map(|s| draw_graph(model, n, p_b, s).unwrap().map(|g| (s, g)))
        .unwrap()
}

pub fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] + v[m]) as f64 / 2.0
    }
}

pub fn spread(x: &[f64]) -> f64 {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}
