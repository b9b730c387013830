//! Shortest-path distances and the k-path Laplacian family.
//!
//! For a graph with hop distances `d(i, j)` the k-path adjacency matrix marks
//! the pairs at distance exactly `k`:
//!
//! ```text
//! (P_k)_ij = 1  if d(i, j) = k,  0 otherwise
//! δ_k(i)   = Σ_j (P_k)_ij            (k-path degree)
//! L_k      = diag(δ_k) − P_k          (k-path Laplacian)
//! ```
//!
//! `P_1` is the ordinary adjacency matrix and `L_1` the ordinary Laplacian.
//! Every `L_k` annihilates the all-ones vector. On undirected graphs each
//! `L_k` is symmetric positive semi-definite with
//! `yᵀ L_k y = ½ Σ_{d(i,j)=k} (y_i − y_j)²`.
//!
//! On directed graphs the same construction uses directed BFS distances, so
//! `δ_k(i)` counts the nodes *reachable* from `i` in exactly `k` hops and
//! `L_1 = D_out − A`. The range of `k` is always `1..=diameter`, the
//! diameter being taken on the underlying undirected graph. Directed pairs
//! whose distance exceeds that diameter are dropped.
//!
//! The multi-hop operator mixes all scales with exponentially decaying
//! weights:
//!
//! ```text
//! L_tot = Σ_{k=1}^{k_max} e^{−αk} L_k,    P = I − ε L_tot
//! ```

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphgen::DirectedGraph;
use crate::matrix::Matrix;

/// How arcs are traversed when measuring distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceMode {
    /// Follow arcs in their direction only.
    Directed,
    /// Treat every arc as an undirected edge.
    UnderlyingUndirected,
}

const UNREACHABLE: u32 = u32::MAX;

/// All-pairs hop distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    // Row-major; `UNREACHABLE` is never exposed or used arithmetically.
    dist: Vec<u32>,
}

impl DistanceMatrix {
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Hop distance from `i` to `j`, or `None` when `j` is unreachable.
    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        match self.dist[i * self.n + j] {
            UNREACHABLE => None,
            d => Some(d as usize),
        }
    }

    /// Largest finite distance.
    pub fn max_finite(&self) -> usize {
        self.dist
            .iter()
            .filter(|&&d| d != UNREACHABLE)
            .max()
            .map_or(0, |&d| d as usize)
    }

    pub fn all_finite(&self) -> bool {
        self.dist.iter().all(|&d| d != UNREACHABLE)
    }
}

fn adjacency_lists(g: &DirectedGraph, mode: DistanceMode) -> Vec<Vec<usize>> {
    let n = g.node_count();
    match mode {
        DistanceMode::Directed => (0..n).map(|i| g.out_neighbors(i).to_vec()).collect(),
        DistanceMode::UnderlyingUndirected => {
            let mut adj = vec![Vec::new(); n];
            for (u, v) in g.underlying_undirected().edges().iter().copied() {
                adj[u].push(v);
                adj[v].push(u);
            }
            adj
        }
    }
}

fn bfs_row(adj: &[Vec<usize>], source: usize) -> Vec<u32> {
    let mut row = vec![UNREACHABLE; adj.len()];
    let mut queue = VecDeque::new();
    row[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = row[u] + 1;
        for &v in &adj[u] {
            if row[v] == UNREACHABLE {
                row[v] = next;
                queue.push_back(v);
            }
        }
    }
    row
}

/// Breadth-first search from every node.
pub fn all_pairs_distances(g: &DirectedGraph, mode: DistanceMode) -> DistanceMatrix {
    let n = g.node_count();
    let adj = adjacency_lists(g, mode);
    let rows: Vec<Vec<u32>> = (0..n).into_par_iter().map(|s| bfs_row(&adj, s)).collect();
    DistanceMatrix { n, dist: rows.concat() }
}

/// Diameter of the underlying undirected graph.
pub fn diameter(g: &DirectedGraph) -> Result<usize> {
    let components = g.underlying_undirected().component_count();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    Ok(all_pairs_distances(g, DistanceMode::UnderlyingUndirected).max_finite())
}

/// The family `{P_k, δ_k, L_k : 1 ≤ k ≤ k_max}` of a graph.
///
/// Matrices are materialized on request from the stored distance matrix;
/// only the k-path degrees are kept eagerly.
#[derive(Debug, Clone)]
pub struct KPathDecomposition {
    mode: DistanceMode,
    dist: DistanceMatrix,
    k_max: usize,
    // degrees[k - 1][i] = δ_k(i)
    degrees: Vec<Vec<usize>>,
}

/// Computes distances under `mode` and the k-path family for
/// `k = 1..=diameter(g)`.
pub fn k_path_decomposition(g: &DirectedGraph, mode: DistanceMode) -> Result<KPathDecomposition> {
    let k_max = diameter(g)?;
    if k_max == 0 {
        return Err(Error::DegenerateGraph);
    }
    let dist = all_pairs_distances(g, mode);
    let n = g.node_count();
    let mut degrees = vec![vec![0; n]; k_max];
    for i in 0..n {
        for j in 0..n {
            if let Some(d) = dist.get(i, j) {
                if (1..=k_max).contains(&d) {
                    degrees[d - 1][i] += 1;
                }
            }
        }
    }
    Ok(KPathDecomposition {
        mode,
        dist,
        k_max,
        degrees,
    })
}

impl KPathDecomposition {
    pub fn node_count(&self) -> usize {
        self.dist.n
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.dist
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.k_max {
            return Err(Error::KOutOfRange { k, k_max: self.k_max });
        }
        Ok(())
    }

    /// k-path degrees `δ_k`.
    pub fn degree(&self, k: usize) -> Result<&[usize]> {
        self.check_k(k)?;
        Ok(&self.degrees[k - 1])
    }

    /// Pairs `(i, j)` with `d(i, j) = k`, in row-major order.
    pub fn pairs(&self, k: usize) -> Result<Vec<(usize, usize)>> {
        self.check_k(k)?;
        let n = self.node_count();
        Ok((0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.dist.get(i, j) == Some(k))
            .collect())
    }

    /// `P_k` as a dense 0/1 matrix.
    pub fn adjacency(&self, k: usize) -> Result<Matrix> {
        let n = self.node_count();
        let mut p = Matrix::zeros(n, n);
        for (i, j) in self.pairs(k)? {
            p[(i, j)] = 1.0;
        }
        Ok(p)
    }

    /// `L_k = D_k − P_k`.
    pub fn laplacian(&self, k: usize) -> Result<Matrix> {
        let n = self.node_count();
        let mut l = Matrix::zeros(n, n);
        for (i, j) in self.pairs(k)? {
            l[(i, j)] = -1.0;
        }
        for i in 0..n {
            l[(i, i)] = self.degrees[k - 1][i] as f64;
        }
        Ok(l)
    }

    /// `Σ_k e^{−αk} L_k`, assembled in one pass over the distance matrix.
    pub fn weighted_laplacian(&self, alpha: f64) -> Matrix {
        let n = self.node_count();
        let weights: Vec<f64> = (1..=self.k_max).map(|k| (-alpha * k as f64).exp()).collect();
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if let Some(d) = self.dist.get(i, j) {
                    if (1..=self.k_max).contains(&d) {
                        let w = weights[d - 1];
                        l[(i, j)] = -w;
                        diag += w;
                    }
                }
            }
            l[(i, i)] = diag;
        }
        l
    }

    /// `max_i Σ_k e^{−αk} δ_k(i)`, the largest diagonal entry of the
    /// weighted Laplacian.
    pub fn max_weighted_degree(&self, alpha: f64) -> f64 {
        (0..self.node_count())
            .map(|i| {
                (1..=self.k_max)
                    .map(|k| (-alpha * k as f64).exp() * self.degrees[k - 1][i] as f64)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Writes `P_k.csv` and `L_k.csv` for every k into `dir`.
    pub fn export_csv(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for k in 1..=self.k_max {
            let p = std::fs::File::create(dir.join(format!("P_{k}.csv")))?;
            self.adjacency(k)?.write_csv(std::io::BufWriter::new(p))?;
            let l = std::fs::File::create(dir.join(format!("L_{k}.csv")))?;
            self.laplacian(k)?.write_csv(std::io::BufWriter::new(l))?;
        }
        Ok(())
    }
}

/// `P = I − ε Σ_k e^{−αk} L_k` together with its ingredients.
#[derive(Debug, Clone)]
pub struct MultiHopOperator {
    pub alpha: f64,
    pub epsilon: f64,
    pub total_laplacian: Matrix,
    pub update: Matrix,
}

/// Builds the multi-hop update matrix. Fails if `epsilon` would push a
/// diagonal entry below zero.
pub fn multi_hop_operator(dec: &KPathDecomposition, alpha: f64, epsilon: f64) -> Result<MultiHopOperator> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::param(
            "alpha",
            format!("decay rate {alpha} must be finite and non-negative"),
        ));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param("epsilon", format!("step size {epsilon} must be positive")));
    }
    let total = dec.weighted_laplacian(alpha);
    let max_diag = dec.max_weighted_degree(alpha);
    if epsilon * max_diag > 1.0 {
        return Err(Error::StepSize {
            epsilon,
            max_admissible: 1.0 / max_diag,
        });
    }
    let update = identity_minus_scaled(&total, epsilon);
    Ok(MultiHopOperator {
        alpha,
        epsilon,
        total_laplacian: total,
        update,
    })
}

/// `I − ε L`.
pub(crate) fn identity_minus_scaled(l: &Matrix, epsilon: f64) -> Matrix {
    let n = l.rows();
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = -epsilon * l[(i, j)];
            p[(i, j)] = if i == j { 1.0 + v } else { v };
        }
    }
    p
}

/// The one-hop directed Laplacian `D_out − A`.
pub fn out_laplacian(g: &DirectedGraph) -> Matrix {
    let n = g.node_count();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = g.out_degree(i) as f64;
        for &j in g.out_neighbors(i) {
            l[(i, j)] = -1.0;
        }
    }
    l
}
