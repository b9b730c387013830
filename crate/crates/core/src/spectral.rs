//! Connectivity diagnostics for the k-path family.
//!
//! The number of zero eigenvalues of an undirected `L_k` equals the number of
//! connected components of the graph whose edges are the distance-`k` pairs.
//! Both sides are computed independently here: components by union-find on
//! `P_k`, multiplicity as `n − rank(L_k)` by Gaussian elimination.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphgen::DisjointSets;
use crate::matrix::Matrix;
use crate::pathlap::KPathDecomposition;

/// Relative pivot tolerance used by [`zero_multiplicity`].
pub const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub k: usize,
    pub zero_multiplicity: usize,
    pub component_count: usize,
    /// Second-smallest eigenvalue of `L_k`; only for symmetric `L_k` with
    /// at least two nodes.
    pub fiedler_value: Option<f64>,
}

/// Component label of every node in the graph formed by the symmetrized
/// distance-`k` pairs. Labels run from 0 in order of first appearance.
pub fn k_path_components(dec: &KPathDecomposition, k: usize) -> Result<Vec<usize>> {
    let pairs = dec.pairs(k)?;
    let mut dsu = DisjointSets::new(dec.node_count());
    for (i, j) in pairs {
        dsu.union(i, j);
    }
    Ok(dsu.labels())
}

pub fn component_count(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&m| m + 1)
}

/// `n − rank(L)`, the rank taken by Gaussian elimination with partial
/// pivoting and pivot tolerance `1e-9 · max|L|`.
pub fn zero_multiplicity(l: &Matrix) -> usize {
    l.rows() - rank(l, RANK_TOLERANCE * l.max_abs())
}

fn rank(m: &Matrix, tol: f64) -> usize {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = m.to_rows();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = (rank..rows)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() <= tol {
            continue;
        }
        a.swap(rank, pivot);
        let pivot_row = a[rank].clone();
        for row in a.iter_mut().skip(rank + 1) {
            let factor = row[col] / pivot_row[col];
            if factor != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= factor * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// All eigenvalues of a symmetric matrix, ascending, by the cyclic Jacobi
/// method.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    if !m.is_symmetric(1e-12 * m.max_abs().max(1.0)) {
        return Err(Error::param("matrix", "eigenvalue routine needs a symmetric matrix"));
    }
    let n = m.rows();
    let mut a = m.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Second-smallest eigenvalue of a symmetric Laplacian; `None` below two
/// nodes.
pub fn fiedler_value(l: &Matrix) -> Result<Option<f64>> {
    let eig = symmetric_eigenvalues(l)?;
    Ok(eig.get(1).copied())
}

/// One row per `k`. Fiedler values are reported only when `L_k` is
/// symmetric (always, for undirected decompositions).
pub fn spectral_report(dec: &KPathDecomposition) -> Result<Vec<SpectralReport>> {
    (1..=dec.k_max())
        .into_par_iter()
        .map(|k| {
            let l = dec.laplacian(k)?;
            let fiedler = if l.is_symmetric(0.0) { fiedler_value(&l)? } else { None };
            Ok(SpectralReport {
                k,
                zero_multiplicity: zero_multiplicity(&l),
                component_count: component_count(&k_path_components(dec, k)?),
                fiedler_value: fiedler,
            })
        })
        .collect()
}
