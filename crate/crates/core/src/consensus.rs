//! Discrete-time consensus on directed graphs.
//!
//! Every agent starts from its out-degree and repeatedly replaces its state
//! by a convex combination of its own value and the values of the nodes it
//! points to:
//!
//! ```text
//! φ(t + 1) = P φ(t)
//! base:        P = I − ε L_out,                    ε = 1 / (c · max_i d_out(i))
//! exponential: P = I − ε Σ_k e^{−αk} L_k
//! ```
//!
//! The initial state is the diagonal of `K = L_out + A`. Since
//! `L_out = D_out − A`, `K = D_out` and `φ_i(0)` is simply the out-degree of
//! node `i`.
//!
//! With positive diagonal and non-negative entries, `P` is row-stochastic and
//! each step is an averaging step, so `max φ − min φ` never grows. On a
//! weight-balanced digraph the column sums are also one and the sum of states
//! is conserved, so the limit is the initial mean. On a general digraph the
//! limit of node `i` is `Σ_j (P^∞)_ij φ_j(0)`.
//!
//! Iteration stops once `‖φ(t + 1) − φ(t)‖_∞ ≤ τ`. Runs that hit the
//! iteration cap are returned with `converged == false`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::DirectedGraph;
use crate::matrix::{CsrMatrix, Matrix};
use crate::pathlap::{identity_minus_scaled, k_path_decomposition, out_laplacian, DistanceMode, KPathDecomposition};

/// Safety factor applied to the multi-hop step-size bound.
pub const EXPONENTIAL_STEP_MARGIN: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum CaseType {
    /// One-hop dynamics.
    Base,
    /// Exponentially weighted multi-hop dynamics.
    Exponential,
}

impl CaseType {
    pub const ALL: [CaseType; 2] = [CaseType::Base, CaseType::Exponential];

    pub fn label(self) -> &'static str {
        match self {
            CaseType::Base => "base",
            CaseType::Exponential => "exponential",
        }
    }
}

impl fmt::Display for CaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CaseType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(CaseType::Base),
            "exponential" | "exp" => Ok(CaseType::Exponential),
            _ => Err(Error::param(
                "case",
                format!("unknown case `{s}` (expected base or exponential)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusConfig {
    pub case: CaseType,
    /// Step-size divisor `c` in `ε = 1 / (c · max K)`.
    pub c: f64,
    /// Decay rate of the multi-hop weights.
    pub alpha: f64,
    /// Tolerance on the ∞-norm of successive states.
    pub tau: f64,
    pub iter_max: usize,
    /// Number of states recorded, starting with `φ(0)`.
    pub record_len: usize,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        ConsensusConfig {
            case: CaseType::Base,
            c: 100.0,
            alpha: 1.0,
            tau: 1e-6,
            iter_max: 1_000_000,
            record_len: 10,
        }
    }
}

impl ConsensusConfig {
    pub fn with_case(mut self, case: CaseType) -> Self {
        self.case = case;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param(
                "c",
                format!("step-size divisor {} must be positive", self.c),
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::param(
                "alpha",
                format!("decay rate {} must be non-negative", self.alpha),
            ));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(Error::param("tau", format!("tolerance {} must be positive", self.tau)));
        }
        if self.iter_max < 1 {
            return Err(Error::param("iter_max", "iteration cap must be at least 1"));
        }
        if self.record_len < 1 {
            return Err(Error::param("record_len", "record length must be at least 1"));
        }
        Ok(())
    }
}

/// `φ_i(0) = K_ii = d_out(i)`.
pub fn initial_state(g: &DirectedGraph) -> Vec<f64> {
    (0..g.node_count()).map(|i| g.out_degree(i) as f64).collect()
}

/// `ε = 1 / (c · max_i d_out(i))`.
pub fn base_epsilon(g: &DirectedGraph, c: f64) -> Result<f64> {
    let max_out = g.out_degrees().into_iter().max().unwrap_or(0);
    if max_out == 0 {
        return Err(Error::DegenerateGraph);
    }
    Ok(1.0 / (c * max_out as f64))
}

/// A row-stochastic update matrix ready for iteration.
#[derive(Debug, Clone)]
pub struct UpdateOperator {
    pub case: CaseType,
    pub epsilon: f64,
    /// Step size from the one-hop rule, before any multi-hop clamp.
    pub base_epsilon: f64,
    /// Whether the multi-hop clamp lowered the step size.
    pub clamped: bool,
    dense: Matrix,
    /// `None` when the matrix is dense enough that row dots are faster.
    sparse: Option<CsrMatrix>,
}

impl UpdateOperator {
    /// Wraps an arbitrary square matrix. No stochasticity check is made.
    pub fn from_matrix(case: CaseType, epsilon: f64, m: Matrix) -> Self {
        let csr = CsrMatrix::from_dense(&m);
        let sparse = (csr.nnz() * 2 < m.rows() * m.cols()).then_some(csr);
        UpdateOperator {
            case,
            epsilon,
            base_epsilon: epsilon,
            clamped: false,
            dense: m,
            sparse,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.dense
    }

    pub fn dim(&self) -> usize {
        self.dense.rows()
    }

    /// `max_i |Σ_j P_ij − 1|`.
    pub fn row_sum_error(&self) -> f64 {
        self.dense
            .row_sums()
            .into_iter()
            .fold(0.0, |acc, s| acc.max((s - 1.0).abs()))
    }
}

/// Builds the update matrix for `cfg.case`.
///
/// The exponential case needs a decomposition computed in directed mode; its
/// step size is `min(ε_base, 0.99 / max_i Σ_k e^{−αk} δ_k(i))`, which keeps
/// every diagonal entry positive.
pub fn build_update(
    g: &DirectedGraph,
    dec: Option<&KPathDecomposition>,
    cfg: &ConsensusConfig,
) -> Result<UpdateOperator> {
    cfg.validate()?;
    let eps_base = base_epsilon(g, cfg.c)?;
    match cfg.case {
        CaseType::Base => {
            let p = identity_minus_scaled(&out_laplacian(g), eps_base);
            Ok(UpdateOperator::from_matrix(CaseType::Base, eps_base, p))
        }
        CaseType::Exponential => {
            let dec =
                dec.ok_or_else(|| Error::param("decomposition", "exponential case needs a k-path decomposition"))?;
            if dec.node_count() != g.node_count() {
                return Err(Error::DimensionMismatch {
                    expected: g.node_count(),
                    found: dec.node_count(),
                });
            }
            let bound = EXPONENTIAL_STEP_MARGIN / dec.max_weighted_degree(cfg.alpha);
            let clamped = bound < eps_base;
            let epsilon = eps_base.min(bound);
            if clamped {
                log::debug!("multi-hop step size clamped from {eps_base:e} to {epsilon:e}");
            }
            let p = identity_minus_scaled(&dec.weighted_laplacian(cfg.alpha), epsilon);
            let mut op = UpdateOperator::from_matrix(CaseType::Exponential, epsilon, p);
            op.base_epsilon = eps_base;
            op.clamped = clamped;
            Ok(op)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusRun {
    /// `φ(0), φ(1), …`: at most `record_len` states.
    pub states: Vec<Vec<f64>>,
    pub final_state: Vec<f64>,
    /// Mean of `final_state`.
    pub final_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub epsilon_used: f64,
}

impl ConsensusRun {
    pub fn valid_steps(&self) -> usize {
        self.states.len()
    }
}

pub fn run_consensus(op: &UpdateOperator, initial: &[f64], cfg: &ConsensusConfig) -> Result<ConsensusRun> {
    run_consensus_with(op, initial, cfg, |_, _| {})
}

/// Like [`run_consensus`], calling `observe(t, φ(t))` for every state,
/// including `φ(0)`.
pub fn run_consensus_with<F>(
    op: &UpdateOperator,
    initial: &[f64],
    cfg: &ConsensusConfig,
    mut observe: F,
) -> Result<ConsensusRun>
where
    F: FnMut(usize, &[f64]),
{
    cfg.validate()?;
    let n = op.dim();
    if initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: initial.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut current = initial.to_vec();
    let mut next = vec![0.0; n];
    let mut states = Vec::with_capacity(cfg.record_len);
    states.push(current.clone());
    observe(0, &current);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.iter_max {
        match &op.sparse {
            Some(csr) => csr.mul_vec_into(&current, &mut next),
            None => op.dense.mul_vec_into(&current, &mut next),
        }
        let delta = current
            .iter()
            .zip(&next)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        std::mem::swap(&mut current, &mut next);
        iterations += 1;
        if states.len() < cfg.record_len {
            states.push(current.clone());
        }
        observe(iterations, &current);
        if delta <= cfg.tau {
            converged = true;
            break;
        }
    }
    let final_value = current.iter().sum::<f64>() / n as f64;
    Ok(ConsensusRun {
        states,
        final_state: current,
        final_value,
        iterations,
        converged,
        epsilon_used: op.epsilon,
    })
}

/// Builds whatever `cfg.case` needs and runs consensus from the out-degree
/// initial state.
pub fn simulate(g: &DirectedGraph, cfg: &ConsensusConfig) -> Result<ConsensusRun> {
    let dec = match cfg.case {
        CaseType::Base => None,
        CaseType::Exponential => Some(k_path_decomposition(g, DistanceMode::Directed)?),
    };
    let op = build_update(g, dec.as_ref(), cfg)?;
    run_consensus(&op, &initial_state(g), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bidirected(n: usize, edges: &[(usize, usize)]) -> DirectedGraph {
        DirectedGraph::from_arcs(n, edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)])).unwrap()
    }

    #[test]
    fn initial_state_is_out_degree() {
        let chain = DirectedGraph::from_arcs(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(initial_state(&chain), vec![1.0, 1.0, 0.0]);
        let k3 = bidirected(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(initial_state(&k3), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn base_epsilon_rule() {
        let star = DirectedGraph::from_arcs(5, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 0)]).unwrap();
        assert_eq!(base_epsilon(&star, 100.0).unwrap(), 1.0 / 400.0);
        let single = DirectedGraph::from_arcs(2, [(0, 1)]).unwrap();
        assert_eq!(base_epsilon(&single, 1.0).unwrap(), 1.0);
        let empty = DirectedGraph::from_arcs(3, []).unwrap();
        assert!(matches!(base_epsilon(&empty, 100.0), Err(Error::DegenerateGraph)));
    }

    #[test]
    fn base_update_is_row_stochastic() {
        let g = DirectedGraph::from_arcs(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let op = build_update(&g, None, &ConsensusConfig::default()).unwrap();
        assert!(op.row_sum_error() < 1e-12);
        assert!(op.matrix().min_entry() >= 0.0);
    }

    #[test]
    fn exponential_requires_decomposition() {
        let g = bidirected(3, &[(0, 1), (1, 2)]);
        let cfg = ConsensusConfig::default().with_case(CaseType::Exponential);
        assert!(build_update(&g, None, &cfg).is_err());
    }

    #[test]
    fn exponential_with_huge_decay_reduces_to_one_hop() {
        let g = DirectedGraph::from_arcs(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (2, 0)]).unwrap();
        let dec = k_path_decomposition(&g, DistanceMode::Directed).unwrap();
        let alpha = 60.0;
        let cfg = ConsensusConfig {
            alpha,
            ..ConsensusConfig::default()
        };
        let base = build_update(&g, None, &cfg).unwrap();
        let exp = build_update(&g, Some(&dec), &cfg.with_case(CaseType::Exponential)).unwrap();
        assert_eq!(exp.epsilon, base.epsilon);
        let one_hop = identity_minus_scaled(&out_laplacian(&g), base.epsilon * (-alpha).exp());
        assert!(exp.matrix().max_abs_diff(&one_hop) < 1e-10);
        // Rescaled by e^α the multi-hop Laplacian is the one-hop Laplacian
        // plus terms of order e^{−α}.
        let mut rescaled = dec.weighted_laplacian(alpha);
        for i in 0..5 {
            for j in 0..5 {
                rescaled[(i, j)] *= alpha.exp();
            }
        }
        assert!(rescaled.max_abs_diff(&out_laplacian(&g)) < 1e-10);
    }

    #[test]
    fn clamp_respects_unweighted_step_bound() {
        // Path of 6 nodes, bidirected; α = 0 weighs every hop equally.
        let g = bidirected(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let dec = k_path_decomposition(&g, DistanceMode::Directed).unwrap();
        let cfg = ConsensusConfig {
            case: CaseType::Exponential,
            c: 0.1,
            alpha: 0.0,
            ..ConsensusConfig::default()
        };
        let op = build_update(&g, Some(&dec), &cfg).unwrap();
        let max_sum = (0..6)
            .map(|i| (1..=dec.k_max()).map(|k| dec.degree(k).unwrap()[i]).sum::<usize>())
            .max()
            .unwrap();
        assert_eq!(max_sum, 5);
        assert!(op.clamped);
        assert!(op.epsilon < 1.0 / max_sum as f64);
        assert!(op.matrix().min_entry() >= 0.0);
    }

    #[test]
    fn constant_state_is_fixed_point() {
        let g = DirectedGraph::from_arcs(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let op = build_update(&g, None, &ConsensusConfig::default()).unwrap();
        let run = run_consensus(&op, &[3.5, 3.5, 3.5], &ConsensusConfig::default()).unwrap();
        assert!(run.converged);
        assert_eq!(run.iterations, 1);
        assert_eq!(run.final_value, 3.5);
        assert_eq!(run.valid_steps(), 2);
    }

    #[test]
    fn non_convergence_is_flagged_not_raised() {
        let g = bidirected(4, &[(0, 1), (1, 2), (2, 3)]);
        let cfg = ConsensusConfig {
            iter_max: 3,
            ..ConsensusConfig::default()
        };
        let op = build_update(&g, None, &cfg).unwrap();
        let run = run_consensus(&op, &initial_state(&g), &cfg).unwrap();
        assert!(!run.converged);
        assert_eq!(run.iterations, 3);
        assert_eq!(run.states.len(), 4);
    }

    #[test]
    fn prefix_is_capped_at_record_len() {
        let g = bidirected(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let cfg = ConsensusConfig::default();
        let run = simulate(&g, &cfg).unwrap();
        assert!(run.converged);
        assert_eq!(run.states.len(), 10);
        assert_eq!(run.states[0], initial_state(&g));
        let mean0 = initial_state(&g).iter().sum::<f64>() / 5.0;
        assert!((run.final_value - mean0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch() {
        let g = bidirected(3, &[(0, 1), (1, 2)]);
        let op = build_update(&g, None, &ConsensusConfig::default()).unwrap();
        assert!(matches!(
            run_consensus(&op, &[1.0, 2.0], &ConsensusConfig::default()),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn config_validation() {
        let good = ConsensusConfig::default();
        assert!(good.validate().is_ok());
        for bad in [
            ConsensusConfig { c: 0.0, ..good },
            ConsensusConfig { tau: 0.0, ..good },
            ConsensusConfig { iter_max: 0, ..good },
            ConsensusConfig { record_len: 0, ..good },
            ConsensusConfig { alpha: -1.0, ..good },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
