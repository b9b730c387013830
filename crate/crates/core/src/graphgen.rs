//! Random backbone graphs and their orientation into directed graphs.
//!
//! Three undirected models are supported: Erdős–Rényi `G(n, p)`,
//! Watts–Strogatz small-world rewiring of a ring lattice, and Barabási–Albert
//! preferential attachment. [`orient`] turns a backbone into a directed graph:
//! every edge gets one arc in a uniformly random direction, and the opposite
//! arc is added independently with probability `p_b`.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, Rng};

/// Simple undirected graph on nodes `0..n`.
///
/// Edges are stored as `(u, v)` with `u < v`, sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl UndirectedGraph {
    /// Builds a graph from unordered pairs. Duplicates (in either order) are
    /// merged; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::param(
                    "edges",
                    format!("endpoint of ({u}, {v}) not below n = {n}"),
                ));
            }
            if u == v {
                return Err(Error::param("edges", format!("self-loop at node {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(UndirectedGraph {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Number of connected components (isolated nodes count as components).
    pub fn component_count(&self) -> usize {
        let mut dsu = DisjointSets::new(self.n);
        for &(u, v) in &self.edges {
            dsu.union(u, v);
        }
        dsu.count()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    /// Both arcs of every edge.
    pub fn to_bidirected(&self) -> DirectedGraph {
        DirectedGraph::from_arcs(self.n, self.edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]))
            .expect("edges of a valid undirected graph form valid arcs")
    }
}

/// Directed graph without self-arcs or parallel arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    /// Sorted out-neighbour lists.
    out: Vec<Vec<usize>>,
    in_degree: Vec<usize>,
    arc_count: usize,
}

impl DirectedGraph {
    /// Builds a digraph from ordered pairs; duplicate arcs are merged.
    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n];
        for (u, v) in arcs {
            if u >= n || v >= n {
                return Err(Error::param(
                    "arcs",
                    format!("endpoint of ({u}, {v}) not below n = {n}"),
                ));
            }
            if u == v {
                return Err(Error::param("arcs", format!("self-arc at node {u}")));
            }
            sets[u].insert(v);
        }
        let out: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut in_degree = vec![0; n];
        for targets in &out {
            for &v in targets {
                in_degree[v] += 1;
            }
        }
        let arc_count = out.iter().map(Vec::len).sum();
        Ok(DirectedGraph {
            n,
            out,
            in_degree,
            arc_count,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_degree[i]
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.out.iter().map(Vec::len).collect()
    }

    pub fn in_degrees(&self) -> &[usize] {
        &self.in_degree
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out[u].binary_search(&v).is_ok()
    }

    /// Arcs in lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, targets)| targets.iter().map(move |&v| (u, v)))
    }

    /// `in_degree == out_degree` at every node.
    pub fn is_weight_balanced(&self) -> bool {
        (0..self.n).all(|i| self.out_degree(i) == self.in_degree[i])
    }

    /// The graph with every arc made symmetric.
    pub fn underlying_undirected(&self) -> UndirectedGraph {
        UndirectedGraph::from_edges(self.n, self.arcs()).expect("arcs are valid edges")
    }

    /// Writes the edge-list format: `n <count> directed`, then one `u v` per arc.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n {} directed", self.n)?;
        for (u, v) in self.arcs() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let n = loop {
            let Some((idx, line)) = lines.next() else {
                return Err(Error::Parse {
                    line: 1,
                    reason: "missing `n <count> directed` header".into(),
                });
            };
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            match parts.as_slice() {
                ["n", count, "directed"] => {
                    break count.parse::<usize>().map_err(|e| Error::Parse {
                        line: idx + 1,
                        reason: format!("bad node count: {e}"),
                    })?
                }
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        reason: format!("expected `n <count> directed`, found `{trimmed}`"),
                    })
                }
            }
        };
        let mut arcs = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let parse = |s: Option<&str>| -> Result<usize> {
                s.and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    reason: format!("expected `u v`, found `{trimmed}`"),
                })
            };
            let mut it = trimmed.split_whitespace();
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::Parse {
                    line: idx + 1,
                    reason: format!("trailing tokens in `{trimmed}`"),
                });
            }
            arcs.push((u, v));
        }
        DirectedGraph::from_arcs(n, arcs)
    }
}

/// Random graph family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum ModelKind {
    #[serde(rename = "ER")]
    Er,
    #[serde(rename = "WS")]
    Ws,
    #[serde(rename = "BA")]
    Ba,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Ba, ModelKind::Er, ModelKind::Ws];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Er => "ER",
            ModelKind::Ws => "WS",
            ModelKind::Ba => "BA",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "er" | "erdos-renyi" => Ok(ModelKind::Er),
            "ws" | "watts-strogatz" => Ok(ModelKind::Ws),
            "ba" | "barabasi-albert" => Ok(ModelKind::Ba),
            _ => Err(Error::param(
                "model",
                format!("unknown model `{s}` (expected er, ws or ba)"),
            )),
        }
    }
}

/// Model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum GraphModel {
    #[serde(rename = "ER")]
    ErdosRenyi { p: f64 },
    #[serde(rename = "WS")]
    WattsStrogatz { k_ring: usize, beta: f64 },
    #[serde(rename = "BA")]
    BarabasiAlbert { m: usize },
}

impl GraphModel {
    /// Defaults: ER `p = 2 ln(n) / n` (capped at 1), WS `k_ring = 4, β = 0.1`,
    /// BA `m = 3`.
    pub fn default_for(kind: ModelKind, n: usize) -> Self {
        match kind {
            ModelKind::Er => {
                let p = if n < 2 {
                    1.0
                } else {
                    (2.0 * (n as f64).ln() / n as f64).min(1.0)
                };
                GraphModel::ErdosRenyi { p }
            }
            ModelKind::Ws => GraphModel::WattsStrogatz { k_ring: 4, beta: 0.1 },
            ModelKind::Ba => GraphModel::BarabasiAlbert { m: 3 },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            GraphModel::ErdosRenyi { .. } => ModelKind::Er,
            GraphModel::WattsStrogatz { .. } => ModelKind::Ws,
            GraphModel::BarabasiAlbert { .. } => ModelKind::Ba,
        }
    }
}

/// A model, a size and a seed: everything [`sample_undirected`] needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphModelSpec {
    pub model: GraphModel,
    pub n: usize,
    pub seed: u64,
}

impl GraphModelSpec {
    pub fn new(model: GraphModel, n: usize, seed: u64) -> Self {
        GraphModelSpec { model, n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::param("n", "node count must be at least 1"));
        }
        match self.model {
            GraphModel::ErdosRenyi { p } => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::param("p", format!("edge probability {p} not in (0, 1]")));
                }
            }
            GraphModel::WattsStrogatz { k_ring, beta } => {
                if k_ring % 2 != 0 {
                    return Err(Error::param("k_ring", format!("ring degree {k_ring} must be even")));
                }
                if k_ring >= n {
                    return Err(Error::param(
                        "k_ring",
                        format!("ring degree {k_ring} must be below n = {n}"),
                    ));
                }
                if !(0.0..=1.0).contains(&beta) {
                    return Err(Error::param(
                        "beta",
                        format!("rewiring probability {beta} not in [0, 1]"),
                    ));
                }
            }
            GraphModel::BarabasiAlbert { m } => {
                if m < 1 || m >= n {
                    return Err(Error::param(
                        "m",
                        format!("attachment count {m} not in [1, n) with n = {n}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Draws an undirected graph from the model named in `spec`.
///
/// Barabási–Albert graphs are always connected; ER and WS samples may not be.
pub fn sample_undirected(spec: &GraphModelSpec) -> Result<UndirectedGraph> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let n = spec.n;
    let edges = match spec.model {
        GraphModel::ErdosRenyi { p } => erdos_renyi(n, p, &mut rng),
        GraphModel::WattsStrogatz { k_ring, beta } => watts_strogatz(n, k_ring, beta, &mut rng),
        GraphModel::BarabasiAlbert { m } => barabasi_albert(n, m, &mut rng),
    };
    UndirectedGraph::from_edges(n, edges)
}

fn erdos_renyi(n: usize, p: f64, rng: &mut Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Ring lattice with `k_ring / 2` neighbours per side; each lattice edge
/// `(u, u + j)` is rewired to `(u, w)` with probability `beta`, `w` uniform
/// among nodes not already adjacent to `u`.
fn watts_strogatz(n: usize, k_ring: usize, beta: f64, rng: &mut Rng) -> Vec<(usize, usize)> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k_ring / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k_ring / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !rng.gen_bool(beta) || !adj[u].contains(&v) {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.gen_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    adj.iter()
        .enumerate()
        .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
        .collect()
}

/// Starts from `m` isolated nodes; node `m` links to all of them, and every
/// later node links to `m` distinct targets drawn with probability
/// proportional to degree.
fn barabasi_albert(n: usize, m: usize, rng: &mut Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity((n - m) * m);
    // Each node appears once per incident edge end.
    let mut repeated: Vec<usize> = Vec::with_capacity(2 * (n - m) * m);
    let mut targets: Vec<usize> = (0..m).collect();
    for source in m..n {
        for &t in &targets {
            edges.push((t, source));
        }
        repeated.extend_from_slice(&targets);
        repeated.extend(std::iter::repeat_n(source, m));
        let mut chosen = BTreeSet::new();
        while chosen.len() < m {
            chosen.insert(*repeated.choose(rng).expect("repeated list is non-empty"));
        }
        targets = chosen.into_iter().collect();
    }
    edges
}

/// Orients every edge uniformly at random and adds the reverse arc with
/// probability `p_b`.
pub fn orient(g: &UndirectedGraph, p_b: f64, seed: u64) -> Result<DirectedGraph> {
    if !(0.0..=1.0).contains(&p_b) {
        return Err(Error::param(
            "p_b",
            format!("reverse-arc probability {p_b} not in [0, 1]"),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut arcs = Vec::with_capacity(g.edge_count() * 2);
    for &(u, v) in g.edges() {
        let (a, b) = if rng.gen_bool(0.5) { (u, v) } else { (v, u) };
        arcs.push((a, b));
        if rng.gen_bool(p_b) {
            arcs.push((b, a));
        }
    }
    DirectedGraph::from_arcs(g.node_count(), arcs)
}

/// Union-find with path halving.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
    count: usize,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
            count: n,
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.count -= 1;
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    /// Component labels numbered `0..count` in order of first appearance.
    pub(crate) fn labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut root_label = vec![usize::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = self.find(i);
                if root_label[r] == usize::MAX {
                    root_label[r] = next;
                    next += 1;
                }
                root_label[r]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(model: GraphModel, n: usize, seed: u64) -> GraphModelSpec {
        GraphModelSpec::new(model, n, seed)
    }

    #[test]
    fn er_with_p_one_is_complete() {
        for seed in 0..5 {
            let g = sample_undirected(&spec(GraphModel::ErdosRenyi { p: 1.0 }, 3, seed)).unwrap();
            assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
        }
    }

    #[test]
    fn ba_with_m_one_is_a_tree() {
        for seed in 0..20 {
            let g = sample_undirected(&spec(GraphModel::BarabasiAlbert { m: 1 }, 5, seed)).unwrap();
            assert_eq!(g.edge_count(), 4);
            assert!(g.is_connected());
        }
    }

    #[test]
    fn ws_without_rewiring_is_ring_lattice() {
        let g = sample_undirected(&spec(GraphModel::WattsStrogatz { k_ring: 4, beta: 0.0 }, 10, 9)).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 4));
        assert_eq!(g.edge_count(), 20);
    }

    #[test]
    fn ws_rewiring_preserves_edge_count() {
        for seed in 0..10 {
            let g = sample_undirected(&spec(GraphModel::WattsStrogatz { k_ring: 4, beta: 0.5 }, 30, seed)).unwrap();
            assert_eq!(g.edge_count(), 60);
        }
    }

    #[test]
    fn parameter_errors_name_the_bound() {
        let cases = [
            (GraphModel::ErdosRenyi { p: 0.0 }, 10, "p"),
            (GraphModel::ErdosRenyi { p: 1.5 }, 10, "p"),
            (GraphModel::WattsStrogatz { k_ring: 3, beta: 0.1 }, 10, "k_ring"),
            (GraphModel::WattsStrogatz { k_ring: 10, beta: 0.1 }, 10, "k_ring"),
            (GraphModel::WattsStrogatz { k_ring: 4, beta: -0.1 }, 10, "beta"),
            (GraphModel::BarabasiAlbert { m: 0 }, 10, "m"),
            (GraphModel::BarabasiAlbert { m: 10 }, 10, "m"),
        ];
        for (model, n, name) in cases {
            match sample_undirected(&spec(model, n, 0)) {
                Err(Error::InvalidParameter { name: got, .. }) => assert_eq!(got, name),
                other => panic!("{model:?}: expected parameter error, got {other:?}"),
            }
        }
    }

    #[test]
    fn orient_extremes() {
        let g = sample_undirected(&spec(GraphModel::ErdosRenyi { p: 0.3 }, 40, 3)).unwrap();
        let all = orient(&g, 1.0, 11).unwrap();
        let deg = g.degrees();
        for i in 0..40 {
            assert_eq!(all.out_degree(i), deg[i]);
            assert_eq!(all.in_degree(i), deg[i]);
        }
        let none = orient(&g, 0.0, 11).unwrap();
        assert_eq!(none.arc_count(), g.edge_count());
        assert!(orient(&g, 1.2, 0).is_err());
    }

    #[test]
    fn reverse_fraction_is_binomial() {
        let g = sample_undirected(&spec(GraphModel::ErdosRenyi { p: 0.55 }, 200, 5)).unwrap();
        let edges = g.edge_count() as f64;
        assert!(edges >= 10_000.0);
        let d = orient(&g, 0.3, 8).unwrap();
        let reversed = (d.arc_count() - g.edge_count()) as f64;
        let sigma = (edges * 0.3 * 0.7).sqrt();
        assert!(
            (reversed - 0.3 * edges).abs() <= 3.0 * sigma,
            "reversed {reversed} of {edges}"
        );
    }

    #[test]
    fn edge_list_round_trip() {
        let g = DirectedGraph::from_arcs(4, [(0, 1), (1, 2), (2, 0), (3, 1)]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n 4 directed\n0 1\n"));
        assert_eq!(DirectedGraph::read_edge_list(&buf[..]).unwrap(), g);
    }

    #[test]
    fn edge_list_errors_report_lines() {
        let err = DirectedGraph::read_edge_list("n 3 directed\n0 1\n1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = DirectedGraph::read_edge_list("3 directed\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(DirectedGraph::read_edge_list("n 2 directed\n1 1\n".as_bytes()).is_err());
    }

    #[test]
    fn from_arcs_rejects_self_arcs() {
        assert!(DirectedGraph::from_arcs(2, [(1, 1)]).is_err());
        assert!(DirectedGraph::from_arcs(2, [(0, 2)]).is_err());
        assert!(UndirectedGraph::from_edges(2, [(0, 0)]).is_err());
    }

    #[test]
    fn model_kind_parsing() {
        assert_eq!("BA".parse::<ModelKind>().unwrap(), ModelKind::Ba);
        assert_eq!("er".parse::<ModelKind>().unwrap(), ModelKind::Er);
        assert!("sbm".parse::<ModelKind>().is_err());
    }
}
