//! k-path Laplacians and multi-hop consensus on random directed networks.
//!
//! The crate covers the whole pipeline from a random graph to a supervised
//! dataset:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`graphgen`] | Erdős–Rényi, Watts–Strogatz and Barabási–Albert backbones; orientation with random reverse arcs |
//! | [`pathlap`] | BFS distances, diameter, the `P_k` / `δ_k` / `L_k` family, the multi-hop operator |
//! | [`consensus`] | step-size rules, update matrices, iteration to tolerance |
//! | [`spectral`] | k-path components, zero-eigenvalue multiplicity, Fiedler values |
//! | [`dataset`] | seeded parallel generation, JSONL and flat-CSV serialization, replay |
//! | [`evaluate`] | RMSE, MAPE and reference predictors |
//! | [`config`] | layered run configuration for the `pathlap` binary |
//!
//! ```
//! use pathlap::consensus::{simulate, CaseType, ConsensusConfig};
//! use pathlap::dataset::draw_graph;
//! use pathlap::graphgen::{GraphModel, ModelKind};
//!
//! let model = GraphModel::default_for(ModelKind::Ba, 30);
//! let g = draw_graph(model, 30, 0.3, 7).unwrap().expect("BA graphs are connected");
//! let cfg = ConsensusConfig::default().with_case(CaseType::Exponential);
//! let run = simulate(&g, &cfg).unwrap();
//! assert!(run.converged);
//! assert_eq!(run.states.len(), 10);
//! ```
//!
//! The `book/` directory next to this crate explains the mathematics; its
//! code listings are compiled and run as doctests.

pub mod config;
pub mod consensus;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod graphgen;
pub mod matrix;
pub mod pathlap;
pub mod seed;
pub mod spectral;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/kpath.md")]
    mod kpath {}
    #[doc = include_str!("../../../book/src/consensus.md")]
    mod consensus {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
