//! Run configuration: built-in defaults, then a TOML key-value file, then
//! command-line flags. Later layers win.
//!
//! ```toml
//! model = "ba"
//! n = 50
//! case = "exponential"
//! seed = 7
//! train = 2400
//! test = 600
//! alpha = 1.0
//! out = "data"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::consensus::{CaseType, ConsensusConfig};
use crate::dataset::{DatasetConfig, DEFAULT_P_B, DEFAULT_RESAMPLE_FACTOR, FULL_TEST_COUNT, FULL_TRAIN_COUNT};
use crate::error::{Error, Result};
use crate::graphgen::{GraphModel, GraphModelSpec, ModelKind};

/// Environment variable consulted when no seed is given.
pub const SEED_ENV: &str = "PATHLAP_SEED";

/// One layer of optional settings.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub model: Option<String>,
    pub n: Option<usize>,
    pub case: Option<String>,
    pub train: Option<usize>,
    pub test: Option<usize>,
    pub seed: Option<u64>,
    pub p_b: Option<f64>,
    pub er_p: Option<f64>,
    pub ws_k: Option<usize>,
    pub ws_beta: Option<f64>,
    pub ba_m: Option<usize>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub iter_max: Option<usize>,
    pub record_len: Option<usize>,
    pub resample_factor: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        ConfigLayer { $($field: $top.$field.or($base.$field)),* }
    };
}

impl ConfigLayer {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// `top` overrides `self` field by field.
    pub fn overlay(self, top: ConfigLayer) -> ConfigLayer {
        let base = self;
        overlay!(
            base,
            top,
            model,
            n,
            case,
            train,
            test,
            seed,
            p_b,
            er_p,
            ws_k,
            ws_beta,
            ba_m,
            c,
            alpha,
            tau,
            iter_max,
            record_len,
            resample_factor,
            out,
            workers
        )
    }
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ModelKind,
    pub n: usize,
    pub graph: GraphModel,
    pub p_b: f64,
    pub consensus: ConsensusConfig,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
    pub resample_factor: usize,
    pub out: PathBuf,
    /// 0 means one worker per logical core.
    pub workers: usize,
    layer: ConfigLayer,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => {
            let flag = match name {
                "p" => "er-p",
                "k_ring" => "ws-k",
                "beta" => "ws-beta",
                "m" => "ba-m",
                other => return Error::Config(format!("--{}: {reason}", other.replace('_', "-"))),
            };
            Error::Config(format!("--{flag}: {reason}"))
        }
        other => other,
    }
}

impl RunConfig {
    /// Resolves `layer` over the defaults, reading the seed from
    /// `PATHLAP_SEED` if no layer sets it.
    pub fn resolve(layer: ConfigLayer) -> Result<Self> {
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::Config(format!("{SEED_ENV}={v}: {e}")))?,
            ),
            Err(_) => None,
        };
        Self::resolve_with_env_seed(layer, env_seed)
    }

    pub fn resolve_with_env_seed(layer: ConfigLayer, env_seed: Option<u64>) -> Result<Self> {
        let kind: ModelKind = layer.model.as_deref().unwrap_or("ba").parse().map_err(config_err)?;
        let case: CaseType = layer.case.as_deref().unwrap_or("base").parse().map_err(config_err)?;
        let n = layer.n.unwrap_or(25);
        let graph = model_params(kind, n, &layer);
        let defaults = ConsensusConfig::default();
        let consensus = ConsensusConfig {
            case,
            c: layer.c.unwrap_or(defaults.c),
            alpha: layer.alpha.unwrap_or(defaults.alpha),
            tau: layer.tau.unwrap_or(defaults.tau),
            iter_max: layer.iter_max.unwrap_or(defaults.iter_max),
            record_len: layer.record_len.unwrap_or(defaults.record_len),
        };
        let cfg = RunConfig {
            kind,
            n,
            graph,
            p_b: layer.p_b.unwrap_or(DEFAULT_P_B),
            consensus,
            train: layer.train.unwrap_or(FULL_TRAIN_COUNT),
            test: layer.test.unwrap_or(FULL_TEST_COUNT),
            seed: layer.seed.or(env_seed).unwrap_or(0),
            resample_factor: layer.resample_factor.unwrap_or(DEFAULT_RESAMPLE_FACTOR),
            out: layer.out.clone().unwrap_or_else(|| PathBuf::from("data")),
            workers: layer.workers.unwrap_or(0),
            layer,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("--n: node count must be at least 2".into()));
        }
        GraphModelSpec::new(self.graph, self.n, 0)
            .validate()
            .map_err(config_err)?;
        self.consensus.validate().map_err(config_err)?;
        if !(0.0..=1.0).contains(&self.p_b) {
            return Err(Error::Config(format!("--p-b: {} not in [0, 1]", self.p_b)));
        }
        if self.train < 1 || self.test < 1 {
            return Err(Error::Config("--train/--test: counts must be at least 1".into()));
        }
        Ok(())
    }

    /// Model parameters for another model kind or size, keeping any explicit
    /// overrides from the layers.
    pub fn graph_for(&self, kind: ModelKind, n: usize) -> GraphModel {
        model_params(kind, n, &self.layer)
    }

    pub fn dataset_config(&self) -> DatasetConfig {
        DatasetConfig {
            model: self.graph,
            n: self.n,
            p_b: self.p_b,
            consensus: self.consensus,
            train_count: self.train,
            test_count: self.test,
            master_seed: self.seed,
            resample_factor: self.resample_factor,
        }
    }

    /// Creates the output directory and checks that a file can be written
    /// into it.
    pub fn ensure_output_dir(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::Config(format!("--out {}: {e}", self.out.display())))?;
        let probe = self.out.join(".pathlap-write-check");
        std::fs::write(&probe, b"")
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| Error::Config(format!("--out {} is not writable: {e}", self.out.display())))
    }
}

fn model_params(kind: ModelKind, n: usize, layer: &ConfigLayer) -> GraphModel {
    match GraphModel::default_for(kind, n) {
        GraphModel::ErdosRenyi { p } => GraphModel::ErdosRenyi {
            p: layer.er_p.unwrap_or(p),
        },
        GraphModel::WattsStrogatz { k_ring, beta } => GraphModel::WattsStrogatz {
            k_ring: layer.ws_k.unwrap_or(k_ring),
            beta: layer.ws_beta.unwrap_or(beta),
        },
        GraphModel::BarabasiAlbert { m } => GraphModel::BarabasiAlbert {
            m: layer.ba_m.unwrap_or(m),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve_with_env_seed(ConfigLayer::default(), None).unwrap();
        assert_eq!(cfg.kind, ModelKind::Ba);
        assert_eq!(cfg.graph, GraphModel::BarabasiAlbert { m: 3 });
        assert_eq!(cfg.consensus, ConsensusConfig::default());
        assert_eq!((cfg.train, cfg.test), (2400, 600));
        assert_eq!(cfg.p_b, 0.3);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn precedence_flags_over_file_over_env() {
        let file = ConfigLayer::from_toml_str("model = \"er\"\nn = 40\nseed = 3\nalpha = 0.5\n").unwrap();
        let flags = ConfigLayer {
            seed: Some(9),
            ..Default::default()
        };
        let cfg = RunConfig::resolve_with_env_seed(file.clone().overlay(flags), Some(1)).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.n, 40);
        assert_eq!(cfg.consensus.alpha, 0.5);
        let cfg = RunConfig::resolve_with_env_seed(file.clone(), Some(1)).unwrap();
        assert_eq!(cfg.seed, 3);
        let mut no_seed = file;
        no_seed.seed = None;
        assert_eq!(RunConfig::resolve_with_env_seed(no_seed, Some(1)).unwrap().seed, 1);
    }

    #[test]
    fn er_default_probability_tracks_n() {
        let layer = ConfigLayer {
            model: Some("er".into()),
            n: Some(100),
            ..Default::default()
        };
        let cfg = RunConfig::resolve_with_env_seed(layer, None).unwrap();
        let GraphModel::ErdosRenyi { p } = cfg.graph else {
            panic!()
        };
        assert!((p - 2.0 * 100f64.ln() / 100.0).abs() < 1e-15);
    }

    #[test]
    fn errors_name_the_flag() {
        let layer = ConfigLayer {
            model: Some("ws".into()),
            ws_k: Some(3),
            ..Default::default()
        };
        let err = RunConfig::resolve_with_env_seed(layer, None).unwrap_err().to_string();
        assert!(err.contains("--ws-k"), "{err}");
        let err = RunConfig::resolve_with_env_seed(
            ConfigLayer {
                tau: Some(-1.0),
                ..Default::default()
            },
            None,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("--tau"), "{err}");
        assert!(ConfigLayer::from_toml_str("bogus = 1").is_err());
    }
}
