//! Error metrics and reference predictors.
//!
//! The two baselines give a floor for any learned model: the mean of the
//! initial state is exact on weight-balanced graphs, and the mean of the last
//! recorded state is what a model gets "for free" from the prefix.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::consensus::CaseType;
use crate::dataset::TrajectorySample;
use crate::error::{Error, Result};
use crate::graphgen::ModelKind;

fn check_lengths(predictions: &[f64], targets: &[f64]) -> Result<()> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            found: predictions.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// `sqrt(mean((p − t)²))`.
pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(predictions, targets)?;
    let sum: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sum / targets.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mape {
    /// Percentage over the samples with a nonzero target.
    pub value: f64,
    /// Samples skipped because their target was zero.
    pub excluded: usize,
}

/// `100 · mean(|p − t| / |t|)` over samples with `t ≠ 0`.
///
/// Zero targets are excluded and counted. If every target is zero the
/// metric is undefined and `EmptyInput` is returned.
pub fn mape(predictions: &[f64], targets: &[f64]) -> Result<Mape> {
    check_lengths(predictions, targets)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for (p, t) in predictions.iter().zip(targets) {
        if *t == 0.0 {
            continue;
        }
        sum += ((p - t) / t).abs();
        used += 1;
    }
    let excluded = targets.len() - used;
    if excluded > 0 {
        log::warn!("MAPE: excluded {excluded} zero targets");
    }
    if used == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(Mape {
        value: 100.0 * sum / used as f64,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Mean of the last valid recorded state.
    LastStateMean,
    /// Mean of `φ(0)`.
    InitialMean,
}

impl Baseline {
    pub const ALL: [Baseline; 2] = [Baseline::LastStateMean, Baseline::InitialMean];

    pub fn label(self) -> &'static str {
        match self {
            Baseline::LastStateMean => "last_state_mean",
            Baseline::InitialMean => "initial_mean",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last_state_mean" | "last" => Ok(Baseline::LastStateMean),
            "initial_mean" | "initial" => Ok(Baseline::InitialMean),
            _ => Err(Error::param(
                "strategy",
                format!("unknown strategy `{s}` (expected last_state_mean or initial_mean)"),
            )),
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn baseline_predict(sample: &TrajectorySample, strategy: Baseline) -> Result<f64> {
    let state = match strategy {
        Baseline::LastStateMean => sample.states.get(sample.valid_steps.wrapping_sub(1)),
        Baseline::InitialMean => sample.states.first(),
    };
    match state {
        Some(s) if !s.is_empty() => Ok(mean(s)),
        _ => Err(Error::EmptyInput),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub model_name: String,
    pub dataset_id: String,
    pub graph_model: ModelKind,
    pub n: usize,
    pub case: CaseType,
    pub rmse: f64,
    pub mape: f64,
    pub mape_excluded: usize,
    /// Mean wall-clock latency per sample, warm-up pass excluded.
    pub prediction_time_ms: f64,
}

impl EvalReport {
    pub const TSV_HEADER: &'static str = "dataset\tstrategy\tmodel\tn\tcase\trmse\tmape\ttime_ms";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6e}\t{:.6}\t{:.6e}",
            self.dataset_id,
            self.model_name,
            self.graph_model,
            self.n,
            self.case,
            self.rmse,
            self.mape,
            self.prediction_time_ms
        )
    }
}

/// Scores a baseline on `samples`.
///
/// Predictions are made once untimed to warm caches, then once more under
/// the clock.
pub fn evaluate_baseline(samples: &[TrajectorySample], strategy: Baseline, dataset_id: &str) -> Result<EvalReport> {
    let first = samples.first().ok_or(Error::EmptyInput)?;
    let targets: Vec<f64> = samples.iter().map(|s| s.final_value).collect();
    let warm: Vec<f64> = samples
        .iter()
        .map(|s| baseline_predict(s, strategy))
        .collect::<Result<_>>()?;
    let start = Instant::now();
    let predictions: Vec<f64> = samples
        .iter()
        .map(|s| baseline_predict(s, strategy))
        .collect::<Result<_>>()?;
    let elapsed = start.elapsed();
    debug_assert_eq!(warm, predictions);
    let m = mape(&predictions, &targets)?;
    Ok(EvalReport {
        model_name: strategy.label().to_owned(),
        dataset_id: dataset_id.to_owned(),
        graph_model: first.graph_model,
        n: first.n,
        case: first.case_type,
        rmse: rmse(&predictions, &targets)?,
        mape: m.value,
        mape_excluded: m.excluded,
        prediction_time_ms: elapsed.as_secs_f64() * 1e3 / samples.len() as f64,
    })
}
