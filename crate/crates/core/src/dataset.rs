//! End-to-end generation of consensus-prediction datasets.
//!
//! Each sample is produced from its own seed:
//!
//! 1. draw an undirected backbone from the configured model;
//! 2. orient it, adding reverse arcs with probability `p_b`;
//! 3. build the base or multi-hop update matrix;
//! 4. iterate from the out-degree vector until the tolerance is met;
//! 5. keep the first `record_len` states and the mean of the final state.
//!
//! Backbones whose undirected graph is disconnected, and runs that hit the
//! iteration cap, are rejected and redrawn with the next attempt seed. The
//! number of redraws is recorded in the manifest.
//!
//! Datasets are stored as JSON Lines: a `{"manifest": …}` header followed by
//! one sample per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::{self, CaseType, ConsensusConfig, ConsensusRun};
use crate::error::{Error, Result};
use crate::graphgen::{orient, sample_undirected, DirectedGraph, GraphModel, GraphModelSpec, ModelKind};
use crate::pathlap::{k_path_decomposition, DistanceMode};
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_P_B: f64 = 0.3;
pub const DEFAULT_RESAMPLE_FACTOR: usize = 10;
pub const GRID_SIZES: [usize; 5] = [25, 50, 100, 200, 300];
pub const FULL_TRAIN_COUNT: usize = 2400;
pub const FULL_TEST_COUNT: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn stream(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(flatten)]
    pub model: GraphModel,
    pub n: usize,
    pub p_b: f64,
    pub consensus: ConsensusConfig,
    pub train_count: usize,
    pub test_count: usize,
    pub master_seed: u64,
    pub resample_factor: usize,
}

impl DatasetConfig {
    /// Default parameters for `kind` at size `n`.
    pub fn new(kind: ModelKind, n: usize, case: CaseType) -> Self {
        DatasetConfig {
            model: GraphModel::default_for(kind, n),
            n,
            p_b: DEFAULT_P_B,
            consensus: ConsensusConfig::default().with_case(case),
            train_count: FULL_TRAIN_COUNT,
            test_count: FULL_TEST_COUNT,
            master_seed: 0,
            resample_factor: DEFAULT_RESAMPLE_FACTOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param("n", "datasets need at least two nodes"));
        }
        GraphModelSpec::new(self.model, self.n, 0).validate()?;
        self.consensus.validate()?;
        if !(0.0..=1.0).contains(&self.p_b) {
            return Err(Error::param(
                "p_b",
                format!("reverse-arc probability {} not in [0, 1]", self.p_b),
            ));
        }
        if self.train_count < 1 || self.test_count < 1 {
            return Err(Error::param("train/test", "sample counts must be at least 1"));
        }
        Ok(())
    }

    pub fn case(&self) -> CaseType {
        self.consensus.case
    }

    /// `ba_n25_base` and the like.
    pub fn stem(&self) -> String {
        format!(
            "{}_n{}_{}",
            self.model.kind().label().to_ascii_lowercase(),
            self.n,
            self.case()
        )
    }

    pub fn describe(&self) -> String {
        format!(
            "{} n={} case={} seed={}",
            self.model.kind(),
            self.n,
            self.case(),
            self.master_seed
        )
    }
}

/// One supervised example: a trajectory prefix and its consensus target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub schema: u32,
    #[serde(rename = "model")]
    pub graph_model: ModelKind,
    pub n: usize,
    #[serde(rename = "case")]
    pub case_type: CaseType,
    #[serde(rename = "seed")]
    pub sample_seed: u64,
    pub valid_steps: usize,
    pub states: Vec<Vec<f64>>,
    pub final_value: f64,
    pub iterations: usize,
    #[serde(rename = "epsilon")]
    pub epsilon_used: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResampleCounts {
    pub disconnected: usize,
    pub not_converged: usize,
}

impl ResampleCounts {
    pub fn total(&self) -> usize {
        self.disconnected + self.not_converged
    }

    fn add(&mut self, other: ResampleCounts) {
        self.disconnected += other.disconnected;
        self.not_converged += other.not_converged;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub config: DatasetConfig,
    pub train_count: usize,
    pub test_count: usize,
    pub train_resamples: ResampleCounts,
    pub test_resamples: ResampleCounts,
}

impl DatasetManifest {
    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_count,
            Split::Test => self.test_count,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestLine {
    manifest: DatasetManifest,
    split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub train: Vec<TrajectorySample>,
    pub test: Vec<TrajectorySample>,
}

/// The directed graph behind a sample seed, or `None` when the backbone is
/// disconnected.
pub fn draw_graph(model: GraphModel, n: usize, p_b: f64, sample_seed: u64) -> Result<Option<DirectedGraph>> {
    let backbone = sample_undirected(&GraphModelSpec::new(model, n, seed::derive(sample_seed, 0)))?;
    if !backbone.is_connected() {
        return Ok(None);
    }
    orient(&backbone, p_b, seed::derive(sample_seed, 1)).map(Some)
}

enum Attempt {
    Accepted(TrajectorySample),
    Disconnected,
    NotConverged,
}

fn run_for_graph(g: &DirectedGraph, cfg: &ConsensusConfig) -> Result<ConsensusRun> {
    let dec = match cfg.case {
        CaseType::Base => None,
        CaseType::Exponential => Some(k_path_decomposition(g, DistanceMode::Directed)?),
    };
    let op = consensus::build_update(g, dec.as_ref(), cfg)?;
    consensus::run_consensus(&op, &consensus::initial_state(g), cfg)
}

fn attempt(cfg: &DatasetConfig, sample_seed: u64) -> Result<Attempt> {
    let Some(g) = draw_graph(cfg.model, cfg.n, cfg.p_b, sample_seed)? else {
        return Ok(Attempt::Disconnected);
    };
    let run = run_for_graph(&g, &cfg.consensus)?;
    if !run.converged {
        return Ok(Attempt::NotConverged);
    }
    Ok(Attempt::Accepted(TrajectorySample {
        schema: SCHEMA_VERSION,
        graph_model: cfg.model.kind(),
        n: cfg.n,
        case_type: cfg.case(),
        sample_seed,
        valid_steps: run.states.len(),
        states: run.states,
        final_value: run.final_value,
        iterations: run.iterations,
        epsilon_used: run.epsilon_used,
    }))
}

fn generate_one(
    cfg: &DatasetConfig,
    split: Split,
    index: usize,
    rejections: &AtomicUsize,
    budget: usize,
) -> Result<(TrajectorySample, ResampleCounts)> {
    let mut counts = ResampleCounts::default();
    for attempt_no in 0.. {
        let s = seed::sample_seed(cfg.master_seed, split.stream(), index as u64, attempt_no);
        match attempt(cfg, s)? {
            Attempt::Accepted(sample) => return Ok((sample, counts)),
            Attempt::Disconnected => counts.disconnected += 1,
            Attempt::NotConverged => counts.not_converged += 1,
        }
        // Every attempt counted here is one the sequential schedule would
        // also make, so exceeding the budget is schedule-independent.
        let total = rejections.fetch_add(1, Ordering::Relaxed) + 1;
        if total > budget {
            return Err(Error::ResampleBudget {
                config: format!("{} ({})", cfg.describe(), split.label()),
                resamples: total,
                budget,
            });
        }
    }
    unreachable!("attempt loop only exits by returning")
}

fn generate_split(cfg: &DatasetConfig, split: Split, count: usize) -> Result<(Vec<TrajectorySample>, ResampleCounts)> {
    let budget = cfg.resample_factor.saturating_mul(count);
    let rejections = AtomicUsize::new(0);
    let results: Vec<(TrajectorySample, ResampleCounts)> = (0..count)
        .into_par_iter()
        .map(|i| generate_one(cfg, split, i, &rejections, budget))
        .collect::<Result<_>>()?;
    let mut total = ResampleCounts::default();
    let samples = results
        .into_iter()
        .map(|(s, c)| {
            total.add(c);
            s
        })
        .collect();
    Ok((samples, total))
}

/// Generates train and test splits on the current rayon pool.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.validate()?;
    let (train, train_resamples) = generate_split(cfg, Split::Train, cfg.train_count)?;
    let (test, test_resamples) = generate_split(cfg, Split::Test, cfg.test_count)?;
    Ok(Dataset {
        manifest: DatasetManifest {
            format_version: SCHEMA_VERSION,
            config: cfg.clone(),
            train_count: train.len(),
            test_count: test.len(),
            train_resamples,
            test_resamples,
        },
        train,
        test,
    })
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Regenerates the graph behind `sample` and reruns its consensus dynamics.
pub fn replay_sample(cfg: &DatasetConfig, sample: &TrajectorySample) -> Result<ConsensusRun> {
    let g = draw_graph(cfg.model, cfg.n, cfg.p_b, sample.sample_seed)?.ok_or_else(|| {
        Error::param(
            "seed",
            format!("seed {} yields a disconnected backbone", sample.sample_seed),
        )
    })?;
    let consensus = cfg.consensus.with_case(sample.case_type);
    run_for_graph(&g, &consensus)
}

/// Every model × size × case, all with the same counts
/// and master seed.
pub fn full_grid(train_count: usize, test_count: usize, master_seed: u64) -> Vec<DatasetConfig> {
    let mut grid = Vec::with_capacity(30);
    for kind in ModelKind::ALL {
        for n in GRID_SIZES {
            for case in CaseType::ALL {
                let mut cfg = DatasetConfig::new(kind, n, case);
                cfg.train_count = train_count;
                cfg.test_count = test_count;
                cfg.master_seed = master_seed;
                grid.push(cfg);
            }
        }
    }
    grid
}

fn write_split<W: Write>(
    mut out: W,
    manifest: &DatasetManifest,
    split: Split,
    samples: &[TrajectorySample],
) -> Result<()> {
    let header = ManifestLine {
        manifest: manifest.clone(),
        split,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Serializes one split to JSON Lines.
pub fn write_jsonl(path: &Path, manifest: &DatasetManifest, split: Split, samples: &[TrajectorySample]) -> Result<()> {
    write_split(BufWriter::new(File::create(path)?), manifest, split, samples)
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[TrajectorySample] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Writes `<stem>_train.jsonl` and `<stem>_test.jsonl` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<[PathBuf; 2]> {
        std::fs::create_dir_all(dir)?;
        let stem = self.manifest.config.stem();
        let paths = [Split::Train, Split::Test].map(|s| dir.join(format!("{stem}_{}.jsonl", s.label())));
        for (split, path) in [Split::Train, Split::Test].into_iter().zip(&paths) {
            write_jsonl(path, &self.manifest, split, self.split(split))?;
        }
        Ok(paths)
    }
}

/// A split read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFile {
    pub manifest: DatasetManifest,
    pub split: Split,
    pub samples: Vec<TrajectorySample>,
}

pub fn read_jsonl_from<R: BufRead>(input: R) -> Result<SplitFile> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        reason: "empty file: missing manifest header".into(),
    })??;
    let value: serde_json::Value = serde_json::from_str(&header).map_err(|e| Error::Parse {
        line: 1,
        reason: format!("malformed manifest: {e}"),
    })?;
    if let Some(v) = value
        .pointer("/manifest/format_version")
        .and_then(serde_json::Value::as_u64)
    {
        if v != u64::from(SCHEMA_VERSION) {
            return Err(Error::SchemaVersion {
                found: v as u32,
                expected: SCHEMA_VERSION,
            });
        }
    }
    let ManifestLine { manifest, split } = serde_json::from_value(value).map_err(|e| Error::Parse {
        line: 1,
        reason: format!("malformed manifest: {e}"),
    })?;
    let mut samples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: TrajectorySample = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            reason: format!("malformed record: {e}"),
        })?;
        if sample.schema != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: sample.schema,
                expected: SCHEMA_VERSION,
            });
        }
        if sample.valid_steps != sample.states.len() || sample.states.iter().any(|s| s.len() != sample.n) {
            return Err(Error::Parse {
                line: line_no,
                reason: "state matrix does not match `valid_steps` × `n`".into(),
            });
        }
        samples.push(sample);
    }
    let declared = manifest.count(split);
    if declared != samples.len() {
        return Err(Error::CountMismatch {
            declared,
            found: samples.len(),
        });
    }
    Ok(SplitFile {
        manifest,
        split,
        samples,
    })
}

pub fn read_jsonl(path: &Path) -> Result<SplitFile> {
    read_jsonl_from(BufReader::new(File::open(path)?))
}

/// Flattened CSV for tabular models.
///
/// Columns are `f_<t>_<i>` for `t < record_len`, `i < n`, then
/// `valid_steps` and `target`. Prefixes shorter than `record_len` are padded
/// with their last recorded state.
pub fn write_flat_csv<W: Write>(samples: &[TrajectorySample], record_len: usize, out: W) -> Result<()> {
    let n = samples.first().map_or(0, |s| s.n);
    if let Some(bad) = samples.iter().find(|s| s.n != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.n,
        });
    }
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..record_len)
        .flat_map(|t| (0..n).map(move |i| format!("f_{t}_{i}")))
        .collect();
    header.push("valid_steps".into());
    header.push("target".into());
    writer.write_record(&header)?;
    for s in samples {
        let last = s.states.last().ok_or(Error::EmptyInput)?;
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for t in 0..record_len {
            let state = s.states.get(t).unwrap_or(last);
            row.extend(state.iter().map(f64::to_string));
        }
        row.push(s.valid_steps.to_string());
        row.push(s.final_value.to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ModelKind, case: CaseType) -> DatasetConfig {
        let mut cfg = DatasetConfig::new(kind, 12, case);
        cfg.train_count = 4;
        cfg.test_count = 2;
        cfg.master_seed = 5;
        cfg
    }

    #[test]
    fn generation_is_deterministic_and_replayable() {
        let cfg = small(ModelKind::Ba, CaseType::Exponential);
        let a = generate_dataset(&cfg).unwrap();
        let b = generate_dataset(&cfg).unwrap();
        assert_eq!(a, b);
        for s in a.train.iter().chain(&a.test) {
            assert!(s.valid_steps <= 10 && s.valid_steps >= 1);
            let replay = replay_sample(&cfg, s).unwrap();
            assert!((replay.final_value - s.final_value).abs() <= 1e-9);
        }
    }

    #[test]
    fn splits_use_disjoint_seeds() {
        let cfg = small(ModelKind::Er, CaseType::Base);
        let d = generate_dataset(&cfg).unwrap();
        for s in &d.test {
            assert!(d.train.iter().all(|t| t.sample_seed != s.sample_seed));
        }
    }

    #[test]
    fn jsonl_round_trip_and_header() {
        let cfg = small(ModelKind::Ws, CaseType::Base);
        let d = generate_dataset(&cfg).unwrap();
        let mut buf = Vec::new();
        write_split(&mut buf, &d.manifest, Split::Train, &d.train).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"manifest\":"));
        assert_eq!(text.lines().count(), 1 + d.train.len());
        let second = text.lines().nth(1).unwrap();
        assert!(second.starts_with("{\"schema\":1,\"model\":\"WS\",\"n\":12,\"case\":\"base\",\"seed\":"));
        let back = read_jsonl_from(&buf[..]).unwrap();
        assert_eq!(back.samples, d.train);
        assert_eq!(back.manifest, d.manifest);
        assert_eq!(back.split, Split::Train);
    }

    #[test]
    fn empty_split_is_header_only() {
        let cfg = small(ModelKind::Ba, CaseType::Base);
        let mut manifest = generate_dataset(&cfg).unwrap().manifest;
        manifest.test_count = 0;
        let mut buf = Vec::new();
        write_split(&mut buf, &manifest, Split::Test, &[]).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 1);
        assert!(read_jsonl_from(&buf[..]).unwrap().samples.is_empty());
    }

    #[test]
    fn reader_errors() {
        assert!(matches!(read_jsonl_from(&b""[..]), Err(Error::Parse { line: 1, .. })));
        let cfg = small(ModelKind::Ba, CaseType::Base);
        let d = generate_dataset(&cfg).unwrap();
        let mut buf = Vec::new();
        write_split(&mut buf, &d.manifest, Split::Test, &d.test).unwrap();
        let text = String::from_utf8(buf).unwrap();

        let bumped = text.replacen("\"format_version\":1", "\"format_version\":2", 1);
        assert!(matches!(
            read_jsonl_from(bumped.as_bytes()),
            Err(Error::SchemaVersion { found: 2, expected: 1 })
        ));

        let mut lines: Vec<&str> = text.lines().collect();
        lines[2] = "{\"schema\":1,";
        let broken = lines.join("\n");
        assert!(matches!(
            read_jsonl_from(broken.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));

        let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            read_jsonl_from(truncated.as_bytes()),
            Err(Error::CountMismatch { declared: 2, found: 1 })
        ));
    }

    #[test]
    fn flat_csv_shape() {
        let states: Vec<Vec<f64>> = (0..3).map(|t| vec![t as f64; 25]).collect();
        let sample = TrajectorySample {
            schema: 1,
            graph_model: ModelKind::Ba,
            n: 25,
            case_type: CaseType::Base,
            sample_seed: 1,
            valid_steps: 3,
            states,
            final_value: 2.0,
            iterations: 2,
            epsilon_used: 0.01,
        };
        let mut buf = Vec::new();
        write_flat_csv(&[sample], 10, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), 252);
        assert_eq!(header[0], "f_0_0");
        assert_eq!(header[249], "f_9_24");
        assert_eq!(&header[250..], &["valid_steps", "target"]);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 252);
        // Padding repeats the last recorded state.
        assert_eq!(row[249], "2");
        assert_eq!(row[250], "3");
    }

    #[test]
    fn resample_budget_exhaustion_names_configuration() {
        // ER with a tiny edge probability is almost never connected.
        let mut cfg = small(ModelKind::Er, CaseType::Base);
        cfg.model = GraphModel::ErdosRenyi { p: 0.01 };
        cfg.resample_factor = 2;
        match generate_dataset(&cfg) {
            Err(Error::ResampleBudget { config, budget, .. }) => {
                assert!(config.contains("ER n=12"), "{config}");
                assert_eq!(budget, 8);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn full_grid_has_thirty_cells() {
        let grid = full_grid(FULL_TRAIN_COUNT, FULL_TEST_COUNT, 0);
        assert_eq!(grid.len(), 30);
        let stems: std::collections::BTreeSet<_> = grid.iter().map(DatasetConfig::stem).collect();
        assert_eq!(stems.len(), 30);
        assert!(grid.iter().all(|c| c.train_count == 2400 && c.test_count == 600));
    }
}
