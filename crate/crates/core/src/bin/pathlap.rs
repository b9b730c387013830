//! `pathlap`: generate datasets, run single simulations, inspect k-path
//! spectra and score reference predictors.
//!
//! Exit codes: 0 on success, 2 on a configuration or usage error, 3 when the
//! requested work fails.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use pathlap::config::{ConfigLayer, RunConfig};
use pathlap::consensus::{self, build_update, run_consensus_with, ConsensusRun};
use pathlap::dataset::{self, draw_graph, full_grid, generate_dataset, with_workers, DatasetConfig};
use pathlap::evaluate::{evaluate_baseline, Baseline, EvalReport};
use pathlap::graphgen::DirectedGraph;
use pathlap::pathlap::{k_path_decomposition, DistanceMode};
use pathlap::spectral::spectral_report;
use pathlap::{seed, Error};

#[derive(Parser)]
#[command(
    name = "pathlap",
    version,
    about = "k-path Laplacians and multi-hop consensus datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/test JSONL datasets.
    Generate(GenerateArgs),
    /// Run consensus on one or more graphs and report convergence.
    Simulate(SimulateArgs),
    /// Tabulate k-path components and zero eigenvalues per k.
    Spectral(SpectralArgs),
    /// Score reference predictors on dataset files.
    Evaluate(EvaluateArgs),
}

/// Settings shared by every subcommand. Each one overrides the config file.
#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// TOML file with default settings.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Graph model: er, ws or ba.
    #[arg(long)]
    model: Option<String>,
    /// Number of nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Consensus case: base or exponential.
    #[arg(long)]
    case: Option<String>,
    /// Master seed (falls back to PATHLAP_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Probability of adding the reverse arc of an edge.
    #[arg(long)]
    p_b: Option<f64>,
    /// Erdős–Rényi edge probability.
    #[arg(long)]
    er_p: Option<f64>,
    /// Watts–Strogatz ring degree.
    #[arg(long)]
    ws_k: Option<usize>,
    /// Watts–Strogatz rewiring probability.
    #[arg(long)]
    ws_beta: Option<f64>,
    /// Barabási–Albert edges per new node.
    #[arg(long)]
    ba_m: Option<usize>,
    /// Step-size divisor.
    #[arg(long)]
    c: Option<f64>,
    /// Decay rate of the multi-hop weights.
    #[arg(long)]
    alpha: Option<f64>,
    /// Convergence tolerance.
    #[arg(long)]
    tau: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    iter_max: Option<usize>,
    /// Number of recorded states.
    #[arg(long)]
    record_len: Option<usize>,
    /// Redraw budget per split, as a multiple of the sample count.
    #[arg(long)]
    resample_factor: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            model: self.model.clone(),
            n: self.n,
            case: self.case.clone(),
            train: None,
            test: None,
            seed: self.seed,
            p_b: self.p_b,
            er_p: self.er_p,
            ws_k: self.ws_k,
            ws_beta: self.ws_beta,
            ba_m: self.ba_m,
            c: self.c,
            alpha: self.alpha,
            tau: self.tau,
            iter_max: self.iter_max,
            record_len: self.record_len,
            resample_factor: self.resample_factor,
            out: self.out.clone(),
            workers: self.workers,
        }
    }

    fn resolve(&self, extra: ConfigLayer) -> Result<RunConfig, Error> {
        let file = match &self.config {
            Some(path) => ConfigLayer::from_file(path)?,
            None => ConfigLayer::default(),
        };
        let flags = self.layer().overlay(extra);
        RunConfig::resolve(file.overlay(flags))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    /// Every model × size × case.
    Paper,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training samples per dataset.
    #[arg(long)]
    train: Option<usize>,
    /// Test samples per dataset.
    #[arg(long)]
    test: Option<usize>,
    /// Generate a whole grid instead of one configuration.
    #[arg(long, value_enum)]
    grid: Option<Grid>,
    /// Also write flattened CSV files.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of independent runs.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Read the graph from an edge list instead of drawing one.
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Write the first run's graph as an edge list.
    #[arg(long, value_name = "FILE")]
    save_graph: Option<PathBuf>,
    /// Write every state of the first run as CSV.
    #[arg(long, value_name = "FILE")]
    emit_trajectory: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Undirected,
    Directed,
}

#[derive(Args)]
struct SpectralArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Read the graph from an edge list instead of drawing one.
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Distances used for the k-path family.
    #[arg(long, value_enum, default_value = "undirected")]
    mode: ModeArg,
    /// Write P_k.csv and L_k.csv for every k into DIR.
    #[arg(long, value_name = "DIR")]
    export_matrices: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// JSONL dataset files.
    #[arg(long = "dataset", value_name = "PATH", required = true, num_args = 1..)]
    datasets: Vec<PathBuf>,
    /// Predictor to score; both when omitted.
    #[arg(long)]
    strategy: Option<String>,
}

enum Failure {
    Config(Error),
    Run(Error),
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Config(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
            Failure::Run(e) => {
                eprintln!("error: {e}");
                ExitCode::from(3)
            }
        }
    }
}

type CmdResult = Result<(), Failure>;

fn run_err(e: impl Into<Error>) -> Failure {
    Failure::Run(e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Spectral(a) => cmd_spectral(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    let extra = ConfigLayer {
        train: args.train,
        test: args.test,
        ..Default::default()
    };
    let cfg = args.common.resolve(extra).map_err(Failure::Config)?;
    cfg.ensure_output_dir().map_err(Failure::Config)?;
    let configs: Vec<DatasetConfig> = match args.grid {
        None => vec![cfg.dataset_config()],
        Some(Grid::Paper) => full_grid(cfg.train, cfg.test, cfg.seed)
            .into_iter()
            .map(|mut d| {
                d.model = cfg.graph_for(d.model.kind(), d.n);
                d.p_b = cfg.p_b;
                d.consensus = cfg.consensus.with_case(d.case());
                d.resample_factor = cfg.resample_factor;
                d
            })
            .collect(),
    };
    for d in &configs {
        d.validate().map_err(Failure::Config)?;
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "dataset\tmodel\tn\tcase\ttrain\ttest\tresamples\ttrain_file\ttest_file"
    )
    .map_err(run_err)?;
    for d in &configs {
        log::info!("generating {}", d.describe());
        let data = with_workers(cfg.workers, || generate_dataset(d))
            .map_err(Failure::Config)?
            .map_err(Failure::Run)?;
        let [train_path, test_path] = data.write(&cfg.out).map_err(Failure::Run)?;
        if args.csv {
            for split in [dataset::Split::Train, dataset::Split::Test] {
                let path = cfg.out.join(format!("{}_{}.csv", d.stem(), split.label()));
                let file = BufWriter::new(File::create(&path).map_err(run_err)?);
                dataset::write_flat_csv(data.split(split), d.consensus.record_len, file).map_err(Failure::Run)?;
            }
        }
        let m = &data.manifest;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            d.stem(),
            d.model.kind(),
            d.n,
            d.case(),
            m.train_count,
            m.test_count,
            m.train_resamples.total() + m.test_resamples.total(),
            file_name(&train_path),
            file_name(&test_path),
        )
        .map_err(run_err)?;
    }
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn read_graph(path: &Path) -> Result<DirectedGraph, Failure> {
    let file =
        File::open(path).map_err(|e| Failure::Config(Error::Config(format!("--graph {}: {e}", path.display()))))?;
    DirectedGraph::read_edge_list(BufReader::new(file)).map_err(Failure::Run)
}

/// The first connected graph drawn for run `index` on the training stream.
fn drawn_graph(cfg: &RunConfig, index: usize) -> Result<(u64, DirectedGraph), Error> {
    let budget = cfg.resample_factor.max(1) as u64;
    for attempt in 0..=budget {
        let s = seed::sample_seed(cfg.seed, 0, index as u64, attempt);
        if let Some(g) = draw_graph(cfg.graph, cfg.n, cfg.p_b, s)? {
            return Ok((s, g));
        }
    }
    Err(Error::ResampleBudget {
        config: format!("{} n={} run {index}", cfg.kind, cfg.n),
        resamples: budget as usize + 1,
        budget: budget as usize,
    })
}

fn simulate_graph(g: &DirectedGraph, cfg: &RunConfig, trajectory: Option<&Path>) -> Result<ConsensusRun, Error> {
    let ccfg = &cfg.consensus;
    let dec = match ccfg.case {
        consensus::CaseType::Base => None,
        consensus::CaseType::Exponential => Some(k_path_decomposition(g, DistanceMode::Directed)?),
    };
    let op = build_update(g, dec.as_ref(), ccfg)?;
    let init = consensus::initial_state(g);
    let Some(path) = trajectory else {
        return run_consensus_with(&op, &init, ccfg, |_, _| {});
    };
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header = vec!["t".to_owned()];
    header.extend((0..g.node_count()).map(|i| format!("phi_{i}")));
    w.write_record(&header)?;
    let mut io_err = None;
    let run = run_consensus_with(&op, &init, ccfg, |t, state| {
        if io_err.is_some() {
            return;
        }
        let row = std::iter::once(t.to_string()).chain(state.iter().map(|x| x.to_string()));
        if let Err(e) = w.write_record(row) {
            io_err = Some(e);
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    w.flush()?;
    Ok(run)
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let cfg = args.common.resolve(ConfigLayer::default()).map_err(Failure::Config)?;
    if args.repeat == 0 {
        return Err(Failure::Config(Error::Config("--repeat: must be at least 1".into())));
    }
    let given = args.graph.as_deref().map(read_graph).transpose()?;
    let n = given.as_ref().map_or(cfg.n, DirectedGraph::node_count);

    let rows = with_workers(cfg.workers, || {
        (0..args.repeat)
            .into_par_iter()
            .map(|i| -> Result<(u64, ConsensusRun), Error> {
                let (s, g) = match &given {
                    Some(g) => (cfg.seed, g.clone()),
                    None => drawn_graph(&cfg, i)?,
                };
                if i == 0 {
                    if let Some(path) = &args.save_graph {
                        g.write_edge_list(BufWriter::new(File::create(path)?))?;
                    }
                }
                let trajectory = if i == 0 { args.emit_trajectory.as_deref() } else { None };
                Ok((s, simulate_graph(&g, &cfg, trajectory)?))
            })
            .collect::<Result<Vec<_>, Error>>()
    })
    .map_err(Failure::Config)?
    .map_err(Failure::Run)?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "run\tseed\tmodel\tn\tcase\titerations\tconverged\tfinal_value\tepsilon"
    )
    .map_err(run_err)?;
    let model = if given.is_some() {
        "file".to_owned()
    } else {
        cfg.kind.to_string()
    };
    for (i, (s, run)) in rows.iter().enumerate() {
        writeln!(
            out,
            "{i}\t{s}\t{model}\t{n}\t{}\t{}\t{}\t{:.12}\t{:e}",
            cfg.consensus.case, run.iterations, run.converged, run.final_value, run.epsilon_used
        )
        .map_err(run_err)?;
    }
    Ok(())
}

fn cmd_spectral(args: SpectralArgs) -> CmdResult {
    let cfg = args.common.resolve(ConfigLayer::default()).map_err(Failure::Config)?;
    let g = match args.graph.as_deref() {
        Some(p) => read_graph(p)?,
        None => drawn_graph(&cfg, 0).map_err(Failure::Run)?.1,
    };
    let mode = match args.mode {
        ModeArg::Undirected => DistanceMode::UnderlyingUndirected,
        ModeArg::Directed => DistanceMode::Directed,
    };
    let dec = k_path_decomposition(&g, mode).map_err(Failure::Run)?;
    if let Some(dir) = &args.export_matrices {
        dec.export_csv(dir).map_err(Failure::Run)?;
    }
    let report = spectral_report(&dec).map_err(Failure::Run)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "k\tcomponents\tzero_multiplicity\tfiedler").map_err(run_err)?;
    for r in report {
        let fiedler = r.fiedler_value.map_or_else(|| "NA".to_owned(), |v| format!("{v:.12}"));
        writeln!(
            out,
            "{}\t{}\t{}\t{fiedler}",
            r.k, r.component_count, r.zero_multiplicity
        )
        .map_err(run_err)?;
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> CmdResult {
    let strategies: Vec<Baseline> = match &args.strategy {
        Some(s) => vec![s
            .parse()
            .map_err(|e: Error| Failure::Config(Error::Config(format!("--strategy: {e}"))))?],
        None => Baseline::ALL.to_vec(),
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "{}", EvalReport::TSV_HEADER).map_err(run_err)?;
    for path in &args.datasets {
        let split = dataset::read_jsonl(path).map_err(Failure::Run)?;
        let id = path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        for &strategy in &strategies {
            let report = evaluate_baseline(&split.samples, strategy, &id).map_err(Failure::Run)?;
            writeln!(out, "{}", report.tsv_row()).map_err(run_err)?;
        }
    }
    Ok(())
}
