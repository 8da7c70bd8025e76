//! Command-line front end: `split`, `train`, `evaluate`, `analyze`,
//! `response` and `sweep`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::dataset::{load_interactions_from, split_dataset, PairFormat, Splits};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, DEFAULT_KS};
use crate::pipeline::{best_point, graph_of, sweep, train_and_evaluate, write_outcome, SweepGrid};
use crate::polybasis::{filter_response, uniform_grid, BasisKind, FilterParams, ResponseMode};
use crate::propagation::forward;
use crate::spectral::{correlation_table, BfsConfig};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SPECGCF_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "specgcf",
    version,
    about = "Polynomial spectral graph filters for collaborative filtering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split an interaction file into train/valid/test TSVs.
    Split {
        /// Interaction file; repeat to merge several files into one id space.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        /// `pair` (user item per line) or `adjacency` (user item item ...).
        #[arg(long, default_value = "pair")]
        format: PairFormat,
        #[arg(long, default_value_t = 0.8)]
        train_frac: f64,
        #[arg(long, default_value_t = 0.1)]
        valid_frac: f64,
        #[arg(long, default_value_t = 2023)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train embeddings and write checkpoint, history, config and metrics.
    Train(RunArgs),
    /// Evaluate a checkpoint on the test split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS.to_vec())]
        ks: Vec<usize>,
        /// JSON output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correlate filter responses with the test spectral target on a sampled subgraph.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "jacobi:1.0:1.0,monomial,chebyshev,legendre,bernstein"
        )]
        bases: Vec<String>,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 3000)]
        max_nodes: usize,
        #[arg(long, default_value_t = 4)]
        seeds: usize,
        #[arg(long, default_value_t = 17)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate a filter's response on [-1, 1].
    Response {
        #[arg(long, default_value = "jacobi")]
        basis: BasisKind,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value = "band_stop")]
        mode: ResponseMode,
        #[arg(long, default_value_t = 401)]
        grid_points: usize,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search over (a, b, alpha, K); reports the best validation Recall@20.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        a_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        b_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alpha_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// `key = value` config file; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding train.tsv, valid.tsv and test.tsv.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<(RunConfig, PathBuf, PathBuf)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim()).map_err(Error::InvalidArgument)?;
        }
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        cfg.validate()?;
        let data = cfg
            .data
            .clone()
            .ok_or_else(|| Error::invalid("no data directory (--data)"))?;
        let out = cfg
            .out
            .clone()
            .ok_or_else(|| Error::invalid("no output directory (--out)"))?;
        Ok((cfg, data, out))
    }
}

fn init_threads() {
    let Ok(v) = std::env::var(THREADS_ENV) else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::debug!("thread pool already initialised: {e}");
            }
        }
        _ => log::warn!("ignoring {THREADS_ENV}={v:?}; expected a positive integer"),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Split {
            input,
            format,
            train_frac,
            valid_frac,
            seed,
            out,
        } => {
            let ds = load_interactions_from(&input, format)?;
            let splits = split_dataset(&ds, train_frac, valid_frac, seed)?;
            splits.write_dir(&out)?;
            println!(
                "{} users, {} items, {} interactions -> train {} / valid {} / test {}",
                ds.num_users(),
                ds.num_items(),
                ds.len(),
                splits.train.len(),
                splits.valid.len(),
                splits.test.len()
            );
        }
        Command::Train(args) => {
            let (cfg, data, out) = args.resolve()?;
            let splits = Splits::load_dir(&data)?;
            let outcome = train_and_evaluate(&splits, &cfg)?;
            write_outcome(&outcome, &cfg, &out)?;
            println!("{}", serde_json::to_string(&outcome.test)?);
        }
        Command::Evaluate {
            checkpoint,
            data,
            ks,
            out,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let splits = Splits::load_dir(&data)?;
            let adj = graph_of(&splits)?;
            if ck.embeddings.num_nodes() != adj.n() || ck.embeddings.num_users() != splits.train.num_users() {
                return Err(Error::shape(
                    format!("{} nodes / {} users", adj.n(), splits.train.num_users()),
                    format!(
                        "{} nodes / {} users",
                        ck.embeddings.num_nodes(),
                        ck.embeddings.num_users()
                    ),
                ));
            }
            let output = forward(&adj, ck.embeddings.view(), &ck.filter)?.output;
            let report = evaluate(
                output.view(),
                splits.train.num_users(),
                &splits.test,
                &[&splits.train, &splits.valid],
                &ks,
            )?;
            emit(out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
        }
        Command::Analyze {
            data,
            bases,
            order,
            max_nodes,
            seeds,
            seed,
            out,
        } => {
            let splits = Splits::load_dir(&data)?;
            let params = bases
                .iter()
                .map(|s| FilterParams::parse_basis_spec(s, order))
                .collect::<Result<Vec<_>>>()?;
            let bfs = BfsConfig {
                num_seeds: seeds,
                max_nodes,
                seed,
            };
            let table = correlation_table(&splits.train, &splits.test, &params, &bfs)?;
            write_file(&out.join("scatter.csv"), &table.scatter_csv())?;
            write_file(&out.join("correlations.csv"), &table.correlations_csv())?;
            print!("{}", table.correlations_csv());
        }
        Command::Response {
            basis,
            a,
            b,
            order,
            alpha,
            mode,
            grid_points,
            out,
        } => {
            let mut fp = FilterParams::new(basis, order).with_alpha(alpha);
            fp.a = a;
            fp.b = b;
            let curve = filter_response(&fp, mode, &uniform_grid(grid_points))?;
            let mut csv = String::from("x,response\n");
            for (x, y) in curve {
                csv.push_str(&format!("{x},{y}\n"));
            }
            emit(out.as_deref(), &csv)?;
        }
        Command::Sweep {
            run,
            a_grid,
            b_grid,
            alpha_grid,
            orders,
        } => {
            let (cfg, data, out) = run.resolve()?;
            let defaults = SweepGrid::default();
            let grid = SweepGrid {
                a: a_grid.unwrap_or(defaults.a),
                b: b_grid.unwrap_or(defaults.b),
                alpha: alpha_grid.unwrap_or(defaults.alpha),
                order: orders.unwrap_or(defaults.order),
            };
            let splits = Splits::load_dir(&data)?;
            let points = sweep(&splits, &cfg, &grid)?;
            let best = best_point(&points).ok_or_else(|| Error::invalid("empty sweep grid"))?;
            let mut best_cfg = cfg.clone();
            best_cfg.filter.a = best.a;
            best_cfg.filter.b = best.b;
            best_cfg.filter.alpha = best.alpha;
            best_cfg.filter.order = best.order;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_file(&out.join("config.txt"), &cfg.to_text())?;
            write_file(&out.join("best_config.txt"), &best_cfg.to_text())?;
            let mut lines = String::new();
            for p in &points {
                lines.push_str(&serde_json::to_string(p)?);
                lines.push('\n');
            }
            write_file(&out.join("sweep.jsonl"), &lines)?;
            write_file(&out.join("best.json"), &serde_json::to_string_pretty(best)?)?;
            println!(
                "{} runs; best a={} b={} alpha={} K={} valid recall@20={}",
                points.len(),
                best.a,
                best.b,
                best.alpha,
                best.order,
                best.valid_recall.map_or("n/a".to_owned(), |r| format!("{r:.4}"))
            );
        }
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs the subcommand. Returns the
/// process exit status: 0 on success, 2 on bad usage, 1 on runtime errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_threads();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
