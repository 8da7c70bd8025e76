//! Trains JGCF on the bundled toy dataset and compares it with the
//! popularity baseline.
//!
//! ```text
//! RUST_LOG=info cargo run --release --example train_toy -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use specgcf::evaluation::evaluate_popularity;
use specgcf::pipeline::{train_and_evaluate, write_outcome};
use specgcf::{load_interactions, split_dataset, FilterParams, PairFormat, RunConfig};

fn main() -> specgcf::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let out: Option<PathBuf> = std::env::args().nth(1).map(PathBuf::from);

    let ds = load_interactions(
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy.inter.tsv"),
        PairFormat::PairTsv,
    )?;
    let splits = split_dataset(&ds, 0.8, 0.1, 2023)?;

    let mut cfg = RunConfig {
        filter: FilterParams::jacobi(3, 1.0, 1.0).with_alpha(0.1),
        ..RunConfig::default()
    };
    cfg.train.dim = 32;
    cfg.train.max_epochs = 50;
    cfg.train.patience = 50;

    let outcome = train_and_evaluate(&splits, &cfg)?;
    let pop = evaluate_popularity(&splits.train, &splits.test, &[&splits.train, &splits.valid], &cfg.ks)?;
    for &k in &cfg.ks {
        println!(
            "recall@{k:<3} jgcf {:.4}  popularity {:.4}   ndcg@{k:<3} jgcf {:.4}  popularity {:.4}",
            outcome.test.recall(k).unwrap_or(0.0),
            pop.recall(k).unwrap_or(0.0),
            outcome.test.ndcg(k).unwrap_or(0.0),
            pop.ndcg(k).unwrap_or(0.0),
        );
    }
    if let Some(dir) = out {
        write_outcome(&outcome, &cfg, &dir)?;
        println!("wrote checkpoint, history, config and metrics to {}", dir.display());
    }
    Ok(())
}
