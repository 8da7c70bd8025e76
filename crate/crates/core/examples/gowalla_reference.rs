//! Full-scale reference run on the public Gowalla dump (the `train.txt` /
//! `test.txt` adjacency lists). Expect several hours on a CPU.
//!
//! ```text
//! cargo run --release --example gowalla_reference -- GOWALLA_DIR [OUT_DIR]
//! ```
//!
//! The dump is merged, re-split 80/10/10 per user, and trained with embedding
//! size 64, lr 1e-3, L2 1e-6, batch 4096 and Jacobi K=3, a=b=1, alpha=0.1.
//! Use the `sweep` subcommand on the written split directory to tune a, b,
//! alpha and K. For reference, the published Recall@20 / NDCG@20 on this data
//! are 0.2232 / 0.1332.

use std::path::PathBuf;

use specgcf::dataset::load_interactions_from;
use specgcf::pipeline::{train_and_evaluate, write_outcome};
use specgcf::{split_dataset, FilterParams, PairFormat, RunConfig};

fn main() -> specgcf::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next().map(PathBuf::from) else {
        eprintln!("usage: gowalla_reference GOWALLA_DIR [OUT_DIR]");
        std::process::exit(2);
    };
    let out = args.next().map_or_else(|| PathBuf::from("gowalla-run"), PathBuf::from);

    let ds = load_interactions_from(
        &[dir.join("train.txt"), dir.join("test.txt")],
        PairFormat::AdjacencyList,
    )?;
    println!(
        "{} users, {} items, {} interactions",
        ds.num_users(),
        ds.num_items(),
        ds.len()
    );
    let splits = split_dataset(&ds, 0.8, 0.1, 2023)?;
    splits.write_dir(out.join("data"))?;

    let cfg = RunConfig {
        filter: FilterParams::jacobi(3, 1.0, 1.0).with_alpha(0.1),
        ..RunConfig::default()
    };
    let outcome = train_and_evaluate(&splits, &cfg)?;
    write_outcome(&outcome, &cfg, &out)?;
    println!(
        "test recall@20 {:.4}, ndcg@20 {:.4}",
        outcome.test.recall(20).unwrap_or(0.0),
        outcome.test.ndcg(20).unwrap_or(0.0)
    );
    Ok(())
}
