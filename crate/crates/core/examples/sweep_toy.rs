//! Grid search over Jacobi exponents and order on the toy dataset.
//!
//! ```text
//! cargo run --release --example sweep_toy
//! ```

use specgcf::pipeline::{best_point, sweep, SweepGrid};
use specgcf::{load_interactions, split_dataset, PairFormat, RunConfig};

fn main() -> specgcf::Result<()> {
    let ds = load_interactions(
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy.inter.tsv"),
        PairFormat::PairTsv,
    )?;
    let splits = split_dataset(&ds, 0.8, 0.1, 2023)?;
    let mut cfg = RunConfig::default();
    cfg.train.dim = 32;
    cfg.train.max_epochs = 30;
    cfg.train.patience = 10;
    let grid = SweepGrid {
        a: vec![0.0, 1.0, 2.0],
        b: vec![0.0, 1.0, 2.0],
        alpha: vec![0.1],
        order: vec![2, 3],
    };
    let points = sweep(&splits, &cfg, &grid)?;
    println!(
        "{:>5} {:>5} {:>3} {:>12} {:>12}",
        "a", "b", "K", "valid r@20", "test r@20"
    );
    for p in &points {
        println!(
            "{:>5} {:>5} {:>3} {:>12.4} {:>12.4}",
            p.a,
            p.b,
            p.order,
            p.valid_recall.unwrap_or(f64::NAN),
            p.test.recall(20).unwrap_or(f64::NAN)
        );
    }
    if let Some(best) = best_point(&points) {
        println!(
            "best: a={} b={} K={} (valid recall@20 {:.4})",
            best.a,
            best.b,
            best.order,
            best.valid_recall.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
