//! Scores a saved checkpoint against a split directory.
//!
//! ```text
//! cargo run --example evaluate_checkpoint -- CHECKPOINT DATA_DIR
//! ```

use specgcf::pipeline::{graph_of, test_metrics};
use specgcf::{Checkpoint, Splits};

fn main() -> specgcf::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [checkpoint, data] = args.as_slice() else {
        eprintln!("usage: evaluate_checkpoint CHECKPOINT DATA_DIR");
        std::process::exit(2);
    };
    let ck = Checkpoint::load(checkpoint)?;
    let splits = Splits::load_dir(data)?;
    let adj = graph_of(&splits)?;
    println!(
        "{} nodes x {} dims, filter {} K={} alpha={}",
        ck.embeddings.num_nodes(),
        ck.embeddings.dim(),
        ck.filter.label(),
        ck.filter.order,
        ck.filter.alpha
    );
    let report = test_metrics(&splits, &adj, &ck.embeddings, &ck.filter, &[10, 20, 50])?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
