//! Splits an interaction file 80/10/10 per user and writes the three TSVs.
//!
//! ```text
//! cargo run --example split_data -- [INPUT] [OUT_DIR] [SEED]
//! ```

use specgcf::{load_interactions, split_dataset, PairFormat};

fn main() -> specgcf::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy.inter.tsv").into());
    let out = args.next().unwrap_or_else(|| "toy-split".into());
    let seed = args
        .next()
        .map_or(Ok(2023), |s| s.parse())
        .expect("seed must be an integer");

    let ds = load_interactions(&input, PairFormat::PairTsv)?;
    let splits = split_dataset(&ds, 0.8, 0.1, seed)?;
    splits.write_dir(&out)?;
    println!(
        "{} users x {} items, {} interactions",
        ds.num_users(),
        ds.num_items(),
        ds.len()
    );
    println!(
        "train {} / valid {} / test {} -> {out}/",
        splits.train.len(),
        splits.valid.len(),
        splits.test.len()
    );
    Ok(())
}
