//! Writes a two-block synthetic interaction file.
//!
//! ```text
//! cargo run --example synthetic_data -- [toy|spectral] [OUT]
//! ```
//!
//! `toy` regenerates the bundled `data/toy.inter.tsv`.

use specgcf::dataset::write_pairs;
use specgcf::synthetic::TwoBlockConfig;

fn main() -> specgcf::Result<()> {
    let mut args = std::env::args().skip(1);
    let which = args.next().unwrap_or_else(|| "toy".into());
    let cfg = match which.as_str() {
        "toy" => TwoBlockConfig::toy(),
        "spectral" => TwoBlockConfig::spectral_fixture(),
        other => {
            eprintln!("unknown fixture {other:?}; expected toy or spectral");
            std::process::exit(2);
        }
    };
    let out = args.next().unwrap_or_else(|| format!("{which}.inter.tsv"));
    let ds = cfg.generate()?;
    write_pairs(&ds, &out)?;
    println!(
        "{}: {} users, {} items, {} interactions",
        out,
        ds.num_users(),
        ds.num_items(),
        ds.len()
    );
    Ok(())
}
