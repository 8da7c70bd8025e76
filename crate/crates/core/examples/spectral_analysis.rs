//! Correlates each basis' band-stop response with the test-edge energy per
//! eigenvector on the two-community fixture.
//!
//! ```text
//! cargo run --release --example spectral_analysis
//! ```

use specgcf::spectral::{band_correlation, correlation_table, BfsConfig};
use specgcf::synthetic::TwoBlockConfig;
use specgcf::{split_dataset, BasisKind, FilterParams};

fn main() -> specgcf::Result<()> {
    let ds = TwoBlockConfig::spectral_fixture().generate()?;
    let splits = split_dataset(&ds, 0.8, 0.1, 2023)?;
    let mut bases = vec![
        FilterParams::new(BasisKind::Monomial, 3),
        FilterParams::new(BasisKind::Chebyshev, 3),
        FilterParams::new(BasisKind::Legendre, 3),
        FilterParams::new(BasisKind::Bernstein, 3),
    ];
    for (a, b) in [(0.5, 0.5), (1.0, 1.0), (1.5, 1.5), (1.0, 2.0)] {
        bases.push(FilterParams::jacobi(3, a, b));
    }
    let table = correlation_table(&splits.train, &splits.test, &bases, &BfsConfig::default())?;
    println!("subgraph: {} nodes", table.subgraph_nodes.len());
    for row in &table.rows {
        match row.pearson {
            Some(r) => println!("{:<16} r = {r:+.3}", row.label),
            None => println!("{:<16} r = n/a (constant response)", row.label),
        }
    }
    let (l, t) = (table.eigenvalues(), table.targets());
    println!(
        "band |lambda| > 0.5 : r(lambda, t) = {:+.3}",
        band_correlation(&l, &t, |x| x.abs() > 0.5)?
    );
    println!(
        "band |lambda| < 0.25: r(lambda, t) = {:+.3}",
        band_correlation(&l, &t, |x| x.abs() < 0.25)?
    );
    Ok(())
}
