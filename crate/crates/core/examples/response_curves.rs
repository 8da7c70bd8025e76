//! Prints band-stop and band-pass responses of Jacobi filters for several
//! exponents, as CSV on stdout.
//!
//! ```text
//! cargo run --example response_curves > curves.csv
//! ```

use specgcf::polybasis::{filter_response, uniform_grid};
use specgcf::{FilterParams, ResponseMode};

fn main() -> specgcf::Result<()> {
    let grid = uniform_grid(201);
    let filters: Vec<FilterParams> = [(-0.5, -0.5), (0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (1.0, 0.0)]
        .iter()
        .map(|&(a, b)| FilterParams::jacobi(3, a, b).with_alpha(0.1))
        .collect();
    let mut columns = Vec::new();
    let mut header = vec!["x".to_owned()];
    for fp in &filters {
        for (mode, tag) in [(ResponseMode::BandStop, "stop"), (ResponseMode::BandPass, "pass")] {
            columns.push(filter_response(fp, mode, &grid)?);
            header.push(format!("{}_{tag}", fp.label().replace(',', "_")));
        }
    }
    println!("{}", header.join(","));
    for (i, x) in grid.iter().enumerate() {
        let row: Vec<String> = columns.iter().map(|c| format!("{:.6}", c[i].1)).collect();
        println!("{x},{}", row.join(","));
    }
    Ok(())
}
