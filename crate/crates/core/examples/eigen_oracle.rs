//! Checks the sparse three-term recursion against an explicit
//! eigendecomposition `U g(Lambda) U^T X` on a random bipartite graph.
//!
//! ```text
//! cargo run --example eigen_oracle
//! ```

use ndarray::Array2;
use rand::Rng;
use specgcf::graph::{build_adjacency, normalize_adjacency};
use specgcf::polybasis::band_stop_value;
use specgcf::propagation::apply_band_stop;
use specgcf::rng::{stream, Stream};
use specgcf::spectral::{eigendecompose, spectral_filter_oracle};
use specgcf::synthetic::random_bipartite;
use specgcf::{BasisKind, FilterParams};

fn main() -> specgcf::Result<()> {
    let mut rng = stream(7, Stream::Synthetic);
    let ds = random_bipartite(60, 80, 0.08, &mut rng)?;
    let adj = normalize_adjacency(&build_adjacency(&ds)?);
    let x = Array2::from_shape_fn((adj.n(), 4), |_| rng.gen_range(-1.0..1.0));
    let dec = eigendecompose(adj.to_dense().view())?;
    println!(
        "N = {}, eigenvalues in [{:.3}, {:.3}], orthonormality error {:.1e}",
        adj.n(),
        dec.values[0],
        dec.values[dec.len() - 1],
        dec.orthonormality_error()
    );
    let mut filters = vec![
        FilterParams::new(BasisKind::Chebyshev, 4),
        FilterParams::new(BasisKind::Legendre, 4),
        FilterParams::new(BasisKind::Monomial, 4),
        FilterParams::new(BasisKind::Bernstein, 4),
    ];
    filters.extend([(-0.5, 2.0), (1.0, 1.0), (2.0, 0.0)].map(|(a, b)| FilterParams::jacobi(4, a, b)));
    for fp in &filters {
        let sparse = apply_band_stop(&adj, x.view(), fp)?;
        let dense = spectral_filter_oracle(&dec, |l| band_stop_value(fp, l), x.view())?;
        let err = (&sparse - &dense).mapv(|v| v * v).sum().sqrt() / dense.mapv(|v| v * v).sum().sqrt();
        println!("{:<14} relative error {err:.2e}", fp.label());
    }
    Ok(())
}
