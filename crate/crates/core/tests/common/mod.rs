//! Helpers shared by the integration and acceptance tests. The scalar oracles
//! here use closed forms and never touch the library's recurrences.

#![allow(dead_code)]

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use specgcf::dataset::{TrainBatch, Triple};
use specgcf::graph::{build_adjacency, normalize_adjacency, NormalizedAdjacency};
use specgcf::polybasis::{BasisKind, FilterParams};
use specgcf::propagation::{forward, EmbeddingTable};
use specgcf::rng::{stream, Stream};
use specgcf::spectral::{eigendecompose, spectral_filter_oracle, SpectralDecomposition};
use specgcf::synthetic::random_bipartite;
use specgcf::training::{bpr_loss, loss_and_grad};
use specgcf::InteractionDataset;

/// Generalized binomial coefficient `C(r, k)` for real `r`.
pub fn gbinom(r: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (r - j as f64) / (k - j) as f64)
}

/// Jacobi polynomial via the explicit sum
/// `sum_s C(n+a, n-s) C(n+b, s) ((x-1)/2)^s ((x+1)/2)^(n-s)`.
pub fn jacobi_explicit(n: usize, a: f64, b: f64, x: f64) -> f64 {
    let (lo, hi) = ((x - 1.0) / 2.0, (x + 1.0) / 2.0);
    (0..=n)
        .map(|s| gbinom(n as f64 + a, n - s) * gbinom(n as f64 + b, s) * lo.powi(s as i32) * hi.powi((n - s) as i32))
        .sum()
}

/// Closed-form Legendre polynomials of degree 0..=6.
pub fn legendre_closed(n: usize, x: f64) -> f64 {
    let x2 = x * x;
    match n {
        0 => 1.0,
        1 => x,
        2 => (3.0 * x2 - 1.0) / 2.0,
        3 => (5.0 * x2 * x - 3.0 * x) / 2.0,
        4 => (35.0 * x2 * x2 - 30.0 * x2 + 3.0) / 8.0,
        5 => (63.0 * x2 * x2 * x - 70.0 * x2 * x + 15.0 * x) / 8.0,
        6 => (231.0 * x2 * x2 * x2 - 315.0 * x2 * x2 + 105.0 * x2 - 5.0) / 16.0,
        _ => panic!("degree {n} not tabulated"),
    }
}

pub fn chebyshev_closed(n: usize, x: f64) -> f64 {
    (n as f64 * x.clamp(-1.0, 1.0).acos()).cos()
}

pub fn bernstein_closed(order: usize, k: usize, x: f64) -> f64 {
    let t = (1.0 + x) / 2.0;
    gbinom(order as f64, k) * (1.0 - t).powi((order - k) as i32) * t.powi(k as i32)
}

/// Independent scalar value of basis polynomial `k`.
pub fn basis_oracle(fp: &FilterParams, k: usize, x: f64) -> f64 {
    match fp.basis {
        BasisKind::Jacobi => jacobi_explicit(k, fp.a, fp.b, x),
        BasisKind::Chebyshev => chebyshev_closed(k, x),
        BasisKind::Legendre => jacobi_explicit(k, 0.0, 0.0, x),
        BasisKind::Monomial => x.powi(k as i32),
        BasisKind::Bernstein => bernstein_closed(fp.order, k, x),
    }
}

/// Band-stop response `sum_k w_k gamma^k P_k(x)` from the oracle polynomials.
pub fn band_stop_oracle(fp: &FilterParams, x: f64) -> f64 {
    let w = fp.weights();
    (0..=fp.order)
        .map(|k| w[k] * fp.discount.powi(k as i32) * basis_oracle(fp, k, x))
        .sum()
}

pub fn random_graph(seed: u64, max_side: usize, p: f64) -> (InteractionDataset, NormalizedAdjacency) {
    let mut rng = stream(seed, Stream::Synthetic);
    let nu = rng.gen_range(2..=max_side);
    let ni = rng.gen_range(2..=max_side);
    loop {
        let ds = random_bipartite(nu, ni, p, &mut rng).unwrap();
        if !ds.is_empty() {
            let adj = normalize_adjacency(&build_adjacency(&ds).unwrap());
            return (ds, adj);
        }
    }
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = stream(seed, Stream::Init);
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
}

pub fn rel_frobenius(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let diff = (&a - &b).mapv(|v| v * v).sum().sqrt();
    let norm = b.mapv(|v| v * v).sum().sqrt();
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

/// `U g(Lambda) U^T x` using the dense eigendecomposition of `adj`.
pub fn eigen_oracle(adj: &NormalizedAdjacency, fp: &FilterParams, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let dec = eigendecompose(adj.to_dense().view()).unwrap();
    eigen_oracle_with(&dec, fp, x)
}

pub fn eigen_oracle_with(dec: &SpectralDecomposition, fp: &FilterParams, x: ArrayView2<'_, f64>) -> Array2<f64> {
    spectral_filter_oracle(dec, |l| band_stop_oracle(fp, l), x).unwrap()
}

/// Composite Simpson rule on `[lo, hi]` with `intervals` (even) pieces.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = (hi - lo) / intervals as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..intervals {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `int_{-1}^{1} (1-x)^a (1+x)^b f(x) dx` with `x = cos(theta)`, which turns
/// the endpoint singularities into `sin^(2a+1) cos^(2b+1)` factors.
pub fn jacobi_weighted_integral(a: f64, b: f64, f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
    let scale = 2f64.powf(a + b + 1.0);
    simpson(
        |theta| {
            let (s, c) = ((theta / 2.0).sin(), (theta / 2.0).cos());
            scale * s.powf(2.0 * a + 1.0) * c.powf(2.0 * b + 1.0) * f(theta.cos())
        },
        0.0,
        std::f64::consts::PI,
        intervals,
    )
}

/// Median wall time of `trials` runs of `f`, in seconds.
pub fn median_time(trials: usize, mut f: impl FnMut()) -> f64 {
    let mut times: Vec<f64> = (0..trials)
        .map(|_| {
            let t = std::time::Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[trials / 2]
}

pub fn random_batch(num_users: usize, num_items: usize, len: usize, seed: u64) -> TrainBatch {
    let mut rng = stream(seed, Stream::Batch);
    TrainBatch {
        triples: (0..len)
            .map(|_| Triple {
                user: rng.gen_range(0..num_users) as u32,
                pos: rng.gen_range(0..num_items) as u32,
                neg: rng.gen_range(0..num_items) as u32,
            })
            .collect(),
        skipped: 0,
    }
}

/// Largest entrywise `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
pub fn gradient_check(fp: &FilterParams, seed: u64, l2: f64) -> f64 {
    let (ds, adj) = random_graph(seed, 25, 0.25);
    let dim = 2 + (seed as usize % 7);
    let table = EmbeddingTable::xavier_uniform(adj.n(), dim, ds.num_users(), &mut stream(seed, Stream::Init));
    let e0 = table.weights().clone();
    let batch = random_batch(ds.num_users(), ds.num_items(), 12, seed);
    let (_, grad) = loss_and_grad(&adj, fp, e0.view(), ds.num_users(), &batch, l2).unwrap();
    let loss_at = |e: &Array2<f64>| {
        let out = forward(&adj, e.view(), fp).unwrap().output;
        bpr_loss(out.view(), ds.num_users(), &batch, e.view(), l2)
    };
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut e = e0.clone();
    for idx in 0..e0.len() {
        let (r, c) = (idx / dim, idx % dim);
        e[[r, c]] = e0[[r, c]] + h;
        let up = loss_at(&e);
        e[[r, c]] = e0[[r, c]] - h;
        let down = loss_at(&e);
        e[[r, c]] = e0[[r, c]];
        let numeric = (up - down) / (2.0 * h);
        let analytic = grad[[r, c]];
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic - numeric).abs() / denom);
    }
    worst
}
