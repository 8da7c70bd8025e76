//! Dense spectral analysis of (sub)graphs: eigendecomposition of the
//! normalized adjacency, per-eigenvector test-interaction energy
//! `diag(U^T B U)`, and correlation of transformed spectra against it.
//!
//! Also hosts the dense reference filter `U g(L) U^T X` that the sparse
//! propagation is checked against.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};
use crate::graph::{adjacency_of, bfs_subgraph, normalize_adjacency, random_seed_nodes, Csr, Subgraph};
use crate::polybasis::{band_stop_value, FilterParams};
use crate::rng::{stream, Stream};

/// Largest matrix [`eigendecompose`] accepts by default.
pub const DEFAULT_DENSE_CAP: usize = 4000;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Orthonormal eigenvectors as columns.
    pub vectors: Array2<f64>,
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Original node index of each row.
    pub node_map: Vec<usize>,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max |U^T U - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.vectors.t().dot(&self.vectors);
        gram.indexed_iter()
            .map(|((r, c), v)| (v - if r == c { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// `||M U - U diag(L)||_F / ||M||_F` (absolute when `M = 0`).
    pub fn reconstruction_residual(&self, matrix: ArrayView2<'_, f64>) -> f64 {
        let mut r = matrix.dot(&self.vectors);
        for (j, &lam) in self.values.iter().enumerate() {
            r.column_mut(j).scaled_add(-lam, &self.vectors.column(j));
        }
        let num = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let den = matrix.iter().map(|v| v * v).sum::<f64>().sqrt();
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

/// Full eigensystem of a dense symmetric matrix, sorted ascending.
pub fn eigendecompose(matrix: ArrayView2<'_, f64>) -> Result<SpectralDecomposition> {
    eigendecompose_capped(matrix, DEFAULT_DENSE_CAP)
}

pub fn eigendecompose_capped(matrix: ArrayView2<'_, f64>, cap: usize) -> Result<SpectralDecomposition> {
    let (n, m) = matrix.dim();
    if n != m {
        return Err(Error::shape(format!("square matrix, {n} rows"), format!("{m} columns")));
    }
    if n > cap {
        return Err(Error::TooLarge { size: n, cap });
    }
    let asym = (0..n)
        .flat_map(|r| (r + 1..n).map(move |c| (r, c)))
        .map(|(r, c)| (matrix[[r, c]] - matrix[[c, r]]).abs())
        .fold(0.0, f64::max);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    if n == 0 {
        return Ok(SpectralDecomposition {
            vectors: Array2::zeros((0, 0)),
            values: Vec::new(),
            node_map: Vec::new(),
        });
    }
    let dm = DMatrix::from_fn(n, n, |r, c| matrix[[r, c]]);
    let eig = SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralDecomposition {
        vectors,
        values,
        node_map: (0..n).collect(),
    })
}

/// `t_i = u_i^T B u_i` for a dense symmetric `B` in the decomposition's index space.
pub fn spectral_target(dec: &SpectralDecomposition, b: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let n = dec.len();
    if b.dim() != (n, n) {
        return Err(Error::shape(format!("({n}, {n})"), format!("{:?}", b.dim())));
    }
    let bu = b.dot(&dec.vectors);
    Ok((0..n).map(|i| dec.vectors.column(i).dot(&bu.column(i))).collect())
}

/// Sparse variant of [`spectral_target`], `O(nnz(B) * n)`.
pub fn spectral_target_sparse(dec: &SpectralDecomposition, b: &Csr) -> Result<Vec<f64>> {
    let n = dec.len();
    if b.n() != n {
        return Err(Error::shape(format!("{n} nodes"), b.n()));
    }
    let u = &dec.vectors;
    let mut t = vec![0.0; n];
    for r in 0..n {
        let (cols, vals) = b.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            let (ur, uc) = (u.row(r), u.row(c as usize));
            for (ti, (a, b)) in t.iter_mut().zip(ur.iter().zip(uc.iter())) {
                *ti += v * a * b;
            }
        }
    }
    Ok(t)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::invalid(format!(
            "pearson needs at least 3 points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson `r(lambda, t)` restricted to eigenvalues selected by `keep`.
pub fn band_correlation(values: &[f64], targets: &[f64], keep: impl Fn(f64) -> bool) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = values
        .iter()
        .zip(targets)
        .filter(|(l, _)| keep(**l))
        .map(|(l, t)| (*l, *t))
        .unzip();
    pearson_correlation(&x, &y)
}

/// `U diag(g(L)) U^T X`.
pub fn spectral_filter_oracle(
    dec: &SpectralDecomposition,
    g: impl Fn(f64) -> f64,
    x: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    if x.nrows() != dec.len() {
        return Err(Error::shape(format!("{} rows", dec.len()), x.nrows()));
    }
    let mut coeffs = dec.vectors.t().dot(&x);
    for (mut row, &lam) in coeffs.rows_mut().into_iter().zip(&dec.values) {
        row *= g(lam);
    }
    Ok(dec.vectors.dot(&coeffs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfsConfig {
    pub num_seeds: usize,
    pub max_nodes: usize,
    pub seed: u64,
}

impl Default for BfsConfig {
    fn default() -> Self {
        Self {
            num_seeds: 4,
            max_nodes: 3000,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationRow {
    pub label: String,
    /// `None` when the transformed spectrum has zero variance.
    pub pearson: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CorrelationTable {
    pub rows: Vec<CorrelationRow>,
    /// `(lambda_i, t_i)` pairs, ascending in lambda.
    pub scatter: Vec<(f64, f64)>,
    pub subgraph_nodes: Vec<usize>,
}

impl CorrelationTable {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.scatter.iter().map(|p| p.0).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.scatter.iter().map(|p| p.1).collect()
    }

    pub fn pearson_of(&self, label: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.label == label).and_then(|r| r.pearson)
    }

    pub fn correlations_csv(&self) -> String {
        let mut s = String::from("basis,pearson_r\n");
        for r in &self.rows {
            match r.pearson {
                Some(p) => s.push_str(&format!("{},{p}\n", r.label)),
                None => s.push_str(&format!("{},nan\n", r.label)),
            }
        }
        s
    }

    pub fn scatter_csv(&self) -> String {
        let mut s = String::from("lambda,target\n");
        for (l, t) in &self.scatter {
            s.push_str(&format!("{l},{t}\n"));
        }
        s
    }
}

/// Eigenvalues of the subgraph's normalized adjacency paired with the test
/// spectral target, plus the subgraph itself.
pub fn subgraph_spectrum(
    train: &InteractionDataset,
    test: &InteractionDataset,
    bfs: &BfsConfig,
) -> Result<(Subgraph, SpectralDecomposition, Vec<f64>)> {
    let full = adjacency_of(train);
    let seeds = random_seed_nodes(&full, bfs.num_seeds.max(1), &mut stream(bfs.seed, Stream::Bfs));
    if seeds.is_empty() {
        return Err(Error::invalid("training graph has no edges"));
    }
    let sub = bfs_subgraph(&full, &seeds, bfs.max_nodes.max(seeds.len()))?;
    let norm = normalize_adjacency(&sub.adjacency);
    let mut dec = eigendecompose(norm.to_dense().view())?;
    dec.node_map = sub.nodes.clone();

    // test edges with both endpoints inside the sample
    let test_full = adjacency_of(test);
    let mut rows = vec![Vec::new(); sub.nodes.len()];
    for (local, &v) in sub.nodes.iter().enumerate() {
        for &w in test_full.neighbors(v) {
            if let Some(lw) = sub.local_index(w as usize) {
                rows[local].push(lw as u32);
            }
        }
    }
    let b = crate::graph::unit_csr(&rows);
    let targets = spectral_target_sparse(&dec, &b)?;
    Ok((sub, dec, targets))
}

/// Pearson correlation between each basis' uniform band-stop transform of the
/// spectrum and the test spectral target.
pub fn correlation_table(
    train: &InteractionDataset,
    test: &InteractionDataset,
    bases: &[FilterParams],
    bfs: &BfsConfig,
) -> Result<CorrelationTable> {
    let (sub, dec, targets) = subgraph_spectrum(train, test, bfs)?;
    let mut rows = Vec::with_capacity(bases.len());
    for fp in bases {
        fp.validate()?;
        let f: Vec<f64> = dec.values.iter().map(|&l| band_stop_value(fp, l)).collect();
        let pearson = match pearson_correlation(&f, &targets) {
            Ok(r) => Some(r),
            Err(Error::ZeroVariance) => None,
            Err(e) => return Err(e),
        };
        rows.push(CorrelationRow {
            label: fp.label(),
            pearson,
        });
    }
    Ok(CorrelationTable {
        rows,
        scatter: dec.values.iter().copied().zip(targets).collect(),
        subgraph_nodes: sub.nodes,
    })
}
