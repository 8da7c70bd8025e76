//! Bipartite user-item adjacency in CSR layout, symmetric normalization,
//! and the sparse-dense product that every propagation step is built on.

use std::collections::VecDeque;
use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};

/// Compressed sparse row matrix over `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds from per-row sorted adjacency lists and a value function.
    fn from_rows(rows: &[Vec<u32>], mut value: impl FnMut(usize, usize) -> f64) -> Self {
        let n = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for (r, cols) in rows.iter().enumerate() {
            for &c in cols {
                indices.push(c);
                values.push(value(r, c as usize));
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    /// Value at `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[[r, c as usize]] = v;
            }
        }
        out
    }

    /// `self * x` for a dense `n x d` matrix. Rows of the output are written
    /// independently, so the result does not depend on the thread count.
    pub fn spmm(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((self.n, x.ncols()));
        self.spmm_into(x, &mut out)?;
        Ok(out)
    }

    /// Like [`Csr::spmm`] but writes into `out`, which is overwritten.
    pub fn spmm_into(&self, x: ArrayView2<'_, f64>, out: &mut Array2<f64>) -> Result<()> {
        if x.nrows() != self.n {
            return Err(Error::shape(format!("{} rows", self.n), format!("{} rows", x.nrows())));
        }
        let d = x.ncols();
        if out.dim() != (self.n, d) {
            return Err(Error::shape(
                format!("{}x{d} output", self.n),
                format!("{:?}", out.dim()),
            ));
        }
        if d == 0 {
            return Ok(());
        }
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let out = out.as_slice_mut().expect("owned arrays are contiguous");
        out.par_chunks_mut(d).enumerate().for_each(|(r, dst)| {
            dst.fill(0.0);
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let src = &xs[c as usize * d..(c as usize + 1) * d];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        });
        Ok(())
    }

    /// Coordinate-list dump (`row col value` per line).
    pub fn to_coo_text(&self) -> String {
        let mut s = String::new();
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let _ = writeln!(s, "{r} {c} {v:.17e}");
            }
        }
        s
    }
}

/// Unit-valued CSR from per-row sorted column lists.
pub fn unit_csr(rows: &[Vec<u32>]) -> Csr {
    Csr::from_rows(rows, |_, _| 1.0)
}

/// Raw 0/1 adjacency `A = [0 R; R^T 0]` with users in `[0, num_users)` and
/// items in `[num_users, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdjacency {
    csr: Csr,
    num_users: usize,
    degree: Vec<usize>,
}

impl SparseAdjacency {
    fn from_rows(rows: Vec<Vec<u32>>, num_users: usize) -> Self {
        let degree = rows.iter().map(Vec::len).collect();
        let csr = Csr::from_rows(&rows, |_, _| 1.0);
        Self { csr, num_users, degree }
    }

    pub fn csr(&self) -> &Csr {
        &self.csr
    }

    pub fn n(&self) -> usize {
        self.csr.n
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn degree(&self) -> &[usize] {
        &self.degree
    }

    /// Sorted neighbors of node `v`.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        self.csr.row(v).0
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.csr.to_dense()
    }
}

/// Builds the symmetric bipartite adjacency of the interactions in `ds`.
pub fn build_adjacency(ds: &InteractionDataset) -> Result<SparseAdjacency> {
    if ds.is_empty() {
        return Err(Error::invalid("cannot build a graph from an empty split"));
    }
    Ok(adjacency_of(ds))
}

/// Like [`build_adjacency`] but accepts an empty split (all nodes isolated).
pub fn adjacency_of(ds: &InteractionDataset) -> SparseAdjacency {
    let nu = ds.num_users();
    let mut rows = vec![Vec::new(); ds.num_nodes()];
    for &(u, i) in ds.pairs() {
        let item = (nu + i as usize) as u32;
        rows[u as usize].push(item);
        rows[item as usize].push(u);
    }
    for r in &mut rows {
        r.sort_unstable();
    }
    SparseAdjacency::from_rows(rows, nu)
}

/// `D^{-1/2} A D^{-1/2}`. Shares the CSR layout of its source.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    csr: Csr,
    num_users: usize,
}

impl NormalizedAdjacency {
    pub fn csr(&self) -> &Csr {
        &self.csr
    }

    pub fn n(&self) -> usize {
        self.csr.n
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn spmm(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.csr.spmm(x)
    }

    pub fn spmm_into(&self, x: ArrayView2<'_, f64>, out: &mut Array2<f64>) -> Result<()> {
        self.csr.spmm_into(x, out)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.csr.to_dense()
    }
}

/// Symmetric degree normalization. Zero-degree rows have no entries, so no
/// division by zero can occur.
pub fn normalize_adjacency(adj: &SparseAdjacency) -> NormalizedAdjacency {
    let inv_sqrt: Vec<f64> = adj
        .degree
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect();
    let mut csr = adj.csr.clone();
    for r in 0..csr.n {
        for k in csr.indptr[r]..csr.indptr[r + 1] {
            let c = csr.indices[k] as usize;
            // product of the two factors commutes, so (r,c) and (c,r) match bit for bit
            csr.values[k] = inv_sqrt[r] * inv_sqrt[c];
        }
    }
    NormalizedAdjacency {
        csr,
        num_users: adj.num_users,
    }
}

/// Node subset chosen by BFS together with its induced adjacency.
#[derive(Debug, Clone)]
pub struct Subgraph {
    /// Original node index of each subgraph node, ascending, so users still
    /// precede items.
    pub nodes: Vec<usize>,
    pub adjacency: SparseAdjacency,
}

impl Subgraph {
    /// Subgraph index of original node `v`.
    pub fn local_index(&self, v: usize) -> Option<usize> {
        self.nodes.binary_search(&v).ok()
    }
}

/// Breadth-first expansion from `seeds` (in the given order, neighbors in
/// ascending index) until `max_nodes` are selected or the reachable set is
/// exhausted. Returns the induced subgraph.
pub fn bfs_subgraph(adj: &SparseAdjacency, seeds: &[usize], max_nodes: usize) -> Result<Subgraph> {
    if seeds.is_empty() || max_nodes < seeds.len() {
        return Err(Error::invalid(format!(
            "need 0 < seeds ({}) <= max_nodes ({max_nodes})",
            seeds.len()
        )));
    }
    let n = adj.n();
    if let Some(&bad) = seeds.iter().find(|&&s| s >= n) {
        return Err(Error::invalid(format!("seed node {bad} out of range {n}")));
    }
    let mut selected = vec![false; n];
    let mut order = Vec::with_capacity(max_nodes.min(n));
    let mut queue = VecDeque::new();
    for &s in seeds {
        if !selected[s] {
            selected[s] = true;
            order.push(s);
            queue.push_back(s);
        }
    }
    'bfs: while let Some(v) = queue.pop_front() {
        for &w in adj.neighbors(v) {
            if order.len() >= max_nodes {
                break 'bfs;
            }
            let w = w as usize;
            if !selected[w] {
                selected[w] = true;
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    order.sort_unstable();
    let local: std::collections::HashMap<usize, u32> = order.iter().enumerate().map(|(k, &v)| (v, k as u32)).collect();
    let rows = order
        .iter()
        .map(|&v| {
            let mut r: Vec<u32> = adj
                .neighbors(v)
                .iter()
                .filter_map(|w| local.get(&(*w as usize)).copied())
                .collect();
            r.sort_unstable();
            r
        })
        .collect();
    let num_users = order.partition_point(|&v| v < adj.num_users());
    Ok(Subgraph {
        adjacency: SparseAdjacency::from_rows(rows, num_users),
        nodes: order,
    })
}

/// Picks `count` distinct non-isolated nodes uniformly at random.
pub fn random_seed_nodes(adj: &SparseAdjacency, count: usize, rng: &mut impl Rng) -> Vec<usize> {
    let candidates: Vec<usize> = (0..adj.n()).filter(|&v| adj.degree[v] > 0).collect();
    candidates.choose_multiple(rng, count).copied().collect()
}
