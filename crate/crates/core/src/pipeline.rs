//! End-to-end runs built from the library pieces: train + evaluate, checkpoint
//! evaluation, and hyperparameter sweeps.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::checkpoint::{write_history, Checkpoint};
use crate::config::RunConfig;
use crate::dataset::Splits;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, MetricsReport};
use crate::graph::{build_adjacency, normalize_adjacency, NormalizedAdjacency};
use crate::polybasis::FilterParams;
use crate::propagation::{forward, EmbeddingTable};
use crate::training::{fit, FitResult};

pub struct TrainOutcome {
    pub fit: FitResult,
    /// Test metrics of the returned parameters (train and valid masked).
    pub test: MetricsReport,
}

pub fn graph_of(splits: &Splits) -> Result<NormalizedAdjacency> {
    Ok(normalize_adjacency(&build_adjacency(&splits.train)?))
}

/// Test-split metrics of `embeddings` under `filter`.
pub fn test_metrics(
    splits: &Splits,
    adj: &NormalizedAdjacency,
    embeddings: &EmbeddingTable,
    filter: &FilterParams,
    ks: &[usize],
) -> Result<MetricsReport> {
    let out = forward(adj, embeddings.view(), filter)?.output;
    evaluate(
        out.view(),
        splits.train.num_users(),
        &splits.test,
        &[&splits.train, &splits.valid],
        ks,
    )
}

pub fn train_and_evaluate(splits: &Splits, cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let adj = graph_of(splits)?;
    let fit = fit(&splits.train, &splits.valid, &adj, &cfg.filter, &cfg.train)?;
    let test = test_metrics(splits, &adj, &fit.embeddings, &cfg.filter, &cfg.ks)?;
    Ok(TrainOutcome { fit, test })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `config.txt`, `checkpoint.bin`, `history.jsonl` and `metrics.json`.
pub fn write_outcome(outcome: &TrainOutcome, cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_text(&out_dir.join("config.txt"), &cfg.to_text())?;
    let mut filter = cfg.filter.clone();
    filter.order_weights = None;
    if !cfg.filter.has_uniform_weights() {
        log::warn!("checkpoint stores uniform order weights; custom weights are kept in config.txt only");
    }
    Checkpoint {
        embeddings: outcome.fit.embeddings.clone(),
        filter,
    }
    .save(out_dir.join("checkpoint.bin"))?;
    write_history(&outcome.fit.history, out_dir.join("history.jsonl"))?;
    write_text(
        &out_dir.join("metrics.json"),
        &serde_json::to_string_pretty(&outcome.test)?,
    )
}

/// Grid over Jacobi exponents, band-pass offset and order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
    pub order: Vec<usize>,
}

impl Default for SweepGrid {
    /// Exponents in (-1, 2] with step 0.5, orders 1..=4, alpha 0.1.
    fn default() -> Self {
        let exps = vec![-0.5, 0.0, 0.5, 1.0, 1.5, 2.0];
        Self {
            a: exps.clone(),
            b: exps,
            alpha: vec![0.1],
            order: vec![1, 2, 3, 4],
        }
    }
}

impl SweepGrid {
    pub fn points(&self) -> Vec<(f64, f64, f64, usize)> {
        let mut pts = Vec::new();
        for &a in &self.a {
            for &b in &self.b {
                for &alpha in &self.alpha {
                    for &k in &self.order {
                        pts.push((a, b, alpha, k));
                    }
                }
            }
        }
        pts
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub order: usize,
    pub best_epoch: Option<usize>,
    pub valid_recall: Option<f64>,
    pub test: MetricsReport,
}

/// Trains every grid point (in parallel) and returns them in grid order.
pub fn sweep(splits: &Splits, base: &RunConfig, grid: &SweepGrid) -> Result<Vec<SweepPoint>> {
    let adj = graph_of(splits)?;
    grid.points()
        .into_par_iter()
        .map(|(a, b, alpha, order)| {
            let mut filter = base.filter.clone();
            filter.a = a;
            filter.b = b;
            filter.alpha = alpha;
            filter.order = order;
            if filter.order_weights.as_ref().is_some_and(|w| w.len() != order + 1) {
                filter.order_weights = None;
            }
            let fit = fit(&splits.train, &splits.valid, &adj, &filter, &base.train)?;
            let valid_recall = fit
                .best_epoch
                .and_then(|e| fit.history.iter().find(|r| r.epoch == e))
                .and_then(|r| r.valid_recall);
            let test = test_metrics(splits, &adj, &fit.embeddings, &filter, &base.ks)?;
            Ok(SweepPoint {
                a,
                b,
                alpha,
                order,
                best_epoch: fit.best_epoch,
                valid_recall,
                test,
            })
        })
        .collect()
}

/// Point with the highest validation Recall@20 (first one on ties).
pub fn best_point(points: &[SweepPoint]) -> Option<&SweepPoint> {
    points.iter().fold(None, |best: Option<&SweepPoint>, p| match best {
        Some(b) if b.valid_recall.unwrap_or(f64::NEG_INFINITY) >= p.valid_recall.unwrap_or(f64::NEG_INFINITY) => {
            Some(b)
        }
        _ => Some(p),
    })
}
