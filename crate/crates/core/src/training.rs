//! BPR training of the base embeddings with Adam and early stopping.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::dataset::{sample_batch, InteractionDataset, TrainBatch};
use crate::error::{Error, Result};
use crate::evaluation::evaluate;
use crate::graph::NormalizedAdjacency;
use crate::polybasis::FilterParams;
use crate::propagation::{backward, forward, EmbeddingTable};
use crate::rng::{stream, Rng, Stream};

/// Cutoff of the validation metric that drives early stopping.
pub const STOPPING_K: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            learning_rate: 1e-3,
            l2_lambda: 1e-6,
            batch_size: 4096,
            max_epochs: 300,
            patience: 5,
            seed: 2023,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate {} must be >= 0",
                self.learning_rate
            )));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        if self.batch_size == 0 || self.dim == 0 {
            return Err(Error::invalid("batch size and embedding dimension must be positive"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::invalid("adam betas must lie in [0, 1)"));
        }
        Ok(())
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.dot(&b)
}

/// Score margin `y_ui - y_uj` of every triple on the filtered embeddings.
fn margins(output: ArrayView2<'_, f64>, num_users: usize, batch: &TrainBatch) -> Vec<f64> {
    batch
        .triples
        .iter()
        .map(|t| {
            let u = output.row(t.user as usize);
            let i = output.row(num_users + t.pos as usize);
            let j = output.row(num_users + t.neg as usize);
            dot(u, i) - dot(u, j)
        })
        .collect()
}

pub fn squared_norm(e0: ArrayView2<'_, f64>) -> f64 {
    e0.iter().map(|v| v * v).sum()
}

/// Batch mean of `-ln sigmoid(y_ui - y_uj)` plus `lambda * ||E0||_F^2`.
pub fn bpr_loss(
    output: ArrayView2<'_, f64>,
    num_users: usize,
    batch: &TrainBatch,
    e0: ArrayView2<'_, f64>,
    l2_lambda: f64,
) -> f64 {
    let reg = l2_lambda * squared_norm(e0);
    if batch.is_empty() {
        return reg;
    }
    let m = margins(output, num_users, batch);
    m.iter().map(|&x| softplus(-x)).sum::<f64>() / m.len() as f64 + reg
}

/// Gradient of the ranking term of [`bpr_loss`] with respect to the filtered
/// embeddings. Only rows touched by the batch are non-zero.
pub fn bpr_backward(output: ArrayView2<'_, f64>, num_users: usize, batch: &TrainBatch) -> Array2<f64> {
    let mut grad = Array2::zeros(output.raw_dim());
    if batch.is_empty() {
        return grad;
    }
    let scale = 1.0 / batch.len() as f64;
    for (t, m) in batch.triples.iter().zip(margins(output, num_users, batch)) {
        let s = sigmoid(-m) * scale;
        let (u, i, j) = (t.user as usize, num_users + t.pos as usize, num_users + t.neg as usize);
        let eu = output.row(u).to_owned();
        let diff = &output.row(i) - &output.row(j);
        grad.row_mut(u).scaled_add(-s, &diff);
        grad.row_mut(i).scaled_add(-s, &eu);
        grad.row_mut(j).scaled_add(s, &eu);
    }
    grad
}

/// Derivative of `lambda * ||E0||^2`.
pub fn l2_grad(e0: ArrayView2<'_, f64>, l2_lambda: f64) -> Array2<f64> {
    e0.mapv(|v| 2.0 * l2_lambda * v)
}

/// Loss and full gradient with respect to `E0` for one batch.
pub fn loss_and_grad(
    adj: &NormalizedAdjacency,
    fp: &FilterParams,
    e0: ArrayView2<'_, f64>,
    num_users: usize,
    batch: &TrainBatch,
    l2_lambda: f64,
) -> Result<(f64, Array2<f64>)> {
    let stack = forward(adj, e0, fp)?;
    let loss = bpr_loss(stack.output.view(), num_users, batch, e0, l2_lambda);
    let grad_out = bpr_backward(stack.output.view(), num_users, batch);
    let mut grad = backward(adj, fp, grad_out.view(), &stack)?;
    grad.scaled_add(2.0 * l2_lambda, &e0);
    Ok((loss, grad))
}

/// Optimizer and bookkeeping state.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub embeddings: EmbeddingTable,
    pub first_moment: Array2<f64>,
    pub second_moment: Array2<f64>,
    pub step: u64,
    pub epoch: usize,
    pub best_recall: Option<f64>,
    pub best_epoch: Option<usize>,
    pub rng: Rng,
}

impl TrainState {
    pub fn new(embeddings: EmbeddingTable, rng: Rng) -> Self {
        let shape = embeddings.weights().raw_dim();
        Self {
            embeddings,
            first_moment: Array2::zeros(shape),
            second_moment: Array2::zeros(shape),
            step: 0,
            epoch: 0,
            best_recall: None,
            best_epoch: None,
            rng,
        }
    }
}

/// One bias-corrected Adam update of the embeddings.
pub fn adam_step(state: &mut TrainState, grad: ArrayView2<'_, f64>, cfg: &TrainConfig) -> Result<()> {
    if grad.dim() != state.first_moment.dim() {
        return Err(Error::shape(
            format!("{:?}", state.first_moment.dim()),
            format!("{:?}", grad.dim()),
        ));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { epoch: state.epoch });
    }
    state.step += 1;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let t = state.step as i32;
    let step_size = cfg.learning_rate / (1.0 - b1.powi(t));
    let v_corr = 1.0 / (1.0 - b2.powi(t));
    let eps = cfg.adam_eps;
    Zip::from(state.embeddings.weights_mut())
        .and(&mut state.first_moment)
        .and(&mut state.second_moment)
        .and(&grad)
        .par_for_each(|w, m, v, &g| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *w -= step_size * *m / ((*v * v_corr).sqrt() + eps);
        });
    Ok(())
}

/// Tracks the best validation score and counts epochs without improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<f64>,
    best_epoch: Option<usize>,
    stale: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            best_epoch: None,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, metric: f64) -> StopDecision {
        if self.best.is_none_or(|b| metric > b) {
            self.best = Some(metric);
            self.best_epoch = Some(epoch);
            self.stale = 0;
            return StopDecision::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best_epoch.zip(self.best)
    }
}

/// Per-epoch training record, written as one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub valid_recall: Option<f64>,
    pub valid_ndcg: Option<f64>,
    pub skipped_triples: usize,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Parameters of the best validation epoch (or the last epoch when
    /// there is no validation data).
    pub embeddings: EmbeddingTable,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

/// Trains `E0` on `train` against the filter `fp` over `adj`.
pub fn fit(
    train: &InteractionDataset,
    valid: &InteractionDataset,
    adj: &NormalizedAdjacency,
    fp: &FilterParams,
    cfg: &TrainConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    fp.validate()?;
    if adj.n() != train.num_nodes() {
        return Err(Error::shape(format!("{} graph nodes", train.num_nodes()), adj.n()));
    }
    let num_users = train.num_users();
    let init = EmbeddingTable::xavier_uniform(
        train.num_nodes(),
        cfg.dim,
        num_users,
        &mut stream(cfg.seed, Stream::Init),
    );
    let mut state = TrainState::new(init, stream(cfg.seed, Stream::Batch));
    let use_valid = !valid.is_empty();
    if !use_valid && cfg.max_epochs > 0 {
        log::warn!("validation split is empty; early stopping disabled");
    }
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = state.embeddings.clone();
    let mut history = Vec::new();
    let batches = train.len().div_ceil(cfg.batch_size);

    for epoch in 1..=cfg.max_epochs {
        state.epoch = epoch;
        let mut loss_sum = 0.0;
        let mut skipped = 0;
        for _ in 0..batches {
            let batch = sample_batch(train, cfg.batch_size, &mut state.rng)?;
            skipped += batch.skipped;
            let (loss, grad) = loss_and_grad(adj, fp, state.embeddings.view(), num_users, &batch, cfg.l2_lambda)?;
            loss_sum += loss;
            adam_step(&mut state, grad.view(), cfg)?;
        }
        let mut record = EpochRecord {
            epoch,
            loss: loss_sum / batches as f64,
            valid_recall: None,
            valid_ndcg: None,
            skipped_triples: skipped,
        };
        let mut stop = false;
        if use_valid {
            let out = forward(adj, state.embeddings.view(), fp)?.output;
            let report = evaluate(out.view(), num_users, valid, &[train], &[STOPPING_K])?;
            record.valid_recall = report.recall(STOPPING_K);
            record.valid_ndcg = report.ndcg(STOPPING_K);
            match stopper.observe(epoch, record.valid_recall.unwrap_or(0.0)) {
                StopDecision::Improved => {
                    best = state.embeddings.clone();
                    state.best_recall = record.valid_recall;
                    state.best_epoch = Some(epoch);
                }
                StopDecision::Continue => {}
                StopDecision::Stop => stop = true,
            }
        } else {
            best = state.embeddings.clone();
        }
        match record.valid_recall {
            Some(r) => log::info!(
                "epoch {epoch}: loss {:.6} valid recall@{STOPPING_K} {r:.4}",
                record.loss
            ),
            None => log::info!("epoch {epoch}: loss {:.6}", record.loss),
        }
        history.push(record);
        if stop {
            log::info!("early stop at epoch {epoch}, best epoch {:?}", state.best_epoch);
            break;
        }
    }
    Ok(FitResult {
        embeddings: best,
        history,
        best_epoch: state.best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Triple;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn batch(triples: &[(u32, u32, u32)]) -> TrainBatch {
        TrainBatch {
            triples: triples
                .iter()
                .map(|&(user, pos, neg)| Triple { user, pos, neg })
                .collect(),
            skipped: 0,
        }
    }

    #[test]
    fn equal_scores_give_ln2() {
        let out = array![[1.0, 0.0], [0.5, 0.5], [0.5, 0.5]];
        let b = batch(&[(0, 0, 1), (0, 1, 0)]);
        let loss = bpr_loss(out.view(), 1, &b, out.view(), 0.0);
        assert_relative_eq!(loss, std::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn unit_margin() {
        let out = array![[1.0], [1.0], [0.0]];
        let loss = bpr_loss(out.view(), 1, &batch(&[(0, 0, 1)]), out.view(), 0.0);
        assert_relative_eq!(loss, (1.0 + (-1.0f64).exp()).ln(), epsilon = 1e-15);
        assert_relative_eq!(loss, 0.313262, epsilon = 1e-6);
    }

    #[test]
    fn saturated_margin_leaves_regularizer() {
        let out = array![[1.0], [1e6], [-1e6]];
        let e0 = array![[1.0], [2.0]];
        let loss = bpr_loss(out.view(), 1, &batch(&[(0, 0, 1)]), e0.view(), 0.5);
        assert_relative_eq!(loss, 0.5 * 5.0, epsilon = 1e-12);
        let g = bpr_backward(out.view(), 1, &batch(&[(0, 0, 1)]));
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(softplus(1000.0), 1000.0);
        assert_relative_eq!(sigmoid(-800.0), 0.0, epsilon = 1e-300);
    }

    #[test]
    fn l2_gradient() {
        let e0 = array![[1.0, -2.0]];
        assert_eq!(l2_grad(e0.view(), 0.25), array![[0.5, -1.0]]);
    }

    fn state_for(w: Array2<f64>) -> TrainState {
        TrainState::new(EmbeddingTable::new(w, 0).unwrap(), stream(0, Stream::Batch))
    }

    #[test]
    fn adam_zero_gradient_is_fixed_point() {
        let w = array![[0.3, -0.1], [2.0, 1.0]];
        let mut st = state_for(w.clone());
        for _ in 0..10 {
            adam_step(&mut st, Array2::zeros((2, 2)).view(), &TrainConfig::default()).unwrap();
        }
        assert_eq!(st.embeddings.weights(), &w);
    }

    #[test]
    fn adam_first_step_is_lr_sign() {
        let w = array![[0.0, 0.0]];
        let mut st = state_for(w);
        let cfg = TrainConfig {
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        adam_step(&mut st, array![[3.0, -0.2]].view(), &cfg).unwrap();
        let got = st.embeddings.weights();
        assert_relative_eq!(got[[0, 0]], -0.01, epsilon = 1e-9);
        assert_relative_eq!(got[[0, 1]], 0.01, epsilon = 1e-7);
    }

    #[test]
    fn adam_zero_lr() {
        let w = array![[0.5]];
        let mut st = state_for(w.clone());
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        adam_step(&mut st, array![[1.0]].view(), &cfg).unwrap();
        assert_eq!(st.embeddings.weights(), &w);
    }

    #[test]
    fn adam_rejects_nan() {
        let mut st = state_for(array![[0.5]]);
        assert!(matches!(
            adam_step(&mut st, array![[f64::NAN]].view(), &TrainConfig::default()),
            Err(Error::NonFiniteGradient { .. })
        ));
    }

    #[test]
    fn early_stopping_keeps_best() {
        let mut es = EarlyStopping::new(2);
        let seq = [0.1, 0.3, 0.2, 0.25, 0.9];
        let decisions: Vec<_> = seq.iter().enumerate().map(|(e, &m)| es.observe(e + 1, m)).collect();
        assert_eq!(
            decisions[..4],
            [
                StopDecision::Improved,
                StopDecision::Improved,
                StopDecision::Continue,
                StopDecision::Stop
            ]
        );
        assert_eq!(es.best(), Some((5, 0.9)));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig {
            patience: 0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
