//! Polynomial filtering of the embedding table: per-order propagation,
//! band-stop aggregation, tanh band-pass branch, and the exact backward pass.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis, Zip};
use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::polybasis::{binomial, FilterParams};

/// Learnable `N x d` base embeddings. Row `u` is user `u`, row
/// `num_users + i` is item `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    weights: Array2<f64>,
    num_users: usize,
}

impl EmbeddingTable {
    pub fn new(weights: Array2<f64>, num_users: usize) -> Result<Self> {
        if num_users > weights.nrows() {
            return Err(Error::shape(format!("at most {} users", weights.nrows()), num_users));
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding table has non-finite entries"));
        }
        Ok(Self { weights, num_users })
    }

    /// Xavier-uniform initialization with `fan_in = fan_out = d`.
    pub fn xavier_uniform(num_nodes: usize, dim: usize, num_users: usize, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / (2.0 * dim as f64)).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        let weights = Array2::from_shape_simple_fn((num_nodes, dim), || dist.sample(rng));
        Self { weights, num_users }
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Array2<f64> {
        &mut self.weights
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.weights.nrows() - self.num_users
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.weights
    }
}

/// Everything a forward pass produces; `band_pass` doubles as the backward cache.
#[derive(Debug, Clone)]
pub struct OrderStack {
    /// `discount^k P_k(A) E0` for `k = 0..=order`.
    pub orders: Vec<Array2<f64>>,
    pub band_stop: Array2<f64>,
    pub band_pass: Array2<f64>,
    /// `[band_stop | band_pass]`, `N x 2d`.
    pub output: Array2<f64>,
}

impl OrderStack {
    /// Frobenius norm of every order, for over-smoothing diagnostics.
    pub fn order_norms(&self) -> Vec<f64> {
        self.orders
            .iter()
            .map(|m| m.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }
}

fn check_rows(adj: &NormalizedAdjacency, x: ArrayView2<'_, f64>) -> Result<()> {
    if x.nrows() != adj.n() {
        return Err(Error::shape(format!("{} rows", adj.n()), format!("{} rows", x.nrows())));
    }
    Ok(())
}

/// `P_0(A) X ..= P_K(A) X`, one sparse product per order for recurrence
/// bases. Each order is scaled by `discount^k` afterwards.
pub fn propagate_orders(
    adj: &NormalizedAdjacency,
    x: ArrayView2<'_, f64>,
    fp: &FilterParams,
) -> Result<Vec<Array2<f64>>> {
    fp.validate()?;
    check_rows(adj, x)?;
    let mut orders = match fp.recurrence() {
        Some(rec) => {
            let mut orders = Vec::with_capacity(fp.order + 1);
            orders.push(x.to_owned());
            let mut ax = Array2::zeros(x.raw_dim());
            if fp.order >= 1 {
                adj.spmm_into(x, &mut ax)?;
                let mut next = ax.clone();
                next *= rec.first_x;
                if rec.first_shift != 0.0 {
                    next.scaled_add(rec.first_shift, &x);
                }
                orders.push(next);
            }
            for k in 2..=fp.order {
                let step = rec.steps[k - 2];
                adj.spmm_into(orders[k - 1].view(), &mut ax)?;
                let mut next = ax.clone();
                next *= step.x_coeff;
                if step.shift != 0.0 {
                    next.scaled_add(step.shift, &orders[k - 1]);
                }
                if step.prev_coeff != 0.0 {
                    next.scaled_add(-step.prev_coeff, &orders[k - 2]);
                }
                orders.push(next);
            }
            orders
        }
        None => bernstein_orders(adj, x, fp.order)?,
    };
    if fp.discount != 1.0 {
        for (m, g) in orders.iter_mut().zip(fp.discounts()) {
            *m *= g;
        }
    }
    Ok(orders)
}

/// `binom(K,k) ((I - A)/2)^{K-k} ((I + A)/2)^k X`; quadratic in K.
fn bernstein_orders(adj: &NormalizedAdjacency, x: ArrayView2<'_, f64>, order: usize) -> Result<Vec<Array2<f64>>> {
    let half_step = |m: &Array2<f64>, sign: f64| -> Result<Array2<f64>> {
        let mut out = adj.spmm(m.view())?;
        out *= sign;
        out += m;
        out *= 0.5;
        Ok(out)
    };
    let mut orders = Vec::with_capacity(order + 1);
    let mut low = x.to_owned();
    for k in 0..=order {
        if k > 0 {
            low = half_step(&low, 1.0)?;
        }
        let mut term = low.clone();
        for _ in k..order {
            term = half_step(&term, -1.0)?;
        }
        term *= binomial(order, k);
        orders.push(term);
    }
    Ok(orders)
}

fn weighted_sum(orders: &[Array2<f64>], weights: &[f64]) -> Array2<f64> {
    let mut out = Array2::zeros(orders[0].raw_dim());
    for (m, &w) in orders.iter().zip(weights) {
        out.scaled_add(w, m);
    }
    out
}

/// Weighted sum of the orders with `fp`'s order weights.
pub fn band_stop(orders: &[Array2<f64>], fp: &FilterParams) -> Result<Array2<f64>> {
    if orders.len() != fp.order + 1 {
        return Err(Error::shape(format!("{} orders", fp.order + 1), orders.len()));
    }
    Ok(weighted_sum(orders, &fp.weights()))
}

/// Uniform average of the orders, which is what the band-pass branch
/// subtracts from `alpha * E0`.
fn band_pass_inner(orders: &[Array2<f64>], band_stop: &Array2<f64>, fp: &FilterParams) -> Array2<f64> {
    if fp.has_uniform_weights() {
        band_stop.clone()
    } else {
        let w = vec![1.0 / orders.len() as f64; orders.len()];
        weighted_sum(orders, &w)
    }
}

/// `tanh(alpha * E0 - inner)` elementwise, where `inner` must be the
/// uniformly weighted band-stop output.
pub fn band_pass(e0: ArrayView2<'_, f64>, inner: ArrayView2<'_, f64>, alpha: f64) -> Result<Array2<f64>> {
    if e0.dim() != inner.dim() {
        return Err(Error::shape(format!("{:?}", e0.dim()), format!("{:?}", inner.dim())));
    }
    let mut out = Array2::zeros(e0.raw_dim());
    Zip::from(&mut out)
        .and(&e0)
        .and(&inner)
        .par_for_each(|o, &e, &g| *o = (alpha * e - g).tanh());
    Ok(out)
}

/// Full filter: orders, both branches, and their concatenation.
pub fn forward(adj: &NormalizedAdjacency, e0: ArrayView2<'_, f64>, fp: &FilterParams) -> Result<OrderStack> {
    let orders = propagate_orders(adj, e0, fp)?;
    let stop = band_stop(&orders, fp)?;
    let inner = band_pass_inner(&orders, &stop, fp);
    let pass = band_pass(e0, inner.view(), fp.alpha)?;
    let output = concatenate![Axis(1), stop, pass];
    let stack = OrderStack {
        orders,
        band_stop: stop,
        band_pass: pass,
        output,
    };
    if log::log_enabled!(log::Level::Debug) {
        log::debug!("order norms: {:?}", stack.order_norms());
    }
    Ok(stack)
}

/// Gradient with respect to `E0` given the gradient of the concatenated output.
///
/// Both filters are polynomials in the symmetric `A`, hence symmetric, so
/// their adjoints are the forward operators themselves.
pub fn backward(
    adj: &NormalizedAdjacency,
    fp: &FilterParams,
    grad_output: ArrayView2<'_, f64>,
    cache: &OrderStack,
) -> Result<Array2<f64>> {
    let (n, d) = cache.band_pass.dim();
    if grad_output.dim() != (n, 2 * d) {
        return Err(Error::shape(
            format!("({n}, {})", 2 * d),
            format!("{:?}", grad_output.dim()),
        ));
    }
    let grad_stop = grad_output.slice(s![.., ..d]);
    let grad_pass = grad_output.slice(s![.., d..]);
    // H = dL/d(pre-activation) of the tanh branch
    let mut h = Array2::zeros((n, d));
    Zip::from(&mut h)
        .and(&grad_pass)
        .and(&cache.band_pass)
        .par_for_each(|h, &g, &t| *h = g * (1.0 - t * t));

    // one propagation over [G_stop | H]
    let stacked = concatenate![Axis(1), grad_stop, h];
    let orders = propagate_orders(adj, stacked.view(), fp)?;
    let stop_part = weighted_sum(&orders, &fp.weights());
    let pass_part = if fp.has_uniform_weights() {
        stop_part.slice(s![.., d..]).to_owned()
    } else {
        let w = vec![1.0 / orders.len() as f64; orders.len()];
        let sliced: Vec<Array2<f64>> = orders.iter().map(|m| m.slice(s![.., d..]).to_owned()).collect();
        weighted_sum(&sliced, &w)
    };
    let mut grad = stop_part.slice(s![.., ..d]).to_owned();
    grad.scaled_add(fp.alpha, &h);
    grad -= &pass_part;
    Ok(grad)
}

/// Applies the band-stop operator `sum_k w_k gamma^k P_k(A)` to `x`.
pub fn apply_band_stop(adj: &NormalizedAdjacency, x: ArrayView2<'_, f64>, fp: &FilterParams) -> Result<Array2<f64>> {
    let orders = propagate_orders(adj, x, fp)?;
    band_stop(&orders, fp)
}
