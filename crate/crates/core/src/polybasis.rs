//! Polynomial bases for spectral filters on `[-1, 1]`.
//!
//! Jacobi, Chebyshev, Legendre and monomial bases are all driven by one
//! three-term recurrence `P_k = (A_k x + B_k) P_{k-1} - C_k P_{k-2}`; the same
//! coefficients serve scalar evaluation and matrix propagation. Bernstein is
//! evaluated from its closed form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Highest supported polynomial order.
pub const MAX_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Jacobi,
    Chebyshev,
    Legendre,
    Monomial,
    Bernstein,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Jacobi => "jacobi",
            BasisKind::Chebyshev => "chebyshev",
            BasisKind::Legendre => "legendre",
            BasisKind::Monomial => "monomial",
            BasisKind::Bernstein => "bernstein",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jacobi" => Ok(BasisKind::Jacobi),
            "chebyshev" => Ok(BasisKind::Chebyshev),
            "legendre" => Ok(BasisKind::Legendre),
            "monomial" => Ok(BasisKind::Monomial),
            "bernstein" => Ok(BasisKind::Bernstein),
            other => Err(Error::invalid(format!("unknown basis {other:?}"))),
        }
    }
}

/// Filter configuration: basis, order, Jacobi exponents, band-pass offset,
/// per-order weights and per-order discount.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterParams {
    pub basis: BasisKind,
    pub order: usize,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    /// `None` means uniform `1 / (order + 1)`.
    pub order_weights: Option<Vec<f64>>,
    /// Order `k` is scaled by `discount^k`; 1.0 disables it.
    pub discount: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            basis: BasisKind::Jacobi,
            order: 3,
            a: 1.0,
            b: 1.0,
            alpha: 0.1,
            order_weights: None,
            discount: 1.0,
        }
    }
}

impl FilterParams {
    pub fn new(basis: BasisKind, order: usize) -> Self {
        Self {
            basis,
            order,
            ..Self::default()
        }
    }

    pub fn jacobi(order: usize, a: f64, b: f64) -> Self {
        Self {
            order,
            a,
            b,
            ..Self::default()
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.order_weights = Some(weights);
        self
    }

    pub fn with_discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order > MAX_ORDER {
            return Err(Error::invalid(format!("order {} exceeds {MAX_ORDER}", self.order)));
        }
        if self.basis == BasisKind::Jacobi && !(self.a > -1.0 && self.b > -1.0) {
            return Err(Error::invalid(format!(
                "jacobi exponents must exceed -1 (a = {}, b = {})",
                self.a, self.b
            )));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::invalid(format!("discount {} outside (0, 1]", self.discount)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::invalid("alpha must be finite"));
        }
        if let Some(w) = &self.order_weights {
            if w.len() != self.order + 1 {
                return Err(Error::invalid(format!(
                    "{} order weights given for order {}",
                    w.len(),
                    self.order
                )));
            }
        }
        Ok(())
    }

    pub fn has_uniform_weights(&self) -> bool {
        self.order_weights.is_none()
    }

    /// Aggregation weight of each order (without discount).
    pub fn weights(&self) -> Vec<f64> {
        match &self.order_weights {
            Some(w) => w.clone(),
            None => vec![1.0 / (self.order + 1) as f64; self.order + 1],
        }
    }

    /// Discount multiplier `discount^k` for every order.
    pub fn discounts(&self) -> Vec<f64> {
        (0..=self.order).map(|k| self.discount.powi(k as i32)).collect()
    }

    /// Parses `jacobi:A:B`, `jacobi`, `chebyshev`, ... into params of `order`.
    pub fn parse_basis_spec(spec: &str, order: usize) -> Result<Self> {
        let mut parts = spec.split(':');
        let basis: BasisKind = parts.next().unwrap_or_default().parse()?;
        let mut params = Self::new(basis, order);
        let nums: Vec<&str> = parts.collect();
        match (basis, nums.as_slice()) {
            (_, []) => {}
            (BasisKind::Jacobi, [a, b]) => {
                params.a = parse_f64(a)?;
                params.b = parse_f64(b)?;
            }
            _ => return Err(Error::invalid(format!("bad basis spec {spec:?}"))),
        }
        params.validate()?;
        Ok(params)
    }

    /// Short label such as `jacobi(1,1)` or `legendre`.
    pub fn label(&self) -> String {
        match self.basis {
            BasisKind::Jacobi => format!("jacobi({},{})", self.a, self.b),
            other => other.to_string(),
        }
    }

    /// Three-term recurrence for this basis, or `None` for Bernstein.
    pub fn recurrence(&self) -> Option<Recurrence> {
        Recurrence::for_params(self)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("not a number: {s:?}")))
}

/// `theta_k`, `theta'_k`, `theta''_k` of the Jacobi recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiCoeffs {
    pub theta: f64,
    pub theta_prime: f64,
    pub theta_double_prime: f64,
}

pub fn jacobi_coeffs(k: usize, a: f64, b: f64) -> Result<JacobiCoeffs> {
    if k < 2 {
        return Err(Error::invalid(format!("jacobi recurrence starts at k = 2, got {k}")));
    }
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::invalid(format!(
            "jacobi exponents must exceed -1 (a = {a}, b = {b})"
        )));
    }
    let k = k as f64;
    let s = 2.0 * k + a + b;
    let den_k = k + a + b;
    let den_s = s - 2.0;
    if den_k == 0.0 || den_s == 0.0 {
        return Err(Error::invalid(format!("degenerate jacobi recurrence at k = {k}")));
    }
    let coeffs = JacobiCoeffs {
        theta: s * (s - 1.0) / (2.0 * k * den_k),
        theta_prime: (s - 1.0) * (a * a - b * b) / (2.0 * k * den_k * den_s),
        theta_double_prime: (k + a - 1.0) * (k + b - 1.0) * s / (k * den_k * den_s),
    };
    if [coeffs.theta, coeffs.theta_prime, coeffs.theta_double_prime]
        .iter()
        .all(|c| c.is_finite())
    {
        Ok(coeffs)
    } else {
        Err(Error::invalid(format!("non-finite jacobi coefficients at k = {k}")))
    }
}

/// Coefficients of `P_k = (x_coeff * x + shift) P_{k-1} - prev_coeff * P_{k-2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub x_coeff: f64,
    pub shift: f64,
    pub prev_coeff: f64,
}

/// `P_0 = 1`, `P_1 = first_shift + first_x * x`, then `steps[k - 2]` for k >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Recurrence {
    pub first_shift: f64,
    pub first_x: f64,
    pub steps: Vec<Step>,
}

impl Recurrence {
    fn for_params(p: &FilterParams) -> Option<Self> {
        let (first_shift, first_x) = match p.basis {
            BasisKind::Jacobi => ((p.a - p.b) / 2.0, (p.a + p.b + 2.0) / 2.0),
            BasisKind::Chebyshev | BasisKind::Legendre | BasisKind::Monomial => (0.0, 1.0),
            BasisKind::Bernstein => return None,
        };
        let steps = (2..=p.order)
            .map(|k| {
                let kf = k as f64;
                match p.basis {
                    BasisKind::Jacobi => {
                        let c = jacobi_coeffs(k, p.a, p.b).expect("validated exponents");
                        Step {
                            x_coeff: c.theta,
                            shift: c.theta_prime,
                            prev_coeff: c.theta_double_prime,
                        }
                    }
                    BasisKind::Chebyshev => Step {
                        x_coeff: 2.0,
                        shift: 0.0,
                        prev_coeff: 1.0,
                    },
                    BasisKind::Legendre => Step {
                        x_coeff: (2.0 * kf - 1.0) / kf,
                        shift: 0.0,
                        prev_coeff: (kf - 1.0) / kf,
                    },
                    BasisKind::Monomial => Step {
                        x_coeff: 1.0,
                        shift: 0.0,
                        prev_coeff: 0.0,
                    },
                    BasisKind::Bernstein => unreachable!(),
                }
            })
            .collect();
        Some(Self {
            first_shift,
            first_x,
            steps,
        })
    }

    /// `P_0(x) ..= P_order(x)`.
    pub fn eval_all(&self, order: usize, x: f64) -> Vec<f64> {
        let mut vals = Vec::with_capacity(order + 1);
        vals.push(1.0);
        if order >= 1 {
            vals.push(self.first_shift + self.first_x * x);
        }
        for k in 2..=order {
            let s = self.steps[k - 2];
            let v = (s.x_coeff * x + s.shift) * vals[k - 1] - s.prev_coeff * vals[k - 2];
            vals.push(v);
        }
        vals
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Degree-`order` Bernstein basis on `[-1, 1]` via `t = (1 + x) / 2`.
pub fn bernstein(order: usize, k: usize, x: f64) -> f64 {
    let t = (1.0 + x) / 2.0;
    binomial(order, k) * (1.0 - t).powi((order - k) as i32) * t.powi(k as i32)
}

/// Values of every basis polynomial `P_0 ..= P_order` at `x`.
pub fn eval_basis_all(params: &FilterParams, x: f64) -> Vec<f64> {
    match params.recurrence() {
        Some(rec) => rec.eval_all(params.order, x),
        None => (0..=params.order).map(|k| bernstein(params.order, k, x)).collect(),
    }
}

/// `P_k(x)` for the basis of `params`.
pub fn eval_basis_scalar(params: &FilterParams, k: usize, x: f64) -> Result<f64> {
    if k > params.order {
        return Err(Error::invalid(format!("k = {k} exceeds order {}", params.order)));
    }
    params.validate()?;
    Ok(match params.recurrence() {
        Some(rec) => rec.eval_all(k, x)[k],
        None => bernstein(params.order, k, x),
    })
}

/// Band-stop transfer function `sum_k w_k gamma^k P_k(x)`.
pub fn band_stop_value(params: &FilterParams, x: f64) -> f64 {
    let vals = eval_basis_all(params, x);
    let w = params.weights();
    let g = params.discounts();
    vals.iter().zip(&w).zip(&g).map(|((v, w), g)| v * w * g).sum()
}

/// The filter the band-pass branch subtracts from `alpha`: the same basis
/// averaged with uniform weights.
pub fn band_pass_inner_value(params: &FilterParams, x: f64) -> f64 {
    let vals = eval_basis_all(params, x);
    let g = params.discounts();
    let w = 1.0 / (params.order + 1) as f64;
    vals.iter().zip(&g).map(|(v, g)| v * g * w).sum()
}

/// Band-pass transfer function `tanh(alpha - g(x))`.
pub fn band_pass_value(params: &FilterParams, x: f64) -> f64 {
    (params.alpha - band_pass_inner_value(params, x)).tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseMode {
    BandStop,
    BandPass,
}

impl FromStr for ResponseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "band_stop" => Ok(ResponseMode::BandStop),
            "band_pass" => Ok(ResponseMode::BandPass),
            other => Err(Error::invalid(format!("unknown response mode {other:?}"))),
        }
    }
}

/// `points` evenly spaced values covering `[-1, 1]` inclusive.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Response of the filter at each grid point. Monomial band-stop responses are
/// divided by their value at `x = 1` (the sum of the weights).
pub fn filter_response(params: &FilterParams, mode: ResponseMode, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    params.validate()?;
    if let Some(x) = grid.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
        return Err(Error::invalid(format!("grid point {x} outside [-1, 1]")));
    }
    let norm = if mode == ResponseMode::BandStop && params.basis == BasisKind::Monomial {
        band_stop_value(params, 1.0)
    } else {
        1.0
    };
    Ok(grid
        .iter()
        .map(|&x| {
            let y = match mode {
                ResponseMode::BandStop => band_stop_value(params, x) / norm,
                ResponseMode::BandPass => band_pass_value(params, x),
            };
            (x, y)
        })
        .collect())
}
