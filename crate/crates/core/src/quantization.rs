//! Distribution of an interference-free user's rate, Lloyd-Max codebooks
//! trained against it, and scalar quantization of exchanged rates.
//!
//! A user of `F` whose BS nulls the other `α − 1` members sees a desired gain
//! `X ~ χ²(2(N_T − α + 1))`, so its rate `t = log₂(1 + X/N₀)` has density
//! `f(t) = ln2 · N₀ · 2^t · h(N₀(2^t − 1))` with `h` the chi-square density.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::numerics::gamma::{ln_gamma, regularized_lower_gamma_int};
use crate::numerics::quad::integrate;
use crate::{Error, Result};

const QUAD_ABS_TOL: f64 = 1e-10;
const QUAD_REL_TOL: f64 = 1e-12;
const TAIL_MASS: f64 = 1e-12;
const MOVE_TOL: f64 = 1e-9;
const MAX_ITERATIONS: usize = 10_000;
const LLOYD_WARMUP: usize = 40;
/// Relative tolerance of the fixed-point conditions checked on every codebook.
pub const FIXED_POINT_TOL: f64 = 1e-6;
pub const MAX_BITS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePdfParams {
    pub n_t: usize,
    pub alpha: usize,
    pub n0: f64,
}

impl RatePdfParams {
    pub fn new(n_t: usize, alpha: usize, n0: f64) -> Result<Self> {
        let p = Self { n_t, alpha, n0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0 || self.alpha > self.n_t {
            return Err(Error::InvalidArgument(format!(
                "alpha = {} outside 1..={}",
                self.alpha, self.n_t
            )));
        }
        if !(self.n0 > 0.0) || !self.n0.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance {}", self.n0)));
        }
        Ok(())
    }

    /// Half the chi-square degrees of freedom, `N_T − α + 1`.
    pub fn k(&self) -> u32 {
        (self.n_t - self.alpha + 1) as u32
    }

    fn gain_at(&self, t: f64) -> f64 {
        self.n0 * (t * std::f64::consts::LN_2).exp_m1()
    }

    /// Rate below which all but `TAIL_MASS` of the probability lies.
    pub fn t_max(&self) -> f64 {
        self.quantile(1.0 - TAIL_MASS)
    }

    /// Inverse CDF by bisection on the gamma variable.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        let k = self.k();
        let mut hi = k as f64 + 1.0;
        while regularized_lower_gamma_int(k, hi) < p && hi < 1e6 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if regularized_lower_gamma_int(k, mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        (2.0 * hi / self.n0).ln_1p() / std::f64::consts::LN_2
    }
}

fn density(params: &RatePdfParams, t: f64) -> f64 {
    let k = params.k() as f64;
    let x = params.gain_at(t);
    if x.is_infinite() {
        return 0.0;
    }
    if x <= 0.0 {
        return if k == 1.0 { std::f64::consts::LN_2 * params.n0 * 0.5 } else { 0.0 };
    }
    let ln_h = (k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k);
    (std::f64::consts::LN_2.ln() + params.n0.ln() + t * std::f64::consts::LN_2 + ln_h).exp()
}

/// Density of the rate (bits/s/Hz) of an interference-free user.
pub fn rate_pdf(t: f64, params: &RatePdfParams) -> Result<f64> {
    params.validate()?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("rate {t} must be ≥ 0")));
    }
    Ok(density(params, t))
}

pub fn rate_cdf(t: f64, params: &RatePdfParams) -> Result<f64> {
    params.validate()?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("rate {t} must be ≥ 0")));
    }
    Ok(cdf(params, t))
}

fn cdf(params: &RatePdfParams, t: f64) -> f64 {
    regularized_lower_gamma_int(params.k(), 0.5 * params.gain_at(t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Codebook {
    pub params: RatePdfParams,
    pub n_f: u32,
    pub boundaries: Vec<f64>,
    #[serde(rename = "centroids")]
    pub levels: Vec<f64>,
}

/// Per-cell statistics of a partition of `[0, t_max]`.
struct CellStats {
    mass: Vec<f64>,
    mean: Vec<f64>,
}

fn cell_stats(params: &RatePdfParams, edges: &[f64]) -> CellStats {
    let cells = edges.len() - 1;
    let mut mass = Vec::with_capacity(cells);
    let mut mean = Vec::with_capacity(cells);
    let mut prev_cdf = cdf(params, edges[0]);
    for j in 0..cells {
        let (a, b) = (edges[j], edges[j + 1]);
        let next_cdf = cdf(params, b);
        let p = next_cdf - prev_cdf;
        prev_cdf = next_cdf;
        let moment = integrate(|t| t * density(params, t), a, b, QUAD_ABS_TOL, QUAD_REL_TOL);
        mass.push(p);
        mean.push(if p > 0.0 { (moment / p).clamp(a, b) } else { 0.5 * (a + b) });
    }
    CellStats { mass, mean }
}

fn edges_from_levels(levels: &[f64], t_max: f64) -> Vec<f64> {
    let mut edges = Vec::with_capacity(levels.len() + 1);
    edges.push(0.0);
    edges.extend(levels.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(t_max);
    edges
}

fn strictly_ascending(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

/// Solves a tridiagonal system in place (Thomas algorithm).
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < 1e-300 {
        return None;
    }
    c[0] = if n > 1 { upper[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom.abs() < 1e-300 {
            return None;
        }
        c[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// One Newton step on `c − μ(c) = 0`, with backtracking.
fn newton_step(params: &RatePdfParams, levels: &[f64], t_max: f64) -> Option<(Vec<f64>, f64)> {
    let n = levels.len();
    let edges = edges_from_levels(levels, t_max);
    let stats = cell_stats(params, &edges);
    let g: Vec<f64> = (0..n).map(|j| levels[j] - stats.mean[j]).collect();
    let g_norm = max_abs(&g);
    let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![1.0; n], vec![0.0; n]);
    for j in 0..n {
        let p = stats.mass[j];
        if p <= 0.0 {
            return None;
        }
        let mu = stats.mean[j];
        if j > 0 {
            let b = edges[j];
            let d = 0.5 * density(params, b) * (mu - b) / p;
            lower[j] = -d;
            diag[j] -= d;
        }
        if j + 1 < n {
            let b = edges[j + 1];
            let d = 0.5 * density(params, b) * (b - mu) / p;
            upper[j] = -d;
            diag[j] -= d;
        }
    }
    let neg_g: Vec<f64> = g.iter().map(|x| -x).collect();
    let delta = solve_tridiagonal(&lower, &diag, &upper, &neg_g)?;
    let mut lambda = 1.0;
    for _ in 0..30 {
        let trial: Vec<f64> = levels.iter().zip(&delta).map(|(c, d)| c + lambda * d).collect();
        if strictly_ascending(&trial) && trial[0] > 0.0 && trial[n - 1] < t_max {
            let stats = cell_stats(params, &edges_from_levels(&trial, t_max));
            let g_new = max_abs(&trial.iter().zip(&stats.mean).map(|(c, m)| c - m).collect::<Vec<_>>());
            if g_new < g_norm {
                return Some((trial, lambda * max_abs(&delta)));
            }
        }
        lambda *= 0.5;
    }
    None
}

/// Trains the MSE-optimal `2^{n_f}`-level quantizer for the rate density.
pub fn train_lloyd_max(params: &RatePdfParams, n_f: u32) -> Result<Codebook> {
    params.validate()?;
    if n_f == 0 || n_f > MAX_BITS {
        return Err(Error::InvalidArgument(format!("n_f = {n_f} outside 1..={MAX_BITS}")));
    }
    let n = 1usize << n_f;
    let t_max = params.t_max();
    // equal-probability cells, each represented by its conditional mean
    let mut edges: Vec<f64> = (0..=n).map(|j| params.quantile(j as f64 / n as f64)).collect();
    edges[0] = 0.0;
    edges[n] = t_max;
    let mut levels = cell_stats(params, &edges).mean;
    let mut movement = f64::INFINITY;
    let mut iterations = 0;
    let mut newton_ok = true;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if iterations > LLOYD_WARMUP && newton_ok {
            match newton_step(params, &levels, t_max) {
                Some((next, moved)) => {
                    levels = next;
                    movement = moved;
                }
                None => newton_ok = false,
            }
        } else {
            let next = cell_stats(params, &edges_from_levels(&levels, t_max)).mean;
            movement = levels.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            levels = next;
            newton_ok = true;
        }
        if movement < MOVE_TOL {
            break;
        }
    }
    let book = Codebook {
        params: *params,
        n_f,
        boundaries: levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        levels,
    };
    let residual = book.fixed_point_residual();
    if movement >= MOVE_TOL || residual > FIXED_POINT_TOL || !strictly_ascending(&book.levels) {
        return Err(Error::NonConvergence {
            what: "lloyd-max",
            iterations,
            residual: residual.max(movement),
        });
    }
    Ok(book)
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Checks ordering, interleaving and the midpoint condition.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let n = 1usize.checked_shl(self.n_f).unwrap_or(0);
        if self.n_f == 0 || self.n_f > MAX_BITS || self.levels.len() != n || self.boundaries.len() + 1 != n {
            return Err(Error::InvalidArgument(format!(
                "codebook with n_f = {}, {} centroids, {} boundaries",
                self.n_f,
                self.levels.len(),
                self.boundaries.len()
            )));
        }
        if !strictly_ascending(&self.levels) || !strictly_ascending(&self.boundaries) {
            return Err(Error::InvalidArgument("codebook not strictly ascending".into()));
        }
        for (j, &b) in self.boundaries.iter().enumerate() {
            let (lo, hi) = (self.levels[j], self.levels[j + 1]);
            let mid = 0.5 * (lo + hi);
            if !(lo < b && b < hi) || (b - mid).abs() > 1e-9 * mid.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!("boundary {j} is not the centroid midpoint")));
            }
        }
        Ok(())
    }

    /// Largest `|c_j − E[t | cell j]| / |E[t | cell j]|`.
    pub fn fixed_point_residual(&self) -> f64 {
        let edges = edges_from_levels(&self.levels, self.params.t_max());
        let stats = cell_stats(&self.params, &edges);
        self.levels
            .iter()
            .zip(&stats.mean)
            .map(|(c, m)| (c - m).abs() / m.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Mean-square quantization error under the rate density.
    pub fn mse(&self) -> f64 {
        let edges = edges_from_levels(&self.levels, self.params.t_max());
        self.levels
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                integrate(
                    |t| (t - c) * (t - c) * density(&self.params, t),
                    edges[j],
                    edges[j + 1],
                    QUAD_ABS_TOL,
                    QUAD_REL_TOL,
                )
            })
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let book: Codebook = serde_json::from_str(text)?;
        book.validate()?;
        Ok(book)
    }
}

/// Index of the cell containing `r`; values outside the trained range clamp.
pub fn quantize(r: f64, codebook: &Codebook) -> usize {
    codebook.boundaries.partition_point(|&b| b < r)
}

pub fn dequantize(index: usize, codebook: &Codebook) -> Result<f64> {
    codebook
        .levels
        .get(index)
        .copied()
        .ok_or(Error::IndexOutOfRange { index, limit: codebook.levels.len() })
}

/// `N_f = M · n_f`.
pub fn exchange_bits_per_bs(m_rates: u64, n_f: u32) -> u64 {
    m_rates * n_f as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    n_t: usize,
    alpha: usize,
    n0_bits: u64,
    n_f: u32,
}

/// Trained codebooks shared across drops and threads.
#[derive(Debug, Default)]
pub struct CodebookCache {
    books: Mutex<HashMap<CacheKey, Arc<Codebook>>>,
}

impl CodebookCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_train(&self, params: &RatePdfParams, n_f: u32) -> Result<Arc<Codebook>> {
        let key = CacheKey { n_t: params.n_t, alpha: params.alpha, n0_bits: params.n0.to_bits(), n_f };
        if let Some(b) = self.books.lock().expect("codebook cache poisoned").get(&key) {
            return Ok(Arc::clone(b));
        }
        let book = Arc::new(train_lloyd_max(params, n_f)?);
        let mut map = self.books.lock().expect("codebook cache poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(book)))
    }

    pub fn insert(&self, book: Codebook) -> Result<()> {
        book.validate()?;
        let key = CacheKey {
            n_t: book.params.n_t,
            alpha: book.params.alpha,
            n0_bits: book.params.n0.to_bits(),
            n_f: book.n_f,
        };
        self.books.lock().expect("codebook cache poisoned").insert(key, Arc::new(book));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.books.lock().expect("codebook cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The codebooks one network uses, one per `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSet {
    pub n_f: u32,
    books: BTreeMap<usize, Arc<Codebook>>,
}

impl CodebookSet {
    pub fn empty(n_f: u32) -> Self {
        Self { n_f, books: BTreeMap::new() }
    }

    pub fn train(n_t: usize, n0: f64, alphas: &[usize], n_f: u32, cache: &CodebookCache) -> Result<Self> {
        let mut set = Self::empty(n_f);
        for &alpha in alphas {
            let book = cache.get_or_train(&RatePdfParams::new(n_t, alpha, n0)?, n_f)?;
            set.books.insert(alpha, book);
        }
        Ok(set)
    }

    pub fn insert(&mut self, book: Arc<Codebook>) -> Result<()> {
        if book.n_f != self.n_f {
            return Err(Error::InvalidArgument(format!(
                "codebook with n_f = {} in a set with n_f = {}",
                book.n_f, self.n_f
            )));
        }
        self.books.insert(book.params.alpha, book);
        Ok(())
    }

    pub fn get(&self, alpha: usize) -> Result<&Codebook> {
        self.books.get(&alpha).map(|b| b.as_ref()).ok_or(Error::MissingCodebook(alpha))
    }
}
