use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamforming::{BeamformingSolution, Regime};
use crate::channel::ChannelRealization;
use crate::numerics::{Cholesky, ComplexMat, ComplexVec};
use crate::{Error, Result};

use super::sum_rate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WmmseConfig {
    /// Outer iterations `κ`.
    pub max_iterations: usize,
    /// Transmit power per beam.
    pub power_budget: f64,
    /// Stop once the sum rate improves by less than this.
    pub tolerance: f64,
    /// Relative width at which the multiplier bisection stops.
    pub bisection_tolerance: f64,
}

impl Default for WmmseConfig {
    fn default() -> Self {
        Self { max_iterations: 50, power_budget: 1.0, tolerance: 1e-8, bisection_tolerance: 1e-12 }
    }
}

impl WmmseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("wmmse needs at least one iteration".into()));
        }
        if !(self.power_budget > 0.0 && self.power_budget <= 1.0) {
            return Err(Error::InvalidConfig(format!("power budget {} outside (0, 1]", self.power_budget)));
        }
        if !(self.tolerance > 0.0) || !(self.bisection_tolerance > 0.0) {
            return Err(Error::InvalidConfig("wmmse tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WmmseRun {
    pub solution: BeamformingSolution,
    /// Sum rate after initialization and after every outer iteration.
    pub sum_rates: Vec<f64>,
}

/// `w = ω u (A + μI)⁻¹ g` with the smallest `μ ≥ 0` meeting the power budget.
fn transmit_update(a: &ComplexMat, rhs: &ComplexVec, budget: f64, tol: f64) -> Result<ComplexVec> {
    let n = a.rows();
    let solve = |mu: f64| -> Option<ComplexVec> {
        let mut m = a.clone();
        for i in 0..n {
            m[(i, i)] += Complex64::new(mu, 0.0);
        }
        Cholesky::factor(&m).ok()?.solve(rhs).ok().filter(|w| w.is_finite())
    };
    if rhs.is_zero() {
        return Ok(ComplexVec::zeros(n));
    }
    if let Some(w) = solve(0.0) {
        if w.norm_sqr() <= budget {
            return Ok(w);
        }
    }
    let scale = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max).max(rhs.norm());
    let mut lo = 0.0;
    let mut hi = scale.max(f64::MIN_POSITIVE);
    let mut best = None;
    for _ in 0..200 {
        match solve(hi) {
            Some(w) if w.norm_sqr() <= budget => {
                best = Some(w);
                break;
            }
            _ => {
                lo = hi;
                hi *= 4.0;
            }
        }
    }
    let mut best = best.ok_or(Error::NonConvergence { what: "wmmse multiplier bracket", iterations: 200, residual: hi })?;
    for _ in 0..400 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match solve(mid) {
            Some(w) if w.norm_sqr() <= budget => {
                hi = mid;
                best = w;
            }
            _ => lo = mid,
        }
    }
    if hi - lo > tol * hi.max(1.0) {
        return Err(Error::NonConvergence { what: "wmmse multiplier bisection", iterations: 400, residual: hi - lo });
    }
    Ok(best)
}

/// Weighted-MMSE alternating optimization, started from matched filters.
pub fn wmmse_run(realization: &ChannelRealization, cfg: &WmmseConfig) -> Result<WmmseRun> {
    cfg.validate()?;
    let net = realization.config();
    let users: Vec<_> = net.users().collect();
    let n = users.len();
    let scale = cfg.power_budget.sqrt();
    let mut beams: Vec<ComplexVec> = users
        .iter()
        .map(|&u| {
            let h = realization.channel(u.cell, u);
            h.normalized().unwrap_or_else(|| ComplexVec::basis(net.n_t, 0)).scale_real(scale)
        })
        .collect();
    let mut sum_rates = vec![sum_rate(realization, &beams)];
    for _ in 0..cfg.max_iterations {
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        let mut omega = vec![0.0; n];
        for (k, &user) in users.iter().enumerate() {
            let mut total = net.n0;
            for (v, src) in users.iter().enumerate() {
                total += realization.channel(src.cell, user).gain(&beams[v]);
            }
            let s = realization.channel(user.cell, user).dot(&beams[k]);
            u[k] = s / total;
            let mse = 1.0 - s.norm_sqr() / total;
            omega[k] = 1.0 / mse.max(f64::MIN_POSITIVE);
        }
        let mut next = Vec::with_capacity(n);
        for (v, src) in users.iter().enumerate() {
            let mut weighted = ComplexMat::zeros(net.n_t, net.n_t);
            for (k, &user) in users.iter().enumerate() {
                let g = realization.channel(src.cell, user);
                let c = omega[k] * u[k].norm_sqr();
                for r in 0..net.n_t {
                    for col in 0..net.n_t {
                        weighted[(r, col)] += g[r] * g[col].conj() * c;
                    }
                }
            }
            let rhs = realization.channel(src.cell, *src).scale(u[v] * omega[v]);
            next.push(transmit_update(&weighted, &rhs, cfg.power_budget, cfg.bisection_tolerance)?);
        }
        beams = next;
        let rate = sum_rate(realization, &beams);
        let prev = *sum_rates.last().expect("initial rate recorded");
        sum_rates.push(rate);
        if (rate - prev).abs() < cfg.tolerance {
            break;
        }
    }
    let solution = BeamformingSolution::baseline(net, beams, Regime::OtherBaseline)?;
    Ok(WmmseRun { solution, sum_rates })
}

pub fn wmmse_beams(realization: &ChannelRealization, cfg: &WmmseConfig) -> Result<BeamformingSolution> {
    wmmse_run(realization, cfg).map(|r| r.solution)
}
