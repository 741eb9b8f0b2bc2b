use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamforming::{design_beams, BeamformingSolution, Regime};
use crate::channel::ChannelRealization;
use crate::numerics::ComplexVec;
use crate::selection::enumerate_candidates;
use crate::Result;

use super::{max_slnr_beams, max_snr_beams, min_gi_beams, random_beams, random_unit, sum_rate, wmmse_beams, zf_multiuser_beams, WmmseConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalConfig {
    /// Minimum number of starting points; random ones fill up the warm starts.
    pub restarts: usize,
    /// Gradient steps per start.
    pub steps: usize,
    pub seed: u64,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self { restarts: 20, steps: 300, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalOutcome {
    pub solution: BeamformingSolution,
    pub sum_rate: f64,
    /// Sum rate of every starting point before ascent.
    pub start_rates: Vec<f64>,
}

fn project(w: &mut ComplexVec) {
    let n = w.norm();
    if n > 1.0 {
        *w = w.scale_real(1.0 / n);
    }
}

/// Gradient of the sum rate with respect to each `w_v*`.
fn gradient(realization: &ChannelRealization, beams: &[ComplexVec]) -> Vec<ComplexVec> {
    let cfg = realization.config();
    let users: Vec<_> = cfg.users().collect();
    let n = users.len();
    let mut inv_d = vec![0.0; n];
    let mut inv_i = vec![0.0; n];
    for (k, &user) in users.iter().enumerate() {
        let mut total = cfg.n0;
        let mut desired = 0.0;
        for (v, src) in users.iter().enumerate() {
            let p = realization.channel(src.cell, user).gain(&beams[v]);
            total += p;
            if v == k {
                desired = p;
            }
        }
        inv_d[k] = 1.0 / total;
        inv_i[k] = 1.0 / (total - desired).max(cfg.n0);
    }
    users
        .iter()
        .enumerate()
        .map(|(v, src)| {
            let mut g = ComplexVec::zeros(cfg.n_t);
            for (k, &user) in users.iter().enumerate() {
                let h = realization.channel(src.cell, user);
                let coeff = inv_d[k] - if k == v { 0.0 } else { inv_i[k] };
                g.add_scaled(h, h.dot(&beams[v]) * coeff / std::f64::consts::LN_2);
            }
            g
        })
        .collect()
}

/// Projected gradient ascent with an adaptive step; only improvements are kept.
fn ascend(realization: &ChannelRealization, mut beams: Vec<ComplexVec>, steps: usize) -> (Vec<ComplexVec>, f64) {
    let mut rate = sum_rate(realization, &beams);
    let mut eta = 0.1;
    for _ in 0..steps {
        let grad = gradient(realization, &beams);
        let gnorm = grad.iter().map(ComplexVec::norm_sqr).sum::<f64>().sqrt();
        if !(gnorm > 0.0) || !gnorm.is_finite() {
            break;
        }
        let mut improved = false;
        while eta > 1e-12 {
            let trial: Vec<ComplexVec> = beams
                .iter()
                .zip(&grad)
                .map(|(w, g)| {
                    let mut t = w.clone();
                    t.add_scaled(g, (eta / gnorm).into());
                    project(&mut t);
                    t
                })
                .collect();
            let r = sum_rate(realization, &trial);
            if r > rate {
                beams = trial;
                rate = r;
                eta *= 1.5;
                improved = true;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (beams, rate)
}

/// Best sum rate found by multi-start ascent with global CSI; a lower bound
/// on the true optimum.
pub fn global_oracle(realization: &ChannelRealization, cfg: &GlobalConfig) -> Result<GlobalOutcome> {
    let net = realization.config();
    let mut starts: Vec<Vec<ComplexVec>> = vec![
        max_snr_beams(realization)?.beams().to_vec(),
        min_gi_beams(realization)?.beams().to_vec(),
        max_slnr_beams(realization)?.beams().to_vec(),
        wmmse_beams(realization, &WmmseConfig::default())?.beams().to_vec(),
        random_beams(realization, cfg.seed)?.beams().to_vec(),
    ];
    if net.n_u > 1 && net.n_u <= net.n_t {
        starts.push(zf_multiuser_beams(realization)?.beams().to_vec());
    }
    if net.require_selection_scheme().is_ok() {
        let alphas: Vec<usize> = (1..=net.n_t).filter(|&a| a < net.n_t || net.n_t.is_multiple_of(net.n_u)).collect();
        for sel in enumerate_candidates(net, &alphas)?.candidates {
            starts.push(design_beams(realization, &sel)?.beams().to_vec());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    while starts.len() < cfg.restarts.max(20) {
        starts.push((0..net.n_users()).map(|_| random_unit(&mut rng, net.n_t)).collect());
    }
    let start_rates: Vec<f64> = starts.iter().map(|b| sum_rate(realization, b)).collect();
    let mut best: Option<(Vec<ComplexVec>, f64)> = None;
    for start in starts {
        let (beams, rate) = ascend(realization, start, cfg.steps);
        if best.as_ref().is_none_or(|(_, r)| rate > *r) {
            best = Some((beams, rate));
        }
    }
    let (beams, sum_rate) = best.expect("at least one start");
    let solution = BeamformingSolution::baseline(net, beams, Regime::OtherBaseline)?;
    Ok(GlobalOutcome { solution, sum_rate, start_rates })
}
