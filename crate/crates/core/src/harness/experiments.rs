//! Single-purpose Monte Carlo experiments behind the analytic claims.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{global_oracle, GlobalConfig};
use crate::beamforming::{design_beams, design_beams_with_extra_null, evaluate, local_rate_terms, Selection};
use crate::channel::{generate_rayleigh, NetworkConfig, UserId};
use crate::selection::{enumerate_candidates, rbar_global};
use crate::{Error, Result};

use super::{drop_seed, mix, worker_pool};

/// Mean, standard error and count of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n.max(1) as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Summary { mean, stderr: (var / n.max(1) as f64).sqrt(), n }
    }

    /// One-sided 95% lower confidence bound of the mean.
    pub fn lower_95(&self) -> f64 {
        self.mean - 1.645 * self.stderr
    }
}

fn par_drops<T: Send>(drops: usize, seed: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let pool = worker_pool()?;
    pool.install(|| (0..drops).into_par_iter().map(|d| f(drop_seed(seed, d as u64))).collect())
}

fn require_drops(drops: usize) -> Result<()> {
    if drops == 0 {
        Err(Error::InvalidArgument("drops must be ≥ 1".into()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Row {
    pub snr_db: f64,
    /// Per-cell rate of the best solution found with global CSI.
    pub rate_per_cell: Summary,
    /// Users whose interference is below 1/100 of the largest interference.
    pub interference_free: Summary,
}

/// Users counted as almost interference-free in one solution.
pub fn count_interference_free(interference: &[f64]) -> usize {
    let max = interference.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return interference.len();
    }
    interference.iter().filter(|&&i| i < max / 100.0).count()
}

pub fn fig1_experiment(
    n_t: usize,
    n_c: usize,
    snr_db: &[f64],
    drops: usize,
    seed: u64,
    global: &GlobalConfig,
) -> Result<Vec<Fig1Row>> {
    require_drops(drops)?;
    snr_db
        .iter()
        .map(|&snr| {
            let cfg = NetworkConfig::from_snr_db(n_t, n_c, 1, snr)?;
            let per: Vec<(f64, f64)> = par_drops(drops, seed, |s| {
                let r = generate_rayleigh(&cfg, s)?;
                let out = global_oracle(&r, &GlobalConfig { seed: mix(s, 1), ..*global })?;
                let rep = evaluate(&r, &out.solution)?;
                Ok((rep.sum_rate / n_c as f64, count_interference_free(&rep.interference) as f64))
            })?;
            let rates: Vec<f64> = per.iter().map(|p| p.0).collect();
            let counts: Vec<f64> = per.iter().map(|p| p.1).collect();
            Ok(Fig1Row { snr_db: snr, rate_per_cell: Summary::of(&rates), interference_free: Summary::of(&counts) })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Row {
    pub snr_db: f64,
    /// `F` BSs steer inside the null space of the rest of `F`.
    pub r1: Summary,
    /// `F` BSs spend their spare dimension nulling one extra user.
    pub r2: Summary,
    pub difference: Summary,
}

/// `α = N_T − 1` with a uniformly random `F` and extra user `l ∉ F` per drop.
pub fn theorem1_experiment(n_t: usize, n_c: usize, snr_db: &[f64], drops: usize, seed: u64) -> Result<Vec<Theorem1Row>> {
    require_drops(drops)?;
    if n_t < 2 {
        return Err(Error::InvalidArgument("needs n_t ≥ 2".into()));
    }
    snr_db
        .iter()
        .map(|&snr| {
            let cfg = NetworkConfig::from_snr_db(n_t, n_c, 1, snr)?;
            cfg.require_selection_scheme()?;
            let candidates = enumerate_candidates(&cfg, &[n_t - 1])?.candidates;
            let per: Vec<(f64, f64)> = par_drops(drops, seed, |s| {
                let r = generate_rayleigh(&cfg, s)?;
                let mut rng = ChaCha8Rng::seed_from_u64(mix(s, 2));
                let sel = &candidates[rng.random_range(0..candidates.len())];
                let outside: Vec<UserId> = cfg.users().filter(|u| !sel.contains(*u)).collect();
                let extra = outside[rng.random_range(0..outside.len())];
                let r1 = evaluate(&r, &design_beams(&r, sel)?)?.sum_rate;
                let r2 = evaluate(&r, &design_beams_with_extra_null(&r, sel, extra)?)?.sum_rate;
                Ok((r1, r2))
            })?;
            let r1: Vec<f64> = per.iter().map(|p| p.0).collect();
            let r2: Vec<f64> = per.iter().map(|p| p.1).collect();
            let diff: Vec<f64> = per.iter().map(|p| p.0 - p.1).collect();
            Ok(Theorem1Row { snr_db: snr, r1: Summary::of(&r1), r2: Summary::of(&r2), difference: Summary::of(&diff) })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub alpha: usize,
    pub n0: f64,
    /// Rate of the users outside `F`, summed over the network.
    pub r_global: Summary,
    pub bound: f64,
    /// `(bound − mean) / N_C`.
    pub per_cell_gap: f64,
}

/// Empirical mean of the non-`F` rate against its analytic upper bound. `F`
/// is the first candidate of each `α` (all candidates are exchangeable).
pub fn bound_experiment(n_t: usize, n_c: usize, alphas: &[usize], n0s: &[f64], drops: usize, seed: u64) -> Result<Vec<BoundRow>> {
    require_drops(drops)?;
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &n0 in n0s {
            let cfg = NetworkConfig::new(n_t, n_c, 1, n0)?;
            cfg.require_selection_scheme()?;
            let sel: Selection = enumerate_candidates(&cfg, &[alpha])?.candidates.swap_remove(0);
            let rates = par_drops(drops, seed, |s| {
                let r = generate_rayleigh(&cfg, s)?;
                Ok(evaluate(&r, &design_beams(&r, &sel)?)?.global_rate)
            })?;
            let r_global = Summary::of(&rates);
            let bound = rbar_global(n_t, n_c, alpha, n0, 1)?;
            rows.push(BoundRow { alpha, n0, r_global, bound, per_cell_gap: (bound - r_global.mean) / n_c as f64 });
        }
    }
    Ok(rows)
}

/// Rates of one interference-free user (BS 0's user, `F` the first
/// candidate containing it), one independent sample per drop.
pub fn rate_samples(n_t: usize, n_c: usize, alpha: usize, n0: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    let cfg = NetworkConfig::new(n_t, n_c, 1, n0)?;
    cfg.require_selection_scheme()?;
    let sel = enumerate_candidates(&cfg, &[alpha])?
        .involving(0)
        .into_iter()
        .next()
        .ok_or(Error::InfeasibleSelection(format!("no candidate with alpha = {alpha}")))?;
    par_drops(count, seed, |s| {
        let r = generate_rayleigh(&cfg, s)?;
        let terms = local_rate_terms(&r.local_csi(0)?, std::slice::from_ref(&sel))?;
        Ok(terms[0].rate)
    })
}
