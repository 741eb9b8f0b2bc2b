//! Candidate interference-free sets, the analytic bound on the rate of the
//! remaining users, and the argmax choice.

use serde::{Deserialize, Serialize};

use crate::beamforming::Selection;
use crate::channel::{NetworkConfig, UserId};
use crate::numerics::upper_incomplete_gamma;
use crate::{Error, Result};

/// Candidates in canonical order: `α` descending, then lexicographic by sorted `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub alphas: Vec<usize>,
    pub candidates: Vec<Selection>,
}

impl CandidateSet {
    pub fn n_g(&self) -> usize {
        self.candidates.len()
    }

    /// Candidates with at least one interference-free user in `cell`.
    pub fn involving(&self, cell: usize) -> Vec<Selection> {
        self.candidates
            .iter()
            .filter(|s| s.free().iter().any(|u| u.cell == cell))
            .cloned()
            .collect()
    }

    pub fn get(&self, index: usize) -> Option<&Selection> {
        self.candidates.get(index)
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Visits every `k`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Number of candidates for a given `α`.
pub fn candidate_count(config: &NetworkConfig, alpha: usize) -> u128 {
    if alpha == config.n_t {
        if config.n_t.is_multiple_of(config.n_u) {
            binomial(config.n_c, config.n_t / config.n_u)
        } else {
            0
        }
    } else {
        binomial(config.n_users(), alpha)
    }
}

/// `N_K`: number of selections over every `α ∈ 1..=N_T`.
pub fn total_selection_count(config: &NetworkConfig) -> u128 {
    (1..=config.n_t).map(|a| candidate_count(config, a)).sum()
}

pub fn enumerate_candidates(config: &NetworkConfig, alphas: &[usize]) -> Result<CandidateSet> {
    config.validate()?;
    let mut alphas: Vec<usize> = alphas.to_vec();
    alphas.sort_unstable_by(|a, b| b.cmp(a));
    alphas.dedup();
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("empty alpha set".into()));
    }
    if let Some(&a) = alphas.iter().find(|&&a| a == 0 || a > config.n_t) {
        return Err(Error::InvalidArgument(format!("alpha = {a} outside 1..={}", config.n_t)));
    }
    let mut candidates = Vec::new();
    for &alpha in &alphas {
        if alpha == config.n_t {
            if !config.n_t.is_multiple_of(config.n_u) {
                return Err(Error::InvalidArgument(format!(
                    "alpha = n_t = {} needs n_u = {} to divide it",
                    config.n_t, config.n_u
                )));
            }
            for_each_combination(config.n_c, config.n_t / config.n_u, |cells| {
                let free: Vec<UserId> = cells.iter().flat_map(|&c| config.users_of(c)).collect();
                candidates.push(free);
            });
        } else {
            for_each_combination(config.n_users(), alpha, |idx| {
                candidates.push(idx.iter().map(|&k| config.user_at(k)).collect());
            });
        }
    }
    let candidates = candidates
        .into_iter()
        .enumerate()
        .map(|(c, free)| Selection::new(config, c, free))
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateSet { alphas, candidates })
}

/// Largest number of interference-free users when `n_a` BSs transmit.
pub fn alpha_max(n_t: usize, n_a: usize, n_u: usize) -> usize {
    let active_users = n_a * n_u;
    if active_users == n_t {
        n_t
    } else if active_users > n_t {
        n_t - 1
    } else {
        active_users
    }
}

/// Upper bound on the mean rate (bits/s/Hz) of the users outside `F`:
/// `(N−α)·log₂(1 + (N_T−α)·e^{N₀/2}·(N₀/2)^{N−2}·Γ(2−N, N₀/2))`, `N = N_C·N_U`.
pub fn rbar_global(n_t: usize, n_c: usize, alpha: usize, n0: f64, n_u: usize) -> Result<f64> {
    let n = n_c * n_u;
    if alpha == 0 || alpha > n_t || n < 2 || alpha > n {
        return Err(Error::InvalidArgument(format!(
            "rbar_global(n_t={n_t}, n_c={n_c}, n_u={n_u}, alpha={alpha})"
        )));
    }
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::InvalidArgument(format!("noise variance {n0}")));
    }
    if alpha == n_t {
        return Ok(0.0);
    }
    let x = 0.5 * n0;
    let order = 2.0 - n as f64;
    let g = upper_incomplete_gamma(order, x)?;
    // e^{x}·x^{n−2}·Γ(2−n, x), assembled in log space to keep the powers in range
    let inv_t = ((n as f64 - 2.0) * x.ln() + x + g.ln()).exp();
    let inner = (n_t - alpha) as f64 * inv_t;
    Ok((n - alpha) as f64 * inner.ln_1p() / std::f64::consts::LN_2)
}

/// Exchanged rates as seen by a decider, aligned with each candidate's `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    entries: Vec<Vec<Option<f64>>>,
    members: Vec<Vec<UserId>>,
}

impl RateTable {
    pub fn new(set: &CandidateSet) -> Self {
        Self {
            entries: set.candidates.iter().map(|s| vec![None; s.alpha()]).collect(),
            members: set.candidates.iter().map(|s| s.free().to_vec()).collect(),
        }
    }

    pub fn set(&mut self, candidate: usize, user: UserId, value: f64) -> Result<()> {
        let members = self
            .members
            .get(candidate)
            .ok_or(Error::IndexOutOfRange { index: candidate, limit: self.members.len() })?;
        let pos = members
            .binary_search(&user)
            .map_err(|_| Error::InvalidArgument(format!("user {user} not in candidate {candidate}")))?;
        self.entries[candidate][pos] = Some(value);
        Ok(())
    }

    pub fn get(&self, candidate: usize, user: UserId) -> Option<f64> {
        let pos = self.members.get(candidate)?.binary_search(&user).ok()?;
        self.entries[candidate][pos]
    }

    pub fn is_scoreable(&self, candidate: usize) -> bool {
        self.entries.get(candidate).is_some_and(|e| e.iter().all(Option::is_some))
    }

    pub fn is_complete(&self) -> bool {
        (0..self.entries.len()).all(|c| self.is_scoreable(c))
    }

    /// `R_local` of a candidate, if all of its entries are present.
    pub fn local_sum(&self, candidate: usize) -> Option<f64> {
        self.entries.get(candidate)?.iter().copied().sum::<Option<f64>>()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `R_local + R̄_global` for every candidate.
pub fn score_candidates(set: &CandidateSet, table: &RateTable, config: &NetworkConfig) -> Result<Vec<f64>> {
    if table.len() != set.n_g() {
        return Err(Error::DimensionMismatch(format!(
            "table with {} rows for {} candidates",
            table.len(),
            set.n_g()
        )));
    }
    let mut bound_cache = vec![None; config.n_t + 1];
    set.candidates
        .iter()
        .enumerate()
        .map(|(c, sel)| {
            let local = table.local_sum(c).ok_or(Error::IncompleteTable(c))?;
            let a = sel.alpha();
            let bound = match bound_cache[a] {
                Some(b) => b,
                None => {
                    let b = rbar_global(config.n_t, config.n_c, a, config.n0, config.n_u)?;
                    bound_cache[a] = Some(b);
                    b
                }
            };
            Ok(local + bound)
        })
        .collect()
}

/// The candidate maximizing `R_local + R̄_global`; the first in canonical order wins ties.
pub fn choose_selection(set: &CandidateSet, table: &RateTable, config: &NetworkConfig) -> Result<Selection> {
    let scores = score_candidates(set, table, config)?;
    let mut best: Option<(usize, f64)> = None;
    for (c, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((c, s));
        }
    }
    let (c, _) = best.ok_or(Error::InvalidArgument("no candidates".into()))?;
    Ok(set.candidates[c].clone())
}
