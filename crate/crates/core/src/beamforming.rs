//! Beam construction for each interference-free-set regime, and rate evaluation.
//!
//! With `α = |F|` users made interference-free:
//! - `α = N_T`: the BSs serving `F` null the rest of `F`; every other BS is muted.
//! - `α = N_T − 1`: `F` BSs maximize their gain inside the null space of
//!   `F∖{m}`; the other BSs minimize leakage onto `F` (one remaining direction).
//! - `α ≤ N_T − 2`: `F` BSs as above; the other BSs maximize gain inside the
//!   null space of `F`.
//!
//! "Maximize gain inside the null space" is the max-WSLNR beam in its
//! zero-noise limit: the matched filter projected onto the orthogonal
//! complement of the leak channels. It makes the leakage exactly zero (up to
//! rounding), which is what makes the users of `F` interference-free.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, LocalCsi, NetworkConfig, UserId};
use crate::numerics::{
    dominant_rayleigh_vector, smallest_right_singular_vector, weakest_subspace, ComplexMat, ComplexVec,
};
use crate::{Error, Result};

const UNIT_TOL: f64 = 1e-9;

/// One interference-free-user hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Selection {
    /// Position in the canonical candidate list this selection came from.
    pub candidate: usize,
    free: Vec<UserId>,
}

impl Selection {
    /// Validates `free` against `config`; `free` is sorted on the way in.
    pub fn new(config: &NetworkConfig, candidate: usize, mut free: Vec<UserId>) -> Result<Self> {
        free.sort();
        free.dedup();
        let sel = Self { candidate, free };
        sel.validate(config)?;
        Ok(sel)
    }

    pub fn free(&self) -> &[UserId] {
        &self.free
    }

    pub fn alpha(&self) -> usize {
        self.free.len()
    }

    pub fn contains(&self, user: UserId) -> bool {
        self.free.binary_search(&user).is_ok()
    }

    /// Cells with at least one interference-free user.
    pub fn cells(&self) -> Vec<usize> {
        let mut cells: Vec<usize> = self.free.iter().map(|u| u.cell).collect();
        cells.dedup();
        cells
    }

    pub fn validate(&self, config: &NetworkConfig) -> Result<()> {
        let alpha = self.alpha();
        if alpha == 0 || alpha > config.n_t {
            return Err(Error::InfeasibleSelection(format!(
                "alpha = {alpha} outside 1..={}",
                config.n_t
            )));
        }
        if let Some(u) = self.free.iter().find(|u| !config.contains(**u)) {
            return Err(Error::InfeasibleSelection(format!("user {u} not in network")));
        }
        if alpha == config.n_t {
            if !config.n_t.is_multiple_of(config.n_u) {
                return Err(Error::InfeasibleSelection(format!(
                    "alpha = n_t needs n_u | n_t (n_t = {}, n_u = {})",
                    config.n_t, config.n_u
                )));
            }
            let cells = self.cells();
            let whole_cells = cells.len() == config.n_t / config.n_u
                && cells.iter().all(|&c| config.users_of(c).all(|u| self.contains(u)));
            if !whole_cells {
                return Err(Error::InfeasibleSelection(
                    "alpha = n_t requires F to be every user of n_t/n_u cells".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    MinWgi,
    MaxWslnr,
    Muted,
    MatchedFilter,
    OtherBaseline,
}

/// One beam per user (indexed by `cell·n_u + slot`), served by the user's own BS.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    beams: Vec<ComplexVec>,
    regimes: Vec<Regime>,
    free: Vec<UserId>,
}

impl BeamformingSolution {
    pub fn new(
        config: &NetworkConfig,
        beams: Vec<ComplexVec>,
        regimes: Vec<Regime>,
        free: Vec<UserId>,
    ) -> Result<Self> {
        if beams.len() != config.n_users() || regimes.len() != beams.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} beams / {} regimes for {} users",
                beams.len(),
                regimes.len(),
                config.n_users()
            )));
        }
        for (w, r) in beams.iter().zip(&regimes) {
            if w.len() != config.n_t {
                return Err(Error::DimensionMismatch(format!(
                    "beam of length {} with n_t = {}",
                    w.len(),
                    config.n_t
                )));
            }
            w.check_finite("beam")?;
            let n2 = w.norm_sqr();
            let ok = match r {
                Regime::Muted => w.is_zero(),
                Regime::OtherBaseline => n2 <= 1.0 + UNIT_TOL,
                _ => (n2 - 1.0).abs() <= UNIT_TOL,
            };
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "beam with ‖w‖² = {n2} under regime {r:?}"
                )));
            }
        }
        Ok(Self { beams, regimes, free })
    }

    /// Builds a baseline solution with no interference-free set.
    pub fn baseline(config: &NetworkConfig, beams: Vec<ComplexVec>, regime: Regime) -> Result<Self> {
        let regimes = vec![regime; beams.len()];
        Self::new(config, beams, regimes, Vec::new())
    }

    pub fn beams(&self) -> &[ComplexVec] {
        &self.beams
    }

    pub fn beam(&self, config: &NetworkConfig, user: UserId) -> &ComplexVec {
        &self.beams[config.user_index(user)]
    }

    pub fn regimes(&self) -> &[Regime] {
        &self.regimes
    }

    pub fn free(&self) -> &[UserId] {
        &self.free
    }

    pub fn active_bs_count(&self, config: &NetworkConfig) -> usize {
        (0..config.n_c)
            .filter(|&c| config.users_of(c).any(|u| !self.beam(config, u).is_zero()))
            .count()
    }
}

/// Per-user SINR and rates (bits/s/Hz) of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub desired: Vec<f64>,
    pub interference: Vec<f64>,
    pub sinr: Vec<f64>,
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    /// Rate of the solution's interference-free users.
    pub local_rate: f64,
    /// Rate of everyone else.
    pub global_rate: f64,
}

fn check_users(local: &LocalCsi<'_>, users: &[UserId]) -> Result<()> {
    let cfg = local.config();
    match users.iter().find(|u| !cfg.contains(**u)) {
        Some(u) => Err(Error::IndexOutOfRange {
            index: cfg.user_index(*u),
            limit: cfg.n_users(),
        }),
        None => Ok(()),
    }
}

/// Unit beam from `local`'s BS minimizing `Σ_{q ∈ targets} |h_qᴴ w|²`.
pub fn min_wgi_beam(local: &LocalCsi<'_>, serving: UserId, null_targets: &[UserId]) -> Result<ComplexVec> {
    if null_targets.is_empty() {
        return Err(Error::InvalidArgument(
            "min-WGI needs at least one null target (use a matched filter)".into(),
        ));
    }
    check_users(local, null_targets)?;
    if null_targets.contains(&serving) {
        return Err(Error::InvalidArgument(format!("serving user {serving} is a null target")));
    }
    if null_targets.len() > local.config().n_users() - 1 {
        return Err(Error::InvalidArgument(format!(
            "{} null targets but only {} other users",
            null_targets.len(),
            local.config().n_users() - 1
        )));
    }
    let g = ComplexMat::from_conj_rows(null_targets.iter().map(|&q| local.channel(q)))?;
    smallest_right_singular_vector(&g)
}

/// Unit beam maximizing `|h_mᴴw|² / (Σ_{k ∈ leak} |h_kᴴw|² + n0)`.
pub fn max_wslnr_beam(local: &LocalCsi<'_>, serving: UserId, leak_set: &[UserId], n0: f64) -> Result<ComplexVec> {
    check_users(local, leak_set)?;
    check_users(local, &[serving])?;
    if leak_set.contains(&serving) {
        return Err(Error::InvalidArgument(format!("serving user {serving} is in its leak set")));
    }
    if !(n0 > 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance {n0} must be positive")));
    }
    let n_t = local.config().n_t;
    let b = ComplexMat::gram_plus_identity(n_t, leak_set.iter().map(|&k| local.channel(k)), n0)?;
    dominant_rayleigh_vector(local.channel(serving), &b)
}

/// Zero-noise limit of [`max_wslnr_beam`]: the serving channel projected onto
/// the null space of the leak channels, normalized. Requires
/// `|leak_set| ≤ N_T − 1`.
pub fn null_steered_beam(local: &LocalCsi<'_>, serving: UserId, leak_set: &[UserId]) -> Result<ComplexVec> {
    check_users(local, leak_set)?;
    check_users(local, &[serving])?;
    let n_t = local.config().n_t;
    let h = local.channel(serving);
    h.check_finite("channel")?;
    if leak_set.is_empty() {
        return h.normalized().ok_or(Error::InvalidArgument("zero channel".into()));
    }
    if leak_set.contains(&serving) {
        return Err(Error::InvalidArgument(format!("serving user {serving} is in its leak set")));
    }
    if leak_set.len() >= n_t {
        return Err(Error::InvalidArgument(format!(
            "cannot null {} users with {n_t} antennas",
            leak_set.len()
        )));
    }
    let g = ComplexMat::from_conj_rows(leak_set.iter().map(|&k| local.channel(k)))?;
    let basis = weakest_subspace(&g, n_t - leak_set.len())?;
    let mut w = ComplexVec::zeros(n_t);
    for b in &basis {
        w.add_scaled(b, b.dot(h));
    }
    // h inside the leak span is a measure-zero draw; any null direction works then
    Ok(w.normalized().unwrap_or_else(|| basis[0].clone()))
}

/// Beams of one BS under `selection`, built from that BS's local CSI only.
pub fn design_bs_beams(local: &LocalCsi<'_>, selection: &Selection) -> Result<Vec<(UserId, ComplexVec, Regime)>> {
    let cfg = local.config();
    selection.validate(cfg)?;
    let n_t = cfg.n_t;
    let alpha = selection.alpha();
    let free = selection.free();
    let others = |u: UserId| -> Vec<UserId> { free.iter().copied().filter(|&q| q != u).collect() };
    local
        .own_users()
        .map(|u| {
            let in_f = selection.contains(u);
            let (w, regime) = if alpha == n_t {
                if in_f {
                    (min_wgi_beam(local, u, &others(u))?, Regime::MinWgi)
                } else {
                    (ComplexVec::zeros(n_t), Regime::Muted)
                }
            } else if in_f {
                let leak = others(u);
                let regime = if leak.is_empty() { Regime::MatchedFilter } else { Regime::MaxWslnr };
                (null_steered_beam(local, u, &leak)?, regime)
            } else if alpha == n_t - 1 {
                (min_wgi_beam(local, u, free)?, Regime::MinWgi)
            } else {
                (null_steered_beam(local, u, free)?, Regime::MaxWslnr)
            };
            Ok((u, w, regime))
        })
        .collect()
}

fn assemble(
    realization: &ChannelRealization,
    free: Vec<UserId>,
    mut per_bs: impl FnMut(&LocalCsi<'_>) -> Result<Vec<(UserId, ComplexVec, Regime)>>,
) -> Result<BeamformingSolution> {
    let cfg = realization.config();
    let mut beams = vec![ComplexVec::zeros(cfg.n_t); cfg.n_users()];
    let mut regimes = vec![Regime::Muted; cfg.n_users()];
    for bs in 0..cfg.n_c {
        let local = realization.local_csi(bs)?;
        for (u, w, r) in per_bs(&local)? {
            let k = cfg.user_index(u);
            beams[k] = w;
            regimes[k] = r;
        }
    }
    BeamformingSolution::new(cfg, beams, regimes, free)
}

/// Full solution for `selection`; each BS designs from its own local CSI.
pub fn design_beams(realization: &ChannelRealization, selection: &Selection) -> Result<BeamformingSolution> {
    selection.validate(realization.config())?;
    assemble(realization, selection.free().to_vec(), |local| design_bs_beams(local, selection))
}

/// The alternative design for `α = N_T − 1` in which the BSs of `F` spend
/// their spare dimension nulling one extra user `extra ∉ F` instead of
/// improving their own gain. Kept for the comparison experiment only.
pub fn design_beams_with_extra_null(
    realization: &ChannelRealization,
    selection: &Selection,
    extra: UserId,
) -> Result<BeamformingSolution> {
    let cfg = realization.config();
    selection.validate(cfg)?;
    if selection.alpha() + 1 != cfg.n_t {
        return Err(Error::InfeasibleSelection("extra-null design needs alpha = n_t − 1".into()));
    }
    if selection.contains(extra) || !cfg.contains(extra) {
        return Err(Error::InvalidArgument(format!("extra null target {extra} must be outside F")));
    }
    let free = selection.free();
    assemble(realization, free.to_vec(), |local| {
        local
            .own_users()
            .map(|u| {
                let mut targets: Vec<UserId> = free.iter().copied().filter(|&q| q != u).collect();
                if selection.contains(u) {
                    targets.push(extra);
                }
                Ok((u, min_wgi_beam(local, u, &targets)?, Regime::MinWgi))
            })
            .collect()
    })
}

/// SINRs and rates of every user.
pub fn evaluate(realization: &ChannelRealization, solution: &BeamformingSolution) -> Result<RateReport> {
    let cfg = realization.config();
    if solution.beams.len() != cfg.n_users() {
        return Err(Error::DimensionMismatch(format!(
            "{} beams for {} users",
            solution.beams.len(),
            cfg.n_users()
        )));
    }
    let n = cfg.n_users();
    let mut desired = vec![0.0; n];
    let mut interference = vec![0.0; n];
    for (k, user) in cfg.users().enumerate() {
        for (v, source) in cfg.users().enumerate() {
            let p = realization.channel(source.cell, user).gain(&solution.beams[v]);
            if v == k {
                desired[k] = p;
            } else {
                interference[k] += p;
            }
        }
    }
    let sinr: Vec<f64> = desired
        .iter()
        .zip(&interference)
        .map(|(s, i)| s / (i + cfg.n0))
        .collect();
    let rates: Vec<f64> = sinr.iter().map(|g| g.ln_1p() / std::f64::consts::LN_2).collect();
    let sum_rate = rates.iter().sum();
    let local_rate = solution.free.iter().map(|&u| rates[cfg.user_index(u)]).sum();
    Ok(RateReport {
        desired,
        interference,
        sinr,
        rates,
        sum_rate,
        local_rate,
        global_rate: sum_rate - local_rate,
    })
}

/// One locally computable rate `log₂(1 + |h_mᴴ w_m|²/N₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalRate {
    pub candidate: usize,
    pub user: UserId,
    pub rate: f64,
}

/// Rates of this BS's interference-free users under each candidate.
pub fn local_rate_terms(local: &LocalCsi<'_>, candidates: &[Selection]) -> Result<Vec<LocalRate>> {
    let cfg = local.config();
    let bs = local.bs_index();
    let mut out = Vec::new();
    for sel in candidates {
        if !sel.free().iter().any(|u| u.cell == bs) {
            return Err(Error::InvalidArgument(format!(
                "candidate {} has no user of BS {bs}",
                sel.candidate
            )));
        }
        for (u, w, _) in design_bs_beams(local, sel)? {
            if sel.contains(u) {
                let gain = local.channel(u).gain(&w);
                out.push(LocalRate {
                    candidate: sel.candidate,
                    user: u,
                    rate: (gain / cfg.n0).ln_1p() / std::f64::consts::LN_2,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_rayleigh;

    fn cells(ids: &[usize]) -> Vec<UserId> {
        ids.iter().map(|&c| UserId::cell(c)).collect()
    }

    #[test]
    fn selection_rules() {
        let cfg = NetworkConfig::new(4, 7, 1, 1.0).unwrap();
        assert!(Selection::new(&cfg, 0, vec![]).is_err());
        assert!(Selection::new(&cfg, 0, cells(&[0, 1, 2, 3, 4])).is_err());
        assert!(Selection::new(&cfg, 0, cells(&[9])).is_err());
        let s = Selection::new(&cfg, 3, cells(&[5, 1, 2])).unwrap();
        assert_eq!(s.free(), &cells(&[1, 2, 5])[..]);
        assert_eq!(s.alpha(), 3);

        let mu = NetworkConfig::new(4, 3, 2, 1.0).unwrap();
        let whole = vec![UserId::new(0, 0), UserId::new(0, 1), UserId::new(2, 0), UserId::new(2, 1)];
        assert!(Selection::new(&mu, 0, whole).is_ok());
        let split = vec![UserId::new(0, 0), UserId::new(1, 1), UserId::new(2, 0), UserId::new(2, 1)];
        assert!(Selection::new(&mu, 0, split).is_err());
        let odd = NetworkConfig::new(3, 3, 2, 1.0).unwrap();
        let three = vec![UserId::new(0, 0), UserId::new(0, 1), UserId::new(1, 0)];
        assert!(Selection::new(&odd, 0, three).is_err());
    }

    #[test]
    fn muting_at_full_alpha() {
        let cfg = NetworkConfig::new(4, 7, 1, 1.0).unwrap();
        let r = generate_rayleigh(&cfg, 3).unwrap();
        let sel = Selection::new(&cfg, 0, cells(&[0, 2, 3, 6])).unwrap();
        let sol = design_beams(&r, &sel).unwrap();
        assert_eq!(sol.regimes().iter().filter(|&&g| g == Regime::Muted).count(), 3);
        assert_eq!(sol.active_bs_count(&cfg), 4);
        let rep = evaluate(&r, &sol).unwrap();
        for u in sel.free() {
            let k = cfg.user_index(*u);
            assert!(rep.interference[k] <= 1e-15 * rep.desired[k]);
        }
        assert!((rep.global_rate).abs() < 1e-12);
    }

    #[test]
    fn silent_network_has_zero_rate() {
        let cfg = NetworkConfig::new(2, 3, 1, 1.0).unwrap();
        let r = generate_rayleigh(&cfg, 1).unwrap();
        let sol = BeamformingSolution::new(&cfg, vec![ComplexVec::zeros(2); 3], vec![Regime::Muted; 3], vec![]).unwrap();
        let rep = evaluate(&r, &sol).unwrap();
        assert!(rep.sinr.iter().all(|&g| g == 0.0));
        assert_eq!(rep.sum_rate, 0.0);
    }

    #[test]
    fn min_wgi_errors() {
        let cfg = NetworkConfig::new(2, 3, 1, 1.0).unwrap();
        let r = generate_rayleigh(&cfg, 1).unwrap();
        let l = r.local_csi(0).unwrap();
        assert!(min_wgi_beam(&l, UserId::cell(0), &[]).is_err());
        assert!(min_wgi_beam(&l, UserId::cell(0), &[UserId::cell(0)]).is_err());
        assert!(min_wgi_beam(&l, UserId::cell(0), &[UserId::cell(5)]).is_err());
        assert!(null_steered_beam(&l, UserId::cell(0), &cells(&[1, 2])).is_err());
    }

    #[test]
    fn solution_rejects_bad_norms() {
        let cfg = NetworkConfig::new(2, 2, 1, 1.0).unwrap();
        let half = ComplexVec::from_real(&[0.5, 0.0]);
        let unit = ComplexVec::from_real(&[1.0, 0.0]);
        assert!(BeamformingSolution::baseline(&cfg, vec![half.clone(), unit.clone()], Regime::MatchedFilter).is_err());
        assert!(BeamformingSolution::baseline(&cfg, vec![half, unit.clone()], Regime::OtherBaseline).is_ok());
        assert!(BeamformingSolution::new(&cfg, vec![unit.clone(), unit], vec![Regime::Muted, Regime::MinWgi], vec![]).is_err());
    }

    #[test]
    fn local_rates_need_own_user() {
        let cfg = NetworkConfig::new(3, 4, 1, 1.0).unwrap();
        let r = generate_rayleigh(&cfg, 2).unwrap();
        let sel = Selection::new(&cfg, 0, cells(&[1, 2])).unwrap();
        assert!(local_rate_terms(&r.local_csi(0).unwrap(), std::slice::from_ref(&sel)).is_err());
        let got = local_rate_terms(&r.local_csi(1).unwrap(), &[sel.clone(), sel]).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].rate, got[1].rate);
    }
}
