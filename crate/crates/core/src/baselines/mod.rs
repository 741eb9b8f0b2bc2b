//! Reference beamforming schemes.
//!
//! Multiuser networks carry one beam per user; the "cross channels" of a user
//! are the channels from its BS to every other user, intracell ones included.

mod global;
mod wmmse;

pub use global::{global_oracle, GlobalConfig, GlobalOutcome};
pub use wmmse::{wmmse_beams, wmmse_run, WmmseConfig, WmmseRun};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use num_complex::Complex64;

use crate::beamforming::{null_steered_beam, BeamformingSolution, Regime};
use crate::channel::{ChannelRealization, UserId};
use crate::numerics::{dominant_rayleigh_vector, smallest_right_singular_vector, ComplexMat, ComplexVec};
use crate::{Error, Result};

fn per_user<F>(realization: &ChannelRealization, regime: Regime, mut beam: F) -> Result<BeamformingSolution>
where
    F: FnMut(UserId) -> Result<ComplexVec>,
{
    let cfg = realization.config();
    let beams = cfg.users().map(&mut beam).collect::<Result<Vec<_>>>()?;
    BeamformingSolution::baseline(cfg, beams, regime)
}

fn matched(h: &ComplexVec) -> Result<ComplexVec> {
    h.check_finite("channel")?;
    Ok(h.normalized().unwrap_or_else(|| ComplexVec::basis(h.len(), 0)))
}

fn cross_users(realization: &ChannelRealization, user: UserId) -> Vec<UserId> {
    realization.config().users().filter(|&k| k != user).collect()
}

/// `w_i = h_ii / ‖h_ii‖`.
pub fn max_snr_beams(realization: &ChannelRealization) -> Result<BeamformingSolution> {
    per_user(realization, Regime::MatchedFilter, |u| matched(realization.channel(u.cell, u)))
}

/// Each beam minimizes the total power it leaks to every other user.
pub fn min_gi_beams(realization: &ChannelRealization) -> Result<BeamformingSolution> {
    per_user(realization, Regime::MinWgi, |u| {
        let others = cross_users(realization, u);
        if others.is_empty() || realization.config().n_t < 2 {
            return matched(realization.channel(u.cell, u));
        }
        let g = ComplexMat::from_conj_rows(others.iter().map(|&k| realization.channel(u.cell, k)))?;
        smallest_right_singular_vector(&g)
    })
}

/// Each beam maximizes its own signal-to-leakage-plus-noise ratio.
pub fn max_slnr_beams(realization: &ChannelRealization) -> Result<BeamformingSolution> {
    let cfg = realization.config();
    per_user(realization, Regime::MaxWslnr, |u| {
        let b = ComplexMat::gram_plus_identity(
            cfg.n_t,
            cross_users(realization, u).iter().map(|&k| realization.channel(u.cell, k)),
            cfg.n0,
        )?;
        dominant_rayleigh_vector(realization.channel(u.cell, u), &b)
    })
}

/// Isotropic unit vector.
pub(crate) fn random_unit(rng: &mut ChaCha8Rng, n_t: usize) -> ComplexVec {
    loop {
        let v = ComplexVec::new(
            (0..n_t)
                .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
                .collect(),
        );
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

/// I.i.d. isotropic unit beams.
pub fn random_beams(realization: &ChannelRealization, seed: u64) -> Result<BeamformingSolution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_t = realization.config().n_t;
    per_user(realization, Regime::OtherBaseline, |_| Ok(random_unit(&mut rng, n_t)))
}

/// Intracell zero forcing from local CSI.
pub fn zf_multiuser_beams(realization: &ChannelRealization) -> Result<BeamformingSolution> {
    let cfg = realization.config();
    if cfg.n_u > cfg.n_t {
        return Err(Error::InvalidConfig(format!(
            "zero forcing {} users with {} antennas",
            cfg.n_u, cfg.n_t
        )));
    }
    let mut beams = Vec::with_capacity(cfg.n_users());
    for bs in 0..cfg.n_c {
        let local = realization.local_csi(bs)?;
        for u in local.own_users() {
            let co: Vec<UserId> = local.own_users().filter(|&k| k != u).collect();
            beams.push(null_steered_beam(&local, u, &co)?);
        }
    }
    BeamformingSolution::baseline(cfg, beams, Regime::OtherBaseline)
}

/// Sum rate of arbitrary beams (indexed like [`BeamformingSolution::beams`]).
pub(crate) fn sum_rate(realization: &ChannelRealization, beams: &[ComplexVec]) -> f64 {
    let cfg = realization.config();
    cfg.users()
        .enumerate()
        .map(|(k, user)| {
            let mut interference = 0.0;
            let mut desired = 0.0;
            for (v, src) in cfg.users().enumerate() {
                let p = realization.channel(src.cell, user).gain(&beams[v]);
                if v == k {
                    desired = p;
                } else {
                    interference += p;
                }
            }
            (desired / (interference + cfg.n0)).ln_1p() / std::f64::consts::LN_2
        })
        .sum()
}
