use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{
    global_oracle, max_slnr_beams, max_snr_beams, min_gi_beams, random_beams, wmmse_beams, zf_multiuser_beams,
    GlobalConfig, WmmseConfig,
};
use crate::beamforming::{design_beams, evaluate, BeamformingSolution, Selection};
use crate::channel::{generate_pathloss, generate_rayleigh, ChannelRealization, NetworkConfig};
use crate::protocol::{accounting_table, run_centralized, run_decentralized, AccountingScheme, RateCodec};
use crate::quantization::{CodebookCache, CodebookSet};
use crate::selection::enumerate_candidates;
use crate::{Error, Result};

use super::results::{RecordMetadata, ResultRecord, ResultRow};
use super::spec::{ExperimentSpec, ProtocolKind, Scenario, SchemeSpec};
use super::{drop_seed, mix, worker_pool};

/// What one scheme produced on one drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropOutcome {
    pub sum_rate: f64,
    /// Chosen `α`; 0 for schemes without a selection.
    pub alpha: usize,
    pub exchange_bits: Option<u64>,
}

fn outcome(realization: &ChannelRealization, solution: &BeamformingSolution, alpha: usize, bits: Option<u64>) -> Result<DropOutcome> {
    Ok(DropOutcome { sum_rate: evaluate(realization, solution)?.sum_rate, alpha, exchange_bits: bits })
}

type DropResult = std::result::Result<DropOutcome, String>;

/// Runs `scheme` on one drop. `codebooks` must hold the books of a quantized
/// proposed scheme; `rng_seed` feeds the randomized schemes.
pub fn run_scheme(
    scheme: &SchemeSpec,
    realization: &ChannelRealization,
    codebooks: Option<&CodebookSet>,
    rng_seed: u64,
) -> Result<DropOutcome> {
    let cfg = realization.config();
    match scheme {
        SchemeSpec::MaxSnr { .. } => outcome(realization, &max_snr_beams(realization)?, 0, Some(0)),
        SchemeSpec::MinGi { .. } => outcome(realization, &min_gi_beams(realization)?, 0, Some(0)),
        SchemeSpec::MaxSlnr { .. } => outcome(realization, &max_slnr_beams(realization)?, 0, Some(0)),
        SchemeSpec::Random { .. } => outcome(realization, &random_beams(realization, rng_seed)?, 0, Some(0)),
        SchemeSpec::Zf { .. } => outcome(realization, &zf_multiuser_beams(realization)?, 0, Some(0)),
        SchemeSpec::Wmmse { kappa, n_f, .. } => {
            let wc = WmmseConfig { max_iterations: *kappa, ..WmmseConfig::default() };
            let bits = n_f
                .map(|b| accounting_table(AccountingScheme::Wmmse { kappa: *kappa as u64, n_f: b, n_c: cfg.n_c }))
                .transpose()?
                .map(|a| a.bits);
            outcome(realization, &wmmse_beams(realization, &wc)?, 0, bits)
        }
        SchemeSpec::Global { restarts, steps, n_f, .. } => {
            let gc = GlobalConfig { restarts: *restarts, steps: *steps, seed: rng_seed };
            let bits = n_f
                .map(|b| accounting_table(AccountingScheme::Global { n_f: b, n_c: cfg.n_c }))
                .transpose()?
                .map(|a| a.bits);
            outcome(realization, &global_oracle(realization, &gc)?.solution, 0, bits)
        }
        SchemeSpec::Proposed { alphas, n_f, protocol, .. } => {
            let codec = match (n_f, codebooks) {
                (None, _) => RateCodec::Exact,
                (Some(_), Some(set)) => RateCodec::Quantized(set),
                (Some(_), None) => return Err(Error::MissingCodebook(alphas[0])),
            };
            let out = match protocol {
                ProtocolKind::Central => run_centralized(realization, alphas, codec)?,
                ProtocolKind::Decentral => run_decentralized(realization, alphas, codec)?,
            };
            let sol = design_beams(realization, &out.chosen)?;
            outcome(realization, &sol, out.chosen.alpha(), Some(out.ledger.total_bits()))
        }
        SchemeSpec::ProposedRandom1 { alphas, .. } => {
            let chosen = run_centralized(realization, alphas, RateCodec::Exact)?.chosen;
            let same: Vec<Selection> = enumerate_candidates(cfg, &[chosen.alpha()])?.candidates;
            let pick = &same[ChaCha8Rng::seed_from_u64(rng_seed).random_range(0..same.len())];
            outcome(realization, &design_beams(realization, pick)?, pick.alpha(), None)
        }
        SchemeSpec::ProposedRandom2 { alphas, .. } => {
            cfg.require_selection_scheme()?;
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let alpha = alphas[rng.random_range(0..alphas.len())];
            let same = enumerate_candidates(cfg, &[alpha])?.candidates;
            let pick = &same[rng.random_range(0..same.len())];
            outcome(realization, &design_beams(realization, pick)?, pick.alpha(), None)
        }
    }
}

/// Checks that `scheme` can run on `cfg` at all, so that a bad combination is
/// reported once instead of failing every drop.
fn check_feasible(scheme: &SchemeSpec, cfg: &NetworkConfig) -> Result<()> {
    match scheme {
        SchemeSpec::Zf { .. } if cfg.n_u > cfg.n_t => Err(Error::InvalidConfig(format!(
            "zf needs n_u ≤ n_t (n_u = {}, n_t = {})",
            cfg.n_u, cfg.n_t
        ))),
        SchemeSpec::Proposed { alphas, .. }
        | SchemeSpec::ProposedRandom1 { alphas, .. }
        | SchemeSpec::ProposedRandom2 { alphas, .. } => {
            cfg.require_selection_scheme()?;
            enumerate_candidates(cfg, alphas).map(|_| ())
        }
        _ => Ok(()),
    }
}

pub fn generate_drop(spec: &ExperimentSpec, point: usize, cfg: &NetworkConfig, seed: u64) -> Result<ChannelRealization> {
    match spec.scenario {
        Scenario::Rayleigh => generate_rayleigh(cfg, seed),
        Scenario::Pathloss => generate_pathloss(cfg, &spec.pathloss_or_default().drop_params(spec.sweep[point]), seed),
    }
}

fn aggregate(
    scheme: &SchemeSpec,
    spec: &ExperimentSpec,
    point: usize,
    results: &[DropResult],
) -> ResultRow {
    let n_c = spec.network.n_c as f64;
    let ok: Vec<&DropOutcome> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let n = ok.len();
    let mut hist = vec![0u64; spec.network.n_t + 1];
    for o in &ok {
        hist[o.alpha] += 1;
    }
    let mean = ok.iter().map(|o| o.sum_rate).sum::<f64>() / n.max(1) as f64;
    let var = if n > 1 {
        ok.iter().map(|o| (o.sum_rate - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let bits: Vec<u64> = ok.iter().filter_map(|o| o.exchange_bits).collect();
    let exchange_bytes = (bits.len() == n && n > 0).then(|| {
        let max = bits.iter().copied().max().unwrap_or(0);
        max.div_ceil(8)
    });
    let first_error = results.iter().find_map(|r| r.as_ref().err()).cloned();
    ResultRow {
        scheme: scheme.label(),
        sweep_value: spec.sweep[point],
        snr_db: spec.point_snr_db(point),
        drops: n,
        rate_mean: mean / n_c,
        rate_stderr: (var / n.max(1) as f64).sqrt() / n_c,
        sum_rate_mean: mean,
        alpha_hist: hist,
        exchange_bytes,
        errors: results.len() - n,
        error: if n == 0 { first_error } else { None },
    }
}

fn error_row(scheme: &SchemeSpec, spec: &ExperimentSpec, point: usize, err: &Error) -> ResultRow {
    ResultRow {
        scheme: scheme.label(),
        sweep_value: spec.sweep[point],
        snr_db: spec.point_snr_db(point),
        drops: 0,
        rate_mean: 0.0,
        rate_stderr: 0.0,
        sum_rate_mean: 0.0,
        alpha_hist: vec![0; spec.network.n_t + 1],
        exchange_bytes: None,
        errors: spec.drops,
        error: Some(err.to_string()),
    }
}

/// Every scheme on every sweep point, drops fanned out over the worker pool.
/// Results depend only on the spec, never on scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultRecord> {
    run_experiment_with(spec, &CodebookCache::new())
}

pub fn run_experiment_with(spec: &ExperimentSpec, cache: &CodebookCache) -> Result<ResultRecord> {
    spec.validate()?;
    let pool = worker_pool()?;
    let mut rows = Vec::new();
    for point in 0..spec.sweep.len() {
        let cfg = spec.point_config(point)?;
        let prepared: Vec<Result<Option<CodebookSet>>> = spec
            .schemes
            .iter()
            .map(|s| {
                check_feasible(s, &cfg)?;
                match s {
                    SchemeSpec::Proposed { alphas, n_f: Some(b), .. } => {
                        CodebookSet::train(cfg.n_t, cfg.n0, alphas, *b, cache).map(Some)
                    }
                    _ => Ok(None),
                }
            })
            .collect();
        let per_drop: Vec<Vec<DropResult>> = pool.install(|| {
            (0..spec.drops)
                .into_par_iter()
                .map(|d| {
                    let seed = drop_seed(spec.seed, d as u64);
                    let realization = generate_drop(spec, point, &cfg, seed);
                    spec.schemes
                        .iter()
                        .zip(&prepared)
                        .enumerate()
                        .map(|(i, (s, books))| match (&realization, books) {
                            (Err(e), _) => Err(e.to_string()),
                            (_, Err(e)) => Err(e.to_string()),
                            (Ok(r), Ok(b)) => {
                                run_scheme(s, r, b.as_ref(), mix(seed, i as u64 + 1)).map_err(|e| e.to_string())
                            }
                        })
                        .collect()
                })
                .collect()
        });
        for (i, scheme) in spec.schemes.iter().enumerate() {
            if let Err(e) = &prepared[i] {
                rows.push(error_row(scheme, spec, point, e));
                continue;
            }
            let results: Vec<DropResult> = per_drop.iter().map(|d| d[i].clone()).collect();
            rows.push(aggregate(scheme, spec, point, &results));
        }
    }
    let n = spec.network;
    Ok(ResultRecord {
        metadata: RecordMetadata::new(&spec.name, spec.seed, spec.drops, n.n_t, n.n_c, n.n_u),
        rows,
    })
}
