//! Quick randomized property checks runnable from the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baselines::random_unit;
use crate::beamforming::{design_beams, evaluate, Selection};
use crate::channel::{generate_rayleigh, NetworkConfig, UserId};
use crate::numerics::{smallest_right_singular_vector, upper_incomplete_gamma, ComplexMat};
use crate::protocol::{run_centralized, run_decentralized, s_central, s_decentral, RateCodec};
use crate::quantization::{quantize, train_lloyd_max, CodebookCache, CodebookSet, RatePdfParams};
use crate::selection::enumerate_candidates;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: Result<(bool, String)>) -> Check {
    match result {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

fn gamma_recurrence(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let s = rng.random_range(-10.0..5.0);
        let x = rng.random_range(1e-3..20.0);
        let lhs = upper_incomplete_gamma(s + 1.0, x)?;
        let rhs = s * upper_incomplete_gamma(s, x)? + x.powf(s) * (-x).exp();
        worst = worst.max((lhs - rhs).abs() / lhs.abs());
    }
    Ok((worst <= 1e-10, format!("max relative residual {worst:.3e}")))
}

fn svd_beats_random(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let cfg = NetworkConfig::new(4, 4, 1, 1.0)?;
    let r = generate_rayleigh(&cfg, rng.random())?;
    let rows: Vec<_> = (1..4).map(|c| r.channel(0, UserId::cell(c))).collect();
    let g = ComplexMat::from_conj_rows(rows.iter().copied())?;
    let w = smallest_right_singular_vector(&g)?;
    let best = g.mul_vec(&w).norm_sqr();
    let worst_gap = (0..10_000)
        .map(|_| best - g.mul_vec(&random_unit(rng, 4)).norm_sqr())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((worst_gap <= 1e-8, format!("residual {best:.3e}")))
}

fn quantizer_monotone(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let book = train_lloyd_max(&RatePdfParams::new(4, 3, 1.0)?, 4)?;
    let mut xs: Vec<f64> = (0..5000).map(|_| rng.random_range(0.0..12.0)).collect();
    xs.sort_by(f64::total_cmp);
    let idx: Vec<usize> = xs.iter().map(|&x| quantize(x, &book)).collect();
    Ok((idx.windows(2).all(|w| w[0] <= w[1]), format!("{} levels", book.len())))
}

fn zero_interference(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let cfg = NetworkConfig::new(4, 7, 1, 0.1)?;
    let mut worst = 0.0f64;
    for alpha in 2..=4 {
        let set = enumerate_candidates(&cfg, &[alpha])?;
        for _ in 0..20 {
            let r = generate_rayleigh(&cfg, rng.random())?;
            let sel: &Selection = &set.candidates[rng.random_range(0..set.n_g())];
            let rep = evaluate(&r, &design_beams(&r, sel)?)?;
            for u in sel.free() {
                let k = cfg.user_index(*u);
                worst = worst.max(rep.interference[k] / rep.desired[k]);
            }
        }
    }
    Ok((worst <= 1e-12, format!("worst interference/desired {worst:.3e}")))
}

fn protocol_ledgers(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let cfg = NetworkConfig::new(3, 5, 1, 0.5)?;
    let alphas = [2, 3];
    let books = CodebookSet::train(3, 0.5, &alphas, 3, &CodebookCache::new())?;
    let r = generate_rayleigh(&cfg, rng.random())?;
    let c = run_centralized(&r, &alphas, RateCodec::Quantized(&books))?;
    let d = run_decentralized(&r, &alphas, RateCodec::Quantized(&books))?;
    let m = crate::protocol::entries_per_bs(&enumerate_candidates(&cfg, &alphas)?, 0);
    let ok = c.ledger.total_bits() == s_central(3, 5, m * 3)
        && d.ledger.total_bits() == s_decentral(5, m * 3)
        && c.chosen == d.chosen;
    Ok((ok, format!("{} / {} bits", c.ledger.total_bits(), d.ledger.total_bits())))
}

/// Runs every check with a fixed seed.
pub fn selftest(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check("incomplete-gamma recurrence", gamma_recurrence(&mut rng)),
        check("null-space beam beats random search", svd_beats_random(&mut rng)),
        check("quantizer monotone", quantizer_monotone(&mut rng)),
        check("zero interference for F", zero_interference(&mut rng)),
        check("ledger totals and agreement", protocol_ledgers(&mut rng)),
    ]
}
