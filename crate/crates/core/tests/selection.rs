mod common;

use common::simpson_to_infinity;
use coordbeam::beamforming::{local_rate_terms, Selection};
use coordbeam::channel::{generate_rayleigh, NetworkConfig, UserId};
use coordbeam::selection::{
    alpha_max, binomial, choose_selection, enumerate_candidates, rbar_global, score_candidates, total_selection_count,
    CandidateSet, RateTable,
};
use statrs::distribution::{ChiSquared, Continuous};

fn cfg(n_t: usize, n_c: usize, n_u: usize) -> NetworkConfig {
    NetworkConfig::new(n_t, n_c, n_u, 1.0).unwrap()
}

fn exact_table(r: &coordbeam::channel::ChannelRealization, set: &CandidateSet) -> RateTable {
    let mut table = RateTable::new(set);
    for bs in 0..r.config().n_c {
        let mine = set.involving(bs);
        if mine.is_empty() {
            continue;
        }
        for t in local_rate_terms(&r.local_csi(bs).unwrap(), &mine).unwrap() {
            table.set(t.candidate, t.user, t.rate).unwrap();
        }
    }
    table
}

#[test]
fn candidate_counts() {
    assert_eq!(enumerate_candidates(&cfg(3, 4, 1), &[1, 3]).unwrap().n_g(), 8);
    assert_eq!(enumerate_candidates(&cfg(3, 4, 3), &[2, 3]).unwrap().n_g(), 70);
    let singles = enumerate_candidates(&cfg(2, 5, 1), &[1]).unwrap();
    assert_eq!(singles.n_g(), 5);
    assert!(singles.candidates.iter().enumerate().all(|(c, s)| s.candidate == c && s.alpha() == 1));
    assert_eq!(total_selection_count(&cfg(4, 7, 1)), 7 + 21 + 35 + 35);
    assert_eq!(binomial(12, 2), 66);
}

#[test]
fn multiuser_full_alpha_needs_divisibility() {
    assert!(enumerate_candidates(&cfg(3, 4, 2), &[3]).is_err());
    assert!(enumerate_candidates(&cfg(3, 4, 2), &[2]).is_ok());
    assert!(enumerate_candidates(&cfg(4, 7, 1), &[5]).is_err());
    assert!(enumerate_candidates(&cfg(4, 7, 1), &[0]).is_err());
    assert!(enumerate_candidates(&cfg(4, 7, 1), &[]).is_err());
}

#[test]
fn largest_feasible_alpha() {
    assert_eq!(alpha_max(4, 4, 1), 4);
    assert_eq!(alpha_max(4, 7, 1), 3);
    assert_eq!(alpha_max(4, 2, 1), 2);
    assert_eq!(alpha_max(4, 2, 2), 4);
    assert_eq!(alpha_max(4, 3, 2), 3);
}

#[test]
fn bound_vanishes_at_full_alpha() {
    for n0 in [10.0, 1.0, 0.01] {
        assert_eq!(rbar_global(4, 7, 4, n0, 1).unwrap(), 0.0);
    }
}

fn bound_by_quadrature(n_t: usize, n: usize, alpha: usize, n0: f64) -> f64 {
    // 2·E[1/(X + N₀)], X ~ χ²(2(N−1)): E of the desired gain over the interference-plus-noise term
    let chi = ChiSquared::new(2.0 * (n as f64 - 1.0)).unwrap();
    let e_inv = simpson_to_infinity(&|x: f64| if x == 0.0 { 0.0 } else { chi.pdf(x) / (x + n0) }, 0.0, 1e-13);
    (n - alpha) as f64 * (1.0 + (n_t - alpha) as f64 * 2.0 * e_inv).log2()
}

#[test]
fn bound_matches_quadrature() {
    for (n_t, n_c, alpha, n0) in [(4, 7, 3, 1.0), (4, 7, 1, 10.0), (4, 7, 2, 0.1), (8, 12, 5, 0.5), (3, 4, 1, 2.0)] {
        let ours = rbar_global(n_t, n_c, alpha, n0, 1).unwrap();
        let oracle = bound_by_quadrature(n_t, n_c, alpha, n0);
        assert!(((ours - oracle) / oracle).abs() <= 1e-8, "{n_t},{n_c},{alpha},{n0}: {ours} vs {oracle}");
    }
    // multiuser replaces N_C by N_C·N_U
    let mu = rbar_global(3, 4, 2, 0.7, 2).unwrap();
    assert!(((mu - bound_by_quadrature(3, 8, 2, 0.7)) / mu).abs() <= 1e-8);
}

#[test]
fn bound_nonincreasing_in_alpha() {
    for n_c in 3..=12 {
        for n_t in 2..n_c {
            for n0 in [100.0, 10.0, 1.0, 0.1, 0.01, 1e-4] {
                let values: Vec<f64> = (1..=n_t).map(|a| rbar_global(n_t, n_c, a, n0, 1).unwrap()).collect();
                assert!(values.windows(2).all(|w| w[1] <= w[0]), "{n_t},{n_c},{n0}: {values:?}");
            }
        }
    }
}

#[test]
fn bound_saturates_at_high_snr() {
    // the global term stays bounded as N₀ → 0: it tends to (N−α)·log₂(1 + (N_T−α)/(N−2))
    for alpha in 1..4 {
        let limit = (7 - alpha) as f64 * (1.0 + (4 - alpha) as f64 / 5.0).log2();
        let v = rbar_global(4, 7, alpha, 1e-6, 1).unwrap();
        assert!(v <= limit && (limit - v) / limit < 1e-5);
        assert!(rbar_global(4, 7, alpha, 1e-3, 1).unwrap() <= v);
    }
}

#[test]
fn bound_rejects_bad_parameters() {
    assert!(rbar_global(4, 7, 0, 1.0, 1).is_err());
    assert!(rbar_global(4, 7, 5, 1.0, 1).is_err());
    assert!(rbar_global(4, 7, 2, 0.0, 1).is_err());
    assert!(rbar_global(4, 7, 2, f64::INFINITY, 1).is_err());
}

#[test]
fn singleton_and_dominating_candidates() {
    let c = cfg(3, 4, 1);
    let set = CandidateSet { alphas: vec![1], candidates: vec![Selection::new(&c, 0, vec![UserId::cell(2)]).unwrap()] };
    let mut table = RateTable::new(&set);
    table.set(0, UserId::cell(2), 0.3).unwrap();
    assert_eq!(choose_selection(&set, &table, &c).unwrap().free(), &[UserId::cell(2)]);

    let set = enumerate_candidates(&c, &[2]).unwrap();
    let mut table = RateTable::new(&set);
    for (i, sel) in set.candidates.iter().enumerate() {
        for &u in sel.free() {
            table.set(i, u, if i == 4 { 5.0 } else { 1.0 }).unwrap();
        }
    }
    assert_eq!(choose_selection(&set, &table, &c).unwrap().candidate, 4);
}

#[test]
fn incomplete_table_is_an_error() {
    let c = cfg(3, 4, 1);
    let set = enumerate_candidates(&c, &[1, 2]).unwrap();
    let mut table = RateTable::new(&set);
    assert!(!table.is_scoreable(0));
    assert!(choose_selection(&set, &table, &c).is_err());
    assert!(table.set(0, UserId::cell(3), 1.0).is_err());
    assert!(table.set(999, UserId::cell(0), 1.0).is_err());
}

#[test]
fn matches_brute_force_score() {
    let c = NetworkConfig::new(3, 4, 1, 0.4).unwrap();
    let set = enumerate_candidates(&c, &[1, 2, 3]).unwrap();
    for seed in 0..50 {
        let r = generate_rayleigh(&c, seed).unwrap();
        let table = exact_table(&r, &set);
        assert!(table.is_complete());
        let chosen = choose_selection(&set, &table, &c).unwrap();
        // brute force: recompute every score from scratch, first maximum wins
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (i, sel) in set.candidates.iter().enumerate() {
            let mut score = bound_by_quadrature(3, 4, sel.alpha(), 0.4);
            if sel.alpha() == 3 {
                score = 0.0;
            }
            for &u in sel.free() {
                score += table.get(i, u).unwrap();
            }
            if score > best.1 + 1e-9 {
                best = (i, score);
            }
        }
        assert_eq!(chosen.candidate, best.0, "seed {seed}");
    }
}

#[test]
fn same_alpha_offset_does_not_move_argmax() {
    let c = NetworkConfig::new(4, 7, 1, 0.5).unwrap();
    let set = enumerate_candidates(&c, &[3]).unwrap();
    let r = generate_rayleigh(&c, 3).unwrap();
    let table = exact_table(&r, &set);
    let scores = score_candidates(&set, &table, &c).unwrap();
    let argmax = |xs: &[f64]| xs.iter().enumerate().fold(0, |b, (i, &x)| if x > xs[b] { i } else { b });
    let shifted: Vec<f64> = scores.iter().map(|s| s + 17.0).collect();
    assert_eq!(argmax(&scores), argmax(&shifted));
    assert_eq!(choose_selection(&set, &table, &c).unwrap().candidate, argmax(&scores));
}

#[test]
fn ties_go_to_the_first_candidate() {
    let c = cfg(3, 4, 1);
    let set = enumerate_candidates(&c, &[1]).unwrap();
    let mut table = RateTable::new(&set);
    for (i, sel) in set.candidates.iter().enumerate() {
        table.set(i, sel.free()[0], 2.0).unwrap();
    }
    assert_eq!(choose_selection(&set, &table, &c).unwrap().candidate, 0);
}
