mod common;

use common::{ks_critical_1pct, ks_statistic, simpson, simpson_to_infinity};
use coordbeam::harness::rate_samples;
use coordbeam::quantization::{
    dequantize, exchange_bits_per_bs, quantize, rate_cdf, rate_pdf, train_lloyd_max, Codebook, CodebookCache,
    CodebookSet, RatePdfParams,
};
use proptest::prelude::*;

fn params(n_t: usize, alpha: usize, n0: f64) -> RatePdfParams {
    RatePdfParams::new(n_t, alpha, n0).unwrap()
}

fn pdf(p: &RatePdfParams) -> impl Fn(f64) -> f64 + '_ {
    move |t| rate_pdf(t, p).unwrap()
}

/// Cell edges `0, b₁, …, t_max` of a codebook.
fn edges(book: &Codebook) -> Vec<f64> {
    let mut e = vec![0.0];
    e.extend(&book.boundaries);
    e.push(book.params.t_max());
    e
}

fn mse_by_quadrature(book: &Codebook) -> f64 {
    let f = pdf(&book.params);
    let e = edges(book);
    book.levels
        .iter()
        .enumerate()
        .map(|(j, &c)| simpson(&|t: f64| (t - c).powi(2) * f(t), e[j], e[j + 1], 1e-12))
        .sum()
}

#[test]
fn pdf_normalizes() {
    for p in [params(4, 4, 1.0), params(4, 3, 1.0), params(4, 2, 0.1), params(8, 3, 0.01)] {
        let total = simpson_to_infinity(&pdf(&p), 0.0, 1e-12);
        assert!((total - 1.0).abs() < 1e-6, "{p:?}: {total}");
    }
}

#[test]
fn pdf_vanishes_at_zero_with_spare_dimensions() {
    assert_eq!(rate_pdf(0.0, &params(4, 3, 1.0)).unwrap(), 0.0);
    assert_eq!(rate_pdf(0.0, &params(4, 2, 0.1)).unwrap(), 0.0);
    assert!(rate_pdf(0.0, &params(4, 4, 1.0)).unwrap() > 0.0);
    assert_eq!(rate_pdf(5000.0, &params(4, 3, 1.0)).unwrap(), 0.0);
    assert_eq!(rate_cdf(5000.0, &params(4, 3, 1.0)).unwrap(), 1.0);
    assert!(rate_pdf(-0.1, &params(4, 3, 1.0)).is_err());
    assert!(rate_cdf(-0.1, &params(4, 3, 1.0)).is_err());
}

#[test]
fn cdf_is_integral_of_pdf() {
    let p = params(4, 2, 0.5);
    for t in [0.3, 1.0, 2.5, 4.0] {
        let integral = simpson(&pdf(&p), 0.0, t, 1e-12);
        assert!((integral - rate_cdf(t, &p).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn simulated_rates_follow_the_density() {
    for alpha in [2, 3, 4] {
        let samples = rate_samples(4, 7, alpha, 1.0, 100_000, 77).unwrap();
        let p = params(4, alpha, 1.0);
        let d = ks_statistic(&samples, |t| rate_cdf(t, &p).unwrap());
        assert!(d < ks_critical_1pct(samples.len()), "alpha {alpha}: KS {d}");
    }
}

#[test]
fn one_bit_codebook_is_two_conditional_means() {
    let p = params(4, 3, 1.0);
    let book = train_lloyd_max(&p, 1).unwrap();
    assert_eq!(book.boundaries.len(), 1);
    let f = pdf(&p);
    let e = edges(&book);
    for j in 0..2 {
        let mass = simpson(&f, e[j], e[j + 1], 1e-13);
        let mean = simpson(&|t: f64| t * f(t), e[j], e[j + 1], 1e-13) / mass;
        assert!((book.levels[j] - mean).abs() <= 1e-6 * mean);
    }
    assert!((book.boundaries[0] - 0.5 * (book.levels[0] + book.levels[1])).abs() < 1e-15);
}

#[test]
fn fixed_point_conditions_hold() {
    for (p, n_f) in [(params(4, 3, 1.0), 3), (params(4, 2, 0.1), 5), (params(4, 4, 10.0), 2), (params(2, 1, 0.1), 8)] {
        let book = train_lloyd_max(&p, n_f).unwrap();
        assert_eq!(book.len(), 1 << n_f);
        assert!(book.fixed_point_residual() <= 1e-6);
        let f = pdf(&p);
        let e = edges(&book);
        for j in 0..book.len() {
            let mass = simpson(&f, e[j], e[j + 1], 1e-13);
            let mean = simpson(&|t: f64| t * f(t), e[j], e[j + 1], 1e-13) / mass;
            assert!((book.levels[j] - mean).abs() <= 1e-6 * mean, "{p:?} n_f={n_f} cell {j}");
        }
    }
}

#[test]
fn distortion_decreases_with_bits() {
    let p = params(4, 3, 1.0);
    let mses: Vec<f64> = (2..=5).map(|n_f| mse_by_quadrature(&train_lloyd_max(&p, n_f).unwrap())).collect();
    assert!(mses.windows(2).all(|w| w[1] < w[0]), "{mses:?}");
}

#[test]
fn library_mse_matches_quadrature() {
    let book = train_lloyd_max(&params(4, 2, 0.3), 3).unwrap();
    let ours = book.mse();
    let oracle = mse_by_quadrature(&book);
    assert!(((ours - oracle) / oracle).abs() < 1e-6);
}

#[test]
fn beats_uniform_quantizer() {
    for (p, n_f) in [(params(4, 3, 1.0), 2), (params(4, 3, 1.0), 4), (params(4, 2, 0.1), 3)] {
        let book = train_lloyd_max(&p, n_f).unwrap();
        let n = 1usize << n_f;
        let (lo, hi) = (p.quantile(0.0005), p.quantile(0.9995));
        let width = (hi - lo) / n as f64;
        let levels: Vec<f64> = (0..n).map(|j| lo + (j as f64 + 0.5) * width).collect();
        let mut e = vec![0.0];
        e.extend((1..n).map(|j| lo + j as f64 * width));
        e.push(p.t_max());
        let f = pdf(&p);
        let uniform: f64 = (0..n)
            .map(|j| simpson(&|t: f64| (t - levels[j]).powi(2) * f(t), e[j], e[j + 1], 1e-12))
            .sum();
        assert!(mse_by_quadrature(&book) <= uniform, "{p:?} n_f={n_f}");
    }
}

#[test]
fn empirical_distortion_matches_prediction() {
    let book = train_lloyd_max(&params(4, 3, 1.0), 3).unwrap();
    let samples = rate_samples(4, 7, 3, 1.0, 100_000, 5).unwrap();
    let empirical = samples
        .iter()
        .map(|&r| (r - dequantize(quantize(r, &book), &book).unwrap()).powi(2))
        .sum::<f64>()
        / samples.len() as f64;
    assert!((empirical / book.mse() - 1.0).abs() < 0.05, "{empirical} vs {}", book.mse());
}

#[test]
fn round_trip_and_tails() {
    let book = train_lloyd_max(&params(4, 3, 1.0), 3).unwrap();
    for (j, &c) in book.levels.iter().enumerate() {
        assert_eq!(quantize(c, &book), j);
        assert_eq!(dequantize(quantize(c, &book), &book).unwrap(), c);
    }
    assert_eq!(quantize(0.0, &book), 0);
    assert_eq!(quantize(1e6, &book), book.len() - 1);
    assert!(dequantize(book.len(), &book).is_err());
}

#[test]
fn bits_per_bs() {
    assert_eq!(exchange_bits_per_bs(21, 2), 42);
    assert_eq!(exchange_bits_per_bs(1, 1), 1);
    assert_eq!(exchange_bits_per_bs(7, 5), 35);
}

#[test]
fn training_rejects_bad_parameters() {
    assert!(train_lloyd_max(&params(4, 3, 1.0), 0).is_err());
    assert!(train_lloyd_max(&params(4, 3, 1.0), 13).is_err());
    assert!(RatePdfParams::new(4, 5, 1.0).is_err());
    assert!(RatePdfParams::new(4, 0, 1.0).is_err());
    assert!(RatePdfParams::new(4, 2, -1.0).is_err());
}

#[test]
fn codebook_json_round_trip_and_validation() {
    let book = train_lloyd_max(&params(4, 2, 0.5), 2).unwrap();
    assert_eq!(Codebook::from_json(&book.to_json().unwrap()).unwrap(), book);
    let mut bad = book.clone();
    bad.levels.swap(0, 1);
    assert!(Codebook::from_json(&serde_json::to_string(&bad).unwrap()).is_err());
}

#[test]
fn cache_and_sets() {
    let cache = CodebookCache::new();
    let set = CodebookSet::train(4, 1.0, &[2, 3], 2, &cache).unwrap();
    assert_eq!(cache.len(), 2);
    let again = CodebookSet::train(4, 1.0, &[3], 2, &cache).unwrap();
    assert_eq!(cache.len(), 2);
    assert_eq!(set.get(3).unwrap(), again.get(3).unwrap());
    assert!(set.get(4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quantizer_is_monotone(a in 0.0f64..20.0, b in 0.0f64..20.0, n_f in 1u32..6) {
        let book = train_lloyd_max(&params(4, 3, 1.0), n_f).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo, &book) <= quantize(hi, &book));
        prop_assert_eq!(quantize(lo, &book), quantize(lo, &book));
    }
}
