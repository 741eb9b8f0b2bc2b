#![allow(dead_code)]

use coordbeam::beamforming::BeamformingSolution;
use coordbeam::channel::ChannelRealization;
use coordbeam::numerics::{ComplexMat, ComplexVec};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Adaptive Simpson quadrature with relative tolerance `rel`, written
/// independently of the library's integrator.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    // coarse midpoint sum sets the absolute scale
    let n = 4096;
    let h = (b - a) / n as f64;
    let scale: f64 = (0..n).map(|i| f(a + (i as f64 + 0.5) * h).abs()).sum::<f64>() * h;
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, rel * scale, 40)
}

/// `∫_a^∞ f` via `t = a + u/(1−u)`.
pub fn simpson_to_infinity<F: Fn(f64) -> f64>(f: &F, a: f64, rel: f64) -> f64 {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let t = a + u / (1.0 - u);
        f(t) / (1.0 - u).powi(2)
    };
    simpson(&g, 0.0, 1.0, rel)
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> ComplexVec {
    ComplexVec::new(
        (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect(),
    )
}

pub fn unit_vec<R: Rng>(rng: &mut R, n: usize) -> ComplexVec {
    let v = gaussian_vec(rng, n);
    let norm = v.norm();
    v.scale_real(1.0 / norm)
}

pub fn inner(a: &ComplexVec, b: &ComplexVec) -> Complex64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.conj() * y).sum()
}

/// `|aᴴb|²`.
pub fn gain(a: &ComplexVec, b: &ComplexVec) -> f64 {
    inner(a, b).norm_sqr()
}

pub fn mat_vec_sqr(g: &ComplexMat, w: &ComplexVec) -> f64 {
    g.mul_vec(w).norm_sqr()
}

/// Straight-line SINR of every user: desired over all other beams plus noise.
pub fn sinr_oracle(r: &ChannelRealization, sol: &BeamformingSolution) -> Vec<f64> {
    let cfg = r.config();
    let users: Vec<_> = cfg.users().collect();
    users
        .iter()
        .enumerate()
        .map(|(k, &u)| {
            let mut signal = 0.0;
            let mut noise = cfg.n0;
            for (v, &src) in users.iter().enumerate() {
                let p = gain(r.channel(src.cell, u), &sol.beams()[v]);
                if v == k {
                    signal = p;
                } else {
                    noise += p;
                }
            }
            signal / noise
        })
        .collect()
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at level 0.01.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
