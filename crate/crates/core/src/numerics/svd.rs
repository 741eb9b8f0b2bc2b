//! One-sided (Hestenes) Jacobi SVD for small complex matrices.
//!
//! Only right singular vectors are needed here. One-sided Jacobi computes the
//! small singular values with absolute error `O(eps·‖G‖)`, so null-space
//! vectors leave residuals `‖G v‖² ~ eps²·‖G‖²` rather than the `eps·‖G‖²`
//! one gets from an eigendecomposition of `GᴴG`.

use num_complex::Complex64;

use super::complex::{ComplexMat, ComplexVec};
use crate::{Error, Result};

const MAX_SWEEPS: usize = 80;
const ORTHO_TOL: f64 = 1e-15;

/// Right singular pairs of a matrix, ordered by descending singular value.
#[derive(Debug, Clone)]
pub struct RightSingular {
    pub values: Vec<f64>,
    pub vectors: Vec<ComplexVec>,
}

pub fn right_singular_pairs(g: &ComplexMat) -> Result<RightSingular> {
    if !g.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    let (m, n) = (g.rows(), g.cols());
    let mut a: Vec<Vec<Complex64>> = (0..n).map(|c| g.column(c).into_inner()).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n).map(|c| ComplexVec::basis(n, c).into_inner()).collect();
    // columns this small are rounding noise; rotating them only churns V
    let floor = (f64::EPSILON * f64::EPSILON) * g.frobenius_sqr();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                let abs_gamma = gamma.norm();
                if abs_gamma == 0.0 || alpha.min(beta) <= floor || abs_gamma <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase_conj = (gamma / abs_gamma).conj();
                let zeta = (beta - alpha) / (2.0 * abs_gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, m, phase_conj, c, s);
                rotate(&mut v, p, q, n, phase_conj, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal singular values keep decomposition order
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    Ok(RightSingular {
        values: order.iter().map(|&i| sigma[i]).collect(),
        vectors: order.iter().map(|&i| ComplexVec::new(v[i].clone())).collect(),
    })
}

fn rotate(cols: &mut [Vec<Complex64>], p: usize, q: usize, len: usize, phase_conj: Complex64, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for k in 0..len {
        let x = cp[k];
        let y = cq[k] * phase_conj;
        cp[k] = x * c - y * s;
        cq[k] = x * s + y * c;
    }
}

/// Unit vector minimizing `‖g·w‖²`: the right singular vector of the smallest
/// singular value. Exact ties resolve to the later vector in decomposition order.
pub fn smallest_right_singular_vector(g: &ComplexMat) -> Result<ComplexVec> {
    if g.cols() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "need at least 2 columns, got {}",
            g.cols()
        )));
    }
    let svd = right_singular_pairs(g)?;
    Ok(svd.vectors.into_iter().last().expect("cols >= 2"))
}

/// Orthonormal basis for the `dim` weakest right singular directions of `g`
/// (the null space when `g` has full row rank and `dim = cols − rows`).
pub fn weakest_subspace(g: &ComplexMat, dim: usize) -> Result<Vec<ComplexVec>> {
    if dim == 0 || dim > g.cols() {
        return Err(Error::DimensionMismatch(format!(
            "subspace of dimension {dim} in {} columns",
            g.cols()
        )));
    }
    let svd = right_singular_pairs(g)?;
    let skip = g.cols() - dim;
    Ok(svd.vectors.into_iter().skip(skip).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_picks_last_axis() {
        let g = ComplexMat::diag(&[3.0, 2.0, 1.0]);
        let w = smallest_right_singular_vector(&g).unwrap();
        assert!((w[2].norm() - 1.0).abs() < 1e-14);
        assert!(w[0].norm() < 1e-14 && w[1].norm() < 1e-14);
        let svd = right_singular_pairs(&g).unwrap();
        assert_eq!(svd.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn single_row_null_space() {
        let h = ComplexVec::new(vec![c(1.0, 0.5), c(-0.3, 2.0), c(0.7, -1.1)]);
        let g = ComplexMat::from_conj_rows([&h]).unwrap();
        let w = smallest_right_singular_vector(&g).unwrap();
        assert!((w.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(h.dot(&w).norm() <= 1e-10 * h.norm());
    }

    #[test]
    fn right_vectors_are_orthonormal() {
        let rows = vec![
            ComplexVec::new(vec![c(1.0, 2.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.3, 0.3)]),
            ComplexVec::new(vec![c(0.1, -2.0), c(1.0, 1.0), c(2.0, 0.5), c(0.0, -0.7)]),
        ];
        let g = ComplexMat::from_conj_rows(&rows).unwrap();
        let svd = right_singular_pairs(&g).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d = svd.vectors[i].dot(&svd.vectors[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - c(expect, 0.0)).norm() < 1e-13, "{i} {j} {d}");
            }
        }
        assert!(svd.values[2] < 1e-14 && svd.values[3] < 1e-14);
    }

    #[test]
    fn rejects_non_finite_and_narrow() {
        let g = ComplexMat::from_row_major(1, 2, vec![c(f64::NAN, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(smallest_right_singular_vector(&g), Err(Error::NonFinite(_))));
        let g = ComplexMat::from_row_major(2, 1, vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            smallest_right_singular_vector(&g),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
