use num_complex::Complex64;

use super::complex::{ComplexMat, ComplexVec};
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;

/// Lower-triangular Cholesky factor `L` with `B = L Lᴴ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<Complex64>,
}

impl Cholesky {
    pub fn factor(b: &ComplexMat) -> Result<Self> {
        if b.rows() != b.cols() {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky of {}x{} matrix",
                b.rows(),
                b.cols()
            )));
        }
        if !b.is_finite() {
            return Err(Error::NonFinite("matrix"));
        }
        let n = b.rows();
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = b[(j, j)].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let d = d.sqrt();
            l[j * n + j] = Complex64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut s = b[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, rhs: &ComplexVec) -> Result<ComplexVec> {
        let n = self.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for {n}x{n} system",
                rhs.len()
            )));
        }
        // forward: L y = rhs
        let mut y = rhs.clone().into_inner();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        // backward: Lᴴ x = y
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i].conj() * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        Ok(ComplexVec::new(y))
    }
}

/// Unit vector maximizing `|hᴴw|² / (wᴴ b w)` for Hermitian positive-definite `b`.
///
/// The numerator `h hᴴ` has rank one, so the dominant generalized eigenvector
/// is `b⁻¹h` up to scale; no eigendecomposition is needed.
pub fn dominant_rayleigh_vector(h: &ComplexVec, b: &ComplexMat) -> Result<ComplexVec> {
    if b.rows() != b.cols() || b.rows() != h.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against {}x{} matrix",
            h.len(),
            b.rows(),
            b.cols()
        )));
    }
    h.check_finite("channel")?;
    let scale = (b.frobenius_sqr() / b.rows() as f64).sqrt().max(f64::MIN_POSITIVE);
    let defect = b.hermitian_defect();
    if defect > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let x = Cholesky::factor(b)?.solve(h)?;
    x.normalized().ok_or(Error::InvalidArgument(
        "zero vector has no dominant direction".into(),
    ))
}
