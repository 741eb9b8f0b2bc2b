use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense complex column vector (a channel or a beam).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexVec(Vec<Complex64>);

impl ComplexVec {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    /// Canonical basis vector `e_k`.
    pub fn basis(len: usize, k: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Inner product `selfᴴ · other`.
    pub fn dot(&self, other: &ComplexVec) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|selfᴴ · other|²`, the power a beam `other` delivers through channel `self`.
    pub fn gain(&self, other: &ComplexVec) -> f64 {
        self.dot(other).norm_sqr()
    }

    pub fn scale(&self, factor: Complex64) -> ComplexVec {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn scale_real(&self, factor: f64) -> ComplexVec {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    /// Returns the unit-norm copy, or `None` for a (numerically) zero vector.
    pub fn normalized(&self) -> Option<ComplexVec> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self.scale_real(1.0 / n))
        } else {
            None
        }
    }

    pub fn add_scaled(&mut self, other: &ComplexVec, factor: Complex64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b * factor;
        }
    }

    pub(crate) fn check_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }
}

impl std::ops::Index<usize> for ComplexVec {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for ComplexVec {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

impl From<Vec<Complex64>> for ComplexVec {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix from {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Diagonal matrix with real entries.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Stacks `hᴴ` for each channel as a row, giving `G` with `‖G w‖² = Σ |hᴴ w|²`.
    pub fn from_conj_rows<'a, I>(channels: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a ComplexVec>,
    {
        let mut data = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for h in channels {
            match cols {
                None => cols = Some(h.len()),
                Some(c) if c != h.len() => {
                    return Err(Error::DimensionMismatch(format!(
                        "channel of length {} stacked with length {c}",
                        h.len()
                    )))
                }
                _ => {}
            }
            data.extend(h.as_slice().iter().map(|z| z.conj()));
            rows += 1;
        }
        Self::from_row_major(rows, cols.unwrap_or(0), data)
    }

    /// `Σ h hᴴ + diag_load · I` over the given channels.
    pub fn gram_plus_identity<'a, I>(dim: usize, channels: I, diag_load: f64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a ComplexVec>,
    {
        let mut m = Self::identity(dim);
        for z in m.data.iter_mut() {
            *z *= diag_load;
        }
        for h in channels {
            if h.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "channel of length {} in {dim}-dimensional Gram matrix",
                    h.len()
                )));
            }
            for r in 0..dim {
                for c in 0..dim {
                    m.data[r * dim + c] += h[r] * h[c].conj();
                }
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn mul_vec(&self, v: &ComplexVec) -> ComplexVec {
        debug_assert_eq!(self.cols, v.len());
        let out = (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v.as_slice())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        ComplexVec::new(out)
    }

    pub fn scale_real(&self, factor: f64) -> ComplexMat {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Largest `|a_ij − conj(a_ji)|`; zero for an exactly Hermitian matrix.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn column(&self, c: usize) -> ComplexVec {
        ComplexVec::new((0..self.rows).map(|r| self[(r, c)]).collect())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}
