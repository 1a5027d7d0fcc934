//! Small dense linear-algebra layer: column-major matrices, a symmetric
//! eigensolver (faer), a Taylor matrix exponential and compensated sums.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "column-major buffer has the wrong length");
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Leading `rows × cols` block.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        Mat::from_fn(rows.len(), cols.len(), |i, j| self[(rows.start + i, cols.start + j)])
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + j * self.rows]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + j * self.rows]
    }
}

impl Mat<f64> {
    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// `selfᵀ · x`.
    pub fn tr_mul_vec<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|j| {
                self.col(j)
                    .iter()
                    .zip(x)
                    .fold(T::default(), |acc, (&o, &v)| acc + v * o)
            })
            .collect()
    }

    /// `self · x`.
    pub fn mul_vec<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![T::default(); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o = *o + xj * a;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Mat<f64>) -> Mat<f64> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let oc = out.col_mut(j);
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b == 0.0 {
                    continue;
                }
                for (o, &a) in oc.iter_mut().zip(self.col(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn to_complex(&self) -> Mat<C64> {
        Mat::from_col_major(self.rows, self.cols, self.data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }
}

impl Mat<C64> {
    pub fn identity_c(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn matmul(&self, other: &Mat<C64>) -> Mat<C64> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let oc = out.col_mut(j);
            for k in 0..self.cols {
                let b = other[(k, j)];
                for (o, &a) in oc.iter_mut().zip(self.col(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * xj;
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Mat<C64> {
        Mat::from_col_major(self.rows, self.cols, self.data.iter().map(|&x| x * s).collect())
    }

    pub fn add(&self, other: &Mat<C64>) -> Mat<C64> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_col_major(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn adjoint(&self) -> Mat<C64> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Eigenvalue selection for [`sym_eigen`].
#[derive(Debug, Clone, Copy)]
pub enum EigenRange {
    All,
    /// Eigenvalues in the half-open interval `(lower, upper]`.
    Values { lower: f64, upper: f64 },
}

/// Eigenpairs of a real symmetric matrix (lower triangle referenced), ascending.
pub fn sym_eigen(a: &Mat<f64>, range: EigenRange) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "sym_eigen needs a square matrix");
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let fa = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    let evd = fa
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let selected: Vec<usize> = (0..n)
        .filter(|&k| match range {
            EigenRange::All => true,
            EigenRange::Values { lower, upper } => s[k] > lower && s[k] <= upper,
        })
        .collect();
    let values = selected.iter().map(|&k| s[k]).collect();
    let vectors = Mat::from_fn(n, selected.len(), |i, j| u[(i, selected[j])]);
    Ok((values, vectors))
}

/// `exp(a)` by a Taylor series with scaling and squaring.
///
/// Slow but simple; used as an independent reference for propagators.
pub fn expm_taylor(a: &Mat<C64>) -> Mat<C64> {
    let n = a.rows();
    let norm = a.norm_inf();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a.scale(C64::new(0.5f64.powi(squarings as i32), 0.0));
    let mut result = Mat::identity_c(n);
    let mut term = Mat::identity_c(n);
    for k in 1..=40 {
        term = term.matmul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
        result = result.add(&term);
        if term.norm_inf() < 1e-18 * result.norm_inf() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated complex sum (real and imaginary parts accumulated separately).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    #[inline]
    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    neumaier_sum(v.iter().map(|z| z.norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_small_symmetric_matrix() {
        let a = Mat::from_fn(3, 3, |i, j| match (i as i32 - j as i32).abs() {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let (w, v) = sym_eigen(&a, EigenRange::All).unwrap();
        // eigenvalues of the 3-point Dirichlet Laplacian: 2 - 2 cos(kπ/4)
        for (k, &e) in w.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 4.0).cos();
            assert!((e - exact).abs() < 1e-13);
        }
        let av = a.matmul(&v);
        for j in 0..3 {
            for i in 0..3 {
                assert!((av[(i, j)] - w[j] * v[(i, j)]).abs() < 1e-13);
            }
        }
        let (w_low, v_low) = sym_eigen(&a, EigenRange::Values { lower: -1.0, upper: 1.0 }).unwrap();
        assert_eq!(w_low.len(), 1);
        assert_eq!(v_low.cols(), 1);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 2.3;
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => C64::new(-t, 0.0),
            (1, 0) => C64::new(t, 0.0),
            _ => C64::new(0.0, 0.0),
        });
        let e = expm_taylor(&a);
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-13);
        assert!((e[(0, 1)].re + t.sin()).abs() < 1e-13);
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s = neumaier_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }
}
