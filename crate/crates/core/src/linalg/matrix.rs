//! Dense column-major matrices over `C64` and `f64`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// |re| + |im|, the cheap modulus used throughout the QR code.
#[inline]
pub(crate) fn cabs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Dense complex matrix stored column by column.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from column-major storage, rejecting wrong lengths and non-finite entries.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "column-major data length",
                expected: rows * cols,
                got: data.len(),
            });
        }
        let m = Self { rows, cols, data };
        m.check_finite("matrix construction")?;
        Ok(m)
    }

    /// Build from a list of rows. All rows must have equal length and finite entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        for r in rows {
            if r.len() != nc {
                return Err(Error::DimensionMismatch {
                    context: "row length",
                    expected: nc,
                    got: r.len(),
                });
            }
        }
        let m = Self::from_fn(nr, nc, |i, j| rows[i][j]);
        m.check_finite("matrix construction")?;
        Ok(m)
    }

    /// Build from real rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let c: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&c)
    }

    pub fn from_diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Column vector (n x 1).
    pub fn column_vector(values: &[C64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[C64]) {
        self.column_mut(j).copy_from_slice(values);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn check_finite(&self, context: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { context })
        }
    }

    pub(crate) fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| self.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0; self.rows];
        for j in 0..self.cols {
            for (s, z) in sums.iter_mut().zip(self.column(j)) {
                *s += z.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ‖A − Aᴴ‖_F.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.rows, other.cols);
        Self::from_fn(self.rows * p, self.cols * q, |i, j| {
            self[(i / p, j / q)] * other[(i % p, j % q)]
        })
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let oc = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = other.data[j * other.rows + k];
                if b == ZERO {
                    continue;
                }
                let ac = &self.data[k * self.rows..(k + 1) * self.rows];
                for (o, &a) in oc.iter_mut().zip(ac) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product; panics on mismatch.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        let mut y = vec![ZERO; self.rows];
        for (k, &xk) in x.iter().enumerate() {
            if xk == ZERO {
                continue;
            }
            for (yi, &a) in y.iter_mut().zip(self.column(k)) {
                *yi += a * xk;
            }
        }
        y
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    /// Hilbert–Schmidt inner product Tr(selfᴴ other).
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn real_part(&self) -> RealMatrix {
        RealMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].re)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

macro_rules! elementwise {
    ($tr:ident, $f:ident, $op:tt, $tra:ident, $fa:ident) => {
        impl $tr<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
                ComplexMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $tr for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$f(&rhs)
            }
        }
        impl $tra<&ComplexMatrix> for ComplexMatrix {
            fn $fa(&mut self, rhs: &ComplexMatrix) {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
                for (a, b) in self.data.iter_mut().zip(&rhs.data) {
                    *a = *a $op b;
                }
            }
        }
    };
}

elementwise!(Add, add, +, AddAssign, add_assign);
elementwise!(Sub, sub, -, SubAssign, sub_assign);

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        self.matmul(&rhs)
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, s: C64) -> ComplexMatrix {
        self.scale(s)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, s: f64) -> ComplexMatrix {
        self.scale_real(s)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Dense real matrix stored column by column.
#[derive(Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != nc) {
            return Err(Error::DimensionMismatch {
                context: "row length",
                expected: nc,
                got: r.len(),
            });
        }
        let m = Self::from_fn(nr, nc, |i, j| rows[i][j]);
        if m.data.iter().all(|x| x.is_finite()) {
            Ok(m)
        } else {
            Err(Error::NonFinite {
                context: "matrix construction",
            })
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)]).collect())
            .collect()
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| C64::new(self[(i, j)], 0.0))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for (k, &xk) in x.iter().enumerate() {
            let col = &self.data[k * self.rows..(k + 1) * self.rows];
            for (yi, &a) in y.iter_mut().zip(col) {
                *yi += a * xk;
            }
        }
        y
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl fmt::Debug for RealMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RealMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>+.6e}  ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨a, b⟩ = Σ conj(a_i) b_i.
pub fn vec_dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn index_is_column_major() {
        let m = ComplexMatrix::from_fn(2, 3, |i, j| c((10 * i + j) as f64, 0.0));
        assert_eq!(m.as_slice()[1], c(10.0, 0.0));
        assert_eq!(m.as_slice()[2], c(1.0, 0.0));
        assert_eq!(m[(1, 2)], c(12.0, 0.0));
    }

    #[test]
    fn construction_rejects_nan_and_bad_length() {
        assert!(ComplexMatrix::from_column_major(2, 2, vec![ZERO; 3]).is_err());
        let bad = ComplexMatrix::from_rows(&[vec![c(f64::NAN, 0.0)]]);
        assert!(matches!(bad, Err(Error::NonFinite { .. })));
        assert!(ComplexMatrix::from_rows(&[vec![ONE, ONE], vec![ONE]]).is_err());
    }

    #[test]
    fn matmul_and_kron_small() {
        let a = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = ComplexMatrix::from_rows(&[vec![c(0.0, 1.0), ONE], vec![ZERO, c(2.0, 0.0)]]).unwrap();
        let p = &a * &b;
        assert_eq!(p[(0, 0)], c(0.0, 1.0));
        assert_eq!(p[(0, 1)], c(5.0, 0.0));
        assert_eq!(p[(1, 0)], c(0.0, 3.0));
        assert_eq!(p[(1, 1)], c(11.0, 0.0));
        let k = a.kron(&ComplexMatrix::identity(2));
        assert_eq!(k[(2, 0)], c(3.0, 0.0));
        assert_eq!(k[(3, 1)], c(3.0, 0.0));
        assert_eq!(k[(2, 1)], ZERO);
    }

    #[test]
    fn norms() {
        let a = ComplexMatrix::from_real_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.norm_one(), 6.0);
        assert_eq!(a.norm_inf(), 7.0);
        assert!((a.frobenius_norm() - 30f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.trace(), c(5.0, 0.0));
    }

    #[test]
    fn adjoint_and_hermitian_defect() {
        let h = ComplexMatrix::from_rows(&[vec![ONE, c(0.0, -1.0)], vec![c(0.0, 1.0), ZERO]]).unwrap();
        assert_eq!(h.hermitian_defect(), 0.0);
        assert_eq!(h.adjoint(), h);
        let nh = ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ZERO, ZERO]]).unwrap();
        assert!((nh.hermitian_defect() - 2f64.sqrt()).abs() < 1e-15);
    }
}
