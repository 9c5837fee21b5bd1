//! Small dense complex matrices: products, norms, singular values and
//! determinants.

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sweep cap for the Jacobi SVD.
pub const MAX_SWEEPS: usize = 64;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, " ")?;
            for c in 0..self.cols {
                let z = self.get(r, c);
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn shape_err(expected: impl Into<String>, got: impl Into<String>) -> Error {
    Error::Shape {
        expected: expected.into(),
        got: got.into(),
    }
}

impl<T: Real> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err(format!("{} entries", rows * cols), format!("{}", data.len())));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[T]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(shape_err("rectangular rows", "ragged rows"));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex::one();
        }
        m
    }

    pub fn diag(d: &[Complex<T>]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in d.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, z: Complex<T>) {
        self.data[r * self.cols + c] = z;
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(shape_err(
                format!("{} rows on the right", self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] = out.data[i * other.cols + j] + a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(shape_err(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn frobenius_norm_sq(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// Singular values in decreasing order, `min(rows, cols)` of them.
    pub fn singular_values(&self) -> Result<Vec<T>> {
        singular_values(self)
    }

    pub fn determinant(&self) -> Result<Complex<T>> {
        determinant(self)
    }

    /// Convert the scalar type.
    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(U::lit(z.re.to_f64().unwrap()), U::lit(z.im.to_f64().unwrap())))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixOp {
    Mul,
    Sub,
    ConjTranspose,
    FrobeniusNormSq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpOutput<T: Real> {
    Matrix(Matrix<T>),
    Scalar(T),
}

/// Dispatch a named operation. Unary operations ignore `b`.
pub fn matrix_ops<T: Real>(a: &Matrix<T>, b: &Matrix<T>, op: MatrixOp) -> Result<OpOutput<T>> {
    Ok(match op {
        MatrixOp::Mul => OpOutput::Matrix(a.mul(b)?),
        MatrixOp::Sub => OpOutput::Matrix(a.sub(b)?),
        MatrixOp::ConjTranspose => OpOutput::Matrix(a.conj_transpose()),
        MatrixOp::FrobeniusNormSq => OpOutput::Scalar(a.frobenius_norm_sq()),
    })
}

/// One-sided Jacobi SVD on columns. Returns singular values in decreasing
/// order.
pub fn singular_values<T: Real>(a: &Matrix<T>) -> Result<Vec<T>> {
    if a.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    // Work on the orientation with fewer columns.
    let work = if a.rows >= a.cols { a.clone() } else { a.conj_transpose() };
    let (m, n) = work.shape();
    if n == 0 {
        return Ok(Vec::new());
    }
    // Column-major copy.
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|c| work.column(c)).collect();
    let tol = T::tolerance();
    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = Complex::<T>::zero();
                    for i in 0..m {
                        alpha = alpha + cp[i].norm_sqr();
                        beta = beta + cq[i].norm_sqr();
                        gamma = gamma + cp[i].conj() * cq[i];
                    }
                    (alpha, beta, gamma)
                };
                let g = gamma.norm();
                if g.is_zero() || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g; // e^{i phi}
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                let (cp, cq) = (&mut lo[p], &mut hi[0]);
                for i in 0..m {
                    let x = cp[i];
                    let y = cq[i] * phase.conj();
                    cp[i] = x * c - y * s;
                    cq[i] = x * s + y * c;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }
    let mut sv: Vec<T> = cols
        .iter()
        .map(|col| col.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
    Ok(sv)
}

/// Determinant by LU with partial pivoting.
pub fn determinant<T: Real>(a: &Matrix<T>) -> Result<Complex<T>> {
    if a.rows != a.cols {
        return Err(shape_err("square matrix", format!("{}x{}", a.rows, a.cols)));
    }
    let n = a.rows;
    let mut lu = a.data.clone();
    let mut det = Complex::<T>::one();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| lu[i * n + k].norm().partial_cmp(&lu[j * n + k].norm()).unwrap())
            .unwrap();
        let pv = lu[piv * n + k];
        if pv.is_zero() {
            return Ok(Complex::zero());
        }
        if piv != k {
            for c in 0..n {
                lu.swap(piv * n + c, k * n + c);
            }
            det = -det;
        }
        det = det * pv;
        for r in k + 1..n {
            let f = lu[r * n + k] / pv;
            if f.is_zero() {
                continue;
            }
            for c in k + 1..n {
                let t = lu[k * n + c];
                lu[r * n + c] = lu[r * n + c] - f * t;
            }
        }
    }
    Ok(det)
}

/// Orthonormalize the columns of a square matrix by modified Gram-Schmidt.
/// Applied to a matrix of iid complex Gaussians this yields a Haar unitary
/// once each column phase is fixed, which is what the channel sampler needs.
pub fn gram_schmidt<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let (m, n) = a.shape();
    if n > m {
        return Err(shape_err("rows >= cols", format!("{m}x{n}")));
    }
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|c| a.column(c)).collect();
    for j in 0..n {
        for k in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let qk = &done[k];
            let proj = qk.iter().zip(rest[0].iter()).fold(Complex::zero(), |acc, (q, v)| acc + q.conj() * v);
            for (v, q) in rest[0].iter_mut().zip(qk) {
                *v = *v - *q * proj;
            }
        }
        let norm = cols[j].iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if norm <= T::epsilon() {
            return Err(Error::Invalid("columns are linearly dependent".into()));
        }
        for v in cols[j].iter_mut() {
            *v = *v / norm;
        }
    }
    Ok(Matrix::from_fn(m, n, |r, c| cols[c][r]))
}
