//! Dense row-major complex matrices.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// |c| without requiring `num_traits::Float` on the scalar.
pub fn cabs<R: Scalar>(c: Complex<R>) -> R {
    c.norm_sqr().sqrt()
}

/// Dense complex matrix, entries in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<R: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<R>>,
}

impl<R: Scalar> ComplexMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex::new(R::zero(), R::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(R::one(), R::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<Complex<R>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{}×{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Real diagonal matrix.
    pub fn from_diag(diag: &[R]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, R::zero());
        }
        m
    }

    /// |v⟩⟨v| (no normalization).
    pub fn outer(v: &[Complex<R>]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    /// Single-row matrix ⟨v| (the conjugate of `v` as a bra).
    pub fn bra(v: &[Complex<R>]) -> Self {
        ComplexMatrix {
            rows: 1,
            cols: v.len(),
            data: v.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex<R>] {
        &self.data
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex<R> {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).fold(
            Complex::new(R::zero(), R::zero()),
            |acc, c| acc + c,
        )
    }

    pub fn scaled(&self, factor: Complex<R>) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|c| *c * factor).collect(),
        }
    }

    pub fn scaled_real(&self, factor: R) -> Self {
        self.scaled(Complex::new(factor, R::zero()))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> R {
        self.data
            .iter()
            .map(|c| cabs(*c))
            .fold(R::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| cabs(*a - *b))
            .fold(R::zero(), |a, b| if b > a { b } else { a })
    }

    /// Largest |m[i,j] − conj(m[j,i])|; zero for exactly Hermitian input.
    pub fn hermiticity_deviation(&self) -> R {
        debug_assert!(self.is_square());
        let mut worst = R::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = cabs(self[(i, j)] - self[(j, i)].conj());
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Kronecker product; `self`'s indices are most significant.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![Complex::new(R::zero(), R::zero()); rows * cols];
        for ia in 0..self.rows {
            for ja in 0..self.cols {
                let a = self[(ia, ja)];
                if a.norm_sqr() == R::zero() {
                    continue;
                }
                for ib in 0..other.rows {
                    let row = ia * other.rows + ib;
                    for jb in 0..other.cols {
                        let col = ja * other.cols + jb;
                        data[row * cols + col] = a * other[(ib, jb)];
                    }
                }
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// `self · v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[Complex<R>]) -> Vec<Complex<R>> {
        debug_assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex::new(R::zero(), R::zero());
                for j in 0..self.cols {
                    acc += self[(i, j)] * v[j];
                }
                acc
            })
            .collect()
    }

    /// Entries as `[re, im]` pairs, row by row (config/report format).
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| {
                        let c = self[(i, j)];
                        [c.re.to_f64_lossy(), c.im.to_f64_lossy()]
                    })
                    .collect()
            })
            .collect()
    }

    /// Parse the nested `[re, im]` pair format.
    pub fn from_pairs(pairs: &[Vec<[f64; 2]>]) -> Result<Self> {
        let rows = pairs.len();
        if rows == 0 {
            return Err(Error::Dimension("empty matrix literal".into()));
        }
        let cols = pairs[0].len();
        if cols == 0 || pairs.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged matrix literal".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for row in pairs {
            for &[re, im] in row {
                data.push(Complex::new(R::from_config(re), R::from_config(im)));
            }
        }
        Ok(ComplexMatrix { rows, cols, data })
    }
}

impl<R: Scalar> Index<(usize, usize)> for ComplexMatrix<R> {
    type Output = Complex<R>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R: Scalar> IndexMut<(usize, usize)> for ComplexMatrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<R> {
        &mut self.data[i * self.cols + j]
    }
}

impl<R: Scalar> Add for &ComplexMatrix<R> {
    type Output = ComplexMatrix<R>;

    fn add(self, rhs: &ComplexMatrix<R>) -> ComplexMatrix<R> {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<R: Scalar> Sub for &ComplexMatrix<R> {
    type Output = ComplexMatrix<R>;

    fn sub(self, rhs: &ComplexMatrix<R>) -> ComplexMatrix<R> {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<R: Scalar> Mul for &ComplexMatrix<R> {
    type Output = ComplexMatrix<R>;

    fn mul(self, rhs: &ComplexMatrix<R>) -> ComplexMatrix<R> {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        // i-k-j order keeps the inner loop contiguous in both operands
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == R::zero() {
                    continue;
                }
                let lhs_row = i * rhs.cols;
                let rhs_row = k * rhs.cols;
                for j in 0..rhs.cols {
                    out.data[lhs_row + j] += a * rhs.data[rhs_row + j];
                }
            }
        }
        out
    }
}

impl<R: Scalar> fmt::Debug for ComplexMatrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}×{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let c = self[(i, j)];
                    format!("{:+.4}{:+.4}i", c.re.to_f64_lossy(), c.im.to_f64_lossy())
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn matmul_matches_hand_example() {
        let a = ComplexMatrix::from_data(2, 2, vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        let b = ComplexMatrix::from_data(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let ab = &a * &b;
        assert_eq!(ab[(0, 0)], c(0.0, 1.0));
        assert_eq!(ab[(0, 1)], c(1.0, 0.0));
        assert_eq!(ab[(1, 1)], c(2.0, 0.0));
    }

    #[test]
    fn adjoint_conjugates_and_transposes() {
        let a = ComplexMatrix::from_data(1, 2, vec![c(1.0, 2.0), c(3.0, -4.0)]).unwrap();
        let ad = a.conj_transpose();
        assert_eq!(ad.rows(), 2);
        assert_eq!(ad[(0, 0)], c(1.0, -2.0));
        assert_eq!(ad[(1, 0)], c(3.0, 4.0));
    }

    #[test]
    fn outer_product_is_rank_one_projector() {
        let v = vec![c(1.0 / 2f64.sqrt(), 0.0), c(0.0, 1.0 / 2f64.sqrt())];
        let p = ComplexMatrix::outer(&v);
        let p2 = &p * &p;
        assert!(p2.max_abs_diff(&p) < 1e-15);
        assert!((p.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pair_round_trip() {
        let m = ComplexMatrix::from_data(2, 2, vec![c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.5, 0.0)]).unwrap();
        let back = ComplexMatrix::<f64>::from_pairs(&m.to_pairs()).unwrap();
        assert!(m.max_abs_diff(&back) == 0.0);
    }
}
