//! Dense exact rational matrices and small float helpers.
//!
//! Everything that feeds a "commutator is exactly zero" assertion stays in
//! `QMat`; floats only appear when a spectrum is requested.

use crate::error::{GaudinError, Result};
use crate::rational::{q_to_f64, C64, Q};
use num::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Q>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c));
        QMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self[(i, j)].is_one()
                    } else {
                        self[(i, j)].is_zero()
                    }
                })
            })
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        QMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        QMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: &Q) -> Self {
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        let prod = a * b;
                        out[(i, j)] += prod;
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut s = Q::zero();
                for j in 0..self.cols {
                    if !v[j].is_zero() && !self[(i, j)].is_zero() {
                        s += &self[(i, j)] * &v[j];
                    }
                }
                s
            })
            .collect()
    }

    pub fn trace(&self) -> Q {
        assert_eq!(self.rows, self.cols);
        let mut s = Q::zero();
        for i in 0..self.rows {
            s += &self[(i, i)];
        }
        s
    }

    pub fn max_abs_f64(&self) -> f64 {
        self.data
            .iter()
            .map(|x| q_to_f64(&x.abs()))
            .fold(0.0, f64::max)
    }

    /// Reduced row echelon form; returns (rref, pivot column indices).
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r >= m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in c..m.cols {
                let v = &m[(r, j)] * &inv;
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in c..m.cols {
                        let v = &m[(i, j)] - &(&f * &m[(r, j)]);
                        m[(i, j)] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, as columns.
    pub fn kernel_basis(&self) -> Vec<Vec<Q>> {
        let (rr, pivots) = self.rref();
        let mut basis = Vec::new();
        let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![Q::zero(); self.cols];
            v[free] = Q::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -rr[(r, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    /// Solve `self * x = b` exactly. Errors when inconsistent; for
    /// underdetermined systems returns the solution with free variables 0.
    pub fn solve(&self, b: &[Q]) -> Result<Vec<Q>> {
        assert_eq!(self.rows, b.len());
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let (rr, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return Err(GaudinError::Numerical("inconsistent linear system".into()));
        }
        let mut x = vec![Q::zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = rr[(r, self.cols)].clone();
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Q::one();
        }
        let (rr, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n && pivots.len() == n {
            // pivots must be exactly 0..n
        }
        if pivots.iter().take(n).cloned().collect::<Vec<_>>() != (0..n).collect::<Vec<_>>() {
            return Err(GaudinError::SingularForm);
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = rr[(i, n + j)].clone();
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| q_to_f64(&self[(i, j)]))
    }

    /// Sparse triplet view (row, col, value) of the nonzero entries.
    pub fn triplets(&self) -> Vec<(usize, usize, Q)> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self[(i, j)].is_zero() {
                    out.push((i, j, self[(i, j)].clone()));
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for QMat {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of an exact real matrix, via float Schur decomposition.
pub fn eigenvalues(m: &QMat) -> Result<Vec<C64>> {
    if m.rows > 512 {
        return Err(GaudinError::BlockTooLarge(m.rows));
    }
    let a = m.to_f64();
    let mut ev: Vec<C64> = a.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    Ok(ev)
}

/// Solve a small dense complex system by Gaussian elimination with partial
/// pivoting. Used by the Bethe Newton iteration.
pub fn solve_c64(a: &[Vec<C64>], b: &[C64]) -> Result<Vec<C64>> {
    let n = b.len();
    let mut m: Vec<Vec<C64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for c in 0..n {
        let mut p = c;
        let mut max = -1.0f64;
        for i in c..n {
            let v = m[i][c].norm();
            if v.is_finite() && v > max {
                p = i;
                max = v;
            }
        }
        if !(max > 1e-300) {
            return Err(GaudinError::Numerical("singular or non-finite Jacobian".into()));
        }
        m.swap(c, p);
        rhs.swap(c, p);
        let piv = m[c][c];
        for i in (c + 1)..n {
            let f = m[i][c] / piv;
            for j in c..n {
                let v = m[c][j];
                m[i][j] -= f * v;
            }
            let v = rhs[c];
            rhs[i] -= f * v;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in (i + 1)..n {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    Ok(x)
}
