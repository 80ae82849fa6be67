//! Small dense and banded solvers.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves `a x = b` by Gaussian elimination with partial pivoting. `a` is
/// row-major `n x n`.
pub fn solve_dense<T: Real>(mut a: Vec<T>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::InvalidArgument(format!(
            "matrix of {} entries for a system of size {n}",
            a.len()
        )));
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .abs()
                    .partial_cmp(&a[j * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot * n + col] == T::zero() {
            return Err(Error::IllConditioned(format!("singular at column {col}")));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] -= f * v;
            }
            let bv = b[col];
            b[row] -= f * bv;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    Ok(x)
}

/// Symmetric positive-definite band matrix stored by lower diagonals:
/// `diagonals[d][i] = A[i + d][i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedSpd<T> {
    n: usize,
    diagonals: Vec<Vec<T>>,
}

impl<T: Real> BandedSpd<T> {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let diagonals = (0..=bandwidth)
            .map(|d| vec![T::zero(); n.saturating_sub(d)])
            .collect();
        Self { n, diagonals }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.diagonals.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (lo, hi) = if i > j { (j, i) } else { (i, j) };
        let d = hi - lo;
        if d > self.bandwidth() {
            T::zero()
        } else {
            self.diagonals[d][lo]
        }
    }

    /// Sets `A[i][j]` and `A[j][i]`.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let (lo, hi) = if i > j { (j, i) } else { (i, j) };
        let d = hi - lo;
        assert!(d <= self.bandwidth(), "entry outside the band");
        self.diagonals[d][lo] = v;
    }

    #[allow(clippy::needless_range_loop)]
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        let w = self.bandwidth();
        for i in 0..self.n {
            let lo = i.saturating_sub(w);
            let hi = (i + w).min(self.n - 1);
            let mut s = T::zero();
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                s += self.get(i, j) * *xj;
            }
            y[i] = s;
        }
        y
    }

    /// Lower bound on the smallest eigenvalue from Gershgorin discs.
    pub fn gershgorin_lower_bound(&self) -> T {
        let w = self.bandwidth();
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(w);
                let hi = (i + w).min(self.n - 1);
                let off: T = (lo..=hi)
                    .filter(|&j| j != i)
                    .map(|j| self.get(i, j).abs())
                    .sum();
                self.get(i, i) - off
            })
            .fold(T::infinity(), |a, b| a.min(b))
    }

    /// Banded Cholesky factorisation `A = L L^T`.
    pub fn cholesky(&self) -> Result<BandedCholesky<T>> {
        let n = self.n;
        let w = self.bandwidth();
        // l[i][d] = L[i][i - d]
        let mut l = vec![vec![T::zero(); w + 1]; n];
        for i in 0..n {
            for d in (0..=w.min(i)).rev() {
                let j = i - d;
                let mut s = self.get(i, j);
                let kmin = i.saturating_sub(w).max(j.saturating_sub(w));
                for k in kmin..j {
                    s -= l[i][i - k] * l[j][j - k];
                }
                if d == 0 {
                    if !(s > T::zero()) {
                        return Err(Error::IllConditioned(format!(
                            "matrix is not positive definite (pivot {i})"
                        )));
                    }
                    l[i][0] = s.sqrt();
                } else {
                    l[i][d] = s / l[j][0];
                }
            }
        }
        let dmax = l.iter().map(|r| r[0]).fold(T::zero(), |a, b| a.max(b));
        let dmin = l.iter().map(|r| r[0]).fold(T::infinity(), |a, b| a.min(b));
        Ok(BandedCholesky {
            l,
            bandwidth: w,
            condition_estimate: (dmax / dmin) * (dmax / dmin),
        })
    }
}

#[derive(Clone, Debug)]
pub struct BandedCholesky<T> {
    l: Vec<Vec<T>>,
    bandwidth: usize,
    condition_estimate: T,
}

impl<T: Real> BandedCholesky<T> {
    /// Ratio of extreme squared pivots; a cheap lower estimate of the
    /// condition number.
    pub fn condition_estimate(&self) -> T {
        self.condition_estimate
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.len();
        let w = self.bandwidth;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(w)..i {
                s -= self.l[i][i - k] * y[k];
            }
            y[i] = s / self.l[i][0];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + w + 1).min(n) {
                s -= self.l[k][k - i] * y[k];
            }
            y[i] = s / self.l[i][0];
        }
        y
    }
}
