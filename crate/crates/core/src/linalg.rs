//! Dense LU factorization with partial pivoting.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] += v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }
}

/// Packed LU factors of a square matrix, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    original: Matrix<T>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::SingularSystem("matrix not square".into()));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a
            .data
            .iter()
            .fold(T::zero(), |m, &v| m.max_of(v.abs()))
            .max_of(T::one());
        let threshold = if T::is_exact() {
            T::zero()
        } else {
            scale * T::lit(1e-13)
        };
        for k in 0..n {
            let mut best = k;
            let mut best_val = lu[k * n + k].abs();
            for r in k + 1..n {
                let v = lu[r * n + k].abs();
                if v > best_val {
                    best = r;
                    best_val = v;
                }
            }
            if best_val <= threshold {
                return Err(Error::SingularSystem(format!("zero pivot in column {k}")));
            }
            if best != k {
                for c in 0..n {
                    lu.swap(k * n + c, best * n + c);
                }
                perm.swap(k, best);
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / pivot;
                if f == T::zero() {
                    continue;
                }
                lu[r * n + k] = f;
                for c in k + 1..n {
                    let v = lu[k * n + c];
                    if v != T::zero() {
                        lu[r * n + c] -= f * v;
                    }
                }
            }
        }
        Ok(Lu {
            n,
            lu,
            perm,
            original: a.clone(),
        })
    }

    fn substitute(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = y[r];
            for c in 0..r {
                s -= self.lu[r * n + c] * y[c];
            }
            y[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = y[r];
            for c in r + 1..n {
                s -= self.lu[r * n + c] * y[c];
            }
            y[r] = s / self.lu[r * n + r];
        }
        y
    }

    /// Solves `A x = b`, with one step of iterative refinement for inexact types.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = self.substitute(b);
        if !T::is_exact() {
            let ax = self.original.mul_vec(&x);
            let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
            let dx = self.substitute(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        x
    }
}

pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    Ok(Lu::factor(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn solves_small_system() {
        let mut a = Matrix::<f64>::zeros(3, 3);
        let vals = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        for r in 0..3 {
            for c in 0..3 {
                a.set(r, c, vals[r][c]);
            }
        }
        let x = solve(&a, &[5.0, 3.0, 6.0]).unwrap();
        let ax = a.mul_vec(&x);
        for (l, r) in ax.iter().zip([5.0, 3.0, 6.0]) {
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_singularity() {
        let mut a = Matrix::<f64>::zeros(2, 2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        assert!(matches!(Lu::factor(&a), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn exact_rational_solution() {
        type Q = Ratio<i64>;
        let mut a = Matrix::<Q>::zeros(2, 2);
        a.set(0, 0, Q::new(2, 1));
        a.set(0, 1, Q::new(1, 1));
        a.set(1, 0, Q::new(1, 1));
        a.set(1, 1, Q::new(3, 1));
        let x = solve(&a, &[Q::new(1, 1), Q::new(2, 1)]).unwrap();
        assert_eq!(x, vec![Q::new(1, 5), Q::new(3, 5)]);
    }
}
