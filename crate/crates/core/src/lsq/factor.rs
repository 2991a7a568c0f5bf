//! Dense factorizations for the small K×K normal-equation systems.
//!
//! Matrices are square, row-major, stored in a flat slice.

use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    const ZERO: Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn abs(self) -> f64;
    fn abs2(self) -> f64;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Lower-triangular Cholesky factor L with A = L Lᴴ.
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Only the lower triangle of `a` is read.
    pub fn factor(a: &[T], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![T::ZERO; n * n];
        for j in 0..n {
            let mut d = a[j * n + j].re();
            for p in 0..j {
                d -= l[j * n + p].abs2();
            }
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::SingularSystem { pivot: j });
            }
            let djj = T::from_real(d.sqrt());
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for p in 0..j {
                    s -= l[i * n + p] * l[j * n + p].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    /// Solves A x = b in place for `channels` right-hand sides stored
    /// row-major as n × channels.
    pub fn solve_in_place(&self, b: &mut [T], channels: usize) {
        let n = self.n;
        assert_eq!(b.len(), n * channels);
        let l = &self.l;
        for c in 0..channels {
            for i in 0..n {
                let mut s = b[i * channels + c];
                let row = &l[i * n..i * n + i];
                for (p, lip) in row.iter().enumerate() {
                    s -= *lip * b[p * channels + c];
                }
                b[i * channels + c] = s / l[i * n + i];
            }
            for i in (0..n).rev() {
                let mut s = b[i * channels + c];
                for p in (i + 1)..n {
                    s -= l[p * n + i].conj() * b[p * channels + c];
                }
                b[i * channels + c] = s / l[i * n + i];
            }
        }
    }
}

/// LU factorization with partial (row) pivoting, used as the fallback when
/// an unregularized Gram matrix is not numerically positive definite.
pub struct PivotedLu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> PivotedLu<T> {
    pub fn factor(a: &[T], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = lu.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
        let tiny = scale * f64::EPSILON * n as f64;
        for j in 0..n {
            let (mut best, mut best_abs) = (j, lu[j * n + j].abs());
            for i in (j + 1)..n {
                let v = lu[i * n + j].abs();
                if v > best_abs {
                    best = i;
                    best_abs = v;
                }
            }
            if !(best_abs > tiny) || !best_abs.is_finite() {
                return Err(Error::SingularSystem { pivot: j });
            }
            if best != j {
                for c in 0..n {
                    lu.swap(j * n + c, best * n + c);
                }
                perm.swap(j, best);
            }
            let pivot = lu[j * n + j];
            for i in (j + 1)..n {
                let f = lu[i * n + j] / pivot;
                lu[i * n + j] = f;
                for c in (j + 1)..n {
                    let u = lu[j * n + c];
                    lu[i * n + c] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[T], channels: usize) -> Vec<T> {
        let n = self.n;
        let mut x = vec![T::ZERO; n * channels];
        for c in 0..channels {
            let mut y: Vec<T> = self.perm.iter().map(|&p| b[p * channels + c]).collect();
            for i in 0..n {
                for p in 0..i {
                    let t = self.lu[i * n + p] * y[p];
                    y[i] -= t;
                }
            }
            for i in (0..n).rev() {
                for p in (i + 1)..n {
                    let t = self.lu[i * n + p] * y[p];
                    y[i] -= t;
                }
                y[i] = y[i] / self.lu[i * n + i];
            }
            for i in 0..n {
                x[i * channels + c] = y[i];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_real_spd() {
        // A = [[4, 2], [2, 3]], b = [2, 1] -> x = [0.5, 0]
        let a = [4.0, 2.0, 2.0, 3.0];
        let ch = Cholesky::factor(&a, 2).unwrap();
        let mut b = [2.0, 1.0];
        ch.solve_in_place(&mut b, 1);
        assert!((b[0] - 0.5).abs() < 1e-15 && b[1].abs() < 1e-15);
    }

    #[test]
    fn cholesky_solves_hermitian() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        // A = [[2, i], [-i, 2]] is HPD
        let a = [one * 2.0, i, -i, one * 2.0];
        let x_true = [Complex64::new(1.0, -1.0), Complex64::new(0.5, 2.0)];
        let mut b = [
            a[0] * x_true[0] + a[1] * x_true[1],
            a[2] * x_true[0] + a[3] * x_true[1],
        ];
        Cholesky::factor(&a, 2).unwrap().solve_in_place(&mut b, 1);
        for (u, v) in b.iter().zip(&x_true) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let a = [1.0, 1.0, 1.0, 1.0];
        match Cholesky::factor(&a, 2) {
            Err(Error::SingularSystem { pivot }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn lu_handles_indefinite_and_rejects_singular() {
        let a = [0.0, 1.0, 1.0, 0.0];
        let lu = PivotedLu::factor(&a, 2).unwrap();
        let x = lu.solve(&[3.0, 5.0], 1);
        assert_eq!(x, vec![5.0, 3.0]);
        assert!(matches!(
            PivotedLu::factor(&[1.0, 2.0, 2.0, 4.0], 2),
            Err(Error::SingularSystem { pivot: 1 })
        ));
    }
}
