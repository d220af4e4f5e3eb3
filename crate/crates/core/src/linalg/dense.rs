//! Small dense kernels used for the node blocks of banded operators.

use super::scalar::Scalar;

/// Row-major square matrix of fixed dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    pub n: usize,
    pub a: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(n: usize) -> Self {
        Mat { n, a: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = T::one();
        }
        m
    }

    pub fn from_slice(n: usize, a: &[T]) -> Self {
        assert_eq!(a.len(), n * n);
        Mat { n, a: a.to_vec() }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] += v;
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let mut s = T::zero();
            let row = &self.a[i * n..(i + 1) * n];
            for j in 0..n {
                s += row[j] * x[j];
            }
            y[i] = s;
        }
    }

    /// `y += A x`.
    pub fn mul_vec_add(&self, x: &[T], y: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let mut s = T::zero();
            let row = &self.a[i * n..(i + 1) * n];
            for j in 0..n {
                s += row[j] * x[j];
            }
            y[i] += s;
        }
    }

    /// Matrix product `A B`.
    pub fn matmul(&self, b: &Mat<T>) -> Mat<T> {
        let n = self.n;
        let mut c = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik == T::zero() {
                    continue;
                }
                for j in 0..n {
                    c.a[i * n + j] += aik * b.a[k * n + j];
                }
            }
        }
        c
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat<T> {
        let n = self.n;
        let mut c = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                c.a[j * n + i] = self.a[i * n + j].conj();
            }
        }
        c
    }

    pub fn sub_assign(&mut self, b: &Mat<T>) {
        for (x, y) in self.a.iter_mut().zip(&b.a) {
            *x -= *y;
        }
    }
}

/// LU factorization with partial pivoting of a small dense matrix.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    piv: Vec<usize>,
    pub min_pivot: f64,
}

impl<T: Scalar> Lu<T> {
    pub fn new(m: &Mat<T>) -> Self {
        let n = m.n;
        let mut lu = m.a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            min_pivot = min_pivot.min(best);
            let d = lu[k * n + k];
            if d == T::zero() {
                continue;
            }
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let t = lu[k * n + j];
                    lu[i * n + j] -= f * t;
                }
            }
        }
        Lu { n, lu, piv, min_pivot }
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let mut x: Vec<T> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solve `A X = B` for a square right-hand side, returning `X`.
    pub fn solve_mat(&self, b: &Mat<T>) -> Mat<T> {
        let n = self.n;
        let mut out = Mat::zeros(n);
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = b.a[i * n + j];
            }
            self.solve_in_place(&mut col);
            for i in 0..n {
                out.a[i * n + j] = col[i];
            }
        }
        out
    }
}
