//! Householder QR with limited column pivoting.
//!
//! Columns are processed left to right. A column whose norm, after removing
//! its projection on the columns already accepted, falls below
//! `tol * original_norm` is moved to the end and excluded from the fit. Earlier
//! columns therefore always win over later ones when the design is rank
//! deficient.

use crate::scalar::{dot, Real};

#[derive(Clone, Debug)]
pub struct PivotedQr<T> {
    n: usize,
    /// Householder vectors, `hh[k]` has length `n - k`.
    hh: Vec<Vec<T>>,
    hbeta: Vec<T>,
    /// Upper-triangular factor, `r[k]` holds column `k` rows `0..=k`.
    r: Vec<Vec<T>>,
    /// `perm[k]` is the original index of the k-th accepted column.
    perm: Vec<usize>,
    dropped: Vec<usize>,
}

impl<T: Real> PivotedQr<T> {
    pub fn new(columns: &[Vec<T>], n: usize) -> Self {
        Self::with_tolerance(columns, n, T::rank_tolerance())
    }

    pub fn with_tolerance(columns: &[Vec<T>], n: usize, tol: T) -> Self {
        let mut work: Vec<Vec<T>> = columns.to_vec();
        let norms: Vec<T> = work.iter().map(|c| dot(c, c).sqrt()).collect();
        let mut order: Vec<usize> = (0..columns.len()).collect();
        let mut active = columns.len();
        let mut dropped = Vec::new();
        let mut qr = PivotedQr {
            n,
            hh: Vec::new(),
            hbeta: Vec::new(),
            r: Vec::new(),
            perm: Vec::new(),
            dropped: Vec::new(),
        };
        let mut pos = 0;
        while pos < active {
            let k = qr.perm.len();
            let j = order[pos];
            if k >= n {
                dropped.push(j);
                pos += 1;
                continue;
            }
            let col = &work[j];
            let tail_norm = dot(&col[k..], &col[k..]).sqrt();
            if norms[j] == T::zero() || tail_norm <= tol * norms[j] {
                // rotate to the end of the active block
                order[pos..active].rotate_left(1);
                active -= 1;
                dropped.push(j);
                continue;
            }
            let mut v: Vec<T> = col[k..].to_vec();
            let alpha = if v[0] > T::zero() {
                -tail_norm
            } else {
                tail_norm
            };
            v[0] -= alpha;
            let vtv = dot(&v, &v);
            let beta = if vtv > T::zero() {
                T::lit(2.0) / vtv
            } else {
                T::zero()
            };
            let mut rcol: Vec<T> = col[..k].to_vec();
            rcol.push(alpha);
            for &other in &order[pos + 1..active] {
                let c = &mut work[other];
                let s = beta * dot(&v, &c[k..]);
                for (ci, &vi) in c[k..].iter_mut().zip(&v) {
                    *ci -= s * vi;
                }
            }
            qr.hh.push(v);
            qr.hbeta.push(beta);
            qr.r.push(rcol);
            qr.perm.push(j);
            pos += 1;
        }
        dropped.sort_unstable();
        qr.dropped = dropped;
        qr
    }

    pub fn rank(&self) -> usize {
        self.perm.len()
    }

    /// Original indices of the accepted columns, in acceptance order.
    pub fn kept(&self) -> &[usize] {
        &self.perm
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    /// `Q^T y`.
    pub fn qty(&self, y: &[T]) -> Vec<T> {
        let mut z = y.to_vec();
        for (k, (v, &b)) in self.hh.iter().zip(&self.hbeta).enumerate() {
            let s = b * dot(v, &z[k..]);
            for (zi, &vi) in z[k..].iter_mut().zip(v) {
                *zi -= s * vi;
            }
        }
        z
    }

    /// `Q z`.
    pub fn qz(&self, z: &[T]) -> Vec<T> {
        let mut y = z.to_vec();
        for (k, (v, &b)) in self.hh.iter().zip(&self.hbeta).enumerate().rev() {
            let s = b * dot(v, &y[k..]);
            for (yi, &vi) in y[k..].iter_mut().zip(v) {
                *yi -= s * vi;
            }
        }
        y
    }

    /// Least-squares coefficients for the accepted columns (acceptance order).
    pub fn solve(&self, qty: &[T]) -> Vec<T> {
        let r = self.rank();
        let mut b = qty[..r].to_vec();
        for k in (0..r).rev() {
            b[k] /= self.r[k][k];
            let bk = b[k];
            for (i, bi) in b.iter_mut().enumerate().take(k) {
                *bi -= self.r[k][i] * bk;
            }
        }
        b
    }

    /// Residuals `y - X beta_hat`, computed as `Q [0; (Q^T y)_tail]`.
    pub fn residuals(&self, y: &[T]) -> Vec<T> {
        let mut z = self.qty(y);
        for zi in z.iter_mut().take(self.rank()) {
            *zi = T::zero();
        }
        self.qz(&z)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }
}
