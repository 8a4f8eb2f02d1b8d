//! Scalar abstraction shared by every numeric kernel in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the statistics are computed in.
///
/// Implemented for `f32` and `f64`. Tolerances that depend on precision are
/// derived from [`Float::epsilon`] so the same code is usable at both widths,
/// although the documented accuracy targets assume `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance below which a column is considered linearly
    /// dependent on the columns before it.
    #[inline]
    fn rank_tolerance() -> Self {
        (Self::epsilon().sqrt() * Self::lit(10.0)).max(Self::lit(1e-7))
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Sample variance with denominator `n - 1`; zero for fewer than two values.
pub(crate) fn sample_variance<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    ss / T::from_count(xs.len() - 1)
}

/// Mid-ranks (1-based, ties receive the average of the positions they span).
pub fn mid_ranks<T: Real>(xs: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| {
        xs[a]
            .partial_cmp(&xs[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut ranks = vec![T::zero(); xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean of (i+1)..=j
        let r = T::from_count(i + j + 1) / T::lit(2.0);
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mid_ranks_average_ties() {
        let r = mid_ranks(&[10.0_f64, 20.0, 10.0, 30.0]);
        assert_eq!(r, vec![1.5, 3.0, 1.5, 4.0]);
        let all_tied = mid_ranks(&[2.0_f32; 4]);
        assert!(all_tied.iter().all(|&x| x == 2.5));
    }

    #[test]
    fn variance_uses_n_minus_one() {
        assert_eq!(sample_variance(&[1.0_f64, 2.0, 3.0]), 1.0);
        assert_eq!(sample_variance(&[5.0_f64]), 0.0);
    }
}
