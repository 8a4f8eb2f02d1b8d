use crate::data::Dataset;
use crate::regress::{Design, PivotedQr};
use crate::scalar::{dot, mean, mid_ranks, Real};
use crate::special::normal_sf;

use super::TestResult;

fn conditioning_design<T: Real>(ds: &Dataset<T>, cond: &[usize]) -> Design<T> {
    let mut design = Design::intercept(ds.n_rows());
    for &c in cond {
        design.push(ds.column(c).to_vec());
    }
    design
}

fn centered_norm<T: Real>(v: &[T]) -> T {
    let m = mean(v);
    v.iter().map(|&x| (x - m) * (x - m)).sum::<T>().sqrt()
}

/// Partial correlation of column `x` and the vector `t` given the columns in
/// `cond`, computed by correlating the residuals of both on `[1, cond]`.
///
/// Returns `None` when either residual has (numerically) zero variance.
pub fn partial_correlation<T: Real>(
    ds: &Dataset<T>,
    x: usize,
    t: &[T],
    cond: &[usize],
) -> Option<T> {
    let design = conditioning_design(ds, cond);
    let qr = PivotedQr::new(design.columns(), ds.n_rows());
    let xs = ds.column(x);
    let rx = qr.residuals(xs);
    let rt = qr.residuals(t);
    let tol = T::rank_tolerance();
    let nx = dot(&rx, &rx).sqrt();
    let nt = dot(&rt, &rt).sqrt();
    let sx = centered_norm(xs);
    let st = centered_norm(t);
    if sx == T::zero() || st == T::zero() || nx <= tol * sx || nt <= tol * st {
        return None;
    }
    let r = dot(&rx, &rt) / (nx * nt);
    Some(r.max(-T::one()).min(T::one()))
}

fn clamp_bound<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(4.0))
}

/// Fisher z test on the partial correlation.
///
/// `statistic = sqrt(n - |cond| - 3) * atanh(r)`, two-sided normal p-value.
pub fn fisher_test<T: Real>(ds: &Dataset<T>, x: usize, t: &[T], cond: &[usize]) -> TestResult<T> {
    let n = ds.n_rows();
    if n < cond.len() + 4 {
        return TestResult::invalid();
    }
    let Some(r) = partial_correlation(ds, x, t, cond) else {
        return TestResult::invalid();
    };
    let bound = T::one() - clamp_bound::<T>();
    let r = r.max(-bound).min(bound);
    let z = T::lit(0.5) * ((T::one() + r) / (T::one() - r)).ln();
    let statistic = T::from_count(n - cond.len() - 3).sqrt() * z;
    let p = T::lit(2.0) * normal_sf(statistic.abs());
    TestResult::new(statistic, p, T::from_count(n - cond.len() - 3))
}

/// Fisher z test on mid-rank transformed columns.
pub fn spearman_test<T: Real>(ds: &Dataset<T>, x: usize, t: &[T], cond: &[usize]) -> TestResult<T> {
    let mut involved = vec![x];
    involved.extend_from_slice(cond);
    let ranked = Dataset::new(
        involved
            .iter()
            .map(|&j| crate::data::Column::continuous(ds.name(j), mid_ranks(ds.column(j))))
            .collect(),
    );
    let Ok(ranked) = ranked else {
        return TestResult::invalid();
    };
    let local_cond: Vec<usize> = (1..involved.len()).collect();
    fisher_test(&ranked, 0, &mid_ranks(t), &local_cond)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let (ma, mb) = (mean(a), mean(b));
        let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn empty_cond_is_pearson() {
        let x = vec![1.0, 2.5, 2.0, 4.5, 3.0, 6.0];
        let t = vec![0.3, 0.1, 0.9, 1.2, 0.8, 2.0];
        let ds = Dataset::from_continuous(vec![x.clone()]).unwrap();
        assert_relative_eq!(
            partial_correlation(&ds, 0, &t, &[]).unwrap(),
            pearson(&x, &t),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            partial_correlation(&ds, 0, &x, &[]).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn orthogonal_gives_unit_p() {
        let x = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let t = vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let ds = Dataset::from_continuous(vec![x]).unwrap();
        let r = fisher_test(&ds, 0, &t, &[]);
        assert!(r.valid);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn too_few_samples_invalid() {
        let ds = Dataset::from_continuous(vec![vec![1.0, 2.0, 3.0], vec![0.5, 0.1, 0.2]]).unwrap();
        let r = fisher_test(&ds, 0, &[1.0, 0.0, 2.0], &[1]);
        assert!(!r.valid);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn copy_of_conditioning_column_is_degenerate() {
        let x = vec![0.3, 1.2, 2.2, 0.1, 4.0, 2.5, 1.7];
        let t = vec![1.0, 2.0, 0.5, 0.2, 3.3, 1.1, 0.4];
        let ds = Dataset::from_continuous(vec![x.clone(), x]).unwrap();
        assert!(partial_correlation(&ds, 0, &t, &[1]).is_none());
        assert!(!fisher_test(&ds, 0, &t, &[1]).valid);
    }

    #[test]
    fn all_tied_column_invalid_for_spearman() {
        let ds = Dataset::from_continuous(vec![vec![2.0; 8]]).unwrap();
        let t: Vec<f64> = (0..8).map(f64::from).collect();
        assert!(!spearman_test(&ds, 0, &t, &[]).valid);
    }
}
