use crate::data::{ColumnKind, Dataset};
use crate::regress::{logistic_fit, ols_fit, Design};
use crate::scalar::Real;
use crate::special::{chi2_sf, f_sf};

use super::TestResult;

/// Design columns for one predictor: the column itself if continuous,
/// otherwise indicators for levels `1..L` (level 0 is the reference).
pub fn expand_column<T: Real>(ds: &Dataset<T>, j: usize) -> Vec<Vec<T>> {
    match ds.kind(j) {
        ColumnKind::Continuous => vec![ds.column(j).to_vec()],
        ColumnKind::Categorical { level_count } => (1..level_count)
            .map(|level| {
                (0..ds.n_rows())
                    .map(|r| {
                        if ds.level(j, r) == level {
                            T::one()
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            })
            .collect(),
    }
}

/// `[1, cond...]` and `[1, cond..., x]`.
fn nested_designs<T: Real>(ds: &Dataset<T>, x: usize, cond: &[usize]) -> (Design<T>, Design<T>) {
    let mut reduced = Design::intercept(ds.n_rows());
    for &c in cond {
        for col in expand_column(ds, c) {
            reduced.push(col);
        }
    }
    let mut full = reduced.clone();
    for col in expand_column(ds, x) {
        full.push(col);
    }
    (reduced, full)
}

/// Partial F test comparing `t ~ cond` with `t ~ x + cond`.
pub fn linreg_lrt_test<T: Real>(
    ds: &Dataset<T>,
    x: usize,
    t: &[T],
    cond: &[usize],
) -> TestResult<T> {
    let (reduced, full) = nested_designs(ds, x, cond);
    let fit0 = ols_fit(&reduced, t);
    let fit1 = ols_fit(&full, t);
    let d = fit1.rank.saturating_sub(fit0.rank);
    let df1 = fit1.df_residual;
    if d == 0 || df1 == 0 {
        return TestResult::invalid();
    }
    let (d_t, df1_t) = (T::from_count(d), T::from_count(df1));
    let gain = (fit0.rss - fit1.rss).max(T::zero());
    let f = if fit1.rss > T::zero() {
        (gain / d_t) / (fit1.rss / df1_t)
    } else if gain > T::zero() {
        T::infinity()
    } else {
        return TestResult::invalid();
    };
    TestResult::new(f, f_sf(f, d_t, df1_t), d_t)
}

/// Deviance difference between `y ~ cond` and `y ~ x + cond` logistic fits.
pub fn logistic_lrt_test<T: Real>(
    ds: &Dataset<T>,
    x: usize,
    y: &[u8],
    cond: &[usize],
) -> TestResult<T> {
    let (reduced, full) = nested_designs(ds, x, cond);
    let fit0 = logistic_fit(&reduced, y);
    if fit0.separated {
        return TestResult::invalid();
    }
    let fit1 = logistic_fit(&full, y);
    if fit1.separated {
        return TestResult::invalid();
    }
    let d = fit1.rank.saturating_sub(fit0.rank);
    if d == 0 {
        return TestResult::invalid();
    }
    let stat = (fit0.deviance - fit1.deviance).max(T::zero());
    let dof = T::from_count(d);
    TestResult::new(stat, chi2_sf(stat, dof), dof)
}
