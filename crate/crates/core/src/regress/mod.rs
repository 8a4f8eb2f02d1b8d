//! Least-squares and logistic regression kernels.
//!
//! Both fits take a column-major [`Design`] (intercept column included by
//! the caller) and handle rank deficiency by dropping later columns that are
//! linearly dependent on earlier ones. Dropped columns get a zero coefficient,
//! so predictions always take a full-width design row.

mod qr;

pub use qr::PivotedQr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// Column-major design matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Design<T> {
    n_rows: usize,
    columns: Vec<Vec<T>>,
}

impl<T: Real> Design<T> {
    /// Design with a single intercept column.
    pub fn intercept(n_rows: usize) -> Self {
        Design {
            n_rows,
            columns: vec![vec![T::one(); n_rows]],
        }
    }

    pub fn from_columns(n_rows: usize, columns: Vec<Vec<T>>) -> Result<Self> {
        for c in &columns {
            if c.len() != n_rows {
                return Err(Error::Dimension {
                    expected: n_rows,
                    got: c.len(),
                });
            }
        }
        Ok(Design { n_rows, columns })
    }

    pub fn push(&mut self, column: Vec<T>) {
        debug_assert_eq!(column.len(), self.n_rows);
        self.columns.push(column);
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        self.columns.iter().map(|c| c[i]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit<T> {
    /// One entry per design column, intercept first; dropped columns are 0.
    pub coefficients: Vec<T>,
    pub rss: T,
    pub df_residual: usize,
    pub rank: usize,
    /// Design columns excluded as linearly dependent.
    pub dropped: Vec<usize>,
}

/// Ordinary least squares via pivoted Householder QR.
pub fn ols_fit<T: Real>(design: &Design<T>, y: &[T]) -> LinearFit<T> {
    let n = design.n_rows();
    let qr = PivotedQr::new(design.columns(), n);
    let qty = qr.qty(y);
    let rank = qr.rank();
    let beta = qr.solve(&qty);
    let mut coefficients = vec![T::zero(); design.n_cols()];
    for (&j, &b) in qr.kept().iter().zip(&beta) {
        coefficients[j] = b;
    }
    let rss = qty[rank..].iter().map(|&z| z * z).sum();
    LinearFit {
        coefficients,
        rss,
        df_residual: n.saturating_sub(rank),
        rank,
        dropped: qr.dropped().to_vec(),
    }
}

/// Residual vector of `y` regressed on the design, with the design rank.
pub fn ols_residuals<T: Real>(design: &Design<T>, y: &[T]) -> (Vec<T>, usize) {
    let qr = PivotedQr::new(design.columns(), design.n_rows());
    (qr.residuals(y), qr.rank())
}

pub fn predict_linear<T: Real>(fit: &LinearFit<T>, row: &[T]) -> Result<T> {
    if row.len() != fit.coefficients.len() {
        return Err(Error::Dimension {
            expected: fit.coefficients.len(),
            got: row.len(),
        });
    }
    Ok(dot(&fit.coefficients, row))
}

/// Hard cap on IRLS iterations.
pub const IRLS_MAX_ITER: usize = 25;
/// Absolute change in deviance that ends IRLS.
pub const IRLS_TOLERANCE: f64 = 1e-8;
/// Coefficient magnitude taken as a sign of separation.
pub const SEPARATION_COEF: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit<T> {
    /// One entry per design column, intercept first; dropped columns are 0.
    pub coefficients: Vec<T>,
    /// -2 log-likelihood.
    pub deviance: T,
    pub converged: bool,
    pub iterations: usize,
    /// Set on perfect or quasi-complete separation and on single-class `y`.
    pub separated: bool,
    pub rank: usize,
    pub dropped: Vec<usize>,
}

/// `ln(1 + e^x)` without overflow.
fn softplus<T: Real>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid<T: Real>(eta: T) -> T {
    if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    }
}

fn bernoulli_deviance<T: Real>(y: &[u8], eta: &[T]) -> T {
    let two = T::lit(2.0);
    y.iter()
        .zip(eta)
        .map(|(&yi, &e)| two * if yi == 1 { softplus(-e) } else { softplus(e) })
        .sum()
}

/// Logistic regression by iteratively reweighted least squares.
///
/// Starts from `mu = (y + 0.5) / 2`, halves steps that increase the deviance,
/// and stops when the deviance moves by less than [`IRLS_TOLERANCE`] or after
/// [`IRLS_MAX_ITER`] iterations. If a coefficient exceeds
/// [`SEPARATION_COEF`] in magnitude or a working weight collapses below
/// machine precision the fit is marked separated and the last stable iterate
/// is returned.
pub fn logistic_fit<T: Real>(design: &Design<T>, y: &[u8]) -> LogisticFit<T> {
    let n = design.n_rows();
    let p = design.n_cols();
    let base = PivotedQr::new(design.columns(), n);
    let kept = base.kept().to_vec();
    let dropped = base.dropped().to_vec();
    let rank = kept.len();

    let ones = y.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == n {
        return LogisticFit {
            coefficients: vec![T::zero(); p],
            deviance: T::zero(),
            converged: false,
            iterations: 0,
            separated: true,
            rank,
            dropped,
        };
    }

    let cols: Vec<&Vec<T>> = kept.iter().map(|&j| &design.columns()[j]).collect();
    let linear_predictor = |beta: &[T]| -> Vec<T> {
        (0..n)
            .map(|i| cols.iter().zip(beta).map(|(c, &b)| c[i] * b).sum())
            .collect()
    };

    let half = T::lit(0.5);
    let mut mu: Vec<T> = y
        .iter()
        .map(|&v| (T::from_count(v as usize) + half) / T::lit(2.0))
        .collect();
    let mut eta: Vec<T> = mu.iter().map(|&m| (m / (T::one() - m)).ln()).collect();
    let mut dev = bernoulli_deviance(y, &eta);
    let mut beta: Option<Vec<T>> = None;
    let w_min = T::epsilon() * T::lit(10.0);
    let coef_max = T::lit(SEPARATION_COEF);
    let tol = T::lit(IRLS_TOLERANCE);

    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;
    for iter in 1..=IRLS_MAX_ITER {
        let w: Vec<T> = mu.iter().map(|&m| m * (T::one() - m)).collect();
        if w.iter().any(|&wi| wi < w_min) {
            separated = true;
            break;
        }
        let sw: Vec<T> = w.iter().map(|&wi| wi.sqrt()).collect();
        let z: Vec<T> = (0..n)
            .map(|i| sw[i] * (eta[i] + (T::from_count(y[i] as usize) - mu[i]) / w[i]))
            .collect();
        let wcols: Vec<Vec<T>> = cols
            .iter()
            .map(|c| c.iter().zip(&sw).map(|(&x, &s)| x * s).collect())
            .collect();
        let wqr = PivotedQr::with_tolerance(&wcols, n, T::zero());
        let sol = wqr.solve(&wqr.qty(&z));
        let mut cand = vec![T::zero(); rank];
        for (&j, &b) in wqr.kept().iter().zip(&sol) {
            cand[j] = b;
        }
        let mut cand_eta = linear_predictor(&cand);
        let mut cand_dev = bernoulli_deviance(y, &cand_eta);
        if let Some(prev) = &beta {
            let mut halvings = 0;
            while (cand_dev.is_nan() || cand_dev > dev) && halvings < 30 {
                for (c, &b) in cand.iter_mut().zip(prev) {
                    *c = (*c + b) * half;
                }
                cand_eta = linear_predictor(&cand);
                cand_dev = bernoulli_deviance(y, &cand_eta);
                halvings += 1;
            }
        }
        if cand.iter().any(|b| b.abs() > coef_max) || !cand_dev.is_finite() {
            separated = true;
            break;
        }
        iterations = iter;
        let change = (dev - cand_dev).abs();
        mu = cand_eta.iter().map(|&e| sigmoid(e)).collect();
        eta = cand_eta;
        dev = cand_dev;
        beta = Some(cand);
        if change < tol {
            converged = true;
            break;
        }
    }

    let mut coefficients = vec![T::zero(); p];
    if let Some(b) = beta {
        for (&j, &v) in kept.iter().zip(&b) {
            coefficients[j] = v;
        }
    } else {
        // separation detected before the first accepted step: deviance of the
        // intercept-free starting point is not meaningful, fall back to the
        // null model
        let pbar = T::from_count(ones) / T::from_count(n);
        let logit = (pbar / (T::one() - pbar)).ln();
        if kept.first() == Some(&0) {
            coefficients[0] = logit;
        }
        dev = bernoulli_deviance(y, &vec![logit; n]);
    }
    LogisticFit {
        coefficients,
        deviance: dev,
        converged: converged && !separated,
        iterations,
        separated,
        rank,
        dropped,
    }
}

pub fn predict_logistic<T: Real>(fit: &LogisticFit<T>, row: &[T]) -> Result<T> {
    if row.len() != fit.coefficients.len() {
        return Err(Error::Dimension {
            expected: fit.coefficients.len(),
            got: row.len(),
        });
    }
    Ok(sigmoid(dot(&fit.coefficients, row)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn design(cols: Vec<Vec<f64>>) -> Design<f64> {
        let n = cols[0].len();
        let mut d = Design::intercept(n);
        for c in cols {
            d.push(c);
        }
        d
    }

    #[test]
    fn intercept_only_is_the_mean() {
        let fit = ols_fit(&Design::intercept(3), &[1.0, 2.0, 3.0]);
        assert_relative_eq!(fit.coefficients[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.rss, 2.0, epsilon = 1e-13);
        assert_eq!(fit.df_residual, 2);
        assert_eq!(predict_linear(&fit, &[1.0]).unwrap(), fit.coefficients[0]);
    }

    #[test]
    fn exact_linear_fit() {
        let x = vec![0.5, 1.0, 2.0, 3.5, 4.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let fit = ols_fit(&design(vec![x]), &y);
        let yy: f64 = y.iter().map(|v| v * v).sum();
        assert!(fit.rss <= 1e-20 * yy);
        assert_relative_eq!(fit.coefficients[1], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn duplicated_column_matches_single_copy() {
        let x = vec![0.1, 0.9, 2.3, 2.8, 4.4, 5.0, 6.1];
        let z = vec![1.0, -1.0, 0.5, 0.2, -0.7, 0.3, 1.1];
        let y = vec![1.1, 2.0, 2.9, 4.2, 5.1, 5.8, 7.3];
        let single = ols_fit(&design(vec![x.clone(), z.clone()]), &y);
        let dup = ols_fit(&design(vec![x.clone(), z.clone(), x]), &y);
        assert_eq!(dup.rank, 3);
        assert_eq!(dup.dropped, vec![3]);
        assert_relative_eq!(dup.rss, single.rss, max_relative = 1e-12);
        for j in 0..3 {
            assert_relative_eq!(dup.coefficients[j], single.coefficients[j], epsilon = 1e-12);
        }
        assert_eq!(dup.coefficients[3], 0.0);
    }

    #[test]
    fn prediction_dimension_checked() {
        let fit = ols_fit(&Design::intercept(3), &[1.0, 2.0, 3.0]);
        assert!(predict_linear(&fit, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn logistic_intercept_only_balanced() {
        let fit = logistic_fit(&Design::<f64>::intercept(2), &[0, 1]);
        assert!(fit.converged);
        assert!(fit.coefficients[0].abs() < 1e-12);
        assert_relative_eq!(fit.deviance, 4.0 * 2.0_f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn logistic_null_slope() {
        let fit = logistic_fit(&design(vec![vec![1.0, 2.0, 3.0, 4.0]]), &[0, 1, 0, 1]);
        assert!(fit.converged);
        // MLE solves sum(y - mu) = 0 and sum(x (y - mu)) = 0; brute-force the
        // likelihood on a grid around the solution as a check
        let nll = |b0: f64, b1: f64| -> f64 {
            [(1.0, 0u8), (2.0, 1), (3.0, 0), (4.0, 1)]
                .iter()
                .map(|&(x, y)| {
                    let p = 1.0 / (1.0 + (-(b0 + b1 * x)).exp());
                    -(if y == 1 { p.ln() } else { (1.0 - p).ln() })
                })
                .sum()
        };
        let (b0, b1) = (fit.coefficients[0], fit.coefficients[1]);
        let best = nll(b0, b1);
        for i in -5..=5 {
            for j in -5..=5 {
                let v = nll(b0 + i as f64 * 1e-3, b1 + j as f64 * 1e-3);
                assert!(v >= best - 1e-12);
            }
        }
        assert_relative_eq!(2.0 * best, fit.deviance, epsilon = 1e-10);
        // x has the same within-class mean in the symmetric case, so the
        // slope vanishes
        let sym = logistic_fit(&design(vec![vec![1.0, 2.0, 2.0, 1.0]]), &[0, 0, 1, 1]);
        assert!(sym.coefficients[1].abs() < 1e-6);
    }

    #[test]
    fn separation_flagged() {
        let fit = logistic_fit(
            &design(vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]),
            &[0, 0, 0, 1, 1, 1],
        );
        assert!(!fit.converged);
        assert!(fit.separated);
        assert!(fit.deviance.is_finite() && fit.deviance >= 0.0);
    }

    #[test]
    fn single_class_is_degenerate() {
        let fit = logistic_fit(&design(vec![vec![1.0, 2.0, 3.0]]), &[1, 1, 1]);
        assert!(fit.separated && !fit.converged);
        assert_eq!(fit.deviance, 0.0);
    }

    #[test]
    fn logistic_prediction() {
        let fit = LogisticFit {
            coefficients: vec![0.0_f64, 0.0],
            deviance: 0.0,
            converged: true,
            iterations: 1,
            separated: false,
            rank: 2,
            dropped: vec![],
        };
        assert_eq!(predict_logistic(&fit, &[1.0, 3.0]).unwrap(), 0.5);
        let mut prev = 0.0;
        for b0 in [-5.0, 0.0, 5.0, 20.0, 40.0] {
            let f = LogisticFit {
                coefficients: vec![b0, 0.0],
                ..fit.clone()
            };
            let p = predict_logistic(&f, &[1.0, 1.0]).unwrap();
            assert!(p >= prev && p <= 1.0);
            prev = p;
        }
        assert!(prev > 1.0 - 1e-12);
    }
}
