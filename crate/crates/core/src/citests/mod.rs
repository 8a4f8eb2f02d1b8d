//! Conditional-independence tests `ind(X, T | W)`.
//!
//! Every test returns a [`TestResult`]; degenerate situations (too few
//! samples, zero residual variance, separation, no degrees of freedom) yield
//! an invalid result with `p_value = 1`, which the selection engine reads as
//! independence.

mod fisher;
mod gsquare;
mod lrt;

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use fisher::{fisher_test, partial_correlation, spearman_test};
pub use gsquare::g2_test;
pub use lrt::{expand_column, linreg_lrt_test, logistic_lrt_test};

use crate::data::{Dataset, Target};
use crate::error::{Error, Result};
use crate::scalar::{mid_ranks, Real};

/// Canonical identity of one test: the tested variable and its sorted,
/// duplicate-free conditioning set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TestKey {
    pub x: usize,
    pub cond: Vec<usize>,
}

impl TestKey {
    pub fn new(x: usize, cond: &[usize]) -> Self {
        let mut cond: Vec<usize> = cond.iter().copied().filter(|&c| c != x).collect();
        cond.sort_unstable();
        cond.dedup();
        TestKey { x, cond }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult<T> {
    pub statistic: T,
    pub p_value: T,
    pub dof: T,
    pub valid: bool,
}

impl<T: Real> TestResult<T> {
    pub fn new(statistic: T, p_value: T, dof: T) -> Self {
        TestResult {
            statistic,
            p_value,
            dof,
            valid: true,
        }
        .sanitized()
    }

    /// Degenerate outcome, read as independence.
    pub fn invalid() -> Self {
        TestResult {
            statistic: T::zero(),
            p_value: T::one(),
            dof: T::zero(),
            valid: false,
        }
    }

    /// Enforces `p in [0, 1]` and `invalid => p = 1`.
    pub fn sanitized(self) -> Self {
        if !self.valid || self.p_value.is_nan() || self.statistic.is_nan() {
            return TestResult::invalid();
        }
        TestResult {
            p_value: self.p_value.max(T::zero()).min(T::one()),
            ..self
        }
    }
}

/// User-supplied conditional-independence test.
pub trait CustomTest<T>: Send + Sync {
    fn name(&self) -> &str;
    fn test(&self, ds: &Dataset<T>, target: &Target<T>, x: usize, cond: &[usize]) -> TestResult<T>;
}

struct FnTest<F> {
    name: String,
    f: F,
}

impl<T, F> CustomTest<T> for FnTest<F>
where
    F: Fn(&Dataset<T>, &Target<T>, usize, &[usize]) -> TestResult<T> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn test(&self, ds: &Dataset<T>, target: &Target<T>, x: usize, cond: &[usize]) -> TestResult<T> {
        (self.f)(ds, target, x, cond)
    }
}

#[derive(Clone)]
pub enum TestSpec<T> {
    Fisher,
    Spearman,
    GSquare,
    LinRegLrt,
    LogisticLrt,
    Custom(Arc<dyn CustomTest<T>>),
}

impl<T: Real> TestSpec<T> {
    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Dataset<T>, &Target<T>, usize, &[usize]) -> TestResult<T> + Send + Sync + 'static,
    {
        TestSpec::Custom(Arc::new(FnTest {
            name: name.into(),
            f,
        }))
    }

    pub fn name(&self) -> &str {
        match self {
            TestSpec::Fisher => "fisher",
            TestSpec::Spearman => "spearman",
            TestSpec::GSquare => "g2",
            TestSpec::LinRegLrt => "linreg",
            TestSpec::LogisticLrt => "logistic",
            TestSpec::Custom(c) => c.name(),
        }
    }
}

impl<T: Real> fmt::Debug for TestSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestSpec({})", self.name())
    }
}

impl<T: Real> PartialEq for TestSpec<T> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TestSpec::Custom(a), TestSpec::Custom(b)) => Arc::ptr_eq(a, b),
            (a, b) => std::mem::discriminant(a) == std::mem::discriminant(b),
        }
    }
}

/// Test selection as given on the command line: a named test or `auto`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestChoice {
    Auto,
    Fisher,
    Spearman,
    GSquare,
    LinReg,
    Logistic,
}

impl FromStr for TestChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => TestChoice::Auto,
            "fisher" => TestChoice::Fisher,
            "spearman" => TestChoice::Spearman,
            "g2" => TestChoice::GSquare,
            "linreg" => TestChoice::LinReg,
            "logistic" => TestChoice::Logistic,
            other => return Err(Error::Config(format!("unknown test '{other}'"))),
        })
    }
}

impl TestChoice {
    pub fn to_spec<T: Real>(self) -> Option<TestSpec<T>> {
        match self {
            TestChoice::Auto => None,
            TestChoice::Fisher => Some(TestSpec::Fisher),
            TestChoice::Spearman => Some(TestSpec::Spearman),
            TestChoice::GSquare => Some(TestSpec::GSquare),
            TestChoice::LinReg => Some(TestSpec::LinRegLrt),
            TestChoice::Logistic => Some(TestSpec::LogisticLrt),
        }
    }
}

/// Resolves the test to run: checks an explicit request against the data, or
/// picks the default for the target and predictor kinds.
pub fn dispatch_test<T: Real>(
    target: &Target<T>,
    ds: &Dataset<T>,
    requested: Option<TestSpec<T>>,
) -> Result<TestSpec<T>> {
    let incompatible =
        |spec: &TestSpec<T>, why: &str| Err(Error::Config(format!("test '{}' {why}", spec.name())));
    match requested {
        Some(spec) => {
            match &spec {
                TestSpec::Fisher | TestSpec::Spearman => {
                    if !matches!(target, Target::Continuous(_)) {
                        return incompatible(&spec, "needs a continuous target");
                    }
                    if !ds.all_continuous() {
                        return incompatible(&spec, "needs all predictors continuous");
                    }
                }
                TestSpec::GSquare => {
                    if matches!(target, Target::Continuous(_)) {
                        return incompatible(&spec, "needs a categorical target");
                    }
                    if !ds.all_categorical() {
                        return incompatible(&spec, "needs all predictors categorical");
                    }
                }
                TestSpec::LinRegLrt => {
                    if !matches!(target, Target::Continuous(_)) {
                        return incompatible(&spec, "needs a continuous target");
                    }
                }
                TestSpec::LogisticLrt => {
                    if !matches!(target, Target::Binary(_)) {
                        return incompatible(&spec, "needs a binary target");
                    }
                }
                TestSpec::Custom(_) => {}
            }
            Ok(spec)
        }
        None => match target {
            Target::Binary(_) => Ok(TestSpec::LogisticLrt),
            Target::Continuous(_) if ds.all_continuous() => Ok(TestSpec::Fisher),
            Target::Continuous(_) => Ok(TestSpec::LinRegLrt),
            Target::Categorical { .. } if ds.all_categorical() => Ok(TestSpec::GSquare),
            Target::Categorical { .. } => Err(Error::Config(
                "multi-level categorical target with non-categorical predictors has no supported test"
                    .into(),
            )),
        },
    }
}

/// A test bound to one dataset and target, with any per-dataset preparation
/// (rank transforms, label extraction) done once.
pub struct BoundTest<'a, T: Real> {
    spec: TestSpec<T>,
    ds: Cow<'a, Dataset<T>>,
    target: &'a Target<T>,
    values: Vec<T>,
    labels: Vec<usize>,
    binary: Vec<u8>,
}

impl<'a, T: Real> BoundTest<'a, T> {
    pub fn new(spec: TestSpec<T>, ds: &'a Dataset<T>, target: &'a Target<T>) -> Self {
        let (ds, values) = match spec {
            TestSpec::Spearman => (
                Cow::Owned(ds.map_columns(mid_ranks)),
                mid_ranks(&target.values()),
            ),
            _ => (Cow::Borrowed(ds), target.values()),
        };
        let labels = target.labels().unwrap_or_default();
        let binary = match target {
            Target::Binary(b) => b.clone(),
            _ => Vec::new(),
        };
        BoundTest {
            spec,
            ds,
            target,
            values,
            labels,
            binary,
        }
    }

    pub fn spec(&self) -> &TestSpec<T> {
        &self.spec
    }

    pub fn evaluate(&self, x: usize, cond: &[usize]) -> TestResult<T> {
        let ds = self.ds.as_ref();
        let r = match &self.spec {
            // Spearman runs the Fisher machinery on the pre-ranked data
            TestSpec::Fisher | TestSpec::Spearman => fisher_test(ds, x, &self.values, cond),
            TestSpec::GSquare => g2_test(
                ds,
                x,
                &self.labels,
                self.target.level_count().unwrap_or(2),
                cond,
            ),
            TestSpec::LinRegLrt => linreg_lrt_test(ds, x, &self.values, cond),
            TestSpec::LogisticLrt => logistic_lrt_test(ds, x, &self.binary, cond),
            TestSpec::Custom(c) => c.test(ds, self.target, x, cond),
        };
        r.sanitized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;

    #[test]
    fn key_is_canonical() {
        assert_eq!(TestKey::new(1, &[5, 2]), TestKey::new(1, &[2, 5, 5]));
        assert_eq!(TestKey::new(1, &[5, 2]).cond, vec![2, 5]);
    }

    #[test]
    fn invalid_results_are_independence() {
        let r = TestResult::<f64> {
            statistic: 3.0,
            p_value: 0.01,
            dof: 1.0,
            valid: false,
        }
        .sanitized();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(TestResult::new(1.0, 1.5_f64, 1.0).p_value, 1.0);
        assert!(!TestResult::new(1.0, f64::NAN, 1.0).valid);
    }

    fn mixed() -> Dataset<f64> {
        Dataset::new(vec![
            Column::continuous("a", vec![0.1, 0.2, 0.3, 0.4]),
            Column::categorical("g", &[0, 1, 0, 1], 2),
        ])
        .unwrap()
    }

    #[test]
    fn auto_dispatch() {
        let cont = Dataset::from_continuous(vec![vec![0.1_f64, 0.2, 0.3]]).unwrap();
        let y = Target::Continuous(vec![1.0, 2.0, 3.0]);
        assert_eq!(dispatch_test(&y, &cont, None).unwrap(), TestSpec::Fisher);
        let yb = Target::<f64>::Binary(vec![0, 1, 1]);
        assert_eq!(
            dispatch_test(&yb, &cont, None).unwrap(),
            TestSpec::LogisticLrt
        );
        let y4 = Target::Continuous(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            dispatch_test(&y4, &mixed(), None).unwrap(),
            TestSpec::LinRegLrt
        );
        let cat = Dataset::new(vec![Column::<f64>::categorical("g", &[0, 1, 2], 3)]).unwrap();
        let yc = Target::Categorical {
            labels: vec![0, 1, 2],
            level_count: 3,
        };
        assert_eq!(dispatch_test(&yc, &cat, None).unwrap(), TestSpec::GSquare);
    }

    #[test]
    fn explicit_incompatible_request_rejected() {
        let y = Target::Continuous(vec![1.0, 2.0, 3.0, 4.0]);
        let err = dispatch_test(&y, &mixed(), Some(TestSpec::Fisher)).unwrap_err();
        assert!(err.is_config());
        let yb = Target::<f64>::Binary(vec![0, 1, 1, 0]);
        assert!(dispatch_test(&yb, &mixed(), Some(TestSpec::LinRegLrt)).is_err());
        assert!(dispatch_test(&yb, &mixed(), Some(TestSpec::LogisticLrt)).is_ok());
    }

    #[test]
    fn choice_parsing() {
        assert_eq!("g2".parse::<TestChoice>().unwrap(), TestChoice::GSquare);
        assert!("lasso".parse::<TestChoice>().is_err());
    }
}
