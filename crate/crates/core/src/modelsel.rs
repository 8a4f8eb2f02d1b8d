//! Cross-validated choice of the threshold `a` and conditioning bound `k`.
//!
//! For every fold the search runs SES on the training part for each grid
//! point (sharing one test cache across the grid, since only `a` and `k`
//! change), fits a linear or logistic model on the first signature and
//! scores the held-out fold. Scores are oriented so larger is better:
//! regression uses the negated MSE, classification the AUC.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::citests::{expand_column, TestSpec};
use crate::data::{Dataset, Target};
use crate::error::{Error, Result};
use crate::par::parallel_map;
use crate::regress::{logistic_fit, ols_fit, predict_linear, predict_logistic, Design};
use crate::scalar::{mid_ranks, Real};
use crate::ses::{ses_run, SesConfig, TestCache};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    /// Binary outcome: logistic model scored by AUC.
    Classification,
    /// Continuous outcome: linear model scored by negated MSE.
    Regression,
}

impl Task {
    pub fn for_target<T: Real>(target: &Target<T>) -> Result<Task> {
        match target {
            Target::Continuous(_) => Ok(Task::Regression),
            Target::Binary(_) => Ok(Task::Classification),
            Target::Categorical { .. } => Err(Error::Config(
                "multi-class targets are not supported for model selection".into(),
            )),
        }
    }

    fn check<T: Real>(self, target: &Target<T>) -> Result<()> {
        match (self, target) {
            (Task::Regression, Target::Continuous(_)) => Ok(()),
            (Task::Classification, Target::Binary(_)) => Ok(()),
            (Task::Regression, _) => Err(Error::Config(
                "regression task needs a continuous target".into(),
            )),
            (Task::Classification, _) => Err(Error::Config(
                "classification task needs a binary target".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig<T> {
    pub kfolds: usize,
    /// Explicit folds; when present `kfolds` and `seed` are not used for
    /// fold generation.
    pub folds: Option<Vec<Vec<usize>>>,
    pub alphas: Vec<T>,
    pub max_ks: Vec<usize>,
    pub task: Task,
    pub seed: u64,
    pub workers: usize,
}

impl<T: Real> CvConfig<T> {
    pub fn new(task: Task) -> Self {
        CvConfig {
            kfolds: 10,
            folds: None,
            alphas: vec![T::lit(0.01), T::lit(0.05), T::lit(0.1)],
            max_ks: vec![3, 5],
            task,
            seed: 0,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kfolds < 2 && self.folds.is_none() {
            return Err(Error::Config("kfolds must be at least 2".into()));
        }
        if self.alphas.is_empty() || self.max_ks.is_empty() {
            return Err(Error::Config(
                "alpha and max_k grids must be nonempty".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigPerformance<T> {
    pub id: usize,
    pub alpha: T,
    pub max_k: usize,
    pub fold_scores: Vec<T>,
    pub mean: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestConfiguration<T> {
    pub id: usize,
    pub alpha: T,
    pub max_k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult<T> {
    pub task: Task,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
    pub per_config: Vec<ConfigPerformance<T>>,
    pub best_configuration: BestConfiguration<T>,
    pub best_performance: T,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Folds {
    pub folds: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

/// Seeded fold assignment. Discrete targets are shuffled per class and dealt
/// round-robin with one counter running across classes, so every fold holds
/// each class within one sample of its share; continuous targets are
/// shuffled as a whole and dealt the same way.
pub fn make_stratified_folds<T: Real>(
    target: &Target<T>,
    kfolds: usize,
    seed: u64,
) -> Result<Folds> {
    let n = target.len();
    if kfolds < 2 {
        return Err(Error::Config("kfolds must be at least 2".into()));
    }
    if kfolds > n {
        return Err(Error::Config(format!(
            "kfolds {kfolds} exceeds sample count {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let strata: Vec<Vec<usize>> = match target.labels() {
        Some(labels) => {
            let levels = target.level_count().unwrap_or(2);
            let mut by_class = vec![Vec::new(); levels];
            for (i, &l) in labels.iter().enumerate() {
                by_class[l].push(i);
            }
            for (class, members) in by_class.iter().enumerate() {
                if !members.is_empty() && members.len() < kfolds {
                    warnings.push(format!(
                        "class {class} has {} members for {kfolds} folds; some folds lack it",
                        members.len()
                    ));
                }
            }
            by_class
        }
        None => vec![(0..n).collect()],
    };
    let mut folds = vec![Vec::new(); kfolds];
    let mut next = 0;
    for mut members in strata {
        members.shuffle(&mut rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % kfolds;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(Folds { folds, warnings })
}

fn check_partition(folds: &[Vec<usize>], n: usize) -> Result<()> {
    if folds.len() < 2 {
        return Err(Error::Config("need at least 2 folds".into()));
    }
    let mut seen = vec![false; n];
    for f in folds {
        if f.is_empty() {
            return Err(Error::Config("empty fold".into()));
        }
        for &i in f {
            if i >= n || seen[i] {
                return Err(Error::Config(
                    "folds must partition the sample indices".into(),
                ));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Config("folds must cover every sample".into()));
    }
    Ok(())
}

/// Mean squared error `sum (y - yhat)^2 / n`.
pub fn mse<T: Real>(y: &[T], yhat: &[T]) -> Result<T> {
    if y.len() != yhat.len() {
        return Err(Error::Dimension {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Data("mse of empty vectors".into()));
    }
    let ss: T = y.iter().zip(yhat).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(ss / T::from_count(y.len()))
}

/// Area under the ROC curve in Mann-Whitney form, ties counted as one half.
pub fn auc<T: Real>(labels: &[u8], scores: &[T]) -> Result<T> {
    if labels.len() != scores.len() {
        return Err(Error::Dimension {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data("auc needs both classes".into()));
    }
    let ranks = mid_ranks(scores);
    let rank_sum: T = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(&r, _)| r)
        .sum();
    let (p, q) = (T::from_count(n_pos), T::from_count(n_neg));
    Ok((rank_sum - p * (p + T::one()) / T::lit(2.0)) / (p * q))
}

fn design_for<T: Real>(ds: &Dataset<T>, vars: &[usize]) -> Design<T> {
    let mut d = Design::intercept(ds.n_rows());
    for &v in vars {
        for col in expand_column(ds, v) {
            d.push(col);
        }
    }
    d
}

/// Fits the task model on `vars` over the training data and returns the raw
/// held-out metric: MSE for regression, AUC for classification.
pub fn holdout_metric<T: Real>(
    train: (&Dataset<T>, &Target<T>),
    test: (&Dataset<T>, &Target<T>),
    vars: &[usize],
    task: Task,
) -> Result<T> {
    let train_design = design_for(train.0, vars);
    let test_design = design_for(test.0, vars);
    let rows = test_design.n_rows();
    match (task, train.1, test.1) {
        (Task::Regression, Target::Continuous(y), Target::Continuous(y_test)) => {
            let fit = ols_fit(&train_design, y);
            let yhat = (0..rows)
                .map(|i| predict_linear(&fit, &test_design.row(i)))
                .collect::<Result<Vec<T>>>()?;
            mse(y_test, &yhat)
        }
        (Task::Classification, Target::Binary(y), Target::Binary(y_test)) => {
            let fit = logistic_fit(&train_design, y);
            let scores = (0..rows)
                .map(|i| predict_logistic(&fit, &test_design.row(i)))
                .collect::<Result<Vec<T>>>()?;
            auc(y_test, &scores)
        }
        _ => Err(Error::Config("task does not match target kind".into())),
    }
}

/// Converts a raw metric to the larger-is-better orientation.
pub fn oriented<T: Real>(metric: T, task: Task) -> T {
    match task {
        Task::Regression => -metric,
        Task::Classification => metric,
    }
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut held = vec![false; n];
    for &i in fold {
        held[i] = true;
    }
    (0..n).filter(|&i| !held[i]).collect()
}

/// Grid search over `(alpha, max_k)` by k-fold cross-validation.
pub fn cv_ses<T: Real>(
    ds: &Dataset<T>,
    target: &Target<T>,
    cfg: &CvConfig<T>,
    test: Option<TestSpec<T>>,
) -> Result<CvResult<T>> {
    cfg.validate()?;
    cfg.task.check(target)?;
    target.validate_against(ds)?;
    let n = ds.n_rows();
    let (folds, warnings) = match &cfg.folds {
        Some(f) => {
            check_partition(f, n)?;
            (f.clone(), Vec::new())
        }
        None => {
            let f = make_stratified_folds(target, cfg.kfolds, cfg.seed)?;
            (f.folds, f.warnings)
        }
    };
    let grid: Vec<(T, usize)> = cfg
        .alphas
        .iter()
        .flat_map(|&a| cfg.max_ks.iter().map(move |&k| (a, k)))
        .collect();
    for &(a, k) in &grid {
        SesConfig::new(a, k).validate()?;
    }

    // scores[fold][config]
    let scores: Vec<Result<Vec<T>>> = parallel_map(&folds, cfg.workers, |fold| {
        let train_idx = complement(n, fold);
        let train = (ds.select_rows(&train_idx), target.select_rows(&train_idx));
        let held = (ds.select_rows(fold), target.select_rows(fold));
        let mut cache: Option<TestCache<T>> = None;
        let mut out = Vec::with_capacity(grid.len());
        for &(a, k) in &grid {
            let mut ses_cfg = SesConfig::new(a, k);
            ses_cfg.test = test.clone();
            let run = ses_run(&train.0, &train.1, &ses_cfg, cache.take())?;
            // queue owners form the first signature
            let metric = holdout_metric(
                (&train.0, &train.1),
                (&held.0, &held.1),
                &run.selected_vars,
                cfg.task,
            )?;
            out.push(oriented(metric, cfg.task));
            cache = Some(run.cache);
        }
        Ok(out)
    });
    let scores = scores.into_iter().collect::<Result<Vec<_>>>()?;

    let per_config: Vec<ConfigPerformance<T>> = grid
        .iter()
        .enumerate()
        .map(|(id, &(alpha, max_k))| {
            let fold_scores: Vec<T> = scores.iter().map(|s| s[id]).collect();
            let mean = fold_scores.iter().copied().sum::<T>() / T::from_count(fold_scores.len());
            ConfigPerformance {
                id,
                alpha,
                max_k,
                fold_scores,
                mean,
            }
        })
        .collect();

    let best = per_config
        .iter()
        .reduce(|best, c| {
            let better = c.mean > best.mean
                || (c.mean == best.mean
                    && (c.alpha < best.alpha || (c.alpha == best.alpha && c.max_k < best.max_k)));
            if better {
                c
            } else {
                best
            }
        })
        .expect("grid is nonempty");
    Ok(CvResult {
        task: cfg.task,
        seed: cfg.seed,
        folds,
        best_configuration: BestConfiguration {
            id: best.id,
            alpha: best.alpha,
            max_k: best.max_k,
        },
        best_performance: best.mean,
        per_config,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_classes_one_per_fold() {
        let t = Target::<f64>::Binary(vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        let f = make_stratified_folds(&t, 5, 3).unwrap();
        for fold in &f.folds {
            assert_eq!(fold.len(), 2);
            let ones = fold.iter().filter(|&&i| i % 2 == 1).count();
            assert_eq!(ones, 1);
        }
        assert!(f.warnings.is_empty());
        assert_eq!(f, make_stratified_folds(&t, 5, 3).unwrap());
    }

    #[test]
    fn fold_count_checked() {
        let t = Target::Continuous(vec![1.0_f64, 2.0, 3.0]);
        assert!(make_stratified_folds(&t, 1, 0).is_err());
        assert!(make_stratified_folds(&t, 4, 0).is_err());
    }

    #[test]
    fn rare_class_warns() {
        let t = Target::<f64>::Binary(vec![0, 0, 0, 0, 0, 1]);
        let f = make_stratified_folds(&t, 3, 0).unwrap();
        assert_eq!(f.warnings.len(), 1);
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0_f64, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0_f64, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(mse(&[0.0_f64], &[1.0, 1.0]).is_err());
        let (y, yh) = ([0.5_f64, -1.0, 3.0], [1.0_f64, 0.0, 2.0]);
        let c = 3.0;
        let scaled = mse(&y.map(|v| v * c), &yh.map(|v| v * c)).unwrap();
        assert!((scaled - c * c * mse(&y, &yh).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0, 0, 1, 1], &[0.1_f64, 0.2, 0.8, 0.9]).unwrap(), 1.0);
        assert_eq!(auc(&[0, 1, 0, 1], &[0.5_f64; 4]).unwrap(), 0.5);
        assert_eq!(auc(&[0, 1, 0, 1], &[0.1_f64, 0.9, 0.8, 0.4]).unwrap(), 0.75);
        assert!(auc(&[1, 1], &[0.1_f64, 0.2]).is_err());
    }

    #[test]
    fn explicit_folds_must_partition() {
        assert!(check_partition(&[vec![0, 1], vec![2]], 3).is_ok());
        assert!(check_partition(&[vec![0, 1], vec![1, 2]], 3).is_err());
        assert!(check_partition(&[vec![0], vec![2]], 3).is_err());
    }

    #[test]
    fn task_must_match_target() {
        let ds = Dataset::from_continuous(vec![(0..20).map(f64::from).collect()]).unwrap();
        let y = Target::Continuous((0..20).map(f64::from).collect());
        let cfg = CvConfig::new(Task::Classification);
        assert!(cv_ses(&ds, &y, &cfg, None).unwrap_err().is_config());
    }
}
