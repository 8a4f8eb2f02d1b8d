//! Synthetic data and the repeated-split evaluation protocol.
//!
//! Column numbers in [`SyntheticSpec`] are 1-based, as in the generating
//! formula `y = 3*X10 + 2*X200 + 3*X20 + U(0, 10)`; the returned dataset is
//! indexed from 0 as usual, with columns named `X1..Xp`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::citests::TestSpec;
use crate::data::{Dataset, Target};
use crate::error::{Error, Result};
use crate::modelsel::{cv_ses, holdout_metric, make_stratified_folds, CvConfig, Task};
use crate::par::parallel_map;
use crate::scalar::Real;
use crate::ses::{sample_queues, ses_run, SesConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    /// 1-based column -> weight in the target.
    pub coefficients: BTreeMap<usize, f64>,
    /// 1-based copy column -> 1-based source column.
    pub duplicates: BTreeMap<usize, usize>,
    pub predictor_range: (f64, f64),
    pub noise_range: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_rows: 1000,
            n_cols: 300,
            coefficients: [(10, 3.0), (200, 2.0), (20, 3.0)].into_iter().collect(),
            duplicates: [(15, 10), (250, 200), (230, 200)].into_iter().collect(),
            predictor_range: (1.0, 100.0),
            noise_range: (0.0, 10.0),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn with_seed(seed: u64) -> Self {
        SyntheticSpec {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |c: usize| (1..=self.n_cols).contains(&c);
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::Config(
                "synthetic spec needs rows and columns".into(),
            ));
        }
        if let Some(c) = self.coefficients.keys().find(|&&c| !in_range(c)) {
            return Err(Error::Config(format!(
                "coefficient column {c} out of range"
            )));
        }
        for (&copy, &src) in &self.duplicates {
            if !in_range(copy) || !in_range(src) {
                return Err(Error::Config(format!(
                    "duplicate {copy}<-{src} out of range"
                )));
            }
            if copy == src || self.duplicates.contains_key(&src) {
                return Err(Error::Config(format!(
                    "duplicate source {src} must be an original column"
                )));
            }
        }
        let ordered = |r: (f64, f64)| r.0 < r.1 && r.0.is_finite() && r.1.is_finite();
        if !ordered(self.predictor_range) || !ordered(self.noise_range) {
            return Err(Error::Config("uniform ranges need low < high".into()));
        }
        Ok(())
    }
}

/// Draws the predictors column by column, builds the target, then overwrites
/// the copy columns. The target therefore uses the original draws of any
/// coefficient column that is itself a copy.
pub fn generate_synthetic<T: Real>(spec: &SyntheticSpec) -> Result<(Dataset<T>, Target<T>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.predictor_range;
    let mut cols: Vec<Vec<f64>> = (0..spec.n_cols)
        .map(|_| (0..spec.n_rows).map(|_| rng.gen_range(lo..hi)).collect())
        .collect();
    let (nlo, nhi) = spec.noise_range;
    let y: Vec<f64> = (0..spec.n_rows)
        .map(|i| {
            let signal: f64 = spec
                .coefficients
                .iter()
                .map(|(&c, &w)| w * cols[c - 1][i])
                .sum();
            signal + rng.gen_range(nlo..nhi)
        })
        .collect();
    for (&copy, &src) in &spec.duplicates {
        cols[copy - 1] = cols[src - 1].clone();
    }
    let cols = cols
        .into_iter()
        .map(|c| c.into_iter().map(T::lit).collect())
        .collect();
    let ds = Dataset::from_continuous(cols)?;
    Ok((ds, Target::Continuous(y.into_iter().map(T::lit).collect())))
}

/// Sample standard deviation over `|mean|`. `None` for fewer than two
/// values or a zero mean.
pub fn coefficient_of_variation<T: Real>(xs: &[T]) -> Option<T> {
    if xs.len() < 2 {
        return None;
    }
    let n = T::from_count(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    if mean == T::zero() {
        return None;
    }
    let ss: T = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    Some((ss / (n - T::one())).sqrt() / mean.abs())
}

/// Type-7 sample quantile of already sorted values.
pub fn quantile_sorted<T: Real>(sorted: &[T], p: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = T::lit(h - lo as f64);
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig<T> {
    pub reps: usize,
    pub seed: u64,
    pub alphas: Vec<T>,
    pub max_ks: Vec<usize>,
    pub kfolds: usize,
    /// Most signatures fitted per repetition; beyond it a uniform sample.
    pub signature_limit: usize,
    pub workers: usize,
}

impl<T: Real> Default for ProtocolConfig<T> {
    fn default() -> Self {
        ProtocolConfig {
            reps: 50,
            seed: 0,
            alphas: vec![T::lit(0.01), T::lit(0.05), T::lit(0.1)],
            max_ks: vec![3, 5],
            kfolds: 10,
            signature_limit: 1000,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult<T> {
    pub rep: usize,
    pub alpha: T,
    pub max_k: usize,
    pub selected_vars: Vec<usize>,
    pub signature_count: u64,
    /// Holdout metric of each fitted signature: MSE for regression, AUC for
    /// classification.
    pub performances: Vec<T>,
    /// `None` when fewer than two signatures were fitted.
    pub cv_of_performances: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSummary<T> {
    /// 2.5%, 50% and 97.5% quantiles of the defined CV values.
    pub cv_quantiles: Option<[T; 3]>,
    pub cv_defined: usize,
    /// Repetitions with 1..=9 signatures, then 10 or more.
    pub multiplicity: [usize; 10],
    pub selected_mean: T,
    pub selected_sd: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport<T> {
    pub task: Task,
    pub config: ProtocolConfig<T>,
    pub repetitions: Vec<RepetitionResult<T>>,
    pub summary: ProtocolSummary<T>,
}

fn repetition<T: Real>(
    ds: &Dataset<T>,
    target: &Target<T>,
    task: Task,
    cfg: &ProtocolConfig<T>,
    test: &Option<TestSpec<T>>,
    rep: usize,
) -> Result<RepetitionResult<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep as u64);
    let split = make_stratified_folds(target, 2, rng.gen())?.folds;
    let (train_idx, hold_idx) = (&split[0], &split[1]);
    let train = (ds.select_rows(train_idx), target.select_rows(train_idx));
    let hold = (ds.select_rows(hold_idx), target.select_rows(hold_idx));

    let cv_cfg = CvConfig {
        kfolds: cfg.kfolds,
        folds: None,
        alphas: cfg.alphas.clone(),
        max_ks: cfg.max_ks.clone(),
        task,
        seed: rng.gen(),
        workers: 1,
    };
    let cv = cv_ses(&train.0, &train.1, &cv_cfg, test.clone())?;
    let best = &cv.best_configuration;
    let mut ses_cfg = SesConfig::new(best.alpha, best.max_k);
    ses_cfg.test = test.clone();
    let out = ses_run(&train.0, &train.1, &ses_cfg, None)?;

    let sigs = sample_queues(&out.queues, cfg.signature_limit, &mut rng);
    let performances = sigs
        .signatures
        .iter()
        .map(|sig| holdout_metric((&train.0, &train.1), (&hold.0, &hold.1), sig, task))
        .collect::<Result<Vec<T>>>()?;
    Ok(RepetitionResult {
        rep,
        alpha: best.alpha,
        max_k: best.max_k,
        selected_vars: out.selected_vars.clone(),
        signature_count: out.signature_count,
        cv_of_performances: coefficient_of_variation(&performances),
        performances,
    })
}

fn summarize<T: Real>(reps: &[RepetitionResult<T>]) -> ProtocolSummary<T> {
    let mut cvs: Vec<T> = reps.iter().filter_map(|r| r.cv_of_performances).collect();
    cvs.sort_by(|a, b| a.partial_cmp(b).expect("finite CV values"));
    let cv_quantiles = match (
        quantile_sorted(&cvs, 0.025),
        quantile_sorted(&cvs, 0.5),
        quantile_sorted(&cvs, 0.975),
    ) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        _ => None,
    };
    let mut multiplicity = [0; 10];
    for r in reps {
        let bin = (r.signature_count.clamp(1, 10) - 1) as usize;
        multiplicity[bin] += 1;
    }
    let counts: Vec<T> = reps
        .iter()
        .map(|r| T::from_count(r.selected_vars.len()))
        .collect();
    let n = T::from_count(counts.len().max(1));
    let selected_mean = counts.iter().copied().sum::<T>() / n;
    let selected_sd = if counts.len() > 1 {
        let ss: T = counts
            .iter()
            .map(|&c| (c - selected_mean) * (c - selected_mean))
            .sum();
        (ss / (n - T::one())).sqrt()
    } else {
        T::zero()
    };
    ProtocolSummary {
        cv_quantiles,
        cv_defined: cvs.len(),
        multiplicity,
        selected_mean,
        selected_sd,
    }
}

/// Repeated 50/50 split protocol. Each repetition tunes `(a, k)` by
/// cross-validation on the training half, reruns SES there with the winner
/// and scores every signature (up to the cap) on the holdout half.
/// Repetitions run in parallel; each draws from its own stream of the master
/// seed so the report does not depend on the worker count.
pub fn run_protocol<T: Real>(
    ds: &Dataset<T>,
    target: &Target<T>,
    cfg: &ProtocolConfig<T>,
    test: Option<TestSpec<T>>,
) -> Result<ProtocolReport<T>> {
    if cfg.reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    if cfg.signature_limit == 0 {
        return Err(Error::Config("signature limit must be at least 1".into()));
    }
    let task = Task::for_target(target)?;
    target.validate_against(ds)?;
    let ids: Vec<usize> = (0..cfg.reps).collect();
    let repetitions = parallel_map(&ids, cfg.workers, |&rep| {
        repetition(ds, target, task, cfg, &test, rep)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&repetitions);
    Ok(ProtocolReport {
        task,
        config: cfg.clone(),
        repetitions,
        summary,
    })
}
