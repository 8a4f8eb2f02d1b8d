mod common;

use proptest::prelude::*;
use ses_core::citests::{fisher_test, g2_test, linreg_lrt_test, logistic_lrt_test, spearman_test};
use ses_core::data::{write_csv, Column};
use ses_core::modelsel::{auc, cv_ses, make_stratified_folds, mse, CvConfig, Task};
use ses_core::{load_dataset, ses_run, DatasetF64, SesConfigF64, TargetColumn, TargetF64};

fn columns(n: usize, p: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-50.0..50.0f64, n), p)
}

fn in_unit(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p_values_in_unit_interval(cols in columns(12, 4), t in prop::collection::vec(-5.0..5.0f64, 12),
                                 y in prop::collection::vec(0u8..2, 12)) {
        let ds = DatasetF64::from_continuous(cols).unwrap();
        for cond in [vec![], vec![1], vec![1, 2], vec![1, 2, 3]] {
            for r in [
                fisher_test(&ds, 0, &t, &cond),
                spearman_test(&ds, 0, &t, &cond),
                linreg_lrt_test(&ds, 0, &t, &cond),
                logistic_lrt_test(&ds, 0, &y, &cond),
            ] {
                prop_assert!(in_unit(r.p_value));
                prop_assert!(r.valid || r.p_value == 1.0);
            }
        }
    }

    #[test]
    fn fisher_symmetric_in_x_and_t(cols in columns(20, 4)) {
        let ds = DatasetF64::from_continuous(cols.clone()).unwrap();
        let swapped = DatasetF64::from_continuous(vec![cols[1].clone(), cols[0].clone(), cols[2].clone(), cols[3].clone()]).unwrap();
        let a = fisher_test(&ds, 0, &cols[1], &[2, 3]);
        let b = fisher_test(&swapped, 0, &cols[0], &[2, 3]);
        prop_assert!((a.statistic - b.statistic).abs() < 1e-9);
        prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
    }

    #[test]
    fn g2_invariant_under_relabeling(x in prop::collection::vec(0usize..3, 90),
                                     w in prop::collection::vec(0usize..2, 90),
                                     t in prop::collection::vec(0usize..2, 90)) {
        let perm = [2usize, 0, 1];
        let relabeled: Vec<usize> = x.iter().map(|&v| perm[v]).collect();
        let flipped: Vec<usize> = t.iter().map(|&v| 1 - v).collect();
        let build = |xs: &[usize]| DatasetF64::new(vec![
            Column::categorical("x", xs, 3),
            Column::categorical("w", &w, 2),
        ]).unwrap();
        let a = g2_test(&build(&x), 0, &t, 2, &[1]);
        let b = g2_test(&build(&relabeled), 0, &flipped, 2, &[1]);
        prop_assert!((a.statistic - b.statistic).abs() < 1e-9);
        prop_assert_eq!(a.dof, b.dof);
        prop_assert!(in_unit(a.p_value));
    }

    #[test]
    fn auc_matches_pair_count(scores in prop::collection::vec(0u8..6, 2..30), labels in prop::collection::vec(0u8..2, 30)) {
        let labels = &labels[..scores.len()];
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let s: Vec<f64> = scores.iter().map(|&v| f64::from(v)).collect();
        let mut pairs = 0.0;
        let mut count = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    count += 1.0;
                    pairs += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let got = auc(labels, &s).unwrap();
        prop_assert!((got - pairs / count).abs() < 1e-12);
        prop_assert!(in_unit(got));
    }

    #[test]
    fn auc_complement_and_monotone_invariance(seed in 0u64..1000, n in 4usize..40) {
        let mut r = common::rng(seed);
        let s: Vec<f64> = common::gaussian_columns(&mut r, n, 1).remove(0);
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let mono: Vec<f64> = s.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
        let a = auc(&labels, &s).unwrap();
        prop_assert!((a + auc(&labels, &neg).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((a - auc(&labels, &mono).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mse_scales_quadratically(y in prop::collection::vec(-10.0..10.0f64, 1..20), c in 0.1..10.0f64) {
        let yhat: Vec<f64> = y.iter().map(|v| v * 0.5 + 1.0).collect();
        let base = mse(&y, &yhat).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
        let hs: Vec<f64> = yhat.iter().map(|v| v * c).collect();
        prop_assert!((mse(&ys, &hs).unwrap() - c * c * base).abs() <= 1e-9 * (1.0 + c * c * base));
    }

    #[test]
    fn folds_partition_indices(labels in prop::collection::vec(0u8..2, 10..80), k in 2usize..8, seed in 0u64..100) {
        let n = labels.len();
        let t = TargetF64::Binary(labels.clone());
        let folds = make_stratified_folds(&t, k, seed).unwrap().folds;
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        for class in 0..2u8 {
            let total = labels.iter().filter(|&&l| l == class).count();
            for f in &folds {
                let c = f.iter().filter(|&&i| labels[i] == class).count();
                prop_assert!(c.abs_diff(total / k) <= 1);
            }
        }
    }

    #[test]
    fn csv_round_trip(cols in columns(6, 3), t in prop::collection::vec(-1e6..1e6f64, 6)) {
        let ds = DatasetF64::from_continuous(cols).unwrap();
        let target = TargetF64::Continuous(t);
        let mut buf = Vec::new();
        write_csv(&ds, &target, "y", &mut buf).unwrap();
        let (back, back_t) = load_dataset::<f64>(&buf[..], &TargetColumn::from("y"), None).unwrap();
        prop_assert_eq!(back.names(), ds.names());
        for j in 0..ds.var_count() {
            prop_assert_eq!(back.column(j), ds.column(j));
        }
        prop_assert_eq!(back_t, target);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ses_output_invariants(seed in 0u64..10_000) {
        let (ds, t, a, k) = common::random_instance(seed);
        let out = ses_run(&ds, &t, &SesConfigF64::new(a, k), None).unwrap();
        let mut members: Vec<usize> = out.queues.iter().flatten().copied().collect();
        let total = members.len();
        members.sort_unstable();
        members.dedup();
        prop_assert_eq!(members.len(), total, "queues overlap");
        for (s, q) in out.selected_vars.iter().zip(&out.queues) {
            prop_assert_eq!(q[0], *s);
            prop_assert!(out.pvalues[*s] <= a);
        }
        let product: u64 = out.queues.iter().map(|q| q.len() as u64).product();
        prop_assert_eq!(out.signature_count, product);
        let sigs = out.signatures(usize::MAX);
        prop_assert_eq!(sigs.signatures.len() as u64, product);
        prop_assert_eq!(&sigs.signatures[0], &out.selected_vars);
    }
}

#[test]
fn cv_single_and_repeated_configs() {
    let (ds, t, _, _) = common::random_instance(123);
    let one = CvConfig {
        kfolds: 4,
        alphas: vec![0.05],
        max_ks: vec![2],
        ..CvConfig::new(Task::Regression)
    };
    let res = cv_ses(&ds, &t, &one, None).unwrap();
    assert_eq!(res.best_configuration.alpha, 0.05);
    assert_eq!(res.best_configuration.max_k, 2);
    assert_eq!(res.per_config[0].fold_scores.len(), 4);

    let twice = CvConfig {
        alphas: vec![0.05, 0.05],
        ..one
    };
    let res = cv_ses(&ds, &t, &twice, None).unwrap();
    assert_eq!(res.per_config[0].mean, res.per_config[1].mean);
    assert_eq!(res.best_configuration.id, 0);
    let best = res
        .per_config
        .iter()
        .map(|c| c.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(res.best_performance, best);
}

#[test]
fn cv_classification_uses_auc() {
    let mut r = common::rng(17);
    let cols = common::gaussian_columns(&mut r, 120, 4);
    let noise = common::gaussian_columns(&mut r, 120, 1).remove(0);
    let y: Vec<u8> = (0..120)
        .map(|i| u8::from(cols[0][i] + 0.3 * cols[1][i] + 0.5 * noise[i] > 0.0))
        .collect();
    let ds = DatasetF64::from_continuous(cols).unwrap();
    let cfg = CvConfig {
        kfolds: 3,
        max_ks: vec![2],
        ..CvConfig::new(Task::Classification)
    };
    let res = cv_ses(&ds, &TargetF64::Binary(y), &cfg, None).unwrap();
    assert!(res.best_performance > 0.8 && res.best_performance <= 1.0);
}
