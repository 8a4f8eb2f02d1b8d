#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ses_core::citests::fisher_test;
use ses_core::{DatasetF64, TargetF64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_columns(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..p)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    let pivot = a[c].clone();
                    for (v, pv) in a[r].iter_mut().zip(&pivot) {
                        *v -= f * pv;
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn correlation_matrix(cols: &[&[f64]]) -> Vec<Vec<f64>> {
    let n = cols[0].len() as f64;
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / n;
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    (0..cols.len())
        .map(|i| {
            (0..cols.len())
                .map(|j| {
                    let s: f64 = centered[i]
                        .iter()
                        .zip(&centered[j])
                        .map(|(a, b)| a * b)
                        .sum();
                    s / (norms[i] * norms[j])
                })
                .collect()
        })
        .collect()
}

/// Fisher z p-value from the inverse correlation matrix of `[x, t, cond..]`.
pub fn fisher_oracle(x: &[f64], t: &[f64], cond: &[&[f64]]) -> (f64, f64) {
    let mut cols: Vec<&[f64]> = vec![x, t];
    cols.extend_from_slice(cond);
    let prec = invert(&correlation_matrix(&cols));
    let r = -prec[0][1] / (prec[0][0] * prec[1][1]).sqrt();
    let n = x.len() as f64;
    let z = r.atanh() * (n - cond.len() as f64 - 3.0).sqrt();
    (z, libm::erfc(z.abs() / std::f64::consts::SQRT_2))
}

pub struct Reference {
    pub selected: Vec<usize>,
    pub queues: Vec<Vec<usize>>,
    pub maxp: Vec<f64>,
}

fn subsets_upto(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (0u32..1 << items.len())
        .map(|mask| {
            (0..items.len())
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| items[i])
                .collect::<Vec<usize>>()
        })
        .filter(|s| s.len() <= k)
        .collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all
}

/// SES with every running maximum recomputed from scratch: at each step a
/// live variable is tested against all subsets of the current selection in
/// size-then-lexicographic order, stopping at the first p-value above `a`.
pub fn reference_ses(ds: &DatasetF64, t: &[f64], a: f64, k: usize) -> Reference {
    let p = ds.var_count();
    let test = |x: usize, cond: &[usize]| {
        let mut c = cond.to_vec();
        c.sort_unstable();
        fisher_test(ds, x, t, &c)
    };
    let mut remaining: Vec<usize> = (0..p).collect();
    let mut selected: Vec<usize> = Vec::new();
    let mut queues: Vec<Vec<usize>> = (0..p).map(|i| vec![i]).collect();
    let mut maxp = vec![0.0; p];
    let mut stat = vec![0.0; p];
    let mut witness: Vec<Option<Vec<usize>>> = vec![None; p];

    let refresh = |x: usize,
                   selected: &[usize],
                   maxp: &mut Vec<f64>,
                   stat: &mut Vec<f64>,
                   witness: &mut Vec<Option<Vec<usize>>>| {
        if maxp[x] > a {
            return;
        }
        let mut others: Vec<usize> = selected.iter().copied().filter(|&s| s != x).collect();
        others.sort_unstable();
        let (mut best, mut best_stat) = (f64::NEG_INFINITY, 0.0);
        for z in subsets_upto(&others, k) {
            let r = test(x, &z);
            if r.p_value > best {
                best = r.p_value;
                best_stat = r.statistic;
            }
            if r.p_value > a {
                witness[x] = Some(z);
                break;
            }
        }
        maxp[x] = best;
        stat[x] = best_stat;
    };

    let eliminate = |remaining: &mut Vec<usize>,
                     selected: &mut Vec<usize>,
                     queues: &mut Vec<Vec<usize>>,
                     maxp: &[f64],
                     witness: &[Option<Vec<usize>>]| {
        let mut live: Vec<usize> = remaining.iter().chain(selected.iter()).copied().collect();
        live.sort_unstable();
        for x in live {
            if maxp[x] <= a {
                continue;
            }
            remaining.retain(|&v| v != x);
            selected.retain(|&v| v != x);
            let w = witness[x].clone().unwrap_or_default();
            for &y in &w {
                if !selected.contains(&y) {
                    continue;
                }
                let mut swapped: Vec<usize> = w.iter().copied().filter(|&v| v != y).collect();
                swapped.push(x);
                if test(y, &swapped).p_value > a {
                    let moved = std::mem::take(&mut queues[x]);
                    queues[y].extend(moved);
                    break;
                }
            }
        }
    };

    for x in 0..p {
        refresh(x, &selected, &mut maxp, &mut stat, &mut witness);
    }
    while !remaining.is_empty() {
        eliminate(&mut remaining, &mut selected, &mut queues, &maxp, &witness);
        let cand = remaining
            .iter()
            .copied()
            .filter(|&x| maxp[x] <= a)
            .min_by(|&u, &v| {
                maxp[u]
                    .partial_cmp(&maxp[v])
                    .unwrap()
                    .then(stat[v].abs().partial_cmp(&stat[u].abs()).unwrap())
                    .then(u.cmp(&v))
            });
        if let Some(m) = cand {
            remaining.retain(|&v| v != m);
            selected.push(m);
            let live: Vec<usize> = remaining.iter().chain(selected.iter()).copied().collect();
            for x in live {
                refresh(x, &selected, &mut maxp, &mut stat, &mut witness);
            }
        }
    }
    eliminate(&mut remaining, &mut selected, &mut queues, &maxp, &witness);
    selected.sort_unstable();
    let queues = selected.iter().map(|&s| queues[s].clone()).collect();
    Reference {
        selected,
        queues,
        maxp,
    }
}

/// Small instance with a few signal variables, some near-copies and noise.
pub fn random_instance(seed: u64) -> (DatasetF64, TargetF64, f64, usize) {
    let mut r = rng(seed);
    let p = r.gen_range(3..=12);
    let n = r.gen_range(40..=150);
    let mut cols = gaussian_columns(&mut r, n, p);
    let signals = r.gen_range(1..=3.min(p));
    let mut y = vec![0.0; n];
    for col in cols.iter().take(signals) {
        let w: f64 = r.gen_range(0.3..1.5);
        for i in 0..n {
            y[i] += w * col[i];
        }
    }
    for v in y.iter_mut() {
        *v += r.sample::<f64, _>(StandardNormal);
    }
    // near-duplicates of signal columns make equivalences likely
    for j in signals..p {
        if r.gen_bool(0.3) {
            let src = r.gen_range(0..signals);
            let eps: f64 = r.gen_range(0.0..0.2);
            cols[j] = (0..n)
                .map(|i| cols[src][i] + eps * r.sample::<f64, _>(StandardNormal))
                .collect();
        }
    }
    let a = [0.01, 0.05, 0.1, 0.2][r.gen_range(0..4)];
    let k = r.gen_range(1..=3);
    (
        DatasetF64::from_continuous(cols).unwrap(),
        TargetF64::Continuous(y),
        a,
        k,
    )
}
