use crate::data::Dataset;
use crate::scalar::Real;
use crate::special::chi2_sf;

use super::TestResult;

/// Minimum samples per contingency cell.
const MIN_PER_CELL: usize = 5;

/// G² test of `x` against categorical target labels given categorical `cond`.
///
/// One `|X| x |T|` table per configuration of the conditioning variables.
/// Cells with zero observed count contribute nothing and empty slices reduce
/// the degrees of freedom.
pub fn g2_test<T: Real>(
    ds: &Dataset<T>,
    x: usize,
    labels: &[usize],
    t_levels: usize,
    cond: &[usize],
) -> TestResult<T> {
    let n = ds.n_rows();
    let (Some(x_levels), true) = (ds.kind(x).level_count(), t_levels >= 2) else {
        return TestResult::invalid();
    };
    let mut strides = Vec::with_capacity(cond.len());
    let mut configs: usize = 1;
    for &c in cond {
        let Some(l) = ds.kind(c).level_count() else {
            return TestResult::invalid();
        };
        strides.push(configs);
        configs = match configs.checked_mul(l) {
            Some(v) => v,
            None => return TestResult::invalid(),
        };
    }
    let slice = x_levels * t_levels;
    let cells = match configs.checked_mul(slice) {
        Some(v) => v,
        None => return TestResult::invalid(),
    };
    if n < MIN_PER_CELL.saturating_mul(cells) {
        return TestResult::invalid();
    }

    let mut counts = vec![0usize; cells];
    for row in 0..n {
        let w: usize = cond
            .iter()
            .zip(&strides)
            .map(|(&c, &s)| ds.level(c, row) * s)
            .sum();
        counts[w * slice + ds.level(x, row) * t_levels + labels[row]] += 1;
    }

    let mut g2 = T::zero();
    let mut empty = 0usize;
    for w in 0..configs {
        let table = &counts[w * slice..(w + 1) * slice];
        let total: usize = table.iter().sum();
        if total == 0 {
            empty += 1;
            continue;
        }
        let row_tot: Vec<usize> = (0..x_levels)
            .map(|i| table[i * t_levels..(i + 1) * t_levels].iter().sum())
            .collect();
        let col_tot: Vec<usize> = (0..t_levels)
            .map(|j| (0..x_levels).map(|i| table[i * t_levels + j]).sum())
            .collect();
        for i in 0..x_levels {
            for j in 0..t_levels {
                let o = table[i * t_levels + j];
                if o == 0 {
                    continue;
                }
                let o_t = T::from_count(o);
                let e =
                    T::from_count(row_tot[i]) * T::from_count(col_tot[j]) / T::from_count(total);
                g2 += o_t * (o_t / e).ln();
            }
        }
    }
    let g2 = (g2 * T::lit(2.0)).max(T::zero());
    let dof = (x_levels - 1) * (t_levels - 1) * (configs - empty);
    if dof == 0 {
        return TestResult::invalid();
    }
    let dof = T::from_count(dof);
    TestResult::new(g2, chi2_sf(g2, dof), dof)
}
