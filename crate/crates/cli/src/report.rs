//! Machine-readable reports and the human summaries printed to stdout.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use ses_core::bench::{quantile_sorted, ProtocolReport, SyntheticSpec};
use ses_core::modelsel::CvResult;
use ses_core::{DatasetF64, SesOutputF64};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub threshold: f64,
    pub max_k: usize,
    pub test: String,
    pub equivalences_enabled: bool,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheCounts {
    pub entries: usize,
    pub hits: u64,
    pub misses: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub data: String,
    pub target: String,
    pub variables: Vec<String>,
    pub config: RunConfig,
    pub selected_vars: Vec<usize>,
    pub selected_names: Vec<String>,
    pub selected_vars_by_pvalue: Vec<usize>,
    pub queues: Vec<Vec<usize>>,
    pub pvalues: Vec<f64>,
    pub stats: Vec<f64>,
    pub witnesses: Vec<Option<Vec<usize>>>,
    pub signature_count: u64,
    pub runtime_secs: f64,
    pub cache: CacheCounts,
}

impl RunReport {
    pub fn new(
        out: &SesOutputF64,
        ds: &DatasetF64,
        data: &str,
        target: &str,
        workers: usize,
    ) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            data: data.to_string(),
            target: target.to_string(),
            variables: ds.names().into_iter().map(String::from).collect(),
            config: RunConfig {
                threshold: out.threshold,
                max_k: out.max_k,
                test: out.test.clone(),
                equivalences_enabled: out.equivalences_enabled,
                workers,
            },
            selected_names: out
                .selected_vars
                .iter()
                .map(|&v| ds.name(v).to_string())
                .collect(),
            selected_vars: out.selected_vars.clone(),
            selected_vars_by_pvalue: out.selected_vars_by_pvalue.clone(),
            queues: out.queues.clone(),
            pvalues: out.pvalues.clone(),
            stats: out.stats.clone(),
            witnesses: out.witnesses.clone(),
            signature_count: out.signature_count,
            runtime_secs: out.runtime_secs,
            cache: CacheCounts {
                entries: out.cache.len(),
                hits: out.cache.hits(),
                misses: out.cache.misses(),
            },
        }
    }

    pub fn name(&self, v: usize) -> &str {
        &self.variables[v]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub schema_version: u32,
    pub data: String,
    pub target: String,
    pub test: String,
    pub result: CvResult<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    /// Synthetic spec used, absent when a data file was given.
    pub spec: Option<SyntheticSpec>,
    pub data: Option<String>,
    pub protocol: ProtocolReport<f64>,
}

fn five_numbers(xs: &[f64]) -> String {
    let mut s: Vec<f64> = xs.iter().copied().filter(|v| v.is_finite()).collect();
    if s.is_empty() {
        return "(none)".into();
    }
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p| quantile_sorted(&s, p).unwrap();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let cells = [q(0.0), q(0.25), q(0.5), mean, q(0.75), q(1.0)];
    let mut out = format!(
        "{:>9} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max."
    );
    for c in cells {
        let _ = write!(out, "{c:>9.4} ");
    }
    out.trim_end().to_string()
}

/// Layout follows the familiar `summary()` of an SES result object.
pub fn run_summary(r: &RunReport) -> String {
    let names = |vs: &[usize]| vs.iter().map(|&v| r.name(v)).collect::<Vec<_>>().join(" ");
    let mut s = String::new();
    let _ = writeln!(s, "Selected Variables: {}", names(&r.selected_vars));
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Selected Variables ordered by pvalue: {}",
        names(&r.selected_vars_by_pvalue)
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Queues' summary (# of equivalences for each selectedVar):"
    );
    let _ = writeln!(s);
    let widths: Vec<usize> = r
        .selected_vars
        .iter()
        .map(|&v| r.name(v).len().max(2))
        .collect();
    let mut header = format!("{:16}", "");
    let mut row = format!("{:16}", "#of equivalences");
    for ((v, q), w) in r.selected_vars.iter().zip(&r.queues).zip(&widths) {
        let _ = write!(header, " {:>w$}", r.name(*v));
        let _ = write!(row, " {:>w$}", q.len());
    }
    let _ = writeln!(s, "{header}");
    let _ = writeln!(s, "{row}");
    let _ = writeln!(s);
    let _ = writeln!(s, "Number of signatures: {}", r.signature_count);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Test cache: {} entries, {} hits, {} misses",
        r.cache.entries, r.cache.hits, r.cache.misses
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Summary of the generated pvalues:\n{}",
        five_numbers(&r.pvalues)
    );
    let _ = writeln!(s);
    let abs: Vec<f64> = r.stats.iter().map(|v| v.abs()).collect();
    let _ = writeln!(
        s,
        "Summary of the generated stats (absolute):\n{}",
        five_numbers(&abs)
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "max_k option: {}", r.config.max_k);
    let _ = writeln!(s, "threshold option: {}", r.config.threshold);
    let _ = writeln!(s, "test: {}", r.config.test);
    if !r.config.equivalences_enabled {
        let _ = writeln!(s, "equivalences: disabled (MMPC)");
    }
    let _ = writeln!(s, "runtime: {:.3} s", r.runtime_secs);
    s
}

pub fn cv_summary(r: &CvReport) -> String {
    let res = &r.result;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>8} {:>5} {:>14}   fold scores",
        "alpha", "max_k", "mean"
    );
    for c in &res.per_config {
        let folds: Vec<String> = c.fold_scores.iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(
            s,
            "{:>8} {:>5} {:>14.6}   {}",
            c.alpha,
            c.max_k,
            c.mean,
            folds.join(" ")
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "best_configuration: a = {}, k = {}",
        res.best_configuration.alpha, res.best_configuration.max_k
    );
    let _ = writeln!(s, "best_performance: {:.6}", res.best_performance);
    for w in &res.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

pub fn bench_summary(r: &BenchReport) -> String {
    let p = &r.protocol;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>4} {:>6} {:>5} {:>9} {:>10} {:>12}",
        "rep", "alpha", "max_k", "selected", "signatures", "cv"
    );
    for rep in &p.repetitions {
        let cv = rep
            .cv_of_performances
            .map_or_else(|| "undefined".to_string(), |v| format!("{v:.3e}"));
        let _ = writeln!(
            s,
            "{:>4} {:>6} {:>5} {:>9} {:>10} {:>12}",
            rep.rep,
            rep.alpha,
            rep.max_k,
            rep.selected_vars.len(),
            rep.signature_count,
            cv
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Number of signatures");
    let labels: Vec<String> = (1..=9)
        .map(|i| i.to_string())
        .chain(["10+".into()])
        .collect();
    let _ = writeln!(
        s,
        "{}",
        labels.iter().map(|l| format!("{l:>5}")).collect::<String>()
    );
    let _ = writeln!(
        s,
        "{}",
        p.summary
            .multiplicity
            .iter()
            .map(|c| format!("{c:>5}"))
            .collect::<String>()
    );
    let _ = writeln!(s);
    match p.summary.cv_quantiles {
        Some([lo, mid, hi]) => {
            let _ = writeln!(
                s,
                "Coefficient of variation over {} repetitions with >= 2 signatures",
                p.summary.cv_defined
            );
            let _ = writeln!(s, "{:>12} {:>12} {:>12}", "2.5%", "50%", "97.5%");
            let _ = writeln!(s, "{lo:>12.4e} {mid:>12.4e} {hi:>12.4e}");
        }
        None => {
            let _ = writeln!(
                s,
                "Coefficient of variation: undefined (no repetition had 2 or more signatures)"
            );
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Selected variables: mean {:.2}, St.D. {:.2}",
        p.summary.selected_mean, p.summary.selected_sd
    );
    s
}
