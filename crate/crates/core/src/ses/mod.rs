//! The SES search: forward max-min selection interleaved with backward
//! elimination, tracking which eliminated variables are interchangeable with
//! a selected one.
//!
//! Per variable the engine keeps the running maximum p-value over every
//! conditioning set tested so far (`maxp`). After a variable `Y` enters the
//! selected set only conditioning sets containing `Y` are new, so each update
//! tests `Z ∪ {Y}` for `Z ⊆ S_prev \ {X}`, `|Z| < max_k`, in increasing size
//! then lexicographic order, stopping at the first p-value above the
//! threshold. The first such set is kept as the elimination witness.
//!
//! All reductions happen in ascending variable order on the calling thread;
//! worker threads only evaluate tests, so results do not depend on the
//! number of workers.

mod cache;
mod signatures;
mod subsets;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use cache::{content_digest, TestCache, CACHE_FORMAT_VERSION};
pub use signatures::{enumerate_queues, sample_queues, signature_count, Signatures};
pub use subsets::Subsets;

use crate::citests::{dispatch_test, BoundTest, TestKey, TestResult, TestSpec};
use crate::data::{Dataset, Target};
use crate::error::{Error, Result};
use crate::par::parallel_map;
use crate::scalar::Real;

pub const DEFAULT_SIGNATURE_CAP: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct SesConfig<T: Real> {
    /// Significance threshold `a`; p-values above it read as independence.
    pub threshold: T,
    /// Largest conditioning set size `k`.
    pub max_k: usize,
    /// `None` picks the test from the data (see [`dispatch_test`]).
    pub test: Option<TestSpec<T>>,
    pub workers: usize,
    /// `false` runs plain MMPC: same selection, no equivalence queues.
    pub equivalences_enabled: bool,
    pub signature_cap: usize,
    /// Keep a log of every test the search consults.
    pub audit: bool,
}

impl<T: Real> Default for SesConfig<T> {
    fn default() -> Self {
        SesConfig {
            threshold: T::lit(0.05),
            max_k: 3,
            test: None,
            workers: 1,
            equivalences_enabled: true,
            signature_cap: DEFAULT_SIGNATURE_CAP,
            audit: false,
        }
    }
}

impl<T: Real> SesConfig<T> {
    pub fn new(threshold: T, max_k: usize) -> Self {
        SesConfig {
            threshold,
            max_k,
            ..Default::default()
        }
    }

    pub fn with_test(mut self, test: TestSpec<T>) -> Self {
        self.test = Some(test);
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn mmpc(mut self) -> Self {
        self.equivalences_enabled = false;
        self
    }

    pub fn with_audit(mut self) -> Self {
        self.audit = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > T::zero() && self.threshold < T::one()) {
            return Err(Error::Config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.max_k == 0 {
            return Err(Error::Config("max_k must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.signature_cap == 0 {
            return Err(Error::Config("signature cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why a test was consulted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    /// Contributes to the variable's running maximum p-value.
    Select,
    /// Equivalence probe `p(Y | Z ∪ {X} \ {Y})`; does not touch `maxp`.
    Equivalence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry<T> {
    pub purpose: Purpose,
    pub x: usize,
    pub cond: Vec<usize>,
    pub statistic: T,
    pub p_value: T,
    pub cached: bool,
}

impl<T: Real> fmt::Display for AuditEntry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let purpose = match self.purpose {
            Purpose::Select => "select",
            Purpose::Equivalence => "equiv",
        };
        let cond: Vec<String> = self.cond.iter().map(|c| c.to_string()).collect();
        write!(
            f,
            "{purpose}\t{}\t{}\t{:e}\t{:e}\t{}",
            self.x,
            cond.join(","),
            self.statistic,
            self.p_value,
            if self.cached { "hit" } else { "miss" }
        )
    }
}

/// Search state between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct SesState<T> {
    /// Candidates not yet selected or discarded, ascending.
    pub remaining: Vec<usize>,
    /// Selected variables in insertion order.
    pub selected: Vec<usize>,
    /// Equivalence queue per live variable; the owner is always first.
    pub queues: BTreeMap<usize, Vec<usize>>,
    pub maxp: Vec<T>,
    /// Statistic of the test that produced `maxp`.
    pub maxstat: Vec<T>,
    /// First conditioning set that pushed the p-value above the threshold.
    pub witness: Vec<Option<Vec<usize>>>,
    seen: Vec<bool>,
}

impl<T: Real> SesState<T> {
    pub fn new(var_count: usize) -> Self {
        SesState {
            remaining: (0..var_count).collect(),
            selected: Vec::new(),
            queues: (0..var_count).map(|i| (i, vec![i])).collect(),
            maxp: vec![T::zero(); var_count],
            maxstat: vec![T::zero(); var_count],
            witness: vec![None; var_count],
            seen: vec![false; var_count],
        }
    }

    /// Folds one test outcome for `x` into its running maximum.
    pub fn observe(&mut self, x: usize, cond: &[usize], r: &TestResult<T>, threshold: T) {
        if !self.seen[x] || r.p_value > self.maxp[x] {
            self.maxp[x] = r.p_value;
            self.maxstat[x] = r.statistic;
            self.seen[x] = true;
        }
        if r.p_value > threshold && self.witness[x].is_none() {
            self.witness[x] = Some(cond.to_vec());
        }
    }

    /// The remaining candidate with the smallest running maximum p-value at
    /// or below the threshold; ties go to the larger |statistic|, then to the
    /// smaller index.
    pub fn maxmin_candidate(&self, threshold: T) -> Option<usize> {
        let mut best: Option<usize> = None;
        for &x in &self.remaining {
            if self.maxp[x] > threshold {
                continue;
            }
            best = match best {
                None => Some(x),
                Some(b) => {
                    let (pb, px) = (self.maxp[b], self.maxp[x]);
                    if px < pb || (px == pb && self.maxstat[x].abs() > self.maxstat[b].abs()) {
                        Some(x)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    fn is_live(&self, x: usize) -> bool {
        self.remaining.contains(&x) || self.selected.contains(&x)
    }
}

#[derive(Clone, Debug)]
pub struct SesOutput<T: Real> {
    /// Selected variables, ascending. Each one owns the queue at the same
    /// position in `queues`.
    pub selected_vars: Vec<usize>,
    pub selected_vars_by_pvalue: Vec<usize>,
    pub queues: Vec<Vec<usize>>,
    /// Running maximum p-value of every variable.
    pub pvalues: Vec<T>,
    pub stats: Vec<T>,
    /// Elimination witness per variable, `None` if never eliminated.
    pub witnesses: Vec<Option<Vec<usize>>>,
    pub signature_count: u64,
    pub threshold: T,
    pub max_k: usize,
    pub test: String,
    pub equivalences_enabled: bool,
    pub signature_cap: usize,
    pub runtime_secs: f64,
    pub cache: TestCache<T>,
    pub audit: Option<Vec<AuditEntry<T>>>,
}

impl<T: Real> SesOutput<T> {
    /// Signatures in enumeration order, at most `min(limit, signature_cap)`.
    pub fn signatures(&self, limit: usize) -> Signatures {
        enumerate_signatures(self, limit)
    }
}

pub fn enumerate_signatures<T: Real>(out: &SesOutput<T>, limit: usize) -> Signatures {
    enumerate_queues(&out.queues, limit.min(out.signature_cap))
}

struct Engine<'a, T: Real> {
    test: BoundTest<'a, T>,
    cache: TestCache<T>,
    audit: Option<Vec<AuditEntry<T>>>,
    threshold: T,
    max_k: usize,
    workers: usize,
    equivalences: bool,
    state: SesState<T>,
}

type Evaluation<T> = (TestKey, TestResult<T>, bool);

impl<'a, T: Real> Engine<'a, T> {
    fn probe(&self, key: &TestKey) -> (TestResult<T>, bool) {
        match self.cache.peek(key) {
            Some(r) => (r, false),
            None => (self.test.evaluate(key.x, &key.cond), true),
        }
    }

    fn commit(&mut self, evals: Vec<Evaluation<T>>, purpose: Purpose) {
        for (key, r, fresh) in evals {
            if purpose == Purpose::Select {
                self.state.observe(key.x, &key.cond, &r, self.threshold);
            }
            if let Some(log) = self.audit.as_mut() {
                log.push(AuditEntry {
                    purpose,
                    x: key.x,
                    cond: key.cond.clone(),
                    statistic: r.statistic,
                    p_value: r.p_value,
                    cached: !fresh,
                });
            }
            self.cache.record(key, r, fresh);
        }
    }

    fn screen(&mut self) {
        let vars: Vec<usize> = (0..self.state.maxp.len()).collect();
        let evals = parallel_map(&vars, self.workers, |&x| {
            let key = TestKey::new(x, &[]);
            let (r, fresh) = self.probe(&key);
            (key, r, fresh)
        });
        self.commit(evals, Purpose::Select);
    }

    /// Tests every live variable against the conditioning sets that contain
    /// the newly selected `y`.
    fn update_after_insert(&mut self, y: usize, s_prev: &[usize]) {
        let mut live: Vec<usize> = self
            .state
            .remaining
            .iter()
            .chain(&self.state.selected)
            .copied()
            .filter(|&x| x != y)
            .collect();
        live.sort_unstable();
        let jobs: Vec<(usize, Vec<usize>, T)> = live
            .into_iter()
            .map(|x| {
                let mut others: Vec<usize> = s_prev.iter().copied().filter(|&s| s != x).collect();
                others.sort_unstable();
                (x, others, self.state.maxp[x])
            })
            .collect();
        let batches = parallel_map(&jobs, self.workers, |(x, others, maxp)| {
            let mut evals = Vec::new();
            if *maxp > self.threshold {
                return evals;
            }
            for subset in Subsets::new(others, self.max_k - 1) {
                let mut cond = subset;
                cond.push(y);
                let key = TestKey::new(*x, &cond);
                let (r, fresh) = self.probe(&key);
                let stop = r.p_value > self.threshold;
                evals.push((key, r, fresh));
                if stop {
                    break;
                }
            }
            evals
        });
        for evals in batches {
            self.commit(evals, Purpose::Select);
        }
    }

    fn elimination_pass(&mut self) {
        let mut live: Vec<usize> = self
            .state
            .remaining
            .iter()
            .chain(&self.state.selected)
            .copied()
            .collect();
        live.sort_unstable();
        for x in live {
            if self.state.maxp[x] <= self.threshold {
                continue;
            }
            self.state.remaining.retain(|&v| v != x);
            self.state.selected.retain(|&v| v != x);
            let queue = self.state.queues.remove(&x).unwrap_or_default();
            if !self.equivalences {
                continue;
            }
            let witness = self.state.witness[x].clone().unwrap_or_default();
            if let Some(y) = self.find_equivalent(x, &witness) {
                self.state
                    .queues
                    .get_mut(&y)
                    .expect("selected variable owns a queue")
                    .extend(queue);
            }
        }
    }

    /// First `y` in the witness set (ascending) that is itself rendered
    /// independent once `x` takes its place in the conditioning set.
    fn find_equivalent(&mut self, x: usize, witness: &[usize]) -> Option<usize> {
        for &y in witness {
            if !self.state.selected.contains(&y) {
                continue;
            }
            let swapped: Vec<usize> = witness
                .iter()
                .copied()
                .filter(|&w| w != y)
                .chain(std::iter::once(x))
                .collect();
            let key = TestKey::new(y, &swapped);
            let (r, fresh) = self.probe(&key);
            self.commit(vec![(key, r, fresh)], Purpose::Equivalence);
            if r.p_value > self.threshold {
                return Some(y);
            }
        }
        None
    }

    fn run(&mut self) {
        self.screen();
        while !self.state.remaining.is_empty() {
            self.elimination_pass();
            if let Some(m) = self.state.maxmin_candidate(self.threshold) {
                let s_prev = self.state.selected.clone();
                self.state.remaining.retain(|&v| v != m);
                self.state.selected.push(m);
                self.update_after_insert(m, &s_prev);
            }
        }
        // one last elimination pass over the final selection
        self.elimination_pass();
        debug_assert!(self.state.selected.iter().all(|&s| self.state.is_live(s)));
    }
}

/// Runs SES (or MMPC when equivalences are disabled) on `ds` against
/// `target`. A cache from an earlier run on the same data may be passed in;
/// the returned output carries it back with new entries added and hit/miss
/// counters reset for this run.
pub fn ses_run<T: Real>(
    ds: &Dataset<T>,
    target: &Target<T>,
    cfg: &SesConfig<T>,
    cache: Option<TestCache<T>>,
) -> Result<SesOutput<T>> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Data("dataset has no variables or no rows".into()));
    }
    target.validate_against(ds)?;
    let spec = dispatch_test(target, ds, cfg.test.clone())?;
    let start = Instant::now();
    let mut cache = cache.unwrap_or_default();
    cache.reset_counters();
    let test_name = spec.name().to_string();
    let mut engine = Engine {
        test: BoundTest::new(spec, ds, target),
        cache,
        audit: cfg.audit.then(Vec::new),
        threshold: cfg.threshold,
        max_k: cfg.max_k,
        workers: cfg.workers,
        equivalences: cfg.equivalences_enabled,
        state: SesState::new(ds.var_count()),
    };
    engine.run();

    let mut selected_vars = engine.state.selected.clone();
    selected_vars.sort_unstable();
    let queues: Vec<Vec<usize>> = selected_vars
        .iter()
        .map(|s| engine.state.queues[s].clone())
        .collect();
    let mut by_p = selected_vars.clone();
    let maxp = &engine.state.maxp;
    by_p.sort_by(|&a, &b| maxp[a].partial_cmp(&maxp[b]).unwrap().then(a.cmp(&b)));
    Ok(SesOutput {
        signature_count: signature_count(&queues),
        selected_vars,
        selected_vars_by_pvalue: by_p,
        queues,
        pvalues: engine.state.maxp.clone(),
        stats: engine.state.maxstat.clone(),
        witnesses: engine.state.witness.clone(),
        threshold: cfg.threshold,
        max_k: cfg.max_k,
        test: test_name,
        equivalences_enabled: cfg.equivalences_enabled,
        signature_cap: cfg.signature_cap,
        runtime_secs: start.elapsed().as_secs_f64(),
        cache: engine.cache,
        audit: engine.audit,
    })
}

/// Univariate association of every variable with the target, evaluated on
/// `cfg.workers` threads.
pub fn parallel_univariate_screen<T: Real>(
    ds: &Dataset<T>,
    target: &Target<T>,
    cfg: &SesConfig<T>,
) -> Result<Vec<TestResult<T>>> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Data("dataset has no variables or no rows".into()));
    }
    target.validate_against(ds)?;
    let spec = dispatch_test(target, ds, cfg.test.clone())?;
    let test = BoundTest::new(spec, ds, target);
    let vars: Vec<usize> = (0..ds.var_count()).collect();
    Ok(parallel_map(&vars, cfg.workers, |&x| test.evaluate(x, &[])))
}
