//! Memo of conditional-independence test results keyed by [`TestKey`].
//!
//! A cache is only meaningful for one (dataset, target, test) triple. When
//! persisted it carries a SHA-256 digest of that triple and is discarded on
//! load if the digest no longer matches.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::citests::{TestKey, TestResult};
use crate::data::{ColumnKind, Dataset, Target};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const CACHE_FORMAT_VERSION: u32 = 1;
const CACHE_FORMAT: &str = "ses-test-cache";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestCache<T> {
    entries: HashMap<TestKey, TestResult<T>>,
    hits: u64,
    misses: u64,
}

impl<T: Real> TestCache<T> {
    pub fn new() -> Self {
        TestCache {
            entries: HashMap::new(),
            hits: 0,
            misses: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn reset_counters(&mut self) {
        self.hits = 0;
        self.misses = 0;
    }

    /// Read-only probe that leaves the counters alone.
    pub fn peek(&self, key: &TestKey) -> Option<TestResult<T>> {
        self.entries.get(key).copied()
    }

    /// Returns the cached result, or evaluates and stores it.
    pub fn lookup_or_eval(
        &mut self,
        key: TestKey,
        evaluate: impl FnOnce(&TestKey) -> TestResult<T>,
    ) -> TestResult<T> {
        if let Some(r) = self.entries.get(&key) {
            self.hits += 1;
            return *r;
        }
        let r = evaluate(&key);
        self.misses += 1;
        self.entries.insert(key, r);
        r
    }

    /// Records an outcome computed elsewhere (for example by a worker thread
    /// that probed with [`peek`](Self::peek)). `fresh` says whether it was a
    /// miss.
    pub(crate) fn record(&mut self, key: TestKey, result: TestResult<T>, fresh: bool) {
        if fresh {
            self.misses += 1;
            let prev = self.entries.insert(key, result);
            debug_assert!(prev.is_none_or(|p| p == result));
        } else {
            self.hits += 1;
        }
    }

    pub fn write_to(&self, digest: &str, test_name: &str, out: impl Write) -> Result<()> {
        let mut entries: Vec<CacheEntry<T>> = self
            .entries
            .iter()
            .map(|(k, r)| CacheEntry {
                x: k.x,
                cond: k.cond.clone(),
                result: *r,
            })
            .collect();
        entries.sort_by(|a, b| (a.x, &a.cond).cmp(&(b.x, &b.cond)));
        let file = CacheFile {
            format: CACHE_FORMAT.to_string(),
            version: CACHE_FORMAT_VERSION,
            digest: digest.to_string(),
            test: test_name.to_string(),
            entries,
        };
        serde_json::to_writer(out, &file)?;
        Ok(())
    }

    /// Loads a persisted cache. Returns `Ok(None)` when the file belongs to a
    /// different dataset, target or test.
    pub fn read_from(input: impl Read, digest: &str) -> Result<Option<Self>> {
        let file: CacheFile<T> = serde_json::from_reader(input)?;
        if file.format != CACHE_FORMAT || file.version != CACHE_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported cache file format {} v{}",
                file.format, file.version
            )));
        }
        if file.digest != digest {
            return Ok(None);
        }
        let entries = file
            .entries
            .into_iter()
            .map(|e| (TestKey::new(e.x, &e.cond), e.result))
            .collect();
        Ok(Some(TestCache {
            entries,
            hits: 0,
            misses: 0,
        }))
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry<T> {
    x: usize,
    cond: Vec<usize>,
    #[serde(flatten)]
    result: TestResult<T>,
}

#[derive(Serialize, Deserialize)]
struct CacheFile<T> {
    format: String,
    version: u32,
    digest: String,
    test: String,
    entries: Vec<CacheEntry<T>>,
}

/// Hex SHA-256 over column names, kinds and values, the target and the test
/// name.
pub fn content_digest<T: Real>(ds: &Dataset<T>, target: &Target<T>, test_name: &str) -> String {
    let mut h = Sha256::new();
    h.update(b"ses-cache-v1");
    h.update((ds.n_rows() as u64).to_le_bytes());
    h.update((ds.var_count() as u64).to_le_bytes());
    for col in ds.columns() {
        h.update(col.name.as_bytes());
        h.update([0u8]);
        match col.kind {
            ColumnKind::Continuous => h.update([0u8]),
            ColumnKind::Categorical { level_count } => {
                h.update([1u8]);
                h.update((level_count as u64).to_le_bytes());
            }
        }
        for v in &col.values {
            h.update(v.to_f64_lossy().to_bits().to_le_bytes());
        }
    }
    h.update(target.kind_name().as_bytes());
    for v in target.values() {
        h.update(v.to_f64_lossy().to_bits().to_le_bytes());
    }
    h.update(test_name.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
