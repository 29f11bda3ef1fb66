//! Word-level space accounting.
//!
//! Buffers are registered explicitly at their allocation sites with a size in
//! 64-bit words. Each registration returns a [`Lease`] that releases the words
//! when dropped, so the ledger's live total tracks the lifetime of the buffers
//! it describes. Allocator behaviour (RSS) is deliberately not measured.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    /// Counted against the streaming space bound.
    StreamingCore,
    /// Verification-only storage (exact Hessian oracle); tracked but excluded.
    OracleOnly,
}

/// Which problem dimension a buffer's size grows with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// O(n²) (or O(n)) buffers: slack family, transform workspaces, stream buffer.
    Dense,
    /// Buffers sized by m and the sketch size s: sketched basis, Hessian, dual vectors.
    Constraint,
}

#[derive(Debug, Default)]
struct Inner {
    next_id: u64,
    live: BTreeMap<u64, Entry>,
    current_core: usize,
    current_dense: usize,
    current_constraint: usize,
    current_oracle: usize,
    peak_core: usize,
    peak_dense: usize,
    peak_constraint: usize,
    peak_oracle: usize,
    peak_by_name: BTreeMap<&'static str, usize>,
}

#[derive(Debug, Clone)]
struct Entry {
    name: &'static str,
    words: usize,
    category: Category,
    scaling: Scaling,
}

/// Shared handle to a space registry. Cloning shares the same registry.
#[derive(Debug, Clone, Default)]
pub struct SpaceLedger {
    inner: Arc<Mutex<Inner>>,
}

/// Peak and current totals at a point in time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerSnapshot {
    pub current_words: usize,
    pub peak_words: usize,
    pub peak_dense_words: usize,
    pub peak_constraint_words: usize,
    pub oracle_peak_words: usize,
    pub peak_by_buffer: BTreeMap<String, usize>,
}

impl SpaceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a live buffer; the words are released when the lease drops.
    pub fn lease(
        &self,
        name: &'static str,
        words: usize,
        category: Category,
        scaling: Scaling,
    ) -> Lease {
        let mut inner = self.inner.lock().expect("ledger poisoned");
        let id = inner.next_id;
        inner.next_id += 1;
        inner.live.insert(
            id,
            Entry {
                name,
                words,
                category,
                scaling,
            },
        );
        match category {
            Category::StreamingCore => {
                inner.current_core += words;
                match scaling {
                    Scaling::Dense => inner.current_dense += words,
                    Scaling::Constraint => inner.current_constraint += words,
                }
                inner.peak_core = inner.peak_core.max(inner.current_core);
                inner.peak_dense = inner.peak_dense.max(inner.current_dense);
                inner.peak_constraint = inner.peak_constraint.max(inner.current_constraint);
            }
            Category::OracleOnly => {
                inner.current_oracle += words;
                inner.peak_oracle = inner.peak_oracle.max(inner.current_oracle);
            }
        }
        let live_for_name: usize = inner
            .live
            .values()
            .filter(|e| e.name == name)
            .map(|e| e.words)
            .sum();
        let slot = inner.peak_by_name.entry(name).or_default();
        *slot = (*slot).max(live_for_name);
        Lease {
            ledger: self.clone(),
            id,
        }
    }

    /// Convenience for streaming-core buffers.
    pub fn core(&self, name: &'static str, words: usize, scaling: Scaling) -> Lease {
        self.lease(name, words, Category::StreamingCore, scaling)
    }

    fn release(&self, id: u64) {
        let mut inner = self.inner.lock().expect("ledger poisoned");
        if let Some(entry) = inner.live.remove(&id) {
            match entry.category {
                Category::StreamingCore => {
                    inner.current_core -= entry.words;
                    match entry.scaling {
                        Scaling::Dense => inner.current_dense -= entry.words,
                        Scaling::Constraint => inner.current_constraint -= entry.words,
                    }
                }
                Category::OracleOnly => inner.current_oracle -= entry.words,
            }
        }
    }

    pub fn current_words(&self) -> usize {
        self.inner.lock().expect("ledger poisoned").current_core
    }

    pub fn peak_words(&self) -> usize {
        self.inner.lock().expect("ledger poisoned").peak_core
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        let inner = self.inner.lock().expect("ledger poisoned");
        LedgerSnapshot {
            current_words: inner.current_core,
            peak_words: inner.peak_core,
            peak_dense_words: inner.peak_dense,
            peak_constraint_words: inner.peak_constraint,
            oracle_peak_words: inner.peak_oracle,
            peak_by_buffer: inner
                .peak_by_name
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }
}

/// Registration guard returned by [`SpaceLedger::lease`].
#[derive(Debug)]
pub struct Lease {
    ledger: SpaceLedger,
    id: u64,
}

impl Drop for Lease {
    fn drop(&mut self) {
        self.ledger.release(self.id);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_tracks_maximum_live_total() {
        let ledger = SpaceLedger::new();
        let a = ledger.core("a", 10, Scaling::Dense);
        {
            let _b = ledger.core("b", 5, Scaling::Constraint);
            assert_eq!(ledger.current_words(), 15);
        }
        assert_eq!(ledger.current_words(), 10);
        let _c = ledger.core("c", 3, Scaling::Constraint);
        drop(a);
        let snap = ledger.snapshot();
        assert_eq!(snap.current_words, 3);
        assert_eq!(snap.peak_words, 15);
        assert_eq!(snap.peak_dense_words, 10);
        assert_eq!(snap.peak_constraint_words, 5);
        assert!(snap.peak_words >= snap.current_words);
    }

    #[test]
    fn oracle_allocations_are_excluded_from_core_peak() {
        let ledger = SpaceLedger::new();
        let _core = ledger.core("core", 4, Scaling::Dense);
        let _oracle = ledger.lease("oracle", 1000, Category::OracleOnly, Scaling::Dense);
        let snap = ledger.snapshot();
        assert_eq!(snap.peak_words, 4);
        assert_eq!(snap.oracle_peak_words, 1000);
    }

    #[test]
    fn per_buffer_peak_sums_live_leases_of_same_name() {
        let ledger = SpaceLedger::new();
        let _x = ledger.core("vec", 2, Scaling::Constraint);
        let _y = ledger.core("vec", 3, Scaling::Constraint);
        assert_eq!(ledger.snapshot().peak_by_buffer["vec"], 5);
    }
}
