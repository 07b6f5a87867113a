use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use lru::LruCache;
use sld_core::uncertainty::UncertaintyBand;

/// A finished computation: the serialised result document and the band
/// needed to classify further points against it.
#[derive(Debug)]
pub struct Computation {
    pub body: Bytes,
    pub band: UncertaintyBand,
}

/// Bounded request-hash → computation map with LRU eviction. Entries are
/// shared immutably, so a reader never sees a partially written result.
pub struct SessionCache {
    entries: Mutex<LruCache<String, Arc<Computation>>>,
}

impl SessionCache {
    pub fn new(capacity: usize) -> Self {
        let capacity = NonZeroUsize::new(capacity).unwrap_or(NonZeroUsize::MIN);
        SessionCache {
            entries: Mutex::new(LruCache::new(capacity)),
        }
    }

    pub fn get(&self, hash: &str) -> Option<Arc<Computation>> {
        self.entries.lock().expect("cache lock").get(hash).cloned()
    }

    /// Stores `computation` unless an entry already exists, and returns the
    /// stored one; concurrent first requests thus agree on one payload.
    pub fn insert(&self, hash: String, computation: Computation) -> Arc<Computation> {
        let mut entries = self.entries.lock().expect("cache lock");
        if let Some(existing) = entries.get(&hash) {
            return existing.clone();
        }
        let entry = Arc::new(computation);
        entries.put(hash, entry.clone());
        entry
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
