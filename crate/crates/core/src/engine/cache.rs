//! Tabling of ground subgoals: successes and failures alike are memoized
//! for the duration of one top-level query over one fixed timeline.
//! Only ground instances are keyed; they are store-independent, so a hit is
//! always sound.

use super::proof::ProofNode;
use crate::rational::Rat;
use serde::Serialize;
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CacheKey(pub String);

#[derive(Debug, Clone)]
pub enum CacheSlot {
    Failure,
    Success(Rc<ProofNode>),
    /// Value derivations of a functional fluent at a ground time.
    Values(Vec<(Rat, Rc<ProofNode>)>),
}

#[derive(Debug, Default)]
pub struct Cache {
    slots: BTreeMap<CacheKey, CacheSlot>,
    pub stats: CacheStats,
}

pub type SharedCache = Rc<RefCell<Cache>>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub stored_failures: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvalStats {
    /// Goal expansions performed by the evaluator.
    pub expansions: u64,
    /// Ground reads answered directly from checkpoints.
    pub checkpoint_reads: u64,
}

impl Cache {
    pub fn new() -> Self {
        Cache::default()
    }

    pub fn shared() -> SharedCache {
        Rc::new(RefCell::new(Cache::new()))
    }

    pub fn lookup(&mut self, key: &CacheKey) -> Option<CacheSlot> {
        match self.slots.get(key) {
            Some(slot) => {
                self.stats.hits += 1;
                Some(slot.clone())
            }
            None => {
                self.stats.misses += 1;
                None
            }
        }
    }

    pub fn store(&mut self, key: CacheKey, slot: CacheSlot) {
        if matches!(slot, CacheSlot::Failure) {
            self.stats.stored_failures += 1;
        }
        self.slots.insert(key, slot);
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}
