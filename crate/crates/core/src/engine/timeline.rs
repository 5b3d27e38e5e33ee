//! The closed timeline: narrative plus triggered events.

use super::cache::{Cache, CacheStats, EvalStats, SharedCache};
use super::checkpoint::{build_checkpoints, Checkpoints};
use super::errors::EngineError;
use super::eval::{EvalCtx, OccSource, SymOccurrence, Val};
use crate::clpq::LinExpr;
use crate::diag::Diagnostic;
use crate::model::{DomainModel, GroundAtom, Narrative};
use crate::rational::Rat;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOpts {
    pub zeno_bound: usize,
    pub depth_bound: usize,
    pub cache_enabled: bool,
}

impl Default for EngineOpts {
    fn default() -> Self {
        EngineOpts { zeno_bound: 1000, depth_bound: 10_000, cache_enabled: true }
    }
}

/// Narrative plus all triggered events (least fixpoint up to the zeno
/// bound), segmented at event times, optionally with per-boundary fluent
/// checkpoints. Immutable once built; safe to share across queries.
#[derive(Debug, Clone)]
pub struct ClosedTimeline {
    pub model: Arc<DomainModel>,
    pub events: Vec<(GroundAtom, Rat, OccSource)>,
    pub horizon: Rat,
    pub checkpoints: Option<Checkpoints>,
    pub diagnostics: Vec<Diagnostic>,
    pub opts: EngineOpts,
}

impl ClosedTimeline {
    pub fn occurrences(&self) -> Vec<SymOccurrence> {
        self.events
            .iter()
            .map(|(event, time, source)| SymOccurrence {
                name: event.name.clone(),
                args: event.args.iter().map(Val::from_ground).collect(),
                time: LinExpr::constant(time.clone()),
                source: *source,
            })
            .collect()
    }

    pub fn event_pairs(&self) -> Vec<(GroundAtom, Rat)> {
        self.events.iter().map(|(e, t, _)| (e.clone(), t.clone())).collect()
    }

    pub fn boundaries(&self) -> Vec<Rat> {
        let mut out = vec![Rat::from_integer(0.into())];
        for (_, t, _) in &self.events {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        out.sort();
        out
    }

    /// Distinct occurrences of one event name, in time order.
    pub fn occurrences_of(&self, name: &str) -> Vec<Rat> {
        self.events.iter().filter(|(e, _, _)| e.name == name).map(|(_, t, _)| t.clone()).collect()
    }

    pub fn contains(&self, event: &GroundAtom, time: &Rat) -> bool {
        self.events.iter().any(|(e, t, _)| e == event && t == time)
    }

    /// Populates the per-boundary checkpoints.
    pub fn checkpoint(mut self) -> Result<ClosedTimeline, EngineError> {
        let cks = build_checkpoints(&self.model, &self.occurrences(), &self.horizon)?;
        self.diagnostics.extend(cks.diagnostics.iter().cloned());
        self.checkpoints = Some(cks);
        Ok(self)
    }

    pub fn without_checkpoints(mut self) -> ClosedTimeline {
        self.checkpoints = None;
        self
    }

    #[doc(hidden)]
    pub fn eval_ctx_public(&self, cache: Option<SharedCache>) -> EvalCtx<'_> {
        self.eval_ctx(cache)
    }

    pub(crate) fn eval_ctx(&self, cache: Option<SharedCache>) -> EvalCtx<'_> {
        let mut ctx = EvalCtx::new(
            &self.model,
            self.occurrences(),
            LinExpr::constant(self.horizon.clone()),
        );
        ctx.depth_bound = self.opts.depth_bound;
        ctx.checkpoints = self.checkpoints.as_ref();
        ctx.cache = cache;
        ctx
    }

    /// A fresh cache when tabling is enabled in the options.
    pub fn fresh_cache(&self) -> Option<SharedCache> {
        self.opts.cache_enabled.then(Cache::shared)
    }
}

/// Counters reported by `--stats` and the acceptance checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct RunStats {
    pub expansions: u64,
    pub checkpoint_reads: u64,
    pub cache: CacheStats,
}

impl RunStats {
    pub fn collect(eval: EvalStats, cache: Option<&SharedCache>) -> RunStats {
        RunStats {
            expansions: eval.expansions,
            checkpoint_reads: eval.checkpoint_reads,
            cache: cache.map(|c| c.borrow().stats).unwrap_or_default(),
        }
    }
}

pub(crate) fn narrative_occurrences(n: &Narrative) -> Vec<(GroundAtom, Rat, OccSource)> {
    n.occurrences.iter().map(|o| (o.event.clone(), o.time.clone(), OccSource::Narrative)).collect()
}
