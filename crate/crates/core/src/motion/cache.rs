use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::{MotionQuery, PlanOutcome, SpaceSignature};
use crate::domain::Point;

/// Quantization step for cache keys, in workspace units.
const KEY_QUANTUM: f64 = 1e-6;

fn quantize(p: &Point) -> (i64, i64) {
    (
        (p.x / KEY_QUANTUM).round() as i64,
        (p.y / KEY_QUANTUM).round() as i64,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlanKey {
    pub start: (i64, i64),
    pub goal: (i64, i64),
    pub signature: SpaceSignature,
}

impl PlanKey {
    pub fn of(query: &MotionQuery) -> Self {
        Self {
            start: quantize(&query.start),
            goal: quantize(&query.goal),
            signature: query.signature.clone(),
        }
    }
}

/// Memo table of planner outcomes.
///
/// Each key owns a once-cell, so concurrent callers of the same key run the
/// planner once. Timeouts are handed back but then evicted.
#[derive(Default)]
pub struct PlanCache {
    entries: Mutex<HashMap<PlanKey, Arc<OnceLock<PlanOutcome>>>>,
}

impl PlanCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_plan(&self, query: &MotionQuery, plan: impl FnOnce() -> PlanOutcome) -> PlanOutcome {
        let key = PlanKey::of(query);
        let cell = {
            let mut entries = self.entries.lock().unwrap();
            entries.entry(key.clone()).or_default().clone()
        };
        let outcome = cell.get_or_init(plan).clone();
        if outcome == PlanOutcome::Timeout {
            let mut entries = self.entries.lock().unwrap();
            if entries.get(&key).is_some_and(|c| Arc::ptr_eq(c, &cell)) {
                entries.remove(&key);
            }
        }
        outcome
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
