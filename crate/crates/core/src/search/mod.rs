//! Greedy best-first search over the incremental task allocation graph.
//!
//! Nodes are allocations; each edge assigns one more robot to one more task.
//! [`itags`] orders the frontier by TETAQ and prunes allocations that cannot
//! be scheduled; [`itags_sequential`] searches on APR alone and only schedules
//! allocations that already satisfy every requirement.

mod open_list;

use std::collections::HashSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use open_list::OpenList;

use crate::domain::{Allocation, ProblemDomain, Solution, TraitMatrix};
use crate::heuristics::{apr, nsq, satisfies, HeuristicValues};
use crate::motion::{MotionLayer, PlannerConfig};
use crate::scheduler::{ScheduleBundle, Scheduler, SchedulerConfig};
use crate::{Error, Result};

/// Search parameters. `alpha` weights APR in TETAQ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub alpha: f64,
    /// Cap on nodes visited.
    pub node_limit: u64,
    pub time_limit_seconds: f64,
    pub planner: PlannerConfig,
    pub scheduler: SchedulerConfig,
    /// Seeds tabu tie-breaking and the sampling planner.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            node_limit: 100_000,
            time_limit_seconds: 300.0,
            planner: PlannerConfig::default(),
            scheduler: SchedulerConfig::default(),
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.time_limit_seconds.is_nan() || self.time_limit_seconds < 0.0 {
            return Err(Error::Config("time limit must be non-negative".into()));
        }
        if self.planner.kind == crate::motion::PlannerChoice::Prm
            && (self.planner.prm_samples == 0
                || self.planner.prm_radius_fraction.is_nan()
                || self.planner.prm_radius_fraction <= 0.0)
        {
            return Err(Error::Config("roadmap needs samples > 0 and radius > 0".into()));
        }
        if self
            .planner
            .grid_resolution
            .is_some_and(|r| r.is_nan() || r <= 0.0)
        {
            return Err(Error::Config("grid resolution must be positive".into()));
        }
        Ok(())
    }

    fn time_limit(&self) -> Duration {
        Duration::from_secs_f64(self.time_limit_seconds)
    }

    fn seeded_planner(&self) -> PlannerConfig {
        PlannerConfig {
            seed: self.seed,
            ..self.planner
        }
    }

    fn seeded_scheduler(&self) -> SchedulerConfig {
        let mut s = self.scheduler;
        s.tabu.seed = self.seed;
        s
    }
}

/// Counters reported for every run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    pub compute_seconds: f64,
    /// Popped nodes whose successors were generated.
    pub nodes_expanded: u64,
    /// Nodes whose heuristics were evaluated and that entered the open list.
    pub nodes_visited: u64,
    /// Evaluated nodes dropped because they could not be scheduled.
    pub nodes_pruned: u64,
    /// Calls to the scheduling layer.
    pub schedule_calls: u64,
    pub makespan: Option<f64>,
    pub solved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnsolvedReason {
    #[error("search space exhausted")]
    Exhausted,
    #[error("node limit reached")]
    NodeLimit,
    #[error("time limit reached")]
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub result: std::result::Result<Solution, UnsolvedReason>,
    pub metrics: RunMetrics,
    /// Distinct allocations ever generated (including the root).
    pub closed_size: usize,
}

impl SearchOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        self.result.as_ref().ok()
    }
}

/// A node in the allocation graph with its cached heuristic values.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub allocation: Allocation,
    pub heuristics: HeuristicValues,
    pub bundle: Option<Arc<ScheduleBundle>>,
    pub depth: usize,
}

impl SearchNode {
    pub fn tetaq(&self) -> f64 {
        self.heuristics.tetaq
    }
}

/// Allocations generated so far.
#[derive(Debug, Default)]
pub struct ClosedSet(HashSet<Allocation>);

impl ClosedSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if the allocation was already present.
    pub fn insert(&mut self, allocation: Allocation) -> bool {
        self.0.insert(allocation)
    }

    pub fn contains(&self, allocation: &Allocation) -> bool {
        self.0.contains(allocation)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Every single-assignment extension of `allocation` not yet in `closed`,
/// in ascending (task, robot) order.
pub fn generate_successors(allocation: &Allocation, closed: &ClosedSet) -> Vec<Allocation> {
    let mut out = Vec::new();
    for m in 0..allocation.num_tasks() {
        for n in 0..allocation.num_robots() {
            if !allocation.get(m, n) {
                let child = allocation.with(m, n);
                if !closed.contains(&child) {
                    out.push(child);
                }
            }
        }
    }
    out
}

struct Context<'a> {
    q: TraitMatrix,
    y: TraitMatrix,
    scheduler: Scheduler<'a>,
    started: Instant,
    time_limit: Duration,
    metrics: RunMetrics,
}

impl Context<'_> {
    fn out_of_time(&self) -> bool {
        self.started.elapsed() >= self.time_limit
    }

    fn schedule(&mut self, allocation: &Allocation) -> ScheduleBundle {
        self.metrics.schedule_calls += 1;
        self.scheduler.schedule(allocation)
    }

    fn finish(
        mut self,
        result: std::result::Result<Solution, UnsolvedReason>,
        closed: &ClosedSet,
    ) -> SearchOutcome {
        self.metrics.compute_seconds = self.started.elapsed().as_secs_f64();
        self.metrics.solved = result.is_ok();
        self.metrics.makespan = result.as_ref().ok().map(Solution::makespan);
        SearchOutcome {
            result,
            metrics: self.metrics,
            closed_size: closed.len(),
        }
    }
}

fn into_solution(allocation: Allocation, bundle: &ScheduleBundle) -> Solution {
    Solution {
        allocation,
        plans: bundle.plans.clone(),
        schedule: bundle
            .s_bar
            .clone()
            .expect("solutions are built from feasible bundles"),
    }
}

fn prepare(domain: &ProblemDomain, config: &SearchConfig) -> Result<MotionLayer> {
    config.validate()?;
    let violations = crate::domain::validate_domain(domain);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    Ok(MotionLayer::from_config(domain, &config.seeded_planner()))
}

/// Interleaved allocation, scheduling and motion planning.
pub fn itags(domain: &ProblemDomain, config: &SearchConfig) -> Result<SearchOutcome> {
    let motion = prepare(domain, config)?;
    Ok(run_itags(domain, config, &motion))
}

/// [`itags`] with a caller-supplied motion layer.
pub fn run_itags(domain: &ProblemDomain, config: &SearchConfig, motion: &MotionLayer) -> SearchOutcome {
    let alpha = config.alpha;
    let mut ctx = Context {
        q: domain.robot_traits(),
        y: domain.desired_traits(),
        scheduler: Scheduler::new(domain, motion, config.seeded_scheduler()),
        started: Instant::now(),
        time_limit: config.time_limit(),
        metrics: RunMetrics::default(),
    };
    let best = ctx.scheduler.best().makespan;
    let worst = ctx.scheduler.c_worst();

    let evaluate = |ctx: &mut Context, allocation: Allocation| -> Option<SearchNode> {
        let apr_value = apr(&allocation, &ctx.q, &ctx.y);
        let bundle = ctx.schedule(&allocation);
        let nsq_value = nsq(bundle.makespan(), best, worst);
        if nsq_value == f64::INFINITY {
            ctx.metrics.nodes_pruned += 1;
            return None;
        }
        let depth = allocation.depth();
        Some(SearchNode {
            allocation,
            heuristics: HeuristicValues::new(apr_value, nsq_value, alpha),
            bundle: Some(Arc::new(bundle)),
            depth,
        })
    };

    let mut closed = ClosedSet::new();
    let mut open = OpenList::new();
    let root = Allocation::empty(domain.num_tasks(), domain.num_robots());
    closed.insert(root.clone());
    match evaluate(&mut ctx, root) {
        Some(node) => {
            open.push(node);
            ctx.metrics.nodes_visited += 1;
        }
        None => return ctx.finish(Err(UnsolvedReason::Exhausted), &closed),
    }

    loop {
        if ctx.out_of_time() {
            return ctx.finish(Err(UnsolvedReason::TimeLimit), &closed);
        }
        let Some(node) = open.pop() else {
            return ctx.finish(Err(UnsolvedReason::Exhausted), &closed);
        };
        if satisfies(node.heuristics.apr) && node.heuristics.nsq < f64::INFINITY {
            let bundle = node.bundle.expect("itags nodes carry a bundle");
            let solution = into_solution(node.allocation, &bundle);
            return ctx.finish(Ok(solution), &closed);
        }
        ctx.metrics.nodes_expanded += 1;
        for child in generate_successors(&node.allocation, &closed) {
            if ctx.metrics.nodes_visited >= config.node_limit {
                return ctx.finish(Err(UnsolvedReason::NodeLimit), &closed);
            }
            if ctx.out_of_time() {
                return ctx.finish(Err(UnsolvedReason::TimeLimit), &closed);
            }
            closed.insert(child.clone());
            if let Some(child) = evaluate(&mut ctx, child) {
                open.push(child);
                ctx.metrics.nodes_visited += 1;
            }
        }
    }
}

/// Allocate first, then schedule: APR-only search whose satisfying
/// allocations are scheduled on pop; unschedulable ones are dropped and the
/// search continues.
pub fn itags_sequential(domain: &ProblemDomain, config: &SearchConfig) -> Result<SearchOutcome> {
    let motion = prepare(domain, config)?;
    Ok(run_itags_sequential(domain, config, &motion))
}

/// [`itags_sequential`] with a caller-supplied motion layer.
pub fn run_itags_sequential(
    domain: &ProblemDomain,
    config: &SearchConfig,
    motion: &MotionLayer,
) -> SearchOutcome {
    let mut ctx = Context {
        q: domain.robot_traits(),
        y: domain.desired_traits(),
        scheduler: Scheduler::new(domain, motion, config.seeded_scheduler()),
        started: Instant::now(),
        time_limit: config.time_limit(),
        metrics: RunMetrics::default(),
    };
    let node_for = |ctx: &Context, allocation: Allocation| {
        let apr_value = apr(&allocation, &ctx.q, &ctx.y);
        let depth = allocation.depth();
        SearchNode {
            allocation,
            // APR alone: weight 1 on APR, schedule quality unknown (0).
            heuristics: HeuristicValues::new(apr_value, 0.0, 1.0),
            bundle: None,
            depth,
        }
    };

    let mut closed = ClosedSet::new();
    let mut open = OpenList::new();
    let root = Allocation::empty(domain.num_tasks(), domain.num_robots());
    closed.insert(root.clone());
    open.push(node_for(&ctx, root));
    ctx.metrics.nodes_visited += 1;

    loop {
        if ctx.out_of_time() {
            return ctx.finish(Err(UnsolvedReason::TimeLimit), &closed);
        }
        let Some(node) = open.pop() else {
            return ctx.finish(Err(UnsolvedReason::Exhausted), &closed);
        };
        if satisfies(node.heuristics.apr) {
            let bundle = ctx.schedule(&node.allocation);
            if bundle.is_feasible() {
                let solution = into_solution(node.allocation, &bundle);
                return ctx.finish(Ok(solution), &closed);
            }
            ctx.metrics.nodes_pruned += 1;
            continue;
        }
        ctx.metrics.nodes_expanded += 1;
        for child in generate_successors(&node.allocation, &closed) {
            if ctx.metrics.nodes_visited >= config.node_limit {
                return ctx.finish(Err(UnsolvedReason::NodeLimit), &closed);
            }
            closed.insert(child.clone());
            let child = node_for(&ctx, child);
            open.push(child);
            ctx.metrics.nodes_visited += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn successors_of_empty_two_by_two() {
        let closed = ClosedSet::new();
        let kids = generate_successors(&Allocation::empty(2, 2), &closed);
        assert_eq!(kids.len(), 4);
        assert_eq!(kids[0], Allocation::from_rows(&[vec![1, 0], vec![0, 0]]).unwrap());
        assert_eq!(kids[3], Allocation::from_rows(&[vec![0, 0], vec![0, 1]]).unwrap());
    }

    #[test]
    fn full_allocation_has_no_successors() {
        let full = Allocation::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert!(generate_successors(&full, &ClosedSet::new()).is_empty());
    }

    #[test]
    fn closed_children_are_skipped() {
        let mut closed = ClosedSet::new();
        closed.insert(Allocation::empty(2, 2).with(0, 0));
        let kids = generate_successors(&Allocation::empty(2, 2), &closed);
        // Enumeration oracle: all four single-bit matrices minus the closed one.
        let expected: Vec<Allocation> = (0..2)
            .flat_map(|m| (0..2).map(move |n| (m, n)))
            .filter(|&(m, n)| (m, n) != (0, 0))
            .map(|(m, n)| Allocation::empty(2, 2).with(m, n))
            .collect();
        assert_eq!(kids, expected);
    }

    #[test]
    fn config_rejects_bad_alpha() {
        let cfg = SearchConfig {
            alpha: 1.5,
            ..SearchConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
