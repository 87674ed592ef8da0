//! Scheduling layer: turns an allocation into a temporally consistent,
//! minimum-makespan schedule that accounts for robot travel and coalition
//! motion, and supplies the best/worst makespan bounds used by NSQ.

mod stn;
mod tabu;

use std::sync::Arc;

pub use stn::{check_consistency, earliest_schedule, solve, time_points, Edge, Schedule, Stn};
pub use tabu::{
    derive_disjunctive_constraints, has_consistent_ordering, resolve_orderings_tabu, DisjunctiveConstraint,
    OrderingProblem, ResolvedOrdering, TabuParams,
};

use crate::domain::{Allocation, PlanKind, PlannedMotion, ProblemDomain, Reachability, TaskNetwork};
use crate::motion::{MotionLayer, PlanOutcome};

/// Unconstrained network: static durations and precedence only.
///
/// The earliest schedule of this network is the best-case schedule.
pub fn build_best_schedule(network: &TaskNetwork) -> (Stn, Schedule) {
    let mut stn = Stn::new(network.tasks.iter().map(|t| t.duration).collect());
    for &(i, j) in &network.precedence {
        stn.add_precedence(i, j, 0.0);
    }
    let schedule = earliest_schedule(&stn);
    (stn, schedule)
}

/// Over-estimate of the worst schedule's makespan: `2·M·z/w + Σ dur`, with
/// `z` the longest possible path and `w` the slowest robot speed.
pub fn worst_makespan(network: &TaskNetwork, longest_path: f64, slowest_speed: f64) -> f64 {
    assert!(slowest_speed > 0.0, "slowest speed must be positive");
    let m = network.len() as f64;
    2.0 * m * longest_path / slowest_speed + network.tasks.iter().map(|t| t.duration).sum::<f64>()
}

/// Why an allocation could not be scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum Infeasibility {
    #[error("best-case network is inconsistent")]
    InconsistentBest,
    #[error("no consistent ordering of disjunctive constraints was found")]
    NoConsistentOrdering,
    #[error("a required motion has no feasible plan")]
    MotionInfeasible,
    #[error("the motion planner timed out")]
    MotionTimeout,
}

/// Result of scheduling one allocation.
#[derive(Debug, Clone)]
pub struct ScheduleBundle {
    pub s_bar: Result<Schedule, Infeasibility>,
    pub s_best: Arc<Schedule>,
    pub c_worst: f64,
    /// Approach plans (robot order, then sequence order) followed by
    /// execution plans (task order). Zero-length motions are omitted.
    pub plans: Vec<PlannedMotion>,
    /// Per-robot task order in `s_bar`.
    pub sequences: Vec<Vec<usize>>,
}

impl ScheduleBundle {
    pub fn makespan(&self) -> f64 {
        self.s_bar.as_ref().map_or(f64::INFINITY, |s| s.makespan)
    }

    pub fn is_feasible(&self) -> bool {
        self.s_bar.is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    pub tabu: TabuParams,
    /// Run the ordering search with zero travel first and skip motion
    /// queries when even that fails.
    pub zero_bound_precheck: bool,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            tabu: TabuParams::default(),
            zero_bound_precheck: true,
        }
    }
}

/// Per-domain scheduler; caches the best-case network and the worst-case bound.
pub struct Scheduler<'a> {
    domain: &'a ProblemDomain,
    motion: &'a MotionLayer,
    config: SchedulerConfig,
    closure: Reachability,
    best_stn: Stn,
    s_best: Arc<Schedule>,
    best_consistent: bool,
    c_worst: f64,
}

impl<'a> Scheduler<'a> {
    pub fn new(domain: &'a ProblemDomain, motion: &'a MotionLayer, config: SchedulerConfig) -> Self {
        let (best_stn, s_best) = build_best_schedule(&domain.network);
        let best_consistent = check_consistency(&best_stn);
        let c_worst = worst_makespan(
            &domain.network,
            domain.longest_path_estimate(),
            domain.slowest_speed().unwrap_or(1.0),
        );
        Self {
            domain,
            motion,
            config,
            closure: domain.network.closure(),
            best_stn,
            s_best: Arc::new(s_best),
            best_consistent,
            c_worst,
        }
    }

    pub fn best(&self) -> &Arc<Schedule> {
        &self.s_best
    }

    pub fn c_worst(&self) -> f64 {
        self.c_worst
    }

    fn infeasible(&self, reason: Infeasibility) -> ScheduleBundle {
        ScheduleBundle {
            s_bar: Err(reason),
            s_best: self.s_best.clone(),
            c_worst: self.c_worst,
            plans: Vec::new(),
            sequences: Vec::new(),
        }
    }

    /// Ordering-independent motion check: every assigned task must be
    /// reachable from at least one place its robot could be coming from
    /// (its start, or the end of another of its tasks not forced later).
    fn unreachable_task(&self, allocation: &Allocation) -> Option<Infeasibility> {
        let tasks = self.domain.tasks();
        for (robot, r) in self.domain.robots.iter().enumerate() {
            let assigned = allocation.tasks_of(robot);
            for &m in &assigned {
                let mut origins = Vec::new();
                if !assigned.iter().any(|&p| self.closure.precedes(p, m)) {
                    origins.push(r.initial_config);
                }
                origins.extend(
                    assigned
                        .iter()
                        .filter(|&&p| p != m && !self.closure.precedes(m, p))
                        .map(|&p| tasks[p].terminal_config),
                );
                let mut timed_out = false;
                let reachable = origins.iter().any(|&from| {
                    match self.motion.plan_for_robot(robot, from, tasks[m].initial_config) {
                        PlanOutcome::Found(_) => true,
                        PlanOutcome::Infeasible => false,
                        PlanOutcome::Timeout => {
                            timed_out = true;
                            false
                        }
                    }
                });
                if !reachable {
                    return Some(if timed_out {
                        Infeasibility::MotionTimeout
                    } else {
                        Infeasibility::MotionInfeasible
                    });
                }
            }
        }
        None
    }

    /// Schedules `allocation`: orders every robot's tasks, adds travel and
    /// coalition execution times from the motion layer, and returns the
    /// earliest schedule together with the best/worst bounds.
    pub fn schedule(&self, allocation: &Allocation) -> ScheduleBundle {
        assert_eq!(allocation.num_tasks(), self.domain.num_tasks());
        assert_eq!(allocation.num_robots(), self.domain.num_robots());
        if !self.best_consistent {
            return self.infeasible(Infeasibility::InconsistentBest);
        }
        let tasks = self.domain.tasks();
        let problem = OrderingProblem::new(allocation, &self.closure, self.s_best.start.clone());

        if self.config.zero_bound_precheck
            && problem.num_choices() > 0
            && !has_consistent_ordering(&self.best_stn, &problem, &self.config.tabu)
        {
            return self.infeasible(Infeasibility::NoConsistentOrdering);
        }

        let mut base = self.best_stn.clone();
        let mut executions = Vec::new();
        for (m, task) in tasks.iter().enumerate() {
            let coalition = allocation.coalition(m);
            if coalition.is_empty() {
                continue;
            }
            match self
                .motion
                .plan_for_coalition(&coalition, task.initial_config, task.terminal_config)
            {
                PlanOutcome::Found(plan) => {
                    let speed = self.motion.coalition_speed(&coalition);
                    base.set_duration(m, task.duration + plan.length / speed);
                    if plan.length > 0.0 {
                        executions.push(PlannedMotion {
                            robots: coalition,
                            kind: PlanKind::Execution,
                            task: m,
                            plan,
                        });
                    }
                }
                PlanOutcome::Infeasible => return self.infeasible(Infeasibility::MotionInfeasible),
                PlanOutcome::Timeout => return self.infeasible(Infeasibility::MotionTimeout),
            }
        }

        let mut motion_failed = false;
        let mut timed_out = false;
        let robots = &self.domain.robots;
        let approach_origin = |robot: usize, pred: Option<usize>| {
            pred.map_or(robots[robot].initial_config, |p| tasks[p].terminal_config)
        };
        let transition = |robot: usize, pred: Option<usize>, succ: usize| {
            let from = approach_origin(robot, pred);
            match self
                .motion
                .plan_for_robot(robot, from, tasks[succ].initial_config)
            {
                PlanOutcome::Found(plan) => Some(plan.length / robots[robot].speed),
                PlanOutcome::Infeasible => {
                    motion_failed = true;
                    None
                }
                PlanOutcome::Timeout => {
                    timed_out = true;
                    None
                }
            }
        };
        if let Some(reason) = self.unreachable_task(allocation) {
            return self.infeasible(reason);
        }
        let resolved = resolve_orderings_tabu(&base, &problem, transition, &self.config.tabu);
        if timed_out {
            return self.infeasible(Infeasibility::MotionTimeout);
        }
        let Some(resolved) = resolved else {
            return self.infeasible(if motion_failed {
                Infeasibility::MotionInfeasible
            } else {
                Infeasibility::NoConsistentOrdering
            });
        };

        let mut plans = Vec::new();
        for (robot, seq) in resolved.sequences.iter().enumerate() {
            let mut pred = None;
            for &m in seq {
                let from = approach_origin(robot, pred);
                match self.motion.plan_for_robot(robot, from, tasks[m].initial_config) {
                    PlanOutcome::Found(plan) => {
                        if plan.length > 0.0 {
                            plans.push(PlannedMotion {
                                robots: vec![robot],
                                kind: PlanKind::Approach,
                                task: m,
                                plan,
                            });
                        }
                    }
                    // Only possible when a timed-out query is retried.
                    PlanOutcome::Infeasible => return self.infeasible(Infeasibility::MotionInfeasible),
                    PlanOutcome::Timeout => return self.infeasible(Infeasibility::MotionTimeout),
                }
                pred = Some(m);
            }
        }
        plans.extend(executions);

        if resolved.schedule.makespan > self.c_worst {
            log::warn!(
                "makespan {} exceeds the worst-case estimate {}",
                resolved.schedule.makespan,
                self.c_worst
            );
        }
        ScheduleBundle {
            s_bar: Ok(resolved.schedule),
            s_best: self.s_best.clone(),
            c_worst: self.c_worst,
            plans,
            sequences: resolved.sequences,
        }
    }
}

/// One-shot convenience around [`Scheduler::schedule`].
pub fn schedule_allocation(
    allocation: &Allocation,
    domain: &ProblemDomain,
    motion: &MotionLayer,
    config: SchedulerConfig,
) -> ScheduleBundle {
    Scheduler::new(domain, motion, config).schedule(allocation)
}
