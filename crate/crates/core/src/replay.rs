//! Independent solution checker.
//!
//! Re-derives every constraint a solution must satisfy from the domain alone
//! (traits, durations, precedence, per-robot sequencing with travel, plan
//! geometry) and reports each violation as text.

use crate::domain::{Allocation, PlanKind, PlannedMotion, Point, ProblemDomain, Solution};
use crate::heuristics::{apr, satisfies};
use crate::motion::{polyline_length, FreeSpace, SpaceSignature};

/// Absolute slack for time and length comparisons.
pub const REPLAY_TOLERANCE: f64 = 1e-6;

fn close(a: &Point, b: &Point) -> bool {
    a.distance(b) <= REPLAY_TOLERANCE
}

fn find_plan(
    solution: &Solution,
    kind: PlanKind,
    task: usize,
    robot: Option<usize>,
) -> Option<&PlannedMotion> {
    solution
        .plans
        .iter()
        .find(|p| p.kind == kind && p.task == task && robot.is_none_or(|r| p.robots == [r]))
}

fn check_plan_geometry(
    domain: &ProblemDomain,
    motion: &PlannedMotion,
    from: Point,
    to: Point,
    issues: &mut Vec<String>,
) {
    let label = format!("{} plan for task {}", motion.kind.as_str(), motion.task);
    let plan = &motion.plan;
    if plan.waypoints.len() < 2 {
        issues.push(format!("{label} has fewer than two waypoints"));
        return;
    }
    if !close(&plan.start(), &from) || !close(&plan.goal(), &to) {
        issues.push(format!("{label} does not connect {from:?} to {to:?}"));
    }
    let measured = polyline_length(&plan.waypoints);
    if (measured - plan.length).abs() > REPLAY_TOLERANCE * (1.0 + measured) {
        issues.push(format!(
            "{label} reports length {} but measures {measured}",
            plan.length
        ));
    }
    if plan.length + REPLAY_TOLERANCE < from.distance(&to) {
        issues.push(format!("{label} is shorter than the straight line"));
    }
    let signature =
        SpaceSignature::from_types(motion.robots.iter().map(|&r| domain.robots[r].type_id.as_str()));
    match FreeSpace::compose(&domain.spaces, &signature) {
        Some(space) if space.admits(plan) => {}
        Some(_) => issues.push(format!("{label} collides in space {signature}")),
        None => issues.push(format!("{label} uses unknown space {signature}")),
    }
}

/// Every way `solution` fails to be a valid solution of `domain`; empty
/// when it is valid.
pub fn validate_solution(domain: &ProblemDomain, solution: &Solution) -> Vec<String> {
    let mut issues = Vec::new();
    let (m_count, n_count) = (domain.num_tasks(), domain.num_robots());
    let a: &Allocation = &solution.allocation;
    if a.num_tasks() != m_count || a.num_robots() != n_count {
        issues.push(format!(
            "allocation is {}x{}, domain is {m_count}x{n_count}",
            a.num_tasks(),
            a.num_robots()
        ));
        return issues;
    }
    let s = &solution.schedule;
    if s.start.len() != m_count || s.end.len() != m_count {
        issues.push("schedule does not cover every task".into());
        return issues;
    }

    let residual = apr(a, &domain.robot_traits(), &domain.desired_traits());
    if !satisfies(residual) {
        issues.push(format!("allocation leaves {residual} of the requirements unmet"));
    }

    let tasks = domain.tasks();
    let latest = s.end.iter().copied().fold(0.0, f64::max);
    if (latest - s.makespan).abs() > REPLAY_TOLERANCE {
        issues.push(format!(
            "makespan {} differs from latest end {latest}",
            s.makespan
        ));
    }

    for (m, task) in tasks.iter().enumerate() {
        if s.start[m] < -REPLAY_TOLERANCE {
            issues.push(format!("task {m} starts before time zero"));
        }
        let coalition = a.coalition(m);
        let mut duration = task.duration;
        if !coalition.is_empty() {
            let speed = coalition
                .iter()
                .map(|&r| domain.robots[r].speed)
                .fold(f64::INFINITY, f64::min);
            match find_plan(solution, PlanKind::Execution, m, None) {
                Some(p) => {
                    if p.robots != coalition {
                        issues.push(format!("execution plan for task {m} has the wrong coalition"));
                    }
                    check_plan_geometry(domain, p, task.initial_config, task.terminal_config, &mut issues);
                    duration += p.plan.length / speed;
                }
                None if !close(&task.initial_config, &task.terminal_config) => {
                    issues.push(format!("task {m} moves but has no execution plan"));
                }
                None => {}
            }
        }
        let actual = s.end[m] - s.start[m];
        if (actual - duration).abs() > REPLAY_TOLERANCE * (1.0 + duration) {
            issues.push(format!("task {m} lasts {actual}, expected {duration}"));
        }
    }

    for &(i, j) in &domain.network.precedence {
        if s.start[j] + REPLAY_TOLERANCE < s.end[i] {
            issues.push(format!("task {j} starts before its predecessor {i} ends"));
        }
    }

    for (n, robot) in domain.robots.iter().enumerate() {
        let mut order = a.tasks_of(n);
        order.sort_by(|&x, &y| {
            s.start[x]
                .total_cmp(&s.start[y])
                .then(s.end[x].total_cmp(&s.end[y]))
                .then(x.cmp(&y))
        });
        let mut position = robot.initial_config;
        let mut free_at = 0.0;
        for &m in &order {
            let target = tasks[m].initial_config;
            let travel = match find_plan(solution, PlanKind::Approach, m, Some(n)) {
                Some(p) => {
                    check_plan_geometry(domain, p, position, target, &mut issues);
                    p.plan.length / robot.speed
                }
                None if close(&position, &target) => 0.0,
                None => {
                    issues.push(format!("robot {n} has no approach plan into task {m}"));
                    0.0
                }
            };
            if s.start[m] + REPLAY_TOLERANCE * (1.0 + free_at) < free_at + travel {
                issues.push(format!(
                    "robot {n} cannot reach task {m} by {} (earliest {})",
                    s.start[m],
                    free_at + travel
                ));
            }
            position = tasks[m].terminal_config;
            free_at = s.end[m];
        }
    }

    for p in &solution.plans {
        if p.task >= m_count || p.robots.iter().any(|&r| r >= n_count || !a.get(p.task, r)) {
            issues.push(format!("plan for task {} references unassigned robots", p.task));
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tests::two_by_two;
    use crate::motion::{MotionLayer, PlannerConfig};
    use crate::scheduler::{schedule_allocation, SchedulerConfig};

    fn solved() -> (ProblemDomain, Solution) {
        let mut domain = two_by_two();
        domain.network.tasks[1].requirements = vec![0.0, 2.0];
        let motion = MotionLayer::from_config(&domain, &PlannerConfig::default());
        let a = Allocation::from_rows(&[vec![1, 1], vec![0, 1]]).unwrap();
        let bundle = schedule_allocation(&a, &domain, &motion, SchedulerConfig::default());
        let solution = Solution {
            allocation: a,
            plans: bundle.plans.clone(),
            schedule: bundle.s_bar.clone().unwrap(),
        };
        (domain, solution)
    }

    #[test]
    fn scheduler_output_replays_cleanly() {
        let (domain, solution) = solved();
        assert_eq!(validate_solution(&domain, &solution), Vec::<String>::new());
    }

    #[test]
    fn detects_early_start() {
        let (domain, mut solution) = solved();
        let m = solution.schedule.start.len() - 1;
        solution.schedule.start[m] -= 1.0;
        solution.schedule.end[m] -= 1.0;
        assert!(!validate_solution(&domain, &solution).is_empty());
    }

    #[test]
    fn detects_unmet_traits() {
        let (domain, mut solution) = solved();
        solution.allocation.set(1, 1, false);
        let issues = validate_solution(&domain, &solution);
        assert!(issues.iter().any(|i| i.contains("unmet")), "{issues:?}");
    }

    #[test]
    fn detects_missing_approach() {
        let (domain, mut solution) = solved();
        solution.plans.retain(|p| p.kind != PlanKind::Approach);
        assert!(!validate_solution(&domain, &solution).is_empty());
    }
}
