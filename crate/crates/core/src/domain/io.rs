//! JSON problem and solution documents.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    validate_domain, Allocation, Bounds, ConfigurationSpace, PlanKind, PlannedMotion, Point, Polygon,
    ProblemDomain, Robot, Solution, Task, TaskNetwork,
};
use crate::motion::MotionPlan;
use crate::scheduler::Schedule;
use crate::search::RunMetrics;
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct ProblemFile {
    traits: Vec<String>,
    robots: Vec<RobotEntry>,
    tasks: Vec<TaskEntry>,
    #[serde(default)]
    precedence: Vec<[usize; 2]>,
    spaces: BTreeMap<String, SpaceEntry>,
}

#[derive(Serialize, Deserialize)]
struct RobotEntry {
    type_id: String,
    speed: f64,
    traits: Vec<f64>,
    initial_config: Point,
}

#[derive(Serialize, Deserialize)]
struct TaskEntry {
    duration: f64,
    requirements: Vec<f64>,
    initial_config: Point,
    terminal_config: Point,
}

#[derive(Serialize, Deserialize)]
struct SpaceEntry {
    bounds: Bounds,
    #[serde(default)]
    obstacles: Vec<Polygon>,
}

fn parse<'de, T: Deserialize<'de>>(text: &'de str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    Ok(serde_path_to_error::deserialize(de)?)
}

/// Parses and validates a problem document. Indices are array positions.
pub fn load_problem(text: &str) -> Result<ProblemDomain> {
    let file: ProblemFile = parse(text)?;
    let domain = ProblemDomain {
        trait_names: file.traits,
        robots: file
            .robots
            .into_iter()
            .map(|r| Robot {
                type_id: r.type_id,
                speed: r.speed,
                traits: r.traits,
                initial_config: r.initial_config,
            })
            .collect(),
        network: TaskNetwork::new(
            file.tasks
                .into_iter()
                .map(|t| Task {
                    requirements: t.requirements,
                    duration: t.duration,
                    initial_config: t.initial_config,
                    terminal_config: t.terminal_config,
                })
                .collect(),
            file.precedence.into_iter().map(|[i, j]| (i, j)).collect(),
        ),
        spaces: file
            .spaces
            .into_iter()
            .map(|(k, s)| (k, ConfigurationSpace::new(s.bounds, s.obstacles)))
            .collect(),
    };
    let violations = validate_domain(&domain);
    if violations.is_empty() {
        Ok(domain)
    } else {
        Err(Error::Invalid(violations))
    }
}

pub fn problem_to_json(domain: &ProblemDomain) -> String {
    let file = ProblemFile {
        traits: domain.trait_names.clone(),
        robots: domain
            .robots
            .iter()
            .map(|r| RobotEntry {
                type_id: r.type_id.clone(),
                speed: r.speed,
                traits: r.traits.clone(),
                initial_config: r.initial_config,
            })
            .collect(),
        tasks: domain
            .tasks()
            .iter()
            .map(|t| TaskEntry {
                duration: t.duration,
                requirements: t.requirements.clone(),
                initial_config: t.initial_config,
                terminal_config: t.terminal_config,
            })
            .collect(),
        precedence: domain.network.precedence.iter().map(|&(i, j)| [i, j]).collect(),
        spaces: domain
            .spaces
            .iter()
            .map(|(k, s)| {
                (
                    k.clone(),
                    SpaceEntry {
                        bounds: s.bounds,
                        obstacles: s.obstacles.clone(),
                    },
                )
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("problem serialization cannot fail")
}

/// Metrics block of a solution document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMetrics {
    pub compute_seconds: f64,
    pub nodes_expanded: u64,
    pub nodes_visited: u64,
    pub makespan: f64,
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    allocation: Vec<Vec<u8>>,
    schedule: Vec<ScheduleEntry>,
    makespan: f64,
    plans: Vec<PlanEntry>,
    metrics: SolutionMetrics,
}

#[derive(Serialize, Deserialize)]
struct ScheduleEntry {
    task: usize,
    start: f64,
    end: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindEntry {
    Approach,
    Execution,
}

#[derive(Serialize, Deserialize)]
struct PlanEntry {
    robot_ids: Vec<usize>,
    kind: KindEntry,
    task: usize,
    waypoints: Vec<Point>,
    length: f64,
}

/// Renders a solution document. Key order is fixed, so output is byte-stable.
pub fn save_solution(solution: &Solution, metrics: &RunMetrics) -> String {
    let schedule = &solution.schedule;
    let file = SolutionFile {
        allocation: solution.allocation.to_rows(),
        schedule: (0..schedule.start.len())
            .map(|m| ScheduleEntry {
                task: m,
                start: schedule.start[m],
                end: schedule.end[m],
            })
            .collect(),
        makespan: schedule.makespan,
        plans: solution
            .plans
            .iter()
            .map(|p| PlanEntry {
                robot_ids: p.robots.clone(),
                kind: match p.kind {
                    PlanKind::Approach => KindEntry::Approach,
                    PlanKind::Execution => KindEntry::Execution,
                },
                task: p.task,
                waypoints: p.plan.waypoints.clone(),
                length: p.plan.length,
            })
            .collect(),
        metrics: SolutionMetrics {
            compute_seconds: metrics.compute_seconds,
            nodes_expanded: metrics.nodes_expanded,
            nodes_visited: metrics.nodes_visited,
            makespan: schedule.makespan,
        },
    };
    let mut text = serde_json::to_string_pretty(&file).expect("solution serialization cannot fail");
    text.push('\n');
    text
}

/// Parses a solution document back into a [`Solution`] and its metrics.
pub fn parse_solution(text: &str) -> Result<(Solution, SolutionMetrics)> {
    let file: SolutionFile = parse(text)?;
    let allocation = Allocation::from_rows(&file.allocation)
        .ok_or_else(|| Error::InvalidSolution("allocation is not a rectangular 0/1 matrix".into()))?;
    let m = allocation.num_tasks();
    let mut start = vec![f64::NAN; m];
    let mut end = vec![f64::NAN; m];
    for entry in &file.schedule {
        if entry.task >= m {
            return Err(Error::InvalidSolution(format!(
                "schedule references task {} of {m}",
                entry.task
            )));
        }
        start[entry.task] = entry.start;
        end[entry.task] = entry.end;
    }
    if start.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidSolution(
            "schedule does not cover every task".into(),
        ));
    }
    let plans = file
        .plans
        .into_iter()
        .map(|p| PlannedMotion {
            robots: p.robot_ids,
            kind: match p.kind {
                KindEntry::Approach => PlanKind::Approach,
                KindEntry::Execution => PlanKind::Execution,
            },
            task: p.task,
            plan: Arc::new(MotionPlan {
                waypoints: p.waypoints,
                length: p.length,
            }),
        })
        .collect();
    let solution = Solution {
        allocation,
        plans,
        schedule: Schedule {
            start,
            end,
            makespan: file.makespan,
        },
    };
    Ok((solution, file.metrics))
}
