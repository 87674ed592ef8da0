//! Trait-based time-extended task allocation for heterogeneous robot teams.
//!
//! The solver searches over incremental allocations of robots to tasks,
//! guiding the search with a blend of trait satisfaction (APR) and schedule
//! quality (NSQ). Each candidate allocation is scheduled against a simple
//! temporal network whose travel and execution durations come from a motion
//! planning layer.

pub mod domain;
mod error;
pub mod generator;
pub mod harness;
pub mod heuristics;
pub mod motion;
pub mod replay;
pub mod scheduler;
pub mod search;

pub use domain::{
    load_problem, parse_solution, problem_to_json, save_solution, Allocation, Bounds, ConfigurationSpace,
    PlanKind, PlannedMotion, Point, Polygon, ProblemDomain, Robot, Solution, Task, TaskNetwork, TraitMatrix,
};
pub use error::{Error, Result};
pub use heuristics::{apr, nsq, tetaq};
pub use motion::{MotionLayer, MotionPlan, PlannerChoice, PlannerConfig};
pub use scheduler::{Schedule, SchedulerConfig, TabuParams};
pub use search::{itags, itags_sequential, RunMetrics, SearchConfig, SearchOutcome, UnsolvedReason};
