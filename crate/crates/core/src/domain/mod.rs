//! Problem data model: robots, tasks, the task network, configuration spaces
//! and solutions.

mod allocation;
pub mod geometry;
mod io;

use std::collections::BTreeMap;
use std::fmt;

pub use allocation::Allocation;
pub use geometry::{Bounds, Point, Polygon};
pub use io::{load_problem, parse_solution, problem_to_json, save_solution, SolutionMetrics};

use crate::motion::MotionPlan;
use crate::scheduler::Schedule;
use std::sync::Arc;

/// Dense row-major matrix of non-negative trait values.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TraitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from equally sized rows.
    ///
    /// Panics if the rows have differing lengths.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(
                row.len(),
                cols,
                "trait row has {} columns, expected {cols}",
                row.len()
            );
            data.extend_from_slice(row);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Element-wise l1 norm.
    pub fn l11_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    pub type_id: String,
    /// Distance units per second.
    pub speed: f64,
    pub traits: Vec<f64>,
    pub initial_config: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub requirements: Vec<f64>,
    /// Static duration in seconds, excluding any motion.
    pub duration: f64,
    pub initial_config: Point,
    pub terminal_config: Point,
}

/// Tasks plus precedence edges `(i, j)` meaning task `i` finishes before `j` starts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaskNetwork {
    pub tasks: Vec<Task>,
    pub precedence: Vec<(usize, usize)>,
}

impl TaskNetwork {
    pub fn new(tasks: Vec<Task>, precedence: Vec<(usize, usize)>) -> Self {
        Self { tasks, precedence }
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    fn valid_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.tasks.len();
        self.precedence
            .iter()
            .copied()
            .filter(move |&(i, j)| i < m && j < m && i != j)
    }

    /// Kahn ordering over the valid edges; `None` if they contain a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let m = self.tasks.len();
        let mut indegree = vec![0usize; m];
        let mut succ = vec![Vec::new(); m];
        for (i, j) in self.valid_edges() {
            succ[i].push(j);
            indegree[j] += 1;
        }
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..m)
            .filter(|&t| indegree[t] == 0)
            .map(std::cmp::Reverse)
            .collect();
        let mut order = Vec::with_capacity(m);
        while let Some(std::cmp::Reverse(t)) = ready.pop() {
            order.push(t);
            for &s in &succ[t] {
                indegree[s] -= 1;
                if indegree[s] == 0 {
                    ready.push(std::cmp::Reverse(s));
                }
            }
        }
        (order.len() == m).then_some(order)
    }

    /// Tasks that lie on some precedence cycle.
    fn cyclic_tasks(&self) -> Vec<usize> {
        let reach = Reachability::from_edges(self.tasks.len(), self.valid_edges());
        (0..self.tasks.len()).filter(|&t| reach.precedes(t, t)).collect()
    }

    /// Transitive closure of the precedence relation.
    pub fn closure(&self) -> Reachability {
        Reachability::from_edges(self.tasks.len(), self.valid_edges())
    }
}

/// Transitive closure of a task precedence relation.
#[derive(Debug, Clone, PartialEq)]
pub struct Reachability {
    n: usize,
    reach: Vec<bool>,
}

impl Reachability {
    fn from_edges(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Self {
        let mut reach = vec![false; n * n];
        for (i, j) in edges {
            reach[i * n + j] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i * n + k] {
                    for j in 0..n {
                        if reach[k * n + j] {
                            reach[i * n + j] = true;
                        }
                    }
                }
            }
        }
        Self { n, reach }
    }

    /// True when `a` must finish before `b` starts.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.reach[a * self.n + b]
    }

    /// True when neither task precedes the other.
    pub fn unordered(&self, a: usize, b: usize) -> bool {
        !self.precedes(a, b) && !self.precedes(b, a)
    }
}

/// Free configuration space for one robot type.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSpace {
    pub bounds: Bounds,
    pub obstacles: Vec<Polygon>,
}

impl ConfigurationSpace {
    pub fn new(bounds: Bounds, obstacles: Vec<Polygon>) -> Self {
        Self { bounds, obstacles }
    }

    pub fn is_free(&self, p: &Point) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    pub fn segment_free(&self, a: &Point, b: &Point) -> bool {
        self.bounds.contains(a)
            && self.bounds.contains(b)
            && !self.obstacles.iter().any(|o| o.intersects_segment(a, b))
    }
}

/// The full problem: task network, robots (with their trait rows and initial
/// configurations) and one configuration space per robot type.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDomain {
    pub trait_names: Vec<String>,
    pub robots: Vec<Robot>,
    pub network: TaskNetwork,
    pub spaces: BTreeMap<String, ConfigurationSpace>,
}

impl ProblemDomain {
    /// Assembles a domain and rejects it if any invariant is violated.
    pub fn new(
        trait_names: Vec<String>,
        robots: Vec<Robot>,
        network: TaskNetwork,
        spaces: BTreeMap<String, ConfigurationSpace>,
    ) -> Result<Self, crate::Error> {
        let domain = Self {
            trait_names,
            robots,
            network,
            spaces,
        };
        let violations = validate_domain(&domain);
        if violations.is_empty() {
            Ok(domain)
        } else {
            Err(crate::Error::Invalid(violations))
        }
    }

    pub fn num_robots(&self) -> usize {
        self.robots.len()
    }

    pub fn num_tasks(&self) -> usize {
        self.network.len()
    }

    pub fn num_traits(&self) -> usize {
        self.trait_names.len()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.network.tasks
    }

    /// Q: one row per robot.
    pub fn robot_traits(&self) -> TraitMatrix {
        let rows: Vec<&[f64]> = self.robots.iter().map(|r| r.traits.as_slice()).collect();
        TraitMatrix::from_rows(&rows, self.num_traits())
    }

    /// Y: one row per task.
    pub fn desired_traits(&self) -> TraitMatrix {
        let rows: Vec<&[f64]> = self.tasks().iter().map(|t| t.requirements.as_slice()).collect();
        TraitMatrix::from_rows(&rows, self.num_traits())
    }

    pub fn space_of(&self, robot: usize) -> Option<&ConfigurationSpace> {
        self.spaces.get(&self.robots[robot].type_id)
    }

    /// Bounding box covering every configuration space.
    pub fn workspace_bounds(&self) -> Option<Bounds> {
        self.spaces.values().map(|s| s.bounds).reduce(|a, b| a.union(&b))
    }

    /// Length over-estimate for any path in the workspace: the perimeter of
    /// the workspace bounding box.
    pub fn longest_path_estimate(&self) -> f64 {
        self.workspace_bounds()
            .map(|b| 2.0 * (b.width() + b.height()))
            .unwrap_or(0.0)
    }

    pub fn slowest_speed(&self) -> Option<f64> {
        self.robots.iter().map(|r| r.speed).reduce(f64::min)
    }
}

/// Kind of a motion plan in a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlanKind {
    /// A robot travelling to a task's initial configuration.
    Approach,
    /// A coalition moving from a task's initial to its terminal configuration.
    Execution,
}

impl PlanKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlanKind::Approach => "approach",
            PlanKind::Execution => "execution",
        }
    }
}

/// A motion plan together with the robots executing it and the task it serves.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedMotion {
    pub robots: Vec<usize>,
    pub kind: PlanKind,
    pub task: usize,
    pub plan: Arc<MotionPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub allocation: Allocation,
    pub plans: Vec<PlannedMotion>,
    pub schedule: Schedule,
}

impl Solution {
    pub fn makespan(&self) -> f64 {
        self.schedule.makespan
    }
}

/// A single admissibility problem found by [`validate_domain`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("domain has no robots")]
    NoRobots,
    #[error("domain has no tasks")]
    NoTasks,
    #[error("precedence edge ({0}, {1}) references a task that does not exist")]
    EdgeOutOfRange(usize, usize),
    #[error("precedence edge ({0}, {0}) is a self loop")]
    SelfLoop(usize),
    #[error("precedence relation contains a cycle through tasks {0:?}")]
    Cycle(Vec<usize>),
    #[error("robot {robot} has {found} traits, expected {expected}")]
    RobotTraitCount {
        robot: usize,
        expected: usize,
        found: usize,
    },
    #[error("task {task} has {found} requirements, expected {expected}")]
    TaskRequirementCount {
        task: usize,
        expected: usize,
        found: usize,
    },
    #[error("robot {robot} has a negative or non-finite value for trait {trait_index}")]
    NegativeTrait { robot: usize, trait_index: usize },
    #[error("task {task} has a negative or non-finite requirement for trait {trait_index}")]
    NegativeRequirement { task: usize, trait_index: usize },
    #[error("robot {0} has a non-positive speed")]
    NonPositiveSpeed(usize),
    #[error("task {0} has a negative or non-finite duration")]
    NegativeDuration(usize),
    #[error("desired trait matrix is all zeros")]
    ZeroRequirements,
    #[error("robot {robot} references unknown type_id {type_id:?}")]
    UnknownType { robot: usize, type_id: String },
    #[error("robot {0} starts outside its free configuration space")]
    RobotOutsideFreeSpace(usize),
    #[error("task {0} has a configuration outside every space's bounds")]
    TaskOutsideBounds(usize),
    #[error("space {0:?} has degenerate bounds")]
    DegenerateBounds(String),
    #[error("space {type_id:?} obstacle {obstacle} has a vertex outside the bounds")]
    ObstacleOutsideBounds { type_id: String, obstacle: usize },
    #[error("space {type_id:?} obstacle {obstacle} is not a simple polygon")]
    NonSimpleObstacle { type_id: String, obstacle: usize },
}

/// Lists every invariant violation in `domain`; empty means admissible.
pub fn validate_domain(domain: &ProblemDomain) -> Vec<Violation> {
    let mut out = Vec::new();
    let u = domain.num_traits();
    let m = domain.num_tasks();

    if domain.robots.is_empty() {
        out.push(Violation::NoRobots);
    }
    if m == 0 {
        out.push(Violation::NoTasks);
    }

    for &(i, j) in &domain.network.precedence {
        if i >= m || j >= m {
            out.push(Violation::EdgeOutOfRange(i, j));
        } else if i == j {
            out.push(Violation::SelfLoop(i));
        }
    }
    let cyclic = domain.network.cyclic_tasks();
    if !cyclic.is_empty() {
        out.push(Violation::Cycle(cyclic));
    }

    for (type_id, space) in &domain.spaces {
        if space.bounds.is_degenerate() {
            out.push(Violation::DegenerateBounds(type_id.clone()));
        }
        for (k, obstacle) in space.obstacles.iter().enumerate() {
            if obstacle.vertices.iter().any(|v| !space.bounds.contains(v)) {
                out.push(Violation::ObstacleOutsideBounds {
                    type_id: type_id.clone(),
                    obstacle: k,
                });
            }
            if !obstacle.is_simple() {
                out.push(Violation::NonSimpleObstacle {
                    type_id: type_id.clone(),
                    obstacle: k,
                });
            }
        }
    }

    for (r, robot) in domain.robots.iter().enumerate() {
        if robot.traits.len() != u {
            out.push(Violation::RobotTraitCount {
                robot: r,
                expected: u,
                found: robot.traits.len(),
            });
        }
        for (k, v) in robot.traits.iter().enumerate() {
            if !(v.is_finite() && *v >= 0.0) {
                out.push(Violation::NegativeTrait {
                    robot: r,
                    trait_index: k,
                });
            }
        }
        if !(robot.speed.is_finite() && robot.speed > 0.0) {
            out.push(Violation::NonPositiveSpeed(r));
        }
        match domain.spaces.get(&robot.type_id) {
            None => out.push(Violation::UnknownType {
                robot: r,
                type_id: robot.type_id.clone(),
            }),
            Some(space) => {
                if !space.is_free(&robot.initial_config) {
                    out.push(Violation::RobotOutsideFreeSpace(r));
                }
            }
        }
    }

    let mut requirement_total = 0.0;
    for (t, task) in domain.tasks().iter().enumerate() {
        if task.requirements.len() != u {
            out.push(Violation::TaskRequirementCount {
                task: t,
                expected: u,
                found: task.requirements.len(),
            });
        }
        for (k, v) in task.requirements.iter().enumerate() {
            if !(v.is_finite() && *v >= 0.0) {
                out.push(Violation::NegativeRequirement {
                    task: t,
                    trait_index: k,
                });
            } else {
                requirement_total += v;
            }
        }
        if !(task.duration.is_finite() && task.duration >= 0.0) {
            out.push(Violation::NegativeDuration(t));
        }
        let inside_some = |p: &Point| domain.spaces.values().any(|s| s.bounds.contains(p));
        if !domain.spaces.is_empty()
            && !(inside_some(&task.initial_config) && inside_some(&task.terminal_config))
        {
            out.push(Violation::TaskOutsideBounds(t));
        }
    }
    if m > 0 && requirement_total <= 0.0 {
        out.push(Violation::ZeroRequirements);
    }

    out
}

impl fmt::Display for ProblemDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} robots, {} tasks, {} traits, {} precedence edges",
            self.num_robots(),
            self.num_tasks(),
            self.num_traits(),
            self.network.precedence.len()
        )
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn open_space() -> ConfigurationSpace {
        ConfigurationSpace::new(Bounds::new(0.0, 0.0, 10.0, 10.0), vec![])
    }

    pub(crate) fn task(req: Vec<f64>, duration: f64, at: Point) -> Task {
        Task {
            requirements: req,
            duration,
            initial_config: at,
            terminal_config: at,
        }
    }

    pub(crate) fn two_by_two() -> ProblemDomain {
        let robots = vec![
            Robot {
                type_id: "ground".into(),
                speed: 1.0,
                traits: vec![1.0, 0.0],
                initial_config: Point::new(1.0, 1.0),
            },
            Robot {
                type_id: "ground".into(),
                speed: 2.0,
                traits: vec![1.0, 2.0],
                initial_config: Point::new(2.0, 1.0),
            },
        ];
        let tasks = vec![
            task(vec![2.0, 1.0], 3.0, Point::new(5.0, 5.0)),
            task(vec![0.0, 3.0], 2.0, Point::new(8.0, 2.0)),
        ];
        let mut spaces = BTreeMap::new();
        spaces.insert("ground".to_string(), open_space());
        ProblemDomain {
            trait_names: vec!["a".into(), "b".into()],
            robots,
            network: TaskNetwork::new(tasks, vec![]),
            spaces,
        }
    }

    #[test]
    fn well_formed_domain_has_no_violations() {
        assert_eq!(validate_domain(&two_by_two()), vec![]);
    }

    #[test]
    fn two_cycle_is_reported() {
        let mut d = two_by_two();
        d.network.precedence = vec![(0, 1), (1, 0)];
        let v = validate_domain(&d);
        assert_eq!(v, vec![Violation::Cycle(vec![0, 1])]);
    }

    #[test]
    fn zero_requirements_are_reported() {
        let mut d = two_by_two();
        for t in &mut d.network.tasks {
            t.requirements = vec![0.0, 0.0];
        }
        assert_eq!(validate_domain(&d), vec![Violation::ZeroRequirements]);
    }

    #[test]
    fn dangling_type_and_obstructed_start() {
        let mut d = two_by_two();
        d.robots[0].type_id = "boat".into();
        d.spaces.get_mut("ground").unwrap().obstacles = vec![Polygon::rectangle(1.5, 0.5, 2.5, 1.5)];
        let v = validate_domain(&d);
        assert!(v.contains(&Violation::UnknownType {
            robot: 0,
            type_id: "boat".into()
        }));
        assert!(v.contains(&Violation::RobotOutsideFreeSpace(1)));
    }

    #[test]
    fn dimension_and_sign_errors() {
        let mut d = two_by_two();
        d.robots[1].traits = vec![1.0];
        d.robots[0].speed = 0.0;
        d.network.tasks[0].duration = -1.0;
        d.network.tasks[1].requirements[0] = f64::NAN;
        d.network.precedence.push((0, 7));
        let v = validate_domain(&d);
        assert!(v.contains(&Violation::RobotTraitCount {
            robot: 1,
            expected: 2,
            found: 1
        }));
        assert!(v.contains(&Violation::NonPositiveSpeed(0)));
        assert!(v.contains(&Violation::NegativeDuration(0)));
        assert!(v.contains(&Violation::NegativeRequirement {
            task: 1,
            trait_index: 0
        }));
        assert!(v.contains(&Violation::EdgeOutOfRange(0, 7)));
    }

    #[test]
    fn validation_is_pure() {
        let mut d = two_by_two();
        d.network.precedence = vec![(0, 1), (1, 0), (1, 1)];
        assert_eq!(validate_domain(&d), validate_domain(&d));
    }

    #[test]
    fn closure_is_transitive() {
        let tasks = (0..4)
            .map(|_| task(vec![1.0], 1.0, Point::new(0.0, 0.0)))
            .collect();
        let net = TaskNetwork::new(tasks, vec![(0, 1), (1, 2)]);
        let c = net.closure();
        assert!(c.precedes(0, 2));
        assert!(!c.precedes(2, 0));
        assert!(c.unordered(0, 3));
        assert_eq!(net.topological_order(), Some(vec![0, 1, 2, 3]));
    }
}
