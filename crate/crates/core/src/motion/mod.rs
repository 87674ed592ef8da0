//! Motion planning layer: path feasibility and length queries in per-type
//! (or per-coalition) free configuration spaces, memoized per query.

mod cache;
mod grid;
mod prm;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

pub use cache::{PlanCache, PlanKey};
pub use grid::{GridPlanner, GridSnap};
pub use prm::LazyPrmPlanner;

use crate::domain::{Bounds, ConfigurationSpace, Point, Polygon, ProblemDomain, Robot};

/// Collision-free polyline from start to goal.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub waypoints: Vec<Point>,
    pub length: f64,
}

impl MotionPlan {
    pub fn from_waypoints(waypoints: Vec<Point>) -> Self {
        let length = polyline_length(&waypoints);
        Self { waypoints, length }
    }

    pub fn start(&self) -> Point {
        self.waypoints[0]
    }

    pub fn goal(&self) -> Point {
        *self.waypoints.last().expect("plan has waypoints")
    }
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutcome {
    Found(Arc<MotionPlan>),
    Infeasible,
    Timeout,
}

impl PlanOutcome {
    pub fn plan(&self) -> Option<&Arc<MotionPlan>> {
        match self {
            PlanOutcome::Found(p) => Some(p),
            _ => None,
        }
    }

    pub fn length(&self) -> Option<f64> {
        self.plan().map(|p| p.length)
    }
}

/// Canonical name of a free space: the set of robot types whose obstacles apply.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpaceSignature(Vec<String>);

impl SpaceSignature {
    pub fn single(type_id: &str) -> Self {
        Self(vec![type_id.to_string()])
    }

    pub fn from_types<'a>(types: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<&str> = types.into_iter().collect();
        Self(set.into_iter().map(str::to_string).collect())
    }

    pub fn types(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for SpaceSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("+"))
    }
}

/// Signature of a coalition's shared free space.
///
/// Panics on an empty coalition.
pub fn coalition_signature(members: &[&Robot]) -> SpaceSignature {
    assert!(!members.is_empty(), "coalition must have at least one member");
    SpaceSignature::from_types(members.iter().map(|r| r.type_id.as_str()))
}

/// A free space identified by its signature: intersection of the member
/// spaces' bounds, union of their obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeSpace {
    pub signature: SpaceSignature,
    pub space: ConfigurationSpace,
}

impl FreeSpace {
    pub fn new(signature: SpaceSignature, space: ConfigurationSpace) -> Self {
        Self { signature, space }
    }

    /// Combines the member spaces named by `signature`.
    ///
    /// Returns `None` if a member type has no space.
    pub fn compose(
        spaces: &std::collections::BTreeMap<String, ConfigurationSpace>,
        signature: &SpaceSignature,
    ) -> Option<Self> {
        let mut bounds: Option<Bounds> = None;
        let mut obstacles: Vec<Polygon> = Vec::new();
        for t in signature.types() {
            let s = spaces.get(t)?;
            bounds = Some(match bounds {
                None => s.bounds,
                Some(b) => b.intersection(&s.bounds),
            });
            for o in &s.obstacles {
                if !obstacles.contains(o) {
                    obstacles.push(o.clone());
                }
            }
        }
        Some(Self::new(
            signature.clone(),
            ConfigurationSpace::new(bounds?, obstacles),
        ))
    }

    pub fn is_free(&self, p: &Point) -> bool {
        self.space.is_free(p)
    }

    pub fn segment_free(&self, a: &Point, b: &Point) -> bool {
        self.space.segment_free(a, b)
    }

    /// True when every segment of the plan is collision-free here.
    pub fn admits(&self, plan: &MotionPlan) -> bool {
        plan.waypoints.windows(2).all(|w| self.segment_free(&w[0], &w[1]))
    }
}

/// A single planning request.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionQuery {
    pub start: Point,
    pub goal: Point,
    pub signature: SpaceSignature,
}

/// Point-to-point planner over a free space.
pub trait Planner: Send + Sync {
    fn plan(&self, start: Point, goal: Point, space: &FreeSpace) -> PlanOutcome;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PlannerChoice {
    #[default]
    Grid,
    Prm,
}

/// Planner selection and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub kind: PlannerChoice,
    /// Grid cell size; `None` uses 1/100 of the workspace diagonal.
    pub grid_resolution: Option<f64>,
    pub prm_samples: usize,
    /// Connection radius as a fraction of the workspace diagonal.
    pub prm_radius_fraction: f64,
    pub timeout_seconds: f64,
    pub seed: u64,
    pub caching: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            kind: PlannerChoice::Grid,
            grid_resolution: None,
            prm_samples: 500,
            prm_radius_fraction: 0.2,
            timeout_seconds: 5.0,
            seed: 0,
            caching: true,
        }
    }
}

impl PlannerConfig {
    pub fn build(&self, domain: &ProblemDomain) -> Box<dyn Planner> {
        let diagonal = domain.workspace_bounds().map_or(1.0, |b| b.diagonal());
        match self.kind {
            PlannerChoice::Grid => {
                Box::new(GridPlanner::new(self.grid_resolution.unwrap_or(diagonal / 100.0)))
            }
            PlannerChoice::Prm => Box::new(LazyPrmPlanner {
                samples: self.prm_samples,
                radius: self.prm_radius_fraction * diagonal,
                seed: self.seed,
                timeout: std::time::Duration::from_secs_f64(self.timeout_seconds.max(0.0)),
            }),
        }
    }
}

/// Domain-aware front end: resolves robot and coalition spaces, memoizes
/// outcomes and counts planner invocations.
pub struct MotionLayer {
    spaces: std::collections::BTreeMap<String, ConfigurationSpace>,
    robot_types: Vec<String>,
    robot_speeds: Vec<f64>,
    planner: Box<dyn Planner>,
    cache: Option<PlanCache>,
    free_spaces: Mutex<HashMap<SpaceSignature, Arc<FreeSpace>>>,
    invocations: AtomicU64,
}

impl MotionLayer {
    pub fn new(domain: &ProblemDomain, planner: Box<dyn Planner>, caching: bool) -> Self {
        Self {
            spaces: domain.spaces.clone(),
            robot_types: domain.robots.iter().map(|r| r.type_id.clone()).collect(),
            robot_speeds: domain.robots.iter().map(|r| r.speed).collect(),
            planner,
            cache: caching.then(PlanCache::new),
            free_spaces: Mutex::new(HashMap::new()),
            invocations: AtomicU64::new(0),
        }
    }

    pub fn from_config(domain: &ProblemDomain, config: &PlannerConfig) -> Self {
        Self::new(domain, config.build(domain), config.caching)
    }

    pub fn free_space(&self, signature: &SpaceSignature) -> Option<Arc<FreeSpace>> {
        let mut spaces = self.free_spaces.lock().unwrap();
        if let Some(s) = spaces.get(signature) {
            return Some(s.clone());
        }
        let s = Arc::new(FreeSpace::compose(&self.spaces, signature)?);
        spaces.insert(signature.clone(), s.clone());
        Some(s)
    }

    pub fn robot_signature(&self, robot: usize) -> SpaceSignature {
        SpaceSignature::single(&self.robot_types[robot])
    }

    pub fn coalition_signature(&self, robots: &[usize]) -> SpaceSignature {
        SpaceSignature::from_types(robots.iter().map(|&r| self.robot_types[r].as_str()))
    }

    /// Slowest member speed.
    pub fn coalition_speed(&self, robots: &[usize]) -> f64 {
        robots
            .iter()
            .map(|&r| self.robot_speeds[r])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn query(&self, query: &MotionQuery) -> PlanOutcome {
        let Some(space) = self.free_space(&query.signature) else {
            return PlanOutcome::Infeasible;
        };
        let invoke = || {
            self.invocations.fetch_add(1, Ordering::Relaxed);
            self.planner.plan(query.start, query.goal, &space)
        };
        match &self.cache {
            Some(cache) => cache.get_or_plan(query, invoke),
            None => invoke(),
        }
    }

    pub fn plan_for_robot(&self, robot: usize, start: Point, goal: Point) -> PlanOutcome {
        self.query(&MotionQuery {
            start,
            goal,
            signature: self.robot_signature(robot),
        })
    }

    pub fn plan_for_coalition(&self, robots: &[usize], start: Point, goal: Point) -> PlanOutcome {
        self.query(&MotionQuery {
            start,
            goal,
            signature: self.coalition_signature(robots),
        })
    }

    /// Number of times the underlying planner ran.
    pub fn planner_invocations(&self) -> u64 {
        self.invocations.load(Ordering::Relaxed)
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.as_ref().map_or(0, PlanCache::len)
    }
}
