//! Seeded emergency-response problem generator.
//!
//! A city map holds buildings (some tall enough to block aircraft) and
//! fenced zones that ground robots cannot enter. Survivors need rescuing
//! (then a medicine delivery), fires need extinguishing, damaged buildings
//! need rebuilding, and anyone stranded inside a fenced zone needs supplies
//! flown in. Every requirement vector is drawn from the traits of a real
//! sub-coalition, so each problem has a witness allocation, and the witness
//! is scheduled before the problem is returned.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    Allocation, Bounds, ConfigurationSpace, Point, Polygon, ProblemDomain, Robot, Task, TaskNetwork,
};
use crate::motion::{MotionLayer, PlannerConfig};
use crate::scheduler::{Scheduler, SchedulerConfig};
use crate::{Error, Result};

const BUILTIN_ARCHETYPES: &str = include_str!("../assets/archetypes.json");

const GROUND: &str = "ground";
const AERIAL: &str = "aerial";
const MAX_ATTEMPTS: usize = 25;
const PLACEMENT_TRIES: usize = 500;
const CLEARANCE: f64 = 1.5;
const FENCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    pub type_id: String,
    pub speed: [f64; 2],
    /// Trait name to sampling range; absent traits are zero.
    pub traits: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskKind {
    pub traits: Vec<String>,
    pub duration: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeTable {
    pub traits: Vec<String>,
    pub robots: Vec<Archetype>,
    pub tasks: BTreeMap<String, TaskKind>,
}

impl ArchetypeTable {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN_ARCHETYPES).expect("bundled archetype table parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        Ok(serde_path_to_error::deserialize(de)?)
    }

    fn validate(&self) -> Result<()> {
        if self.robots.is_empty() {
            return Err(Error::Config("archetype table has no robots".into()));
        }
        let known = |t: &String| self.traits.contains(t);
        for a in &self.robots {
            if a.type_id != GROUND && a.type_id != AERIAL {
                return Err(Error::Config(format!(
                    "archetype {} has type {}; expected {GROUND} or {AERIAL}",
                    a.name, a.type_id
                )));
            }
            if !(a.speed[0] > 0.0 && a.speed[0] <= a.speed[1]) {
                return Err(Error::Config(format!(
                    "archetype {} has a bad speed range",
                    a.name
                )));
            }
            if let Some(t) = a.traits.keys().find(|t| !known(t)) {
                return Err(Error::Config(format!(
                    "archetype {} uses unknown trait {t}",
                    a.name
                )));
            }
        }
        for kind in ["rescue", "deliver", "extinguish", "rebuild", "supply"] {
            let Some(k) = self.tasks.get(kind) else {
                return Err(Error::Config(format!("archetype table lacks task kind {kind}")));
            };
            if let Some(t) = k.traits.iter().find(|t| !known(t)) {
                return Err(Error::Config(format!("task kind {kind} uses unknown trait {t}")));
            }
            if !(k.duration[0] >= 0.0 && k.duration[0] <= k.duration[1]) {
                return Err(Error::Config(format!(
                    "task kind {kind} has a bad duration range"
                )));
            }
        }
        Ok(())
    }
}

impl Default for ArchetypeTable {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    pub robots_min: usize,
    pub robots_max: usize,
    pub tasks_min: usize,
    pub tasks_max: usize,
    pub width: f64,
    pub height: f64,
    pub obstacles_min: usize,
    pub obstacles_max: usize,
    pub obstacle_size_min: f64,
    pub obstacle_size_max: f64,
    /// Chance that a building also blocks aerial robots.
    pub tall_fraction: f64,
    /// Fenced zones reachable only from the air; each holds one task.
    pub enclosed_zones: usize,
    pub seed: u64,
    pub archetypes: ArchetypeTable,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            robots_min: 4,
            robots_max: 6,
            tasks_min: 6,
            tasks_max: 12,
            width: 100.0,
            height: 100.0,
            obstacles_min: 3,
            obstacles_max: 6,
            obstacle_size_min: 5.0,
            obstacle_size_max: 15.0,
            tall_fraction: 0.3,
            enclosed_zones: 1,
            seed: 0,
            archetypes: ArchetypeTable::builtin(),
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.robots_min == 0 || self.robots_min > self.robots_max {
            return bad("robot range must be positive with min <= max");
        }
        if self.tasks_min == 0 || self.tasks_min > self.tasks_max {
            return bad("task range must be positive with min <= max");
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return bad("map dimensions must be positive");
        }
        if self.obstacles_min > self.obstacles_max {
            return bad("obstacle count range must have min <= max");
        }
        if !(self.obstacle_size_min > 0.0 && self.obstacle_size_min <= self.obstacle_size_max) {
            return bad("obstacle size range must be positive with min <= max");
        }
        if !(0.0..=1.0).contains(&self.tall_fraction) {
            return bad("tall fraction must lie in [0, 1]");
        }
        self.archetypes.validate()
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Rounds down so a scaled witness sum stays satisfiable.
fn floor2(v: f64) -> f64 {
    (v * 100.0).floor() / 100.0
}

fn sample(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] >= range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..=range[1])
    }
}

fn overlaps(a: &Bounds, b: &Bounds, gap: f64) -> bool {
    a.x_min - gap < b.x_max && b.x_min - gap < a.x_max && a.y_min - gap < b.y_max && b.y_min - gap < a.y_max
}

struct Map {
    bounds: Bounds,
    buildings: Vec<(Polygon, bool)>,
    zones: Vec<Bounds>,
}

impl Map {
    fn fences(&self) -> Vec<Polygon> {
        let mut out = Vec::new();
        for z in &self.zones {
            out.push(Polygon::rectangle(z.x_min, z.y_min, z.x_max, z.y_min + FENCE));
            out.push(Polygon::rectangle(z.x_min, z.y_max - FENCE, z.x_max, z.y_max));
            out.push(Polygon::rectangle(z.x_min, z.y_min, z.x_min + FENCE, z.y_max));
            out.push(Polygon::rectangle(z.x_max - FENCE, z.y_min, z.x_max, z.y_max));
        }
        out
    }

    fn spaces(&self) -> BTreeMap<String, ConfigurationSpace> {
        let mut ground: Vec<Polygon> = self.buildings.iter().map(|(p, _)| p.clone()).collect();
        ground.extend(self.fences());
        let aerial = self
            .buildings
            .iter()
            .filter(|(_, tall)| *tall)
            .map(|(p, _)| p.clone())
            .collect();
        BTreeMap::from([
            (GROUND.to_string(), ConfigurationSpace::new(self.bounds, ground)),
            (AERIAL.to_string(), ConfigurationSpace::new(self.bounds, aerial)),
        ])
    }

    /// Free point with clearance from every building and fenced zone.
    fn place(&self, rng: &mut ChaCha8Rng) -> Option<Point> {
        let margin = CLEARANCE + 0.5;
        for _ in 0..PLACEMENT_TRIES {
            let p = Point::new(
                round2(rng.gen_range(self.bounds.x_min + margin..=self.bounds.x_max - margin)),
                round2(rng.gen_range(self.bounds.y_min + margin..=self.bounds.y_max - margin)),
            );
            let around = Bounds::new(p.x, p.y, p.x, p.y);
            let blocked = self
                .buildings
                .iter()
                .any(|(b, _)| overlaps(&b.bounding_box(), &around, CLEARANCE))
                || self.zones.iter().any(|z| overlaps(z, &around, CLEARANCE));
            if !blocked {
                return Some(p);
            }
        }
        None
    }
}

fn build_map(params: &GeneratorParams, rng: &mut ChaCha8Rng) -> Option<Map> {
    let bounds = Bounds::new(0.0, 0.0, params.width, params.height);
    let mut taken: Vec<Bounds> = Vec::new();
    let mut zones = Vec::new();
    let side_max = (params.width.min(params.height) / 4.0).max(4.0 * FENCE + 2.0);
    let side_range = [(side_max * 0.6).max(4.0 * FENCE + 2.0), side_max];
    for _ in 0..params.enclosed_zones {
        let placed = (0..PLACEMENT_TRIES).find_map(|_| {
            let side = round2(sample(rng, side_range));
            let x = round2(rng.gen_range(1.0..=(params.width - side - 1.0).max(1.0)));
            let y = round2(rng.gen_range(1.0..=(params.height - side - 1.0).max(1.0)));
            let z = Bounds::new(x, y, x + side, y + side);
            (bounds.contains(&Point::new(z.x_max, z.y_max)) && !taken.iter().any(|t| overlaps(t, &z, 3.0)))
                .then_some(z)
        })?;
        taken.push(placed);
        zones.push(placed);
    }
    let count = rng.gen_range(params.obstacles_min..=params.obstacles_max);
    let mut buildings = Vec::new();
    for _ in 0..count {
        let placed = (0..PLACEMENT_TRIES).find_map(|_| {
            let w = round2(sample(rng, [params.obstacle_size_min, params.obstacle_size_max]));
            let h = round2(sample(rng, [params.obstacle_size_min, params.obstacle_size_max]));
            if w + 2.0 >= params.width || h + 2.0 >= params.height {
                return None;
            }
            let x = round2(rng.gen_range(1.0..=params.width - w - 1.0));
            let y = round2(rng.gen_range(1.0..=params.height - h - 1.0));
            let b = Bounds::new(x, y, x + w, y + h);
            (!taken.iter().any(|t| overlaps(t, &b, 3.0))).then_some(b)
        })?;
        taken.push(placed);
        let tall = rng.gen_bool(params.tall_fraction);
        buildings.push((
            Polygon::rectangle(placed.x_min, placed.y_min, placed.x_max, placed.y_max),
            tall,
        ));
    }
    Some(Map {
        bounds,
        buildings,
        zones,
    })
}

struct Draft {
    robots: Vec<Robot>,
    tasks: Vec<Task>,
    precedence: Vec<(usize, usize)>,
    witness: Vec<Vec<usize>>,
}

fn make_robots(params: &GeneratorParams, map: &Map, rng: &mut ChaCha8Rng) -> Option<Vec<Robot>> {
    let table = &params.archetypes;
    let n = rng.gen_range(params.robots_min..=params.robots_max);
    // One of each archetype first so every trait is represented.
    let mut kinds: Vec<usize> = (0..table.robots.len()).collect();
    kinds.shuffle(rng);
    kinds.truncate(n);
    while kinds.len() < n {
        kinds.push(rng.gen_range(0..table.robots.len()));
    }
    kinds.shuffle(rng);
    kinds
        .into_iter()
        .map(|k| {
            let a = &table.robots[k];
            let traits = table
                .traits
                .iter()
                .map(|t| a.traits.get(t).map_or(0.0, |&r| round2(sample(rng, r))))
                .collect();
            Some(Robot {
                type_id: a.type_id.clone(),
                speed: round2(sample(rng, a.speed)),
                traits,
                initial_config: map.place(rng)?,
            })
        })
        .collect()
}

/// Requirement vector drawn from a random eligible sub-coalition of one or
/// two robots, scaled down; also returns that sub-coalition.
fn requirements(
    table: &ArchetypeTable,
    kind: &TaskKind,
    robots: &[Robot],
    aerial_only: bool,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<f64>, Vec<usize>)> {
    let relevant: Vec<usize> = kind
        .traits
        .iter()
        .map(|t| table.traits.iter().position(|x| x == t).expect("validated trait"))
        .collect();
    let eligible: Vec<usize> = (0..robots.len())
        .filter(|&r| !aerial_only || robots[r].type_id == AERIAL)
        .filter(|&r| relevant.iter().any(|&u| robots[r].traits[u] > 0.0))
        .collect();
    if eligible.is_empty() {
        return None;
    }
    let size = rng.gen_range(1..=eligible.len().min(2));
    let mut members: Vec<usize> = eligible.choose_multiple(rng, size).copied().collect();
    members.sort_unstable();
    let scale = rng.gen_range(0.6..=1.0);
    let mut req = vec![0.0; table.traits.len()];
    for &u in &relevant {
        let total: f64 = members.iter().map(|&r| robots[r].traits[u]).sum();
        req[u] = floor2(total * scale);
    }
    if req.iter().all(|&v| v <= 0.0) {
        return None;
    }
    Some((req, members))
}

fn draft(params: &GeneratorParams, map: &Map, rng: &mut ChaCha8Rng) -> Option<Draft> {
    let table = &params.archetypes;
    let robots = make_robots(params, map, rng)?;
    let total = rng.gen_range(params.tasks_min..=params.tasks_max);
    let has_aerial = robots.iter().any(|r| r.type_id == AERIAL);
    let zone_tasks = if has_aerial { map.zones.len().min(total) } else { 0 };

    let mut d = Draft {
        robots,
        tasks: Vec::new(),
        precedence: Vec::new(),
        witness: Vec::new(),
    };
    let add = |d: &mut Draft, name: &str, from: Point, to: Point, aerial_only: bool, rng: &mut ChaCha8Rng| {
        let kind = &table.tasks[name];
        let (req, members) = requirements(table, kind, &d.robots, aerial_only, rng)?;
        d.tasks.push(Task {
            requirements: req,
            duration: round2(sample(rng, kind.duration)),
            initial_config: from,
            terminal_config: to,
        });
        d.witness.push(members);
        Some(d.tasks.len() - 1)
    };

    for z in map.zones.iter().take(zone_tasks) {
        let centre = Point::new(
            round2((z.x_min + z.x_max) / 2.0),
            round2((z.y_min + z.y_max) / 2.0),
        );
        add(&mut d, "supply", centre, centre, true, rng)?;
    }
    let hospital = map.place(rng)?;
    while d.tasks.len() < total {
        let remaining = total - d.tasks.len();
        match rng.gen_range(0..3) {
            0 if remaining >= 2 => {
                let site = map.place(rng)?;
                let rescue = add(&mut d, "rescue", site, hospital, false, rng)?;
                let deliver = add(&mut d, "deliver", hospital, site, false, rng)?;
                d.precedence.push((rescue, deliver));
            }
            1 => {
                let at = map.place(rng)?;
                add(&mut d, "extinguish", at, at, false, rng)?;
            }
            _ => {
                let at = map.place(rng)?;
                add(&mut d, "rebuild", at, at, false, rng)?;
            }
        }
    }
    Some(d)
}

fn witness_is_schedulable(domain: &ProblemDomain, witness: &[Vec<usize>]) -> bool {
    let mut a = Allocation::empty(domain.num_tasks(), domain.num_robots());
    for (m, members) in witness.iter().enumerate() {
        for &n in members {
            a.set(m, n, true);
        }
    }
    let motion = MotionLayer::from_config(domain, &PlannerConfig::default());
    Scheduler::new(domain, &motion, SchedulerConfig::default())
        .schedule(&a)
        .is_feasible()
}

/// Deterministic problem for `params`; identical parameters give an
/// identical domain.
pub fn generate_problem(params: &GeneratorParams) -> Result<ProblemDomain> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for attempt in 0..MAX_ATTEMPTS {
        let Some(map) = build_map(params, &mut rng) else {
            log::debug!("attempt {attempt}: map placement failed");
            continue;
        };
        let Some(d) = draft(params, &map, &mut rng) else {
            log::debug!("attempt {attempt}: entity placement failed");
            continue;
        };
        let domain = ProblemDomain::new(
            params.archetypes.traits.clone(),
            d.robots,
            TaskNetwork::new(d.tasks, d.precedence),
            map.spaces(),
        )?;
        if witness_is_schedulable(&domain, &d.witness) {
            return Ok(domain);
        }
        log::debug!("attempt {attempt}: witness allocation could not be scheduled");
    }
    Err(Error::Generation(format!(
        "no admissible problem after {MAX_ATTEMPTS} attempts (seed {})",
        params.seed
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{problem_to_json, validate_domain};

    #[test]
    fn same_seed_same_problem() {
        let p = GeneratorParams {
            seed: 11,
            ..GeneratorParams::default()
        };
        let a = problem_to_json(&generate_problem(&p).unwrap());
        let b = problem_to_json(&generate_problem(&p).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_robot_count() {
        let p = GeneratorParams {
            robots_min: 6,
            robots_max: 6,
            seed: 3,
            ..GeneratorParams::default()
        };
        assert_eq!(generate_problem(&p).unwrap().num_robots(), 6);
    }

    #[test]
    fn sizes_within_ranges_and_valid() {
        for seed in 0..10 {
            let p = GeneratorParams {
                seed,
                ..GeneratorParams::default()
            };
            let d = generate_problem(&p).unwrap();
            assert!((4..=6).contains(&d.num_robots()));
            assert!((6..=12).contains(&d.num_tasks()));
            assert!(validate_domain(&d).is_empty());
        }
    }

    #[test]
    fn zone_task_is_walled_off_from_ground() {
        let p = GeneratorParams {
            seed: 5,
            ..GeneratorParams::default()
        };
        let d = generate_problem(&p).unwrap();
        let ground = &d.spaces[GROUND];
        let aerial = &d.spaces[AERIAL];
        let inside = d.tasks()[0].initial_config;
        let outside = d.robots[0].initial_config;
        assert!(!ground.segment_free(&inside, &Point::new(inside.x, 0.0)));
        assert!(aerial.obstacles.len() < ground.obstacles.len());
        assert!(ground.is_free(&outside));
    }

    #[test]
    fn rejects_inverted_ranges() {
        let p = GeneratorParams {
            tasks_min: 5,
            tasks_max: 2,
            ..GeneratorParams::default()
        };
        assert!(matches!(generate_problem(&p), Err(Error::Config(_))));
    }
}
