//! Deterministic 8-connected lattice planner.
//!
//! Lattice nodes sit at `(x_min + i·res, y_min + j·res)`. A node is usable
//! when it lies in free space; a step is usable when the segment between
//! its nodes is collision-free. Start and goal connect to the nearest usable
//! corner of the lattice cell that contains them.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex};

use super::{FreeSpace, MotionPlan, PlanOutcome, Planner, SpaceSignature};
use crate::domain::{ConfigurationSpace, Point};

const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
];

/// Lattice over one free space with precomputed step validity.
#[derive(Debug)]
struct Lattice {
    x0: f64,
    y0: f64,
    res: f64,
    nx: usize,
    ny: usize,
    free: Vec<bool>,
    /// Bit `d` set when the step in direction `DIRS[d]` is usable.
    steps: Vec<u8>,
    /// Connected-component label per node; lets disconnected queries fail fast.
    component: Vec<u32>,
}

impl Lattice {
    fn build(space: &ConfigurationSpace, res: f64) -> Self {
        let b = space.bounds;
        let nx = (b.width() / res + 1e-9).floor() as usize + 1;
        let ny = (b.height() / res + 1e-9).floor() as usize + 1;
        let mut lattice = Lattice {
            x0: b.x_min,
            y0: b.y_min,
            res,
            nx,
            ny,
            free: vec![false; nx * ny],
            steps: vec![0; nx * ny],
            component: vec![u32::MAX; nx * ny],
        };
        for j in 0..ny {
            for i in 0..nx {
                let p = lattice.point(i, j);
                lattice.free[j * nx + i] = space.is_free(&p);
            }
        }
        // Steps are symmetric; check the four forward directions and mirror.
        for j in 0..ny {
            for i in 0..nx {
                let idx = j * nx + i;
                if !lattice.free[idx] {
                    continue;
                }
                for d in [0usize, 1, 4, 5] {
                    let Some(nb) = lattice.neighbour(i, j, d) else {
                        continue;
                    };
                    if !lattice.free[nb] {
                        continue;
                    }
                    let a = lattice.point(i, j);
                    let bp = lattice.point(nb % nx, nb / nx);
                    if !space.obstacles.iter().any(|o| o.intersects_segment(&a, &bp)) {
                        lattice.steps[idx] |= 1 << d;
                        lattice.steps[nb] |= 1 << ((d + 2) % 4 + if d >= 4 { 4 } else { 0 });
                    }
                }
            }
        }
        lattice.label_components();
        lattice
    }

    fn label_components(&mut self) {
        let mut next = 0;
        let mut stack = Vec::new();
        for root in 0..self.free.len() {
            if !self.free[root] || self.component[root] != u32::MAX {
                continue;
            }
            self.component[root] = next;
            stack.push(root);
            while let Some(node) = stack.pop() {
                let (i, j) = (node % self.nx, node / self.nx);
                for d in 0..8 {
                    if self.steps[node] & (1 << d) == 0 {
                        continue;
                    }
                    let nb = self.neighbour(i, j, d).expect("usable step stays on the lattice");
                    if self.component[nb] == u32::MAX {
                        self.component[nb] = next;
                        stack.push(nb);
                    }
                }
            }
            next += 1;
        }
    }

    fn point(&self, i: usize, j: usize) -> Point {
        Point::new(self.x0 + i as f64 * self.res, self.y0 + j as f64 * self.res)
    }

    fn node_point(&self, idx: usize) -> Point {
        self.point(idx % self.nx, idx / self.nx)
    }

    fn neighbour(&self, i: usize, j: usize, d: usize) -> Option<usize> {
        let (dx, dy) = DIRS[d];
        let ni = i as i64 + dx;
        let nj = j as i64 + dy;
        if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
            return None;
        }
        Some(nj as usize * self.nx + ni as usize)
    }

    /// Nearest usable corner of the cell containing `p`, ties by node index.
    fn snap(&self, p: &Point, space: &ConfigurationSpace) -> Option<usize> {
        let cell = |v: f64, origin: f64, n: usize| -> usize {
            let c = ((v - origin) / self.res).floor();
            (c.max(0.0) as usize).min(n.saturating_sub(2))
        };
        let i0 = cell(p.x, self.x0, self.nx);
        let j0 = cell(p.y, self.y0, self.ny);
        let mut corners: Vec<(f64, usize)> = [(0, 0), (1, 0), (0, 1), (1, 1)]
            .iter()
            .filter_map(|&(di, dj)| {
                let (i, j) = (i0 + di, j0 + dj);
                (i < self.nx && j < self.ny).then(|| {
                    let idx = j * self.nx + i;
                    (p.distance(&self.point(i, j)), idx)
                })
            })
            .collect();
        corners.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        corners
            .into_iter()
            .map(|(_, idx)| idx)
            .find(|&idx| self.free[idx] && space.segment_free(p, &self.node_point(idx)))
    }
}

/// Lattice path cost in (axis steps, diagonal steps).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct StepCount {
    straight: u32,
    diagonal: u32,
}

impl StepCount {
    fn value(&self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    f: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Where a query attaches to the lattice; exposed for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSnap {
    pub start_node: Point,
    pub goal_node: Point,
}

type CachedLattice = (ConfigurationSpace, Arc<Lattice>);

/// 8-connected lattice planner with octile-heuristic A*.
pub struct GridPlanner {
    resolution: f64,
    lattices: Mutex<HashMap<SpaceSignature, Vec<CachedLattice>>>,
}

impl GridPlanner {
    pub fn new(resolution: f64) -> Self {
        assert!(resolution > 0.0, "grid resolution must be positive");
        Self {
            resolution,
            lattices: Mutex::new(HashMap::new()),
        }
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    fn lattice(&self, space: &FreeSpace) -> Arc<Lattice> {
        let mut map = self.lattices.lock().unwrap();
        let entries = map.entry(space.signature.clone()).or_default();
        if let Some((_, l)) = entries.iter().find(|(s, _)| *s == space.space) {
            return l.clone();
        }
        let l = Arc::new(Lattice::build(&space.space, self.resolution));
        entries.push((space.space.clone(), l.clone()));
        l
    }

    /// Lattice nodes the query would attach to, if any.
    pub fn snap(&self, start: Point, goal: Point, space: &FreeSpace) -> Option<GridSnap> {
        let lattice = self.lattice(space);
        let s = lattice.snap(&start, &space.space)?;
        let g = lattice.snap(&goal, &space.space)?;
        Some(GridSnap {
            start_node: lattice.node_point(s),
            goal_node: lattice.node_point(g),
        })
    }
}

fn octile(lattice: &Lattice, a: usize, b: usize) -> f64 {
    let dx = (a % lattice.nx).abs_diff(b % lattice.nx);
    let dy = (a / lattice.nx).abs_diff(b / lattice.nx);
    let (lo, hi) = (dx.min(dy), dx.max(dy));
    StepCount {
        straight: (hi - lo) as u32,
        diagonal: lo as u32,
    }
    .value()
}

fn astar(lattice: &Lattice, source: usize, target: usize) -> Option<(StepCount, Vec<usize>)> {
    let n = lattice.free.len();
    let mut cost: Vec<Option<StepCount>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    cost[source] = Some(StepCount::default());
    open.push(Frontier {
        f: octile(lattice, source, target),
        node: source,
    });
    while let Some(Frontier { node, .. }) = open.pop() {
        if closed[node] {
            continue;
        }
        closed[node] = true;
        let g = cost[node].expect("queued nodes have a cost");
        if node == target {
            let mut path = vec![node];
            let mut cur = node;
            while cur != source {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Some((g, path));
        }
        let (i, j) = (node % lattice.nx, node / lattice.nx);
        for d in 0..8 {
            if lattice.steps[node] & (1 << d) == 0 {
                continue;
            }
            let nb = lattice
                .neighbour(i, j, d)
                .expect("usable step stays on the lattice");
            if closed[nb] {
                continue;
            }
            let mut next = g;
            if d < 4 {
                next.straight += 1;
            } else {
                next.diagonal += 1;
            }
            if cost[nb].is_none_or(|c| next.value() < c.value()) {
                cost[nb] = Some(next);
                parent[nb] = node;
                open.push(Frontier {
                    f: next.value() + octile(lattice, nb, target),
                    node: nb,
                });
            }
        }
    }
    None
}

/// Drops repeated points and merges collinear runs of lattice steps.
fn compress(points: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() == Some(&p) {
            continue;
        }
        if out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            let cross = (b.x - a.x) * (p.y - b.y) - (b.y - a.y) * (p.x - b.x);
            let dot = (b.x - a.x) * (p.x - b.x) + (b.y - a.y) * (p.y - b.y);
            let scale = a.distance(&b) * b.distance(&p);
            if cross.abs() <= 1e-12 * scale.max(1.0) && dot > 0.0 {
                out.pop();
            }
        }
        out.push(p);
    }
    if out.len() == 1 {
        out.push(out[0]);
    }
    out
}

impl Planner for GridPlanner {
    fn plan(&self, start: Point, goal: Point, space: &FreeSpace) -> PlanOutcome {
        if !space.is_free(&start) || !space.is_free(&goal) {
            return PlanOutcome::Infeasible;
        }
        if start == goal {
            return PlanOutcome::Found(Arc::new(MotionPlan {
                waypoints: vec![start, goal],
                length: 0.0,
            }));
        }
        let lattice = self.lattice(space);
        let (Some(s), Some(g)) = (
            lattice.snap(&start, &space.space),
            lattice.snap(&goal, &space.space),
        ) else {
            return PlanOutcome::Infeasible;
        };
        if lattice.component[s] != lattice.component[g] {
            return PlanOutcome::Infeasible;
        }
        let Some((steps, path)) = astar(&lattice, s, g) else {
            return PlanOutcome::Infeasible;
        };
        let first = lattice.node_point(s);
        let last = lattice.node_point(g);
        let length = start.distance(&first) + steps.value() * lattice.res + last.distance(&goal);
        let mut points = Vec::with_capacity(path.len() + 2);
        points.push(start);
        points.extend(path.iter().map(|&idx| lattice.node_point(idx)));
        points.push(goal);
        PlanOutcome::Found(Arc::new(MotionPlan {
            waypoints: compress(points),
            length,
        }))
    }
}
