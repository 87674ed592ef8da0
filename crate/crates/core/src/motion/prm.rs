//! Lazy probabilistic roadmap: edges are collision-checked only when they lie
//! on a candidate shortest path.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FreeSpace, MotionPlan, PlanOutcome, Planner};
use crate::domain::Point;

#[derive(Debug, Clone)]
pub struct LazyPrmPlanner {
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
    pub timeout: Duration,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EdgeState {
    Unknown,
    Valid,
    Invalid,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-query seed so results do not depend on query order.
fn query_seed(seed: u64, start: &Point, goal: &Point) -> u64 {
    [start.x, start.y, goal.x, goal.y]
        .iter()
        .fold(mix(seed), |acc, v| mix(acc ^ v.to_bits()))
}

struct Roadmap {
    nodes: Vec<Point>,
    adjacency: Vec<Vec<(usize, usize)>>,
    edges: Vec<(usize, usize, f64, EdgeState)>,
}

impl Roadmap {
    fn build(nodes: Vec<Point>, radius: f64) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut edges = Vec::new();
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                let d = nodes[i].distance(&nodes[j]);
                if d <= radius {
                    let e = edges.len();
                    edges.push((i, j, d, EdgeState::Unknown));
                    adjacency[i].push((j, e));
                    adjacency[j].push((i, e));
                }
            }
        }
        Self {
            nodes,
            adjacency,
            edges,
        }
    }

    /// Shortest path (as edge ids) from node 0 to node 1 over non-invalid edges.
    fn shortest_path(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut via: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[0] = 0.0;
        heap.push(Entry { dist: 0.0, node: 0 });
        while let Some(Entry { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            if node == 1 {
                break;
            }
            for &(nb, e) in &self.adjacency[node] {
                let (_, _, w, state) = self.edges[e];
                if state == EdgeState::Invalid {
                    continue;
                }
                let nd = d + w;
                if nd < dist[nb] {
                    dist[nb] = nd;
                    via[nb] = Some((node, e));
                    heap.push(Entry { dist: nd, node: nb });
                }
            }
        }
        if dist[1] == f64::INFINITY {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = 1;
        while let Some((prev, e)) = via[cur] {
            path.push(e);
            cur = prev;
        }
        path.reverse();
        Some(path)
    }
}

impl Planner for LazyPrmPlanner {
    fn plan(&self, start: Point, goal: Point, space: &FreeSpace) -> PlanOutcome {
        let deadline = Instant::now() + self.timeout;
        if self.timeout.is_zero() {
            return PlanOutcome::Timeout;
        }
        if !space.is_free(&start) || !space.is_free(&goal) {
            return PlanOutcome::Infeasible;
        }
        if start == goal {
            return PlanOutcome::Found(Arc::new(MotionPlan {
                waypoints: vec![start, goal],
                length: 0.0,
            }));
        }
        let bounds = space.space.bounds;
        let mut rng = ChaCha8Rng::seed_from_u64(query_seed(self.seed, &start, &goal));
        let mut nodes = vec![start, goal];
        for _ in 0..self.samples {
            let p = Point::new(
                rng.gen_range(bounds.x_min..=bounds.x_max),
                rng.gen_range(bounds.y_min..=bounds.y_max),
            );
            if space.is_free(&p) {
                nodes.push(p);
            }
        }
        let mut roadmap = Roadmap::build(nodes, self.radius);
        loop {
            if Instant::now() >= deadline {
                return PlanOutcome::Timeout;
            }
            let Some(path) = roadmap.shortest_path() else {
                return PlanOutcome::Infeasible;
            };
            let mut all_valid = true;
            for &e in &path {
                let (a, b, _, state) = roadmap.edges[e];
                if state == EdgeState::Valid {
                    continue;
                }
                let ok = space.segment_free(&roadmap.nodes[a], &roadmap.nodes[b]);
                roadmap.edges[e].3 = if ok { EdgeState::Valid } else { EdgeState::Invalid };
                if !ok {
                    all_valid = false;
                    break;
                }
            }
            if all_valid {
                let mut waypoints = vec![start];
                let mut cur = 0;
                for &e in &path {
                    let (a, b, _, _) = roadmap.edges[e];
                    cur = if a == cur { b } else { a };
                    waypoints.push(roadmap.nodes[cur]);
                }
                return PlanOutcome::Found(Arc::new(MotionPlan::from_waypoints(waypoints)));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Bounds, ConfigurationSpace, Polygon};
    use crate::motion::SpaceSignature;

    fn space(obstacles: Vec<Polygon>) -> FreeSpace {
        FreeSpace::new(
            SpaceSignature::single("g"),
            ConfigurationSpace::new(Bounds::new(0.0, 0.0, 10.0, 10.0), obstacles),
        )
    }

    fn planner(seed: u64) -> LazyPrmPlanner {
        LazyPrmPlanner {
            samples: 500,
            radius: 0.2 * 200f64.sqrt(),
            seed,
            timeout: Duration::from_secs(5),
        }
    }

    #[test]
    fn open_space_is_near_straight() {
        let (s, g) = (Point::new(0.5, 0.5), Point::new(9.5, 9.5));
        let straight = s.distance(&g);
        for seed in 0..20 {
            let out = planner(seed).plan(s, g, &space(vec![]));
            let len = out.length().unwrap();
            assert!(len >= straight - 1e-9);
            assert!(len <= 1.1 * straight, "seed {seed}: {len} vs {straight}");
        }
    }

    #[test]
    fn disconnected_space_is_infeasible() {
        let wall = Polygon::rectangle(4.0, 0.0, 6.0, 10.0);
        let out = planner(1).plan(Point::new(1.0, 5.0), Point::new(9.0, 5.0), &space(vec![wall]));
        assert_eq!(out, PlanOutcome::Infeasible);
    }

    #[test]
    fn zero_timeout_times_out() {
        let mut p = planner(1);
        p.timeout = Duration::ZERO;
        let out = p.plan(Point::new(1.0, 5.0), Point::new(9.0, 5.0), &space(vec![]));
        assert_eq!(out, PlanOutcome::Timeout);
    }

    #[test]
    fn deterministic_and_collision_free() {
        let s = space(vec![Polygon::rectangle(3.0, 2.0, 7.0, 8.0)]);
        let a = planner(7).plan(Point::new(1.0, 5.0), Point::new(9.0, 5.0), &s);
        let b = planner(7).plan(Point::new(1.0, 5.0), Point::new(9.0, 5.0), &s);
        assert_eq!(a, b);
        assert!(s.admits(a.plan().unwrap()));
    }
}
