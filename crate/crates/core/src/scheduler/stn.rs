//! Simple temporal networks over task start/end time points.
//!
//! Time point 0 is the origin; task `m` owns start `1 + 2m` and end `2 + 2m`.
//! An edge `(u, v, w)` encodes the difference constraint `v - u <= w`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Start/end times per task and the resulting makespan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub makespan: f64,
}

impl Schedule {
    fn from_times(num_tasks: usize, times: &[f64]) -> Self {
        let start: Vec<f64> = (0..num_tasks).map(|m| times[Stn::start(m)]).collect();
        let end: Vec<f64> = (0..num_tasks).map(|m| times[Stn::end(m)]).collect();
        let makespan = end.iter().copied().fold(0.0, f64::max);
        Self { start, end, makespan }
    }
}

/// Distance-graph representation of an STN.
///
/// Task durations are kept separately so they can be extended without
/// touching the edge list; every start is also bounded below by the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Stn {
    durations: Vec<f64>,
    edges: Vec<Edge>,
}

impl Stn {
    pub const ORIGIN: usize = 0;

    pub fn new(durations: Vec<f64>) -> Self {
        Self {
            durations,
            edges: Vec::new(),
        }
    }

    #[inline]
    pub const fn start(task: usize) -> usize {
        1 + 2 * task
    }

    #[inline]
    pub const fn end(task: usize) -> usize {
        2 + 2 * task
    }

    pub fn num_tasks(&self) -> usize {
        self.durations.len()
    }

    pub fn num_points(&self) -> usize {
        1 + 2 * self.durations.len()
    }

    pub fn duration(&self, task: usize) -> f64 {
        self.durations[task]
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn set_duration(&mut self, task: usize, duration: f64) {
        self.durations[task] = duration;
    }

    /// `to - from <= bound`.
    pub fn add_upper_bound(&mut self, from: usize, to: usize, bound: f64) {
        self.edges.push(Edge {
            from,
            to,
            weight: bound,
        });
    }

    /// `to - from >= bound`.
    pub fn add_lower_bound(&mut self, from: usize, to: usize, bound: f64) {
        self.edges.push(Edge {
            from: to,
            to: from,
            weight: -bound,
        });
    }

    /// Task `before` ends at least `gap` before task `after` starts.
    pub fn add_precedence(&mut self, before: usize, after: usize, gap: f64) {
        self.add_lower_bound(Self::end(before), Self::start(after), gap);
    }

    /// Task starts no earlier than `delay` after the origin.
    pub fn add_release(&mut self, task: usize, delay: f64) {
        self.add_lower_bound(Self::ORIGIN, Self::start(task), delay);
    }

    /// Explicit edges only (no duration or non-negativity edges).
    pub fn extra_edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Every edge of the distance graph, including the implicit ones.
    pub fn constraints(&self) -> impl Iterator<Item = Edge> + '_ {
        let implicit = self.durations.iter().enumerate().flat_map(|(m, &d)| {
            let (s, e) = (Self::start(m), Self::end(m));
            [
                Edge {
                    from: s,
                    to: e,
                    weight: d,
                },
                Edge {
                    from: e,
                    to: s,
                    weight: -d,
                },
                Edge {
                    from: s,
                    to: Self::ORIGIN,
                    weight: 0.0,
                },
            ]
        });
        implicit.chain(self.edges.iter().copied())
    }

    /// True when `times` satisfies every constraint within `tol`.
    pub fn satisfied_by(&self, times: &[f64], tol: f64) -> bool {
        self.constraints()
            .all(|e| times[e.to] - times[e.from] <= e.weight + tol)
    }
}

fn relax_tolerance(weight_scale: f64) -> f64 {
    1e-9 * weight_scale.max(1.0)
}

/// Negative-cycle test: relaxation from a virtual source for |V| - 1 rounds
/// followed by a violation scan.
pub fn check_consistency(stn: &Stn) -> bool {
    let n = stn.num_points();
    let edges: Vec<Edge> = stn.constraints().collect();
    let scale = edges.iter().map(|e| e.weight.abs()).sum::<f64>();
    let tol = relax_tolerance(scale);
    let mut dist = vec![0.0f64; n];
    for _ in 0..n.saturating_sub(1) {
        let mut changed = false;
        for e in &edges {
            let candidate = dist[e.from] + e.weight;
            if candidate < dist[e.to] - tol {
                dist[e.to] = candidate;
                changed = true;
            }
        }
        if !changed {
            return true;
        }
    }
    !edges.iter().any(|e| dist[e.from] + e.weight < dist[e.to] - tol)
}

/// Earliest consistent assignment, or `None` if the network is inconsistent.
///
/// Each time point gets the negated shortest distance from it to the origin,
/// i.e. the longest chain of lower bounds leading to it.
pub fn solve(stn: &Stn) -> Option<Schedule> {
    let n = stn.num_points();
    let edges: Vec<Edge> = stn.constraints().collect();
    let scale = edges.iter().map(|e| e.weight.abs()).sum::<f64>();
    let tol = relax_tolerance(scale);
    // dist[x] = shortest x -> origin, relaxed along reversed edges.
    let mut dist = vec![f64::INFINITY; n];
    dist[Stn::ORIGIN] = 0.0;
    let mut rounds = 0;
    loop {
        let mut changed = false;
        for e in &edges {
            if dist[e.to] == f64::INFINITY {
                continue;
            }
            let candidate = dist[e.to] + e.weight;
            if candidate < dist[e.from] - tol {
                dist[e.from] = candidate;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        rounds += 1;
        if rounds >= n {
            return None;
        }
    }
    if dist[Stn::ORIGIN] < 0.0 {
        return None;
    }
    let times: Vec<f64> = dist
        .iter()
        .map(|d| if d.is_finite() { -d } else { 0.0 })
        .collect();
    Some(Schedule::from_times(stn.num_tasks(), &times))
}

/// Earliest schedule of a consistent STN.
///
/// Panics if the network is inconsistent; callers check first.
pub fn earliest_schedule(stn: &Stn) -> Schedule {
    solve(stn).expect("earliest_schedule called on an inconsistent STN")
}

/// Time-point vector for a schedule (origin at 0).
pub fn time_points(schedule: &Schedule) -> Vec<f64> {
    let mut times = vec![0.0; 1 + 2 * schedule.start.len()];
    for m in 0..schedule.start.len() {
        times[Stn::start(m)] = schedule.start[m];
        times[Stn::end(m)] = schedule.end[m];
    }
    times
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_only_network_is_consistent() {
        let stn = Stn::new(vec![3.0, 2.0, 0.0]);
        assert!(check_consistency(&stn));
        let s = earliest_schedule(&stn);
        assert_eq!(s.start, vec![0.0, 0.0, 0.0]);
        assert_eq!(s.makespan, 3.0);
    }

    #[test]
    fn contradictory_duration_is_inconsistent() {
        let mut stn = Stn::new(vec![3.0]);
        stn.add_upper_bound(Stn::start(0), Stn::end(0), 2.0);
        assert!(!check_consistency(&stn));
        assert!(solve(&stn).is_none());
    }

    #[test]
    fn chain_with_travel() {
        let mut stn = Stn::new(vec![3.0, 2.0]);
        stn.add_precedence(0, 1, 1.0);
        let s = earliest_schedule(&stn);
        assert_eq!(s.start, vec![0.0, 4.0]);
        assert_eq!(s.makespan, 6.0);
    }

    #[test]
    fn release_delays_start() {
        let mut stn = Stn::new(vec![4.0]);
        stn.add_release(0, 2.0);
        let s = earliest_schedule(&stn);
        assert_eq!(s.start, vec![2.0]);
        assert_eq!(s.makespan, 6.0);
    }

    #[test]
    fn parallel_releases_take_the_max() {
        let mut stn = Stn::new(vec![1.0, 1.0]);
        stn.add_release(0, 1.0);
        stn.add_release(1, 5.0);
        assert_eq!(earliest_schedule(&stn).makespan, 6.0);
    }

    #[test]
    fn positive_cycle_of_precedences_is_inconsistent() {
        let mut stn = Stn::new(vec![1.0, 1.0]);
        stn.add_precedence(0, 1, 0.0);
        stn.add_precedence(1, 0, 0.0);
        assert!(!check_consistency(&stn));
        assert!(solve(&stn).is_none());
    }

    #[test]
    fn deadline_on_origin_side() {
        let mut stn = Stn::new(vec![2.0]);
        stn.add_release(0, 1.0);
        stn.add_upper_bound(Stn::ORIGIN, Stn::end(0), 2.5);
        assert!(!check_consistency(&stn));
        assert!(solve(&stn).is_none());
    }
}
