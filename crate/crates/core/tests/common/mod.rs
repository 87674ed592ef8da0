//! Shared builders and independent oracles for integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use itags_core::{Bounds, ConfigurationSpace, Point, Polygon, ProblemDomain, Robot, Task, TaskNetwork};

pub fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

pub fn open(w: f64, h: f64) -> ConfigurationSpace {
    ConfigurationSpace::new(Bounds::new(0.0, 0.0, w, h), vec![])
}

pub fn with_obstacles(w: f64, h: f64, obstacles: Vec<Polygon>) -> ConfigurationSpace {
    ConfigurationSpace::new(Bounds::new(0.0, 0.0, w, h), obstacles)
}

pub fn robot(speed: f64, traits: Vec<f64>, at: Point) -> Robot {
    Robot {
        type_id: "ground".into(),
        speed,
        traits,
        initial_config: at,
    }
}

pub fn task(requirements: Vec<f64>, duration: f64, at: Point) -> Task {
    Task {
        requirements,
        duration,
        initial_config: at,
        terminal_config: at,
    }
}

pub fn domain(robots: Vec<Robot>, tasks: Vec<Task>, precedence: Vec<(usize, usize)>) -> ProblemDomain {
    let u = robots[0].traits.len();
    let spaces = BTreeMap::from([("ground".to_string(), open(100.0, 100.0))]);
    ProblemDomain::new(
        (0..u).map(|i| format!("t{i}")).collect(),
        robots,
        TaskNetwork::new(tasks, precedence),
        spaces,
    )
    .expect("test domain is valid")
}

/// Earliest-start longest path over a DAG of tasks.
///
/// `gaps` holds `(before, after, gap)`: `after` starts at least `gap` after
/// `before` ends. `release[m]` is the earliest start of task `m`.
pub fn longest_path_makespan(
    durations: &[f64],
    gaps: &[(usize, usize, f64)],
    release: &[f64],
) -> Option<f64> {
    let m = durations.len();
    let mut indeg = vec![0; m];
    for &(_, b, _) in gaps {
        indeg[b] += 1;
    }
    let mut start = release.to_vec();
    let mut ready: Vec<usize> = (0..m).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(t) = ready.pop() {
        seen += 1;
        for &(a, b, g) in gaps {
            if a == t {
                start[b] = start[b].max(start[a] + durations[a] + g);
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.push(b);
                }
            }
        }
    }
    (seen == m).then(|| (0..m).map(|i| start[i] + durations[i]).fold(0.0, f64::max))
}
