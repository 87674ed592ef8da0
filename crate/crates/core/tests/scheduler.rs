mod common;

use common::{domain, longest_path_makespan, p, robot, task, with_obstacles};
use itags_core::motion::PlanOutcome;
use itags_core::replay::validate_solution;
use itags_core::scheduler::{
    check_consistency, solve, time_points, Infeasibility, OrderingProblem, Scheduler, Stn,
};
use itags_core::{Allocation, MotionLayer, PlannerConfig, Polygon, ProblemDomain, Solution};
use proptest::prelude::*;

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

/// Minimum makespan over every combination of per-robot task orders, with
/// travel times taken from the same motion layer.
fn brute_force_makespan(domain: &ProblemDomain, motion: &MotionLayer, a: &Allocation) -> f64 {
    let tasks = domain.tasks();
    let travel = |r: usize, from: Option<usize>, to: usize| -> f64 {
        let start = from.map_or(domain.robots[r].initial_config, |f| tasks[f].terminal_config);
        match motion.plan_for_robot(r, start, tasks[to].initial_config) {
            PlanOutcome::Found(plan) => plan.length / domain.robots[r].speed,
            _ => f64::INFINITY,
        }
    };
    let orders: Vec<Vec<Vec<usize>>> = (0..domain.num_robots())
        .map(|r| permutations(&a.tasks_of(r)))
        .collect();
    let mut best = f64::INFINITY;
    let mut pick = vec![0; orders.len()];
    loop {
        let mut gaps: Vec<(usize, usize, f64)> = domain
            .network
            .precedence
            .iter()
            .map(|&(x, y)| (x, y, 0.0))
            .collect();
        let mut release = vec![0.0; tasks.len()];
        for (r, choice) in pick.iter().enumerate() {
            let seq = &orders[r][*choice];
            if let Some(&first) = seq.first() {
                release[first] = f64::max(release[first], travel(r, None, first));
            }
            for w in seq.windows(2) {
                gaps.push((w[0], w[1], travel(r, Some(w[0]), w[1])));
            }
        }
        let durations: Vec<f64> = tasks.iter().map(|t| t.duration).collect();
        if let Some(c) = longest_path_makespan(&durations, &gaps, &release) {
            best = best.min(c);
        }
        let mut r = 0;
        loop {
            if r == pick.len() {
                return best;
            }
            pick[r] += 1;
            if pick[r] < orders[r].len() {
                break;
            }
            pick[r] = 0;
            r += 1;
        }
    }
}

fn instance() -> impl Strategy<Value = (ProblemDomain, Allocation)> {
    (1usize..=4, 1usize..=2).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec((0.0..100.0f64, 0.0..100.0f64, 0.5..3.0f64), n),
            prop::collection::vec((0.0..100.0f64, 0.0..100.0f64, 0.0..30.0f64), m),
            prop::collection::vec(any::<bool>(), m * (m.saturating_sub(1)) / 2),
            prop::collection::vec(any::<bool>(), m * n),
        )
            .prop_map(move |(robots, tasks, edges, mut bits)| {
                bits[0] = true;
                let robots = robots
                    .into_iter()
                    .map(|(x, y, s)| robot(s, vec![1.0], p(x, y)))
                    .collect();
                // Each task asks for exactly the robots it gets, so APR is zero.
                let tasks = tasks
                    .into_iter()
                    .enumerate()
                    .map(|(t, (x, y, d))| {
                        let assigned = bits[t * n..(t + 1) * n].iter().filter(|&&b| b).count();
                        task(vec![assigned as f64], d, p(x, y))
                    })
                    .collect();
                let mut precedence = Vec::new();
                let mut k = 0;
                for i in 0..m {
                    for j in (i + 1)..m {
                        if edges[k] {
                            precedence.push((i, j));
                        }
                        k += 1;
                    }
                }
                let mut a = Allocation::empty(m, n);
                for t in 0..m {
                    for r in 0..n {
                        a.set(t, r, bits[t * n + r]);
                    }
                }
                (domain(robots, tasks, precedence), a)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedule_is_never_better_than_exhaustive_ordering((domain, a) in instance()) {
        let motion = MotionLayer::from_config(&domain, &PlannerConfig::default());
        let scheduler = Scheduler::new(&domain, &motion, Default::default());
        let bundle = scheduler.schedule(&a);
        let oracle = brute_force_makespan(&domain, &motion, &a);
        let problem = OrderingProblem::new(&a, &domain.network.closure(), scheduler.best().start.clone());
        match &bundle.s_bar {
            Ok(s) => {
                prop_assert!(s.makespan >= oracle - 1e-6, "{} beats {}", s.makespan, oracle);
                if problem.num_choices() <= 2 {
                    prop_assert!((s.makespan - oracle).abs() <= 1e-6, "{} vs {}", s.makespan, oracle);
                }
                prop_assert!(s.makespan + 1e-9 >= scheduler.best().makespan);
                let solution = Solution { allocation: a.clone(), plans: bundle.plans.clone(), schedule: s.clone() };
                let issues = validate_solution(&domain, &solution);
                prop_assert!(issues.is_empty(), "{:?}", issues);
            }
            Err(_) => prop_assert!(oracle.is_infinite()),
        }
    }

    #[test]
    fn earliest_times_match_longest_paths(
        durations in prop::collection::vec(0u8..10, 1..6),
        raw in prop::collection::vec((0usize..6, 0usize..6, 0u8..5), 0..10),
        release in prop::collection::vec(0u8..10, 6),
    ) {
        let m = durations.len();
        let durations: Vec<f64> = durations.iter().map(|&d| d as f64).collect();
        let gaps: Vec<(usize, usize, f64)> = raw
            .iter()
            .map(|&(a, b, g)| (a % m, b % m, g as f64))
            .filter(|&(a, b, _)| a < b)
            .collect();
        let release: Vec<f64> = release[..m].iter().map(|&r| r as f64).collect();
        let mut stn = Stn::new(durations.clone());
        for &(a, b, g) in &gaps {
            stn.add_precedence(a, b, g);
        }
        for (t, &r) in release.iter().enumerate() {
            stn.add_release(t, r);
        }
        let schedule = solve(&stn).expect("acyclic networks are consistent");
        let oracle = longest_path_makespan(&durations, &gaps, &release).unwrap();
        prop_assert_eq!(schedule.makespan, oracle);
        prop_assert!(stn.satisfied_by(&time_points(&schedule), 1e-9));
    }

    #[test]
    fn consistency_agrees_with_floyd_warshall(
        durations in prop::collection::vec(0u8..5, 1..4),
        raw in prop::collection::vec((0usize..9, 0usize..9, -10i8..10), 0..8),
    ) {
        let mut stn = Stn::new(durations.iter().map(|&d| d as f64).collect());
        let n = stn.num_points();
        for &(a, b, w) in &raw {
            stn.add_upper_bound(a % n, b % n, w as f64);
        }
        let mut dist = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in stn.constraints() {
            dist[e.from][e.to] = dist[e.from][e.to].min(e.weight);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = dist[i][k] + dist[k][j];
                    if via < dist[i][j] {
                        dist[i][j] = via;
                    }
                }
            }
        }
        let consistent = (0..n).all(|i| dist[i][i] >= 0.0);
        prop_assert_eq!(check_consistency(&stn), consistent);
        match solve(&stn) {
            Some(s) => {
                prop_assert!(consistent);
                prop_assert!(stn.satisfied_by(&time_points(&s), 1e-9));
            }
            None => prop_assert!(!consistent),
        }
    }
}

#[test]
fn shared_robot_serializes_tasks_with_travel() {
    // One robot at the origin, two tasks 10 units apart on a line.
    let d = domain(
        vec![robot(1.0, vec![1.0], p(0.0, 0.0))],
        vec![
            task(vec![1.0], 5.0, p(10.0, 0.0)),
            task(vec![1.0], 5.0, p(20.0, 0.0)),
        ],
        vec![],
    );
    let motion = MotionLayer::from_config(
        &d,
        &PlannerConfig {
            grid_resolution: Some(1.0),
            ..PlannerConfig::default()
        },
    );
    let a = Allocation::from_rows(&[vec![1], vec![1]]).unwrap();
    let bundle = Scheduler::new(&d, &motion, Default::default()).schedule(&a);
    let s = bundle.s_bar.unwrap();
    assert_eq!(s.start, vec![10.0, 25.0]);
    assert_eq!(s.makespan, 30.0);
    assert_eq!(bundle.sequences, vec![vec![0, 1]]);
}

#[test]
fn fenced_task_is_unreachable_for_ground_robots() {
    let fence = vec![
        Polygon::rectangle(40.0, 40.0, 60.0, 42.0),
        Polygon::rectangle(40.0, 58.0, 60.0, 60.0),
        Polygon::rectangle(40.0, 40.0, 42.0, 60.0),
        Polygon::rectangle(58.0, 40.0, 60.0, 60.0),
    ];
    let mut d = domain(
        vec![robot(1.0, vec![1.0], p(0.0, 0.0))],
        vec![task(vec![1.0], 1.0, p(50.0, 50.0))],
        vec![],
    );
    d.spaces
        .insert("ground".into(), with_obstacles(100.0, 100.0, fence));
    let motion = MotionLayer::from_config(&d, &PlannerConfig::default());
    let a = Allocation::from_rows(&[vec![1]]).unwrap();
    let bundle = Scheduler::new(&d, &motion, Default::default()).schedule(&a);
    assert_eq!(bundle.s_bar, Err(Infeasibility::MotionInfeasible));
    assert!(bundle.makespan().is_infinite());
}
