//! Deterministic fixtures shared by the benchmarks.

use itags_core::generator::{generate_problem, GeneratorParams};
use itags_core::scheduler::Stn;
use itags_core::{Allocation, ProblemDomain, TraitMatrix};

/// A generated emergency-response problem with a fixed task count.
pub fn problem(seed: u64, tasks: usize) -> ProblemDomain {
    generate_problem(&GeneratorParams {
        seed,
        tasks_min: tasks,
        tasks_max: tasks,
        ..GeneratorParams::default()
    })
    .expect("fixture parameters generate a problem")
}

/// Pseudo-random but reproducible (Q, Y, A) for heuristic timing.
pub fn trait_instance(tasks: usize, robots: usize, traits: usize) -> (TraitMatrix, TraitMatrix, Allocation) {
    let value = |i: usize| ((i * 7919 + 13) % 97) as f64 / 10.0;
    let mut q = TraitMatrix::zeros(robots, traits);
    let mut y = TraitMatrix::zeros(tasks, traits);
    let mut a = Allocation::empty(tasks, robots);
    for r in 0..robots {
        for u in 0..traits {
            q.set(r, u, value(r * traits + u));
        }
    }
    for m in 0..tasks {
        for u in 0..traits {
            y.set(m, u, value(1000 + m * traits + u) * 2.0);
        }
        for r in 0..robots {
            a.set(m, r, (m + r) % 3 == 0);
        }
    }
    (q, y, a)
}

/// Layered network: every task in a layer precedes every task in the next.
pub fn layered_stn(layers: usize, width: usize) -> Stn {
    let mut stn = Stn::new((0..layers * width).map(|i| 1.0 + (i % 5) as f64).collect());
    for l in 1..layers {
        for a in 0..width {
            for b in 0..width {
                stn.add_precedence((l - 1) * width + a, l * width + b, (a + b) as f64 * 0.5);
            }
        }
    }
    stn
}
