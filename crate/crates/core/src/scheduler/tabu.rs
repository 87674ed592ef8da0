//! Tabu search over the orderings of disjunctive constraints.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stn::{check_consistency, solve, Schedule, Stn};
use crate::domain::{Allocation, Reachability};

/// A pair of tasks sharing `robot` that precedence leaves unordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DisjunctiveConstraint {
    /// Always the smaller task index.
    pub task_a: usize,
    pub task_b: usize,
    pub robot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabuParams {
    pub tenure: usize,
    pub max_iterations: usize,
    pub max_non_improving: usize,
    pub seed: u64,
}

impl Default for TabuParams {
    fn default() -> Self {
        Self {
            tenure: 4,
            max_iterations: 100,
            max_non_improving: 25,
            seed: 0,
        }
    }
}

/// One disjunctive constraint per (robot, unordered shared task pair),
/// ordered by robot and then by pair.
pub fn derive_disjunctive_constraints(
    allocation: &Allocation,
    closure: &Reachability,
) -> Vec<DisjunctiveConstraint> {
    let mut out = Vec::new();
    for robot in 0..allocation.num_robots() {
        let tasks = allocation.tasks_of(robot);
        for (i, &a) in tasks.iter().enumerate() {
            for &b in &tasks[i + 1..] {
                if closure.unordered(a, b) {
                    out.push(DisjunctiveConstraint {
                        task_a: a,
                        task_b: b,
                        robot,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum PairOrder {
    /// Fixed by precedence; true when the first task comes first.
    Fixed(bool),
    /// Decided by the disjunctive constraint with this index.
    Choice(usize),
}

/// Everything the ordering search needs about an allocation.
#[derive(Debug, Clone)]
pub struct OrderingProblem {
    pub robot_tasks: Vec<Vec<usize>>,
    pub disjunctives: Vec<DisjunctiveConstraint>,
    /// Sort key for the initial ordering (earliest unconstrained start times).
    pub priority: Vec<f64>,
    pairs: Vec<Vec<(usize, usize, PairOrder)>>,
}

impl OrderingProblem {
    pub fn new(allocation: &Allocation, closure: &Reachability, priority: Vec<f64>) -> Self {
        let disjunctives = derive_disjunctive_constraints(allocation, closure);
        let robot_tasks: Vec<Vec<usize>> = (0..allocation.num_robots())
            .map(|n| allocation.tasks_of(n))
            .collect();
        let index: HashMap<(usize, usize, usize), usize> = disjunctives
            .iter()
            .enumerate()
            .map(|(i, d)| ((d.robot, d.task_a, d.task_b), i))
            .collect();
        let pairs = robot_tasks
            .iter()
            .enumerate()
            .map(|(n, tasks)| {
                let mut pairs = Vec::new();
                for i in 0..tasks.len() {
                    for j in (i + 1)..tasks.len() {
                        let (a, b) = (tasks[i], tasks[j]);
                        let order = match index.get(&(n, a, b)) {
                            Some(&k) => PairOrder::Choice(k),
                            None => PairOrder::Fixed(closure.precedes(a, b)),
                        };
                        pairs.push((i, j, order));
                    }
                }
                pairs
            })
            .collect();
        Self {
            robot_tasks,
            disjunctives,
            priority,
            pairs,
        }
    }

    pub fn num_choices(&self) -> usize {
        self.disjunctives.len()
    }

    /// Ascending priority, ties by task index. `true` puts `task_a` first.
    pub fn initial_choices(&self) -> Vec<bool> {
        self.disjunctives
            .iter()
            .map(|d| {
                let pa = self.priority.get(d.task_a).copied().unwrap_or(0.0);
                let pb = self.priority.get(d.task_b).copied().unwrap_or(0.0);
                pa < pb || (pa == pb && d.task_a < d.task_b)
            })
            .collect()
    }

    /// Each robot's tasks in execution order, or `None` when the choices
    /// do not induce a total order for some robot.
    pub fn sequences(&self, choices: &[bool]) -> Option<Vec<Vec<usize>>> {
        let mut out = Vec::with_capacity(self.robot_tasks.len());
        for (tasks, pairs) in self.robot_tasks.iter().zip(&self.pairs) {
            let k = tasks.len();
            let mut preceding = vec![0usize; k];
            for &(i, j, order) in pairs {
                let i_first = match order {
                    PairOrder::Fixed(f) => f,
                    PairOrder::Choice(c) => choices[c],
                };
                if i_first {
                    preceding[j] += 1;
                } else {
                    preceding[i] += 1;
                }
            }
            let mut seq = vec![usize::MAX; k];
            for (i, &p) in preceding.iter().enumerate() {
                if seq[p] != usize::MAX {
                    return None;
                }
                seq[p] = tasks[i];
            }
            out.push(seq);
        }
        Some(out)
    }
}

/// The ordering chosen by the search and the resulting network and schedule.
#[derive(Debug, Clone)]
pub struct ResolvedOrdering {
    pub stn: Stn,
    pub schedule: Schedule,
    pub choices: Vec<bool>,
    pub sequences: Vec<Vec<usize>>,
    /// Distinct orderings evaluated.
    pub evaluations: usize,
}

/// Adds ordering and travel edges for one candidate ordering.
///
/// `transition(robot, predecessor, successor)` is the travel lower bound into
/// `successor`, from the predecessor's terminal configuration or from the
/// robot's initial configuration; `None` marks the move impossible.
fn build_candidate<F>(
    base: &Stn,
    problem: &OrderingProblem,
    choices: &[bool],
    transition: &mut F,
) -> Option<(Stn, Vec<Vec<usize>>)>
where
    F: FnMut(usize, Option<usize>, usize) -> Option<f64>,
{
    let sequences = problem.sequences(choices)?;
    let mut stn = base.clone();
    for (d, &a_first) in problem.disjunctives.iter().zip(choices) {
        let (before, after) = if a_first {
            (d.task_a, d.task_b)
        } else {
            (d.task_b, d.task_a)
        };
        stn.add_precedence(before, after, 0.0);
    }
    for (robot, seq) in sequences.iter().enumerate() {
        let mut prev = None;
        for &task in seq {
            let bound = transition(robot, prev, task)?;
            match prev {
                None => stn.add_release(task, bound),
                Some(p) => stn.add_precedence(p, task, bound),
            }
            prev = Some(task);
        }
    }
    Some((stn, sequences))
}

/// True when some ordering explored by the tabu search is consistent with
/// zero travel. Returns as soon as one is found, starting with the
/// priority ordering.
pub fn has_consistent_ordering(base: &Stn, problem: &OrderingProblem, params: &TabuParams) -> bool {
    let zero = |_: usize, _: Option<usize>, _: usize| Some(0.0);
    let initial = build_candidate(base, problem, &problem.initial_choices(), &mut { zero })
        .is_some_and(|(stn, _)| check_consistency(&stn));
    initial || resolve_orderings_tabu(base, problem, zero, params).is_some()
}

/// Chooses an ordering for every disjunctive constraint, minimizing makespan.
///
/// Starts from the priority ordering and repeatedly moves to the best
/// non-tabu single-flip neighbour (a tabu flip is allowed when it beats the
/// incumbent). Inconsistent orderings score `+∞`. Returns `None` when no
/// explored ordering is consistent.
pub fn resolve_orderings_tabu<F>(
    base: &Stn,
    problem: &OrderingProblem,
    mut transition: F,
    params: &TabuParams,
) -> Option<ResolvedOrdering>
where
    F: FnMut(usize, Option<usize>, usize) -> Option<f64>,
{
    let mut bounds: HashMap<(usize, Option<usize>, usize), Option<f64>> = HashMap::new();
    let mut cached_transition = |r: usize, p: Option<usize>, s: usize| {
        *bounds.entry((r, p, s)).or_insert_with(|| transition(r, p, s))
    };
    let mut scores: HashMap<Vec<bool>, f64> = HashMap::new();
    let mut score = |choices: &Vec<bool>| -> f64 {
        if let Some(&s) = scores.get(choices) {
            return s;
        }
        let s = build_candidate(base, problem, choices, &mut cached_transition)
            .and_then(|(stn, _)| solve(&stn))
            .map_or(f64::INFINITY, |sch| sch.makespan);
        scores.insert(choices.clone(), s);
        s
    };

    let k = problem.num_choices();
    let mut current = problem.initial_choices();
    let mut best = current.clone();
    let mut best_score = score(&current);

    if k > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut tabu_until = vec![0usize; k];
        let mut non_improving = 0;
        for iter in 0..params.max_iterations {
            let mut chosen: Vec<(usize, f64)> = Vec::new();
            for i in 0..k {
                let mut neighbour = current.clone();
                neighbour[i] = !neighbour[i];
                let s = score(&neighbour);
                let allowed = tabu_until[i] <= iter || s < best_score;
                if !allowed {
                    continue;
                }
                match chosen.first() {
                    Some(&(_, b)) if s > b => {}
                    Some(&(_, b)) if s == b => chosen.push((i, s)),
                    _ => chosen = vec![(i, s)],
                }
            }
            if chosen.is_empty() {
                break;
            }
            let (flip, s) = chosen[if chosen.len() == 1 {
                0
            } else {
                rng.gen_range(0..chosen.len())
            }];
            current[flip] = !current[flip];
            tabu_until[flip] = iter + 1 + params.tenure;
            if s < best_score {
                best_score = s;
                best = current.clone();
                non_improving = 0;
            } else {
                non_improving += 1;
                if non_improving >= params.max_non_improving {
                    break;
                }
            }
        }
    }

    if best_score == f64::INFINITY {
        return None;
    }
    let evaluations = scores.len();
    let (stn, sequences) = build_candidate(base, problem, &best, &mut cached_transition)
        .expect("best ordering was consistent when scored");
    let schedule = solve(&stn).expect("best ordering was consistent when scored");
    Some(ResolvedOrdering {
        stn,
        schedule,
        choices: best,
        sequences,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tests::task;
    use crate::domain::{Point, TaskNetwork};

    fn network(m: usize, edges: Vec<(usize, usize)>) -> TaskNetwork {
        TaskNetwork::new(
            (0..m)
                .map(|_| task(vec![1.0], 1.0, Point::new(0.0, 0.0)))
                .collect(),
            edges,
        )
    }

    #[test]
    fn precedence_already_serializes() {
        let net = network(2, vec![(0, 1)]);
        let a = Allocation::from_rows(&[vec![1], vec![1]]).unwrap();
        assert!(derive_disjunctive_constraints(&a, &net.closure()).is_empty());
    }

    #[test]
    fn one_unordered_pair() {
        let net = network(2, vec![]);
        let a = Allocation::from_rows(&[vec![1], vec![1]]).unwrap();
        assert_eq!(
            derive_disjunctive_constraints(&a, &net.closure()),
            vec![DisjunctiveConstraint {
                task_a: 0,
                task_b: 1,
                robot: 0
            }]
        );
    }

    #[test]
    fn one_constraint_per_robot() {
        let net = network(2, vec![]);
        let a = Allocation::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        let d = derive_disjunctive_constraints(&a, &net.closure());
        // Brute force: every robot, every pair of its tasks, keep unordered.
        let mut expected = Vec::new();
        for robot in 0..2 {
            for a_ in 0..2 {
                for b in (a_ + 1)..2 {
                    expected.push(DisjunctiveConstraint {
                        task_a: a_,
                        task_b: b,
                        robot,
                    });
                }
            }
        }
        assert_eq!(d, expected);
    }

    #[test]
    fn transitive_precedence_counts_as_ordered() {
        let net = network(3, vec![(0, 1), (1, 2)]);
        let a = Allocation::from_rows(&[vec![1], vec![0], vec![1]]).unwrap();
        assert!(derive_disjunctive_constraints(&a, &net.closure()).is_empty());
    }

    #[test]
    fn zero_disjunctives_adds_only_approach_edges() {
        let net = network(2, vec![]);
        let a = Allocation::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        let p = OrderingProblem::new(&a, &net.closure(), vec![0.0, 0.0]);
        let base = Stn::new(vec![3.0, 2.0]);
        let r = resolve_orderings_tabu(
            &base,
            &p,
            |robot, _, _| Some(if robot == 0 { 1.0 } else { 5.0 }),
            &TabuParams::default(),
        )
        .unwrap();
        assert_eq!(r.schedule.start, vec![1.0, 5.0]);
        assert_eq!(r.schedule.makespan, 7.0);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn picks_the_cheaper_of_two_orderings() {
        let net = network(2, vec![]);
        let a = Allocation::from_rows(&[vec![1], vec![1]]).unwrap();
        // Reaching task 1 first is cheap, task 0 first is expensive.
        let travel = |_r: usize, pred: Option<usize>, succ: usize| {
            Some(match (pred, succ) {
                (None, 0) => 10.0,
                (None, 1) => 1.0,
                _ => 2.0,
            })
        };
        let p = OrderingProblem::new(&a, &net.closure(), vec![0.0, 0.0]);
        let base = Stn::new(vec![1.0, 1.0]);
        let r = resolve_orderings_tabu(&base, &p, travel, &TabuParams::default()).unwrap();
        assert_eq!(r.sequences, vec![vec![1, 0]]);
        // 1 travel + 1 work + 2 travel + 1 work
        assert_eq!(r.schedule.makespan, 5.0);
    }

    #[test]
    fn impossible_transitions_are_infeasible() {
        let net = network(2, vec![]);
        let a = Allocation::from_rows(&[vec![1], vec![1]]).unwrap();
        let p = OrderingProblem::new(&a, &net.closure(), vec![0.0, 0.0]);
        let base = Stn::new(vec![1.0, 1.0]);
        assert!(resolve_orderings_tabu(&base, &p, |_, _, _| None, &TabuParams::default()).is_none());
    }

    #[test]
    fn cyclic_choices_have_no_sequence() {
        let net = network(3, vec![]);
        let a = Allocation::from_rows(&[vec![1], vec![1], vec![1]]).unwrap();
        let p = OrderingProblem::new(&a, &net.closure(), vec![0.0; 3]);
        // pairs (0,1), (0,2), (1,2): 0<1, 2<0, 1<2 is a cycle
        assert!(p.sequences(&[true, false, true]).is_none());
        assert_eq!(p.sequences(&[true, true, true]), Some(vec![vec![0, 1, 2]]));
    }
}
