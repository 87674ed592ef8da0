//! Allocation quality (APR), schedule quality (NSQ) and their convex
//! combination (TETAQ).

use crate::domain::{Allocation, TraitMatrix};

/// Tolerance for treating the APR numerator as zero.
pub const APR_EPSILON: f64 = 1e-9;

/// Trait mismatch `E = Y - A·Q` with its clipped sum and normalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitMismatch {
    pub matrix: TraitMatrix,
    pub clipped_error: f64,
    pub denominator: f64,
}

impl TraitMismatch {
    pub fn compute(allocation: &Allocation, q: &TraitMatrix, y: &TraitMatrix) -> Self {
        assert_eq!(allocation.num_tasks(), y.rows(), "allocation rows must match Y");
        assert_eq!(
            allocation.num_robots(),
            q.rows(),
            "allocation columns must match Q"
        );
        assert_eq!(q.cols(), y.cols(), "Q and Y must have the same trait count");
        let mut matrix = y.clone();
        let mut clipped_error = 0.0;
        for m in 0..y.rows() {
            for n in 0..q.rows() {
                if allocation.get(m, n) {
                    for u in 0..y.cols() {
                        matrix.set(m, u, matrix.get(m, u) - q.get(n, u));
                    }
                }
            }
            clipped_error += matrix.row(m).iter().map(|e| e.max(0.0)).sum::<f64>();
        }
        Self {
            matrix,
            clipped_error,
            denominator: y.l11_norm(),
        }
    }

    pub fn percentage_remaining(&self) -> f64 {
        assert!(self.denominator > 0.0, "desired trait matrix must be nonzero");
        self.clipped_error / self.denominator
    }
}

/// Allocation percentage remaining: clipped trait mismatch over `||Y||₁,₁`.
pub fn apr(allocation: &Allocation, q: &TraitMatrix, y: &TraitMatrix) -> f64 {
    TraitMismatch::compute(allocation, q, y).percentage_remaining()
}

/// True when an APR value counts as a fully satisfied allocation.
pub fn satisfies(apr_value: f64) -> bool {
    apr_value <= APR_EPSILON
}

/// Normalized schedule quality.
///
/// An infeasible child (`makespan_bar = ∞`) maps to `∞`; a degenerate range
/// (`worst == best`) maps every finite schedule to 0. Values above 1 are
/// possible when the worst-case estimate is exceeded.
pub fn nsq(makespan_bar: f64, makespan_best: f64, makespan_worst: f64) -> f64 {
    if makespan_bar == f64::INFINITY {
        return f64::INFINITY;
    }
    let slack = 1e-9 * makespan_best.abs().max(1.0);
    assert!(
        makespan_bar >= makespan_best - slack,
        "schedule makespan {makespan_bar} is below the unconstrained best {makespan_best}"
    );
    assert!(
        makespan_best <= makespan_worst,
        "best makespan exceeds worst estimate"
    );
    let range = makespan_worst - makespan_best;
    if range <= 0.0 {
        return 0.0;
    }
    ((makespan_bar - makespan_best) / range).max(0.0)
}

/// `alpha · apr + (1 − alpha) · nsq`; alpha weights APR.
pub fn tetaq(apr_value: f64, nsq_value: f64, alpha: f64) -> f64 {
    assert!((0.0..=1.0).contains(&alpha), "alpha {alpha} outside [0, 1]");
    if nsq_value == f64::INFINITY {
        return f64::INFINITY;
    }
    // Keep the extremes exact: 0 · x would otherwise still be added.
    if alpha == 1.0 {
        return apr_value;
    }
    if alpha == 0.0 {
        return nsq_value;
    }
    alpha * apr_value + (1.0 - alpha) * nsq_value
}

/// Heuristic values cached on a search node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicValues {
    pub apr: f64,
    pub nsq: f64,
    pub tetaq: f64,
    pub alpha: f64,
}

impl HeuristicValues {
    pub fn new(apr: f64, nsq: f64, alpha: f64) -> Self {
        Self {
            apr,
            nsq,
            tetaq: tetaq(apr, nsq, alpha),
            alpha,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> TraitMatrix {
        TraitMatrix::from_rows(rows, rows[0].len())
    }

    #[test]
    fn apr_hand_example() {
        // E = [[2,1],[0,3]] - [[1,0],[1,2]] = [[1,1],[-1,1]] -> clipped 3, ||Y|| 6
        let y = m(&[&[2.0, 1.0], &[0.0, 3.0]]);
        let q = m(&[&[1.0, 0.0], &[1.0, 2.0]]);
        let a = Allocation::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(apr(&a, &q, &y), 0.5);
        let mismatch = TraitMismatch::compute(&a, &q, &y);
        assert_eq!(mismatch.matrix, m(&[&[1.0, 1.0], &[-1.0, 1.0]]));
        assert_eq!(mismatch.denominator, 6.0);
    }

    #[test]
    fn apr_empty_and_covering() {
        let y = m(&[&[2.0, 1.0], &[0.0, 3.0]]);
        let q = m(&[&[1.0, 0.0], &[1.0, 2.0]]);
        assert_eq!(apr(&Allocation::empty(2, 2), &q, &y), 1.0);
        let q_big = m(&[&[5.0, 5.0], &[5.0, 5.0]]);
        let a = Allocation::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(apr(&a, &q_big, &y), 0.0);
    }

    #[test]
    fn nsq_examples() {
        assert_eq!(nsq(10.0, 10.0, 30.0), 0.0);
        assert_eq!(nsq(30.0, 10.0, 30.0), 1.0);
        assert_eq!(nsq(15.0, 10.0, 30.0), 0.25);
        assert_eq!(nsq(f64::INFINITY, 10.0, 30.0), f64::INFINITY);
        assert_eq!(nsq(10.0, 10.0, 10.0), 0.0);
    }

    #[test]
    #[should_panic(expected = "below the unconstrained best")]
    fn nsq_rejects_better_than_best() {
        nsq(5.0, 10.0, 30.0);
    }

    #[test]
    fn tetaq_examples() {
        assert_eq!(tetaq(0.5, 0.25, 0.5), 0.375);
        assert_eq!(tetaq(0.3, 0.7, 1.0), 0.3);
        assert_eq!(tetaq(0.3, 0.7, 0.0), 0.7);
        assert_eq!(tetaq(0.3, f64::INFINITY, 0.5), f64::INFINITY);
    }

    #[test]
    #[should_panic(expected = "outside [0, 1]")]
    fn tetaq_rejects_bad_alpha() {
        tetaq(0.1, 0.1, 1.5);
    }

    proptest! {
        #[test]
        fn tetaq_between_components(a in 0.0f64..1.0, b in 0.0f64..2.0, alpha in 0.0f64..=1.0) {
            let t = tetaq(a, b, alpha);
            prop_assert!(t >= a.min(b) - 1e-12 && t <= a.max(b) + 1e-12);
        }
    }
}
