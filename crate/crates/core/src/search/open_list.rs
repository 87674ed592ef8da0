use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SearchNode;

#[derive(Debug, Clone, Copy)]
struct Key {
    tetaq: f64,
    depth: usize,
    seq: u64,
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl Ord for Key {
    // Max-heap order: lowest tetaq, then deepest, then earliest inserted.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .tetaq
            .total_cmp(&self.tetaq)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Frontier ordered by lowest TETAQ; ties go to the deeper node, then to
/// the node pushed first.
#[derive(Default)]
pub struct OpenList {
    heap: BinaryHeap<(Key, usize)>,
    nodes: Vec<Option<SearchNode>>,
    seq: u64,
}

impl OpenList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: SearchNode) {
        let key = Key {
            tetaq: node.tetaq(),
            depth: node.depth,
            seq: self.seq,
        };
        self.seq += 1;
        self.heap.push((key, self.nodes.len()));
        self.nodes.push(Some(node));
    }

    pub fn pop(&mut self) -> Option<SearchNode> {
        let (_, slot) = self.heap.pop()?;
        self.nodes[slot].take()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Allocation;
    use crate::heuristics::HeuristicValues;
    use proptest::prelude::*;

    fn node(tetaq: f64, depth: usize) -> SearchNode {
        SearchNode {
            allocation: Allocation::empty(1, 1),
            heuristics: HeuristicValues::new(tetaq, tetaq, 0.5),
            bundle: None,
            depth,
        }
    }

    #[test]
    fn ties_prefer_depth_then_insertion() {
        let mut open = OpenList::new();
        open.push(node(0.5, 1));
        open.push(node(0.5, 2));
        open.push(node(0.5, 2));
        open.push(node(0.25, 0));
        let order: Vec<(f64, usize)> = std::iter::from_fn(|| open.pop())
            .map(|n| (n.tetaq(), n.depth))
            .collect();
        assert_eq!(order, vec![(0.25, 0), (0.5, 2), (0.5, 2), (0.5, 1)]);
    }

    proptest! {
        #[test]
        fn pops_in_key_order(entries in prop::collection::vec((0u8..20, 0usize..5), 1..40)) {
            let mut open = OpenList::new();
            for &(t, d) in &entries {
                open.push(node(t as f64 / 20.0, d));
            }
            // Oracle: stable sort by (tetaq asc, depth desc) keeps insertion order on ties.
            let mut expected: Vec<(f64, usize)> =
                entries.iter().map(|&(t, d)| (t as f64 / 20.0, d)).collect();
            expected.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
            let got: Vec<(f64, usize)> = std::iter::from_fn(|| open.pop())
                .map(|n| (n.tetaq(), n.depth))
                .collect();
            prop_assert_eq!(got, expected);
        }
    }
}
