//! Exact k-nearest-neighbour classification over a vantage-point tree.
//!
//! Neighbours are ordered by `(distance, training index)`, and the tree
//! returns exactly the first `k` rows of that order, the same set a linear
//! scan produces.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::distance::Distance;
use crate::error::{Error, Result};
use crate::labeling::Label;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
    pub distance: Distance,
}

impl KnnParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        self.distance.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub distance: f64,
    pub index: usize,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum VpNode {
    Leaf {
        items: Vec<usize>,
    },
    Inner {
        vantage: usize,
        /// Median distance from the vantage point; `inside` holds rows at or
        /// below it, `outside` rows at or above it.
        radius: f64,
        inside: usize,
        outside: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VpTree {
    distance: Distance,
    nodes: Vec<VpNode>,
}

impl VpTree {
    pub fn build(points: &[Vec<f64>], distance: Distance) -> Self {
        let mut tree = VpTree {
            distance,
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build_node(points, (0..points.len()).collect());
        }
        tree
    }

    fn build_node(&mut self, points: &[Vec<f64>], mut items: Vec<usize>) -> usize {
        let id = self.nodes.len();
        if items.len() <= LEAF_SIZE {
            self.nodes.push(VpNode::Leaf { items });
            return id;
        }
        self.nodes.push(VpNode::Leaf { items: Vec::new() });
        let vantage = items.swap_remove(0);
        let mut by_dist: Vec<Neighbor> = items
            .iter()
            .map(|&i| Neighbor {
                distance: self.distance.eval_unchecked(&points[vantage], &points[i]),
                index: i,
            })
            .collect();
        let mid = by_dist.len() / 2;
        by_dist.select_nth_unstable(mid);
        let radius = by_dist[mid].distance;
        let outside_items: Vec<usize> = by_dist[mid..].iter().map(|n| n.index).collect();
        let inside_items: Vec<usize> = by_dist[..mid].iter().map(|n| n.index).collect();
        let inside = self.build_node(points, inside_items);
        let outside = self.build_node(points, outside_items);
        self.nodes[id] = VpNode::Inner {
            vantage,
            radius,
            inside,
            outside,
        };
        id
    }

    /// The `k` nearest rows of `points` to `query`, ascending.
    pub fn nearest(&self, points: &[Vec<f64>], query: &[f64], k: usize) -> Vec<Neighbor> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if !self.nodes.is_empty() && k > 0 {
            self.search(points, 0, query, k, &mut heap);
        }
        heap.into_sorted_vec()
    }

    fn offer(heap: &mut BinaryHeap<Neighbor>, k: usize, n: Neighbor) {
        if heap.len() < k {
            heap.push(n);
        } else if n < *heap.peek().expect("k > 0") {
            heap.pop();
            heap.push(n);
        }
    }

    fn bound(heap: &BinaryHeap<Neighbor>, k: usize) -> f64 {
        if heap.len() < k {
            f64::INFINITY
        } else {
            let tau = heap.peek().expect("k > 0").distance;
            // Slack for rounding in the triangle inequality, so exact ties are
            // never pruned.
            tau + 1e-9 * (1.0 + tau)
        }
    }

    fn search(
        &self,
        points: &[Vec<f64>],
        id: usize,
        q: &[f64],
        k: usize,
        heap: &mut BinaryHeap<Neighbor>,
    ) {
        match &self.nodes[id] {
            VpNode::Leaf { items } => {
                for &i in items {
                    let d = self.distance.eval_unchecked(q, &points[i]);
                    Self::offer(heap, k, Neighbor { distance: d, index: i });
                }
            }
            VpNode::Inner {
                vantage,
                radius,
                inside,
                outside,
            } => {
                let d = self.distance.eval_unchecked(q, &points[*vantage]);
                Self::offer(heap, k, Neighbor { distance: d, index: *vantage });
                let (first, second) = if d < *radius {
                    (*inside, *outside)
                } else {
                    (*outside, *inside)
                };
                for child in [first, second] {
                    let lower = if child == *inside { d - radius } else { radius - d };
                    if lower <= Self::bound(heap, k) {
                        self.search(points, child, q, k, heap);
                    }
                }
            }
        }
    }
}

/// Reference neighbour search by linear scan.
pub fn linear_scan(points: &[Vec<f64>], distance: Distance, query: &[f64], k: usize) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = points
        .iter()
        .enumerate()
        .map(|(i, p)| Neighbor {
            distance: distance.eval_unchecked(query, p),
            index: i,
        })
        .collect();
    all.sort();
    all.truncate(k);
    all
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub params: KnnParams,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    index: VpTree,
}

impl KnnModel {
    pub fn fit(x: &[Vec<f64>], y: &[Label], params: KnnParams) -> Result<Self> {
        params.validate()?;
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Domain("kNN needs matching non-empty rows and labels".into()));
        }
        Ok(KnnModel {
            params,
            points: x.to_vec(),
            labels: y.to_vec(),
            index: VpTree::build(x, params.distance),
        })
    }

    pub fn neighbors(&self, query: &[f64]) -> Vec<Neighbor> {
        self.index.nearest(&self.points, query, self.params.k)
    }

    /// Majority vote of the k nearest rows; ties go to anomalous.
    pub fn predict(&self, query: &[f64]) -> Label {
        let nn = self.neighbors(query);
        let anomalous = nn
            .iter()
            .filter(|n| self.labels[n.index] == Label::Anomalous)
            .count();
        if 2 * anomalous >= nn.len() {
            Label::Anomalous
        } else {
            Label::NonAnomalous
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn nearest_self() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i * 7 % 13) as f64]).collect();
        let y: Vec<Label> = (0..40).map(|i| Label::from_index(i % 3 / 2)).collect();
        let m = KnnModel::fit(
            &x,
            &y,
            KnnParams {
                k: 1,
                distance: Distance::Manhattan,
            },
        )
        .unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi), *yi);
        }
    }

    #[test]
    fn even_vote_tie_goes_anomalous() {
        let x = vec![vec![0.0], vec![2.0]];
        let y = vec![Label::NonAnomalous, Label::Anomalous];
        let m = KnnModel::fit(
            &x,
            &y,
            KnnParams {
                k: 2,
                distance: Distance::Euclidean,
            },
        )
        .unwrap();
        assert_eq!(m.predict(&[0.1]), Label::Anomalous);
    }

    #[test]
    fn matches_linear_scan_with_ties() {
        // Integer grid: lots of exactly tied distances.
        let mut rng = StreamRng::seed_from_u64(4);
        let pts: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..3).map(|_| rng.random_range(0..5) as f64).collect())
            .collect();
        for metric in [
            Distance::Manhattan,
            Distance::Euclidean,
            Distance::Hamming,
            Distance::Minkowski { p: 3.0 },
        ] {
            let tree = VpTree::build(&pts, metric);
            for _ in 0..30 {
                let q: Vec<f64> = (0..3).map(|_| rng.random_range(0..5) as f64).collect();
                for k in [1, 4, 9] {
                    assert_eq!(tree.nearest(&pts, &q, k), linear_scan(&pts, metric, &q, k));
                }
            }
        }
    }
}
