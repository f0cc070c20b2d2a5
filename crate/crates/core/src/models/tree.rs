//! CART decision trees over continuous features with entropy or Gini splits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::Label;
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitCriterion {
    Entropy,
    Gini,
}

impl SplitCriterion {
    fn impurity(self, w: [f64; 2]) -> f64 {
        let total = w[0] + w[1];
        if total <= 0.0 {
            return 0.0;
        }
        match self {
            SplitCriterion::Entropy => w
                .iter()
                .filter(|c| **c > 0.0)
                .map(|c| {
                    let p = c / total;
                    -p * p.log2()
                })
                .sum(),
            SplitCriterion::Gini => 1.0 - w.iter().map(|c| (c / total).powi(2)).sum::<f64>(),
        }
    }
}

fn check_counts(counts: &[f64]) -> Result<f64> {
    if counts.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Error::Domain("class counts must be finite and >= 0".into()));
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::Domain("class counts sum to zero".into()));
    }
    Ok(total)
}

/// Shannon entropy in bits, `−Σ pᵢ log₂ pᵢ`.
pub fn entropy(counts: &[f64]) -> Result<f64> {
    let total = check_counts(counts)?;
    Ok(counts
        .iter()
        .filter(|c| **c > 0.0)
        .fold(0.0, |h, c| {
            let p = c / total;
            h - p * p.log2()
        }))
}

/// `1 − Σ pᵢ²`.
pub fn gini_impurity(counts: &[f64]) -> Result<f64> {
    let total = check_counts(counts)?;
    Ok(1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturesPerSplit {
    All,
    Sqrt,
    Count(usize),
}

impl FeaturesPerSplit {
    fn resolve(self, n_features: usize) -> usize {
        match self {
            FeaturesPerSplit::All => n_features,
            FeaturesPerSplit::Sqrt => ((n_features as f64).sqrt().round() as usize).max(1),
            FeaturesPerSplit::Count(n) => n.clamp(1, n_features),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    pub split_criterion: SplitCriterion,
    /// A node needs at least this much sample weight to be split.
    pub min_split_weight: f64,
    pub max_depth: usize,
    #[serde(default = "all_features")]
    pub features_per_split: FeaturesPerSplit,
}

fn all_features() -> FeaturesPerSplit {
    FeaturesPerSplit::All
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_split_weight >= 0.0) {
            return Err(Error::Config("min_split_weight must be >= 0".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Leaf {
        /// Sample weight per class, indexed by `Label::as_index`.
        weights: [f64; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Label],
    w: &'a [f64],
    params: TreeParams,
    n_try: usize,
    rng: Option<&'a mut StreamRng>,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Builder<'_> {
    fn class_weights(&self, idx: &[usize]) -> [f64; 2] {
        let mut cw = [0.0; 2];
        for &i in idx {
            cw[self.y[i].as_index()] += self.w[i];
        }
        cw
    }

    fn feature_order(&mut self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        if self.n_try < n {
            let rng = self
                .rng
                .as_mut()
                .expect("feature subsampling requires a random stream");
            for i in 0..n {
                let j = rng.random_range(i..n);
                order.swap(i, j);
            }
        }
        order
    }

    fn best_split(&mut self, idx: &[usize], parent: [f64; 2]) -> Option<BestSplit> {
        let crit = self.params.split_criterion;
        let total = parent[0] + parent[1];
        let parent_imp = crit.impurity(parent);
        let n_features = self.x[idx[0]].len();
        let order = self.feature_order(n_features);

        let mut best: Option<(usize, f64, f64)> = None;
        let mut tried = 0;
        let mut sorted = idx.to_vec();
        for &f in &order {
            if tried >= self.n_try {
                break;
            }
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let lo = self.x[sorted[0]][f];
            let hi = self.x[sorted[sorted.len() - 1]][f];
            if lo == hi {
                continue;
            }
            tried += 1;
            let mut left = [0.0; 2];
            for k in 0..sorted.len() - 1 {
                let i = sorted[k];
                left[self.y[i].as_index()] += self.w[i];
                let a = self.x[i][f];
                let b = self.x[sorted[k + 1]][f];
                if a == b {
                    continue;
                }
                let right = [parent[0] - left[0], parent[1] - left[1]];
                let wl = left[0] + left[1];
                let wr = total - wl;
                let imp = (wl * crit.impurity(left) + wr * crit.impurity(right)) / total;
                if best.is_none_or(|(_, _, b_imp)| imp < b_imp) {
                    let mut t = a + (b - a) / 2.0;
                    if t >= b {
                        t = a;
                    }
                    best = Some((f, t, imp));
                }
            }
        }
        let (feature, threshold, impurity) = best?;
        // Only strictly improving splits are accepted.
        if !(parent_imp - impurity > 1e-12) {
            return None;
        }
        let (left, right) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        Some(BestSplit {
            feature,
            threshold,
            impurity,
            left,
            right,
        })
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let cw = self.class_weights(&idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { weights: cw });
        let pure = cw[0] == 0.0 || cw[1] == 0.0;
        if pure || depth >= self.params.max_depth || cw[0] + cw[1] < self.params.min_split_weight {
            return id;
        }
        let Some(split) = self.best_split(&idx, cw) else {
            return id;
        };
        debug_assert!(split.impurity < self.params.split_criterion.impurity(cw));
        let left = self.grow(split.left, depth + 1);
        let right = self.grow(split.right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    /// Fits a tree. `weights` defaults to one per row; rows with zero weight
    /// are ignored. `rng` is required only when `features_per_split` selects
    /// fewer than all features.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[Label],
        weights: Option<&[f64]>,
        params: TreeParams,
        rng: Option<&mut StreamRng>,
    ) -> Result<Self> {
        params.validate()?;
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Domain(format!(
                "tree needs matching non-empty rows and labels ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        let ones;
        let w = match weights {
            Some(w) => w,
            None => {
                ones = vec![1.0; x.len()];
                &ones
            }
        };
        let n_features = x[0].len();
        let idx: Vec<usize> = (0..x.len()).filter(|&i| w[i] > 0.0).collect();
        if idx.is_empty() {
            return Err(Error::Domain("all sample weights are zero".into()));
        }
        let mut b = Builder {
            x,
            y,
            w,
            params,
            n_try: params.features_per_split.resolve(n_features),
            rng,
            nodes: Vec::new(),
        };
        b.grow(idx, 0);
        Ok(DecisionTree {
            n_features,
            nodes: b.nodes,
        })
    }

    fn leaf_weights(&self, x: &[f64]) -> [f64; 2] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { weights } => return *weights,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the reached leaf; ties go to anomalous.
    pub fn predict(&self, x: &[f64]) -> Label {
        let w = self.leaf_weights(x);
        if w[1] >= w[0] {
            Label::Anomalous
        } else {
            Label::NonAnomalous
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// (parent impurity, weighted child impurity) for every split node.
    pub fn split_impurities(&self, criterion: SplitCriterion) -> Vec<(f64, f64)> {
        fn weights(nodes: &[Node], id: usize) -> [f64; 2] {
            match &nodes[id] {
                Node::Leaf { weights } => *weights,
                Node::Split { left, right, .. } => {
                    let l = weights(nodes, *left);
                    let r = weights(nodes, *right);
                    [l[0] + r[0], l[1] + r[1]]
                }
            }
        }
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { left, right, .. } => {
                    let l = weights(&self.nodes, *left);
                    let r = weights(&self.nodes, *right);
                    let p = [l[0] + r[0], l[1] + r[1]];
                    let (wl, wr, wp) = (l[0] + l[1], r[0] + r[1], p[0] + p[1]);
                    Some((
                        criterion.impurity(p),
                        (wl * criterion.impurity(l) + wr * criterion.impurity(r)) / wp,
                    ))
                }
                Node::Leaf { .. } => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impurity_values() {
        assert_eq!(entropy(&[5.0, 5.0]).unwrap(), 1.0);
        assert_eq!(gini_impurity(&[5.0, 5.0]).unwrap(), 0.5);
        assert_eq!(entropy(&[10.0, 0.0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[10.0, 0.0]).unwrap(), 0.0);
        // −0.9 log₂ 0.9 − 0.1 log₂ 0.1
        let h = -(0.9f64 * 0.9f64.log2()) - 0.1 * 0.1f64.log2();
        assert!((entropy(&[9.0, 1.0]).unwrap() - h).abs() < 1e-15);
        assert!((entropy(&[9.0, 1.0]).unwrap() - 0.4690).abs() < 1e-4);
        assert!((gini_impurity(&[9.0, 1.0]).unwrap() - 0.18).abs() < 1e-15);
        assert!(entropy(&[0.0, 0.0]).is_err());
        assert!(gini_impurity(&[0.0, 0.0]).is_err());
    }

    fn params(c: SplitCriterion) -> TreeParams {
        TreeParams {
            split_criterion: c,
            min_split_weight: 2.0,
            max_depth: 8,
            features_per_split: FeaturesPerSplit::All,
        }
    }

    #[test]
    fn separable_toy_is_depth_one() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![
            Label::NonAnomalous,
            Label::NonAnomalous,
            Label::Anomalous,
            Label::Anomalous,
        ];
        for c in [SplitCriterion::Entropy, SplitCriterion::Gini] {
            let t = DecisionTree::fit(&x, &y, None, params(c), None).unwrap();
            assert_eq!(t.depth(), 1);
            for (xi, yi) in x.iter().zip(&y) {
                assert_eq!(t.predict(xi), *yi);
            }
            match &t.nodes[0] {
                Node::Split { threshold, .. } => assert_eq!(*threshold, 1.5),
                n => panic!("expected split, got {n:?}"),
            }
        }
    }

    #[test]
    fn depth_and_weight_limits() {
        let x: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let y: Vec<Label> = (0..16).map(|i| Label::from_index(i % 2)).collect();
        let mut p = params(SplitCriterion::Gini);
        p.max_depth = 2;
        let t = DecisionTree::fit(&x, &y, None, p, None).unwrap();
        assert!(t.depth() <= 2);
        p.max_depth = 20;
        p.min_split_weight = 100.0;
        let t = DecisionTree::fit(&x, &y, None, p, None).unwrap();
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn leaf_tie_goes_anomalous() {
        let x = vec![vec![0.0], vec![0.0]];
        let y = vec![Label::NonAnomalous, Label::Anomalous];
        let t = DecisionTree::fit(&x, &y, None, params(SplitCriterion::Entropy), None).unwrap();
        assert_eq!(t.predict(&[0.0]), Label::Anomalous);
    }
}
