use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, FeaturesPerSplit, SplitCriterion, TreeParams};
use crate::error::{Error, Result};
use crate::labeling::Label;
use crate::rng::{derive_index, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub tree_count: usize,
    pub split_criterion: SplitCriterion,
    pub min_split_weight: f64,
    pub max_depth: usize,
    pub features_per_split: FeaturesPerSplit,
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            split_criterion: self.split_criterion,
            min_split_weight: self.min_split_weight,
            max_depth: self.max_depth,
            features_per_split: self.features_per_split,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tree_count == 0 {
            return Err(Error::Config("tree_count must be >= 1".into()));
        }
        self.tree_params().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

fn fit_one(
    x: &[Vec<f64>],
    y: &[Label],
    params: &ForestParams,
    seed: u64,
    t: usize,
) -> Result<DecisionTree> {
    let mut rng = StreamRng::seed_from_u64(derive_index(seed, t as u64));
    let weights = params.bootstrap.then(|| {
        let mut w = vec![0.0; x.len()];
        for _ in 0..x.len() {
            w[rng.random_range(0..x.len())] += 1.0;
        }
        w
    });
    DecisionTree::fit(x, y, weights.as_deref(), params.tree_params(), Some(&mut rng))
}

impl RandomForest {
    /// Each tree draws from its own stream derived from `(seed, tree index)`,
    /// so the forest is identical whether trees are grown serially or in
    /// parallel.
    pub fn fit(x: &[Vec<f64>], y: &[Label], params: &ForestParams, seed: u64) -> Result<Self> {
        params.validate()?;
        #[cfg(feature = "parallel")]
        let trees = {
            use rayon::prelude::*;
            (0..params.tree_count)
                .into_par_iter()
                .map(|t| fit_one(x, y, params, seed, t))
                .collect::<Result<Vec<_>>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let trees = (0..params.tree_count)
            .map(|t| fit_one(x, y, params, seed, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(RandomForest { trees })
    }

    /// Majority vote; ties go to anomalous.
    pub fn predict(&self, x: &[f64]) -> Label {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict(x) == Label::Anomalous)
            .count();
        if 2 * votes >= self.trees.len() {
            Label::Anomalous
        } else {
            Label::NonAnomalous
        }
    }
}
