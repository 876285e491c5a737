//! Feature ranking aggregated over an ensemble of forests.
//!
//! Each forest yields four importance values per feature. Within every forest
//! and measure the features are ranked (1 = most important, ties to the lower
//! feature index); the ranks are summed over measures and forests, and the
//! final ranking orders features by ascending rank sum.

use std::io;

use rayon::prelude::*;
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::forest::{
    importance, train_forest, FeatureImportance, ForestConfig, ForestError, Measure,
};
use crate::scalar::{total_cmp, Scalar};
use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum RankError {
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("n_forests must be at least 1")]
    NoForests,
    #[error("k = {k} exceeds the {n_features} ranked features")]
    KTooLarge { k: usize, n_features: usize },
    #[error("rank report: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankConfig {
    pub n_forests: usize,
    pub forest: ForestConfig,
    pub master_seed: u64,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            n_forests: 50,
            forest: ForestConfig::default(),
            master_seed: 0,
        }
    }
}

impl RankConfig {
    /// Seed of forest `i`; the permutation seed is derived from it in turn.
    pub fn forest_seeds(&self) -> Vec<u64> {
        (0..self.n_forests)
            .map(|i| derive_seed(self.master_seed, i as u64))
            .collect()
    }
}

/// Aggregated ranking of one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRank {
    pub feature_index: usize,
    pub column_name: String,
    pub display_name: String,
    /// Sum of per-forest ranks over the four measures.
    pub rank_sum: u64,
    /// Mean per-forest rank on each measure, in `Measure::ALL` order.
    pub mean_ranks: [f64; 4],
    pub final_rank: usize,
}

/// Ranks for every feature, in feature-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub n_forests: usize,
    pub features: Vec<FeatureRank>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopEntry {
    pub final_rank: usize,
    pub name: String,
    pub rank_sum: u64,
}

/// 1-based ranks of `values`, descending, ties broken by lower index.
pub fn rank_descending<T: Scalar>(values: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| total_cmp(&values[b], &values[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; values.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

/// Per-measure ranks of one forest's importance vector.
pub fn measure_ranks<T: Scalar>(imp: &[FeatureImportance<T>]) -> [Vec<usize>; 4] {
    Measure::ALL.map(|m| rank_descending(&imp.iter().map(|i| i.get(m)).collect::<Vec<T>>()))
}

fn importance_for_seed<T: Scalar>(
    matrix: &FeatureMatrix<T>,
    labels: &[bool],
    forest: &ForestConfig,
    seed: u64,
) -> Result<Vec<FeatureImportance<T>>, ForestError> {
    let f = train_forest(&matrix.rows, labels, &forest.with_seed(seed))?;
    importance(&f, &matrix.rows, labels, derive_seed(seed, u64::MAX))
}

/// Ranks features with one forest per entry of `seeds`.
pub fn rank_with_forest_seeds<T: Scalar>(
    matrix: &FeatureMatrix<T>,
    labels: &[bool],
    forest: &ForestConfig,
    seeds: &[u64],
) -> Result<RankReport, RankError> {
    if seeds.is_empty() {
        return Err(RankError::NoForests);
    }
    if labels.len() != matrix.n_rows() {
        return Err(RankError::ShapeMismatch(format!(
            "{} rows but {} labels",
            matrix.n_rows(),
            labels.len()
        )));
    }
    let n = matrix.n_features();
    let per_forest: Vec<Vec<FeatureImportance<T>>> = seeds
        .par_iter()
        .map(|&s| importance_for_seed(matrix, labels, forest, s))
        .collect::<Result<_, _>>()?;

    let mut sums = vec![[0u64; 4]; n];
    for imp in &per_forest {
        for (m, ranks) in measure_ranks(imp).iter().enumerate() {
            for (j, &r) in ranks.iter().enumerate() {
                sums[j][m] += r as u64;
            }
        }
    }
    let rank_sum: Vec<u64> = sums.iter().map(|s| s.iter().sum()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rank_sum[a].cmp(&rank_sum[b]).then(a.cmp(&b)));
    let mut final_rank = vec![0; n];
    for (r, &j) in order.iter().enumerate() {
        final_rank[j] = r + 1;
    }
    let n_forests = seeds.len() as f64;
    let features = (0..n)
        .map(|j| FeatureRank {
            feature_index: j,
            column_name: matrix.column_names[j].clone(),
            display_name: matrix.display_name(j),
            rank_sum: rank_sum[j],
            mean_ranks: sums[j].map(|s| s as f64 / n_forests),
            final_rank: final_rank[j],
        })
        .collect();
    Ok(RankReport {
        n_forests: seeds.len(),
        features,
    })
}

pub fn rank_features<T: Scalar>(
    matrix: &FeatureMatrix<T>,
    labels: &[bool],
    config: &RankConfig,
) -> Result<RankReport, RankError> {
    rank_with_forest_seeds(matrix, labels, &config.forest, &config.forest_seeds())
}

impl RankReport {
    /// Features ordered by final rank.
    pub fn ranked(&self) -> Vec<&FeatureRank> {
        let mut v: Vec<&FeatureRank> = self.features.iter().collect();
        v.sort_by_key(|f| f.final_rank);
        v
    }

    pub fn top_k(&self, k: usize) -> Result<Vec<TopEntry>, RankError> {
        if k > self.features.len() {
            return Err(RankError::KTooLarge {
                k,
                n_features: self.features.len(),
            });
        }
        Ok(self
            .ranked()
            .into_iter()
            .take(k)
            .map(|f| TopEntry {
                final_rank: f.final_rank,
                name: f.display_name.clone(),
                rank_sum: f.rank_sum,
            })
            .collect())
    }

    /// Columns: feature, task, rank_sum, final_rank, m1..m4 mean ranks; rows by final rank.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), RankError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "feature",
            "task",
            "rank_sum",
            "final_rank",
            "m1_mean_rank",
            "m2_mean_rank",
            "m3_mean_rank",
            "m4_mean_rank",
        ])?;
        for f in self.ranked() {
            let (feature, task) = match crate::features::FeatureColumn::from_name(&f.column_name) {
                Some(c) => (c.kind.label().to_string(), c.task.slug().to_string()),
                None => (f.column_name.clone(), String::new()),
            };
            let mut rec = vec![
                feature,
                task,
                f.rank_sum.to_string(),
                f.final_rank.to_string(),
            ];
            rec.extend(f.mean_ranks.iter().map(|m| format!("{m:.3}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Top-k table: one line per feature with its rank sum, under a model heading.
pub fn format_top_k_table(model: &str, entries: &[TopEntry]) -> String {
    let width = entries
        .iter()
        .map(|e| e.name.len())
        .max()
        .unwrap_or(0)
        .max(7);
    let mut s = format!("{model} model: top {} features\n", entries.len());
    s.push_str(&format!(
        "{:>4}  {:<width$}  {:>8}\n",
        "rank", "feature", "rank_sum"
    ));
    for e in entries {
        s.push_str(&format!(
            "{:>4}  {:<width$}  {:>8}\n",
            e.final_rank, e.name, e.rank_sum
        ));
    }
    s
}
