//! Binary random forest grown from scratch: bootstrap bags, CART trees with
//! per-node feature subsampling and Gini splits, out-of-bag votes, margins,
//! and four variable importance measures.
//!
//! Every tree draws from its own random stream derived from
//! `(config.seed, tree_index)`, and permutation importance draws from
//! `(perm_seed, tree_index, feature)`. Trees are grown and scored in parallel;
//! results are bit-identical to a sequential run.
//!
//! Split gains are compared as exact rationals over the (integer) class
//! counts, so split choice depends only on the ordering of feature values.

use std::fmt::Write as _;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::{total_cmp, Scalar};
use crate::seed::{derive_seed, stream_rng, StreamRng};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestError {
    #[error("invalid forest configuration: {0}")]
    InvalidConfig(String),
    #[error("training labels contain a single class")]
    SingleClassInput,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no training rows")]
    EmptyInput,
    #[error("no training row is out-of-bag for any tree")]
    NoOobCoverage,
    #[error("row {row} is not out-of-bag for any tree")]
    NoOobVotes { row: usize },
    #[error("class counts sum to zero")]
    EmptySplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_tree: usize,
    /// Candidate features sampled at each node.
    pub mtry: usize,
    pub seed: u64,
    /// Minimum bootstrap samples on each side of a split.
    pub min_node_size: usize,
    /// Train on single-class labels instead of rejecting them; every tree is then a single leaf.
    pub allow_single_class: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_tree: 100,
            mtry: 5,
            seed: 0,
            min_node_size: 1,
            allow_single_class: false,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        ForestConfig { seed, ..self }
    }

    pub fn validate(&self, n_features: usize) -> Result<(), ForestError> {
        if self.n_tree == 0 {
            return Err(ForestError::InvalidConfig(
                "n_tree must be at least 1".into(),
            ));
        }
        if self.mtry == 0 || self.mtry > n_features {
            return Err(ForestError::InvalidConfig(format!(
                "mtry = {} outside 1..={n_features}",
                self.mtry
            )));
        }
        if self.min_node_size == 0 {
            return Err(ForestError::InvalidConfig(
                "min_node_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `1 - Σ p_k²` over the class proportions.
pub fn gini_impurity<T: Scalar>(class_counts: &[usize]) -> Result<T, ForestError> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(ForestError::EmptySplit);
    }
    let n = T::from_usize_lossy(total);
    Ok(T::one()
        - class_counts
            .iter()
            .map(|&c| {
                let p = T::from_usize_lossy(c) / n;
                p * p
            })
            .sum::<T>())
}

#[derive(Debug, Clone, PartialEq)]
enum Node<T> {
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
        /// Bootstrap samples reaching the node.
        n_samples: usize,
        /// `n · gini(parent) − n_left · gini(left) − n_right · gini(right)`.
        weighted_gain: T,
        candidates: Vec<usize>,
    },
    Leaf {
        counts: [usize; 2],
    },
}

/// One CART tree together with the bag it was grown on.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree<T> {
    nodes: Vec<Node<T>>,
    /// Bootstrap multiplicity of every training row.
    in_bag: Vec<u32>,
    oob: Vec<usize>,
}

impl<T: Scalar> DecisionTree<T> {
    fn leaf_of(&self, x: &[T]) -> [usize; 2] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    /// Majority class of the leaf `x` falls in; ties go to the negative class.
    pub fn predict(&self, x: &[T]) -> bool {
        let [neg, pos] = self.leaf_of(x);
        pos > neg
    }

    /// Rows not drawn into this tree's bootstrap sample, ascending.
    pub fn oob_rows(&self) -> &[usize] {
        &self.oob
    }

    pub fn in_bag_count(&self, row: usize) -> u32 {
        self.in_bag[row]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// `(feature, candidate set)` of every internal node, in node order.
    pub fn splits(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split {
                feature,
                candidates,
                ..
            } => Some((*feature, candidates.as_slice())),
            Node::Leaf { .. } => None,
        })
    }

    /// Class counts of every leaf, in node order.
    pub fn leaves(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { counts } => Some(*counts),
            Node::Split { .. } => None,
        })
    }

    /// Sample-weighted Gini decrease accumulated per feature.
    pub fn gini_decrease(&self, n_features: usize) -> Vec<T> {
        let mut out = vec![T::zero(); n_features];
        for node in &self.nodes {
            if let Node::Split {
                feature,
                weighted_gain,
                ..
            } = node
            {
                out[*feature] = out[*feature] + *weighted_gain;
            }
        }
        out
    }
}

/// `Σ c²` for a two-class count vector.
fn sq_sum(c: [usize; 2]) -> i128 {
    (c[0] as i128).pow(2) + (c[1] as i128).pow(2)
}

/// Exact gain `num / den` with `den = n² · n_left · n_right`.
#[derive(Clone, Copy)]
struct Gain {
    num: i128,
    den: i128,
}

impl Gain {
    fn new(parent: [usize; 2], left: [usize; 2], right: [usize; 2]) -> Gain {
        let n = (parent[0] + parent[1]) as i128;
        let nl = (left[0] + left[1]) as i128;
        let nr = (right[0] + right[1]) as i128;
        Gain {
            num: sq_sum(left) * nr * n + sq_sum(right) * nl * n - sq_sum(parent) * nl * nr,
            den: n * n * nl * nr,
        }
    }

    fn greater_than(&self, other: &Gain) -> bool {
        self.num * other.den > other.num * self.den
    }

    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

struct TreeBuilder<'a, T> {
    rows: &'a [Vec<T>],
    labels: &'a [bool],
    config: &'a ForestConfig,
    n_features: usize,
    rng: StreamRng,
    nodes: Vec<Node<T>>,
    scratch: Vec<(T, bool)>,
}

impl<T: Scalar> TreeBuilder<'_, T> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let pos = idx.iter().filter(|&&i| self.labels[i]).count();
        [idx.len() - pos, pos]
    }

    /// Best split on `feature`: (gain, threshold).
    fn best_split_on(
        &mut self,
        idx: &[usize],
        feature: usize,
        parent: [usize; 2],
    ) -> Option<(Gain, T)> {
        self.scratch.clear();
        self.scratch
            .extend(idx.iter().map(|&i| (self.rows[i][feature], self.labels[i])));
        self.scratch.sort_by(|a, b| total_cmp(&a.0, &b.0));
        let n = self.scratch.len();
        let min = self.config.min_node_size;
        let mut left = [0usize; 2];
        let mut best: Option<(Gain, T)> = None;
        for i in 0..n - 1 {
            left[usize::from(self.scratch[i].1)] += 1;
            let (a, b) = (self.scratch[i].0, self.scratch[i + 1].0);
            // Equal neighbours (or NaN) admit no threshold between them.
            if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
                continue;
            }
            let nl = i + 1;
            if nl < min || n - nl < min {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let gain = Gain::new(parent, left, right);
            if gain.num > 0 && best.as_ref().is_none_or(|(g, _)| gain.greater_than(g)) {
                let two = T::one() + T::one();
                let mid = a + (b - a) / two;
                let threshold = if mid < b { mid } else { a };
                best = Some((gain, threshold));
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize]) -> usize {
        let counts = self.counts(idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        let n = idx.len();
        if counts[0] == 0 || counts[1] == 0 || n < 2 * self.config.min_node_size {
            return id;
        }
        let mut candidates =
            index::sample(&mut self.rng, self.n_features, self.config.mtry).into_vec();
        candidates.sort_unstable();

        let mut best: Option<(usize, Gain, T)> = None;
        for &f in &candidates {
            if let Some((gain, thr)) = self.best_split_on(idx, f, counts) {
                if best.as_ref().is_none_or(|(_, g, _)| gain.greater_than(g)) {
                    best = Some((f, gain, thr));
                }
            }
        }
        // No candidate improves impurity: the node stays a leaf.
        let Some((feature, gain, threshold)) = best else {
            return id;
        };

        let mut split_at = 0;
        for k in 0..n {
            if self.rows[idx[k]][feature] <= threshold {
                idx.swap(k, split_at);
                split_at += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split_at);
        let left = self.build(l);
        let right = self.build(r);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
            n_samples: n,
            weighted_gain: T::from_f64_lossy(gain.to_f64() * n as f64),
            candidates,
        };
        id
    }
}

fn grow_tree<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[bool],
    config: &ForestConfig,
    tree_index: usize,
) -> DecisionTree<T> {
    let n = rows.len();
    let mut rng = stream_rng(derive_seed(config.seed, tree_index as u64));
    let mut bag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut in_bag = vec![0u32; n];
    for &i in &bag {
        in_bag[i] += 1;
    }
    let oob = (0..n).filter(|&i| in_bag[i] == 0).collect();
    let mut builder = TreeBuilder {
        rows,
        labels,
        config,
        n_features: rows[0].len(),
        rng,
        nodes: Vec::new(),
        scratch: Vec::with_capacity(n),
    };
    builder.build(&mut bag);
    DecisionTree {
        nodes: builder.nodes,
        in_bag,
        oob,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<T> {
    pub label: bool,
    /// Fraction of trees voting for `label`.
    pub vote_fraction: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OobEstimate<T> {
    pub error: T,
    /// Rows with at least one out-of-bag vote.
    pub covered: usize,
    /// Rows that were in-bag for every tree.
    pub skipped: usize,
}

/// A trained forest with the out-of-bag votes of its training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest<T> {
    trees: Vec<DecisionTree<T>>,
    config: ForestConfig,
    n_features: usize,
    labels: Vec<bool>,
    /// Per training row: `[negative, positive]` votes from trees it is out-of-bag for.
    oob_votes: Vec<[u32; 2]>,
}

pub fn check_training_data<T>(rows: &[Vec<T>], labels: &[bool]) -> Result<usize, ForestError> {
    if rows.is_empty() {
        return Err(ForestError::EmptyInput);
    }
    if rows.len() != labels.len() {
        return Err(ForestError::ShapeMismatch(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let width = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        return Err(ForestError::ShapeMismatch(format!(
            "row {i} has {} features, expected {width}",
            rows[i].len()
        )));
    }
    Ok(width)
}

pub fn train_forest<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[bool],
    config: &ForestConfig,
) -> Result<Forest<T>, ForestError> {
    let n_features = check_training_data(rows, labels)?;
    config.validate(n_features)?;
    let positives = labels.iter().filter(|&&l| l).count();
    if !config.allow_single_class && (positives == 0 || positives == labels.len()) {
        return Err(ForestError::SingleClassInput);
    }
    let trees: Vec<DecisionTree<T>> = (0..config.n_tree)
        .into_par_iter()
        .map(|t| grow_tree(rows, labels, config, t))
        .collect();
    let mut oob_votes = vec![[0u32; 2]; rows.len()];
    for tree in &trees {
        for &r in tree.oob_rows() {
            oob_votes[r][usize::from(tree.predict(&rows[r]))] += 1;
        }
    }
    Ok(Forest {
        trees,
        config: *config,
        n_features,
        labels: labels.to_vec(),
        oob_votes,
    })
}

/// Majority of `[negative, positive]` votes; ties go to the negative class.
fn vote_label(votes: [u32; 2]) -> bool {
    votes[1] > votes[0]
}

fn margin_of<T: Scalar>(votes: [u32; 2], label: bool) -> Option<T> {
    let total = votes[0] + votes[1];
    if total == 0 {
        return None;
    }
    let correct = votes[usize::from(label)];
    let wrong = total - correct;
    Some((T::from_u32(correct)? - T::from_u32(wrong)?) / T::from_u32(total)?)
}

impl<T: Scalar> Forest<T> {
    pub fn trees(&self) -> &[DecisionTree<T>] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn oob_votes(&self) -> &[[u32; 2]] {
        &self.oob_votes
    }

    /// Number of positive votes over all trees.
    pub fn positive_votes(&self, x: &[T]) -> usize {
        self.trees.iter().filter(|t| t.predict(x)).count()
    }

    /// Majority vote over all trees; ties go to the negative class.
    pub fn predict(&self, x: &[T]) -> Prediction<T> {
        let pos = self.positive_votes(x);
        let neg = self.trees.len() - pos;
        let label = pos > neg;
        let agree = if label { pos } else { neg };
        Prediction {
            label,
            vote_fraction: T::from_usize_lossy(agree) / T::from_usize_lossy(self.trees.len()),
        }
    }

    /// Out-of-bag majority label of training row `row`, if any tree left it out.
    pub fn oob_prediction(&self, row: usize) -> Option<bool> {
        let v = self.oob_votes[row];
        (v[0] + v[1] > 0).then(|| vote_label(v))
    }

    pub fn oob_estimate(&self) -> Result<OobEstimate<T>, ForestError> {
        let (covered, wrong) = oob_tally(&self.oob_votes, &self.labels);
        let skipped = self.labels.len() - covered;
        if covered == 0 {
            return Err(ForestError::NoOobCoverage);
        }
        if skipped > 0 {
            log::warn!("{skipped} training rows have no out-of-bag votes and are skipped");
        }
        Ok(OobEstimate {
            error: T::from_usize_lossy(wrong) / T::from_usize_lossy(covered),
            covered,
            skipped,
        })
    }

    /// Fraction of covered training rows whose out-of-bag vote mislabels them.
    pub fn oob_error(&self) -> Result<T, ForestError> {
        self.oob_estimate().map(|e| e.error)
    }

    /// Correct minus incorrect out-of-bag votes, over all out-of-bag votes of `row`.
    pub fn margin(&self, row: usize) -> Result<T, ForestError> {
        let votes = *self
            .oob_votes
            .get(row)
            .ok_or_else(|| ForestError::ShapeMismatch(format!("row {row} out of range")))?;
        margin_of(votes, self.labels[row]).ok_or(ForestError::NoOobVotes { row })
    }

    /// Deterministic plain-text summary of the forest, for debugging.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(
            s,
            "forest n_tree={} mtry={} min_node_size={} seed={} rows={} features={}",
            c.n_tree,
            c.mtry,
            c.min_node_size,
            c.seed,
            self.n_rows(),
            self.n_features
        );
        match self.oob_estimate() {
            Ok(e) => {
                let _ = writeln!(
                    s,
                    "oob_error={:.6} covered={} skipped={}",
                    e.error.to_f64_lossy(),
                    e.covered,
                    e.skipped
                );
            }
            Err(e) => {
                let _ = writeln!(s, "oob_error=n/a ({e})");
            }
        }
        for (i, t) in self.trees.iter().enumerate() {
            let _ = writeln!(
                s,
                "tree {i}: nodes={} leaves={} depth={} oob={}",
                t.n_nodes(),
                t.n_leaves(),
                t.depth(),
                t.oob_rows().len()
            );
        }
        s
    }
}

/// `(rows with votes, rows misclassified by the vote majority)`.
fn oob_tally(votes: &[[u32; 2]], labels: &[bool]) -> (usize, usize) {
    votes
        .iter()
        .zip(labels)
        .filter(|(v, _)| v[0] + v[1] > 0)
        .fold((0, 0), |(c, w), (v, &l)| {
            (c + 1, w + usize::from(vote_label(*v) != l))
        })
}

/// Importance measure identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    /// Out-of-bag error after permuting the feature minus error before.
    OobErrorIncrease,
    /// Mean decrease of the out-of-bag margin under permutation.
    MeanMarginDecrease,
    /// (margins decreased − margins increased) / rows with votes.
    MarginCountBalance,
    /// Sample-weighted Gini decrease summed over splits, per tree.
    GiniDecrease,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::OobErrorIncrease,
        Measure::MeanMarginDecrease,
        Measure::MarginCountBalance,
        Measure::GiniDecrease,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Measure::OobErrorIncrease => "m1",
            Measure::MeanMarginDecrease => "m2",
            Measure::MarginCountBalance => "m3",
            Measure::GiniDecrease => "m4",
        }
    }
}

/// The four importance values of one feature.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureImportance<T> {
    pub m1_oob_error_delta: T,
    pub m2_mean_margin_decrease: T,
    pub m3_margin_count_norm: T,
    pub m4_gini_decrease: T,
}

impl<T: Copy> FeatureImportance<T> {
    pub fn get(&self, m: Measure) -> T {
        match m {
            Measure::OobErrorIncrease => self.m1_oob_error_delta,
            Measure::MeanMarginDecrease => self.m2_mean_margin_decrease,
            Measure::MarginCountBalance => self.m3_margin_count_norm,
            Measure::GiniDecrease => self.m4_gini_decrease,
        }
    }
}

/// Permutation and Gini importance of every feature.
///
/// For each tree and feature, the feature's values are shuffled among that
/// tree's out-of-bag rows and the rows are re-predicted. The permuted votes
/// are compared with the original out-of-bag votes row by row.
pub fn importance<T: Scalar>(
    forest: &Forest<T>,
    rows: &[Vec<T>],
    labels: &[bool],
    perm_seed: u64,
) -> Result<Vec<FeatureImportance<T>>, ForestError> {
    let width = check_training_data(rows, labels)?;
    if rows.len() != forest.n_rows() || width != forest.n_features() || labels != forest.labels() {
        return Err(ForestError::ShapeMismatch(
            "importance data differs from the training data".into(),
        ));
    }
    let n_features = width;
    let (covered, wrong) = oob_tally(&forest.oob_votes, labels);
    if covered == 0 {
        return Err(ForestError::NoOobCoverage);
    }

    // Per tree, per feature: predictions for the tree's OOB rows after permutation.
    let per_tree: Vec<Vec<Vec<bool>>> = forest
        .trees
        .par_iter()
        .enumerate()
        .map(|(t, tree)| {
            let oob = tree.oob_rows();
            let tree_seed = derive_seed(perm_seed, t as u64);
            let mut row_buf: Vec<T> = Vec::with_capacity(n_features);
            (0..n_features)
                .map(|j| {
                    let mut rng = stream_rng(derive_seed(tree_seed, j as u64));
                    let mut values: Vec<T> = oob.iter().map(|&r| rows[r][j]).collect();
                    values.shuffle(&mut rng);
                    oob.iter()
                        .zip(&values)
                        .map(|(&r, &v)| {
                            row_buf.clear();
                            row_buf.extend_from_slice(&rows[r]);
                            row_buf[j] = v;
                            tree.predict(&row_buf)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut gini = vec![T::zero(); n_features];
    for tree in &forest.trees {
        for (acc, g) in gini.iter_mut().zip(tree.gini_decrease(n_features)) {
            *acc = *acc + g;
        }
    }
    let n_tree = T::from_usize_lossy(forest.trees.len());
    let covered_t = T::from_usize_lossy(covered);
    let base_error = T::from_usize_lossy(wrong) / covered_t;
    let two = T::one() + T::one();

    let mut out = Vec::with_capacity(n_features);
    let mut permuted = vec![[0u32; 2]; rows.len()];
    for j in 0..n_features {
        permuted.iter_mut().for_each(|v| *v = [0, 0]);
        for (tree, preds) in forest.trees.iter().zip(&per_tree) {
            for (&r, &p) in tree.oob_rows().iter().zip(&preds[j]) {
                permuted[r][usize::from(p)] += 1;
            }
        }
        let (_, wrong_perm) = oob_tally(&permuted, labels);
        let mut margin_drop = T::zero();
        let (mut decreased, mut increased) = (0i64, 0i64);
        for ((orig, perm), &label) in forest.oob_votes.iter().zip(&permuted).zip(labels) {
            let total = orig[0] + orig[1];
            if total == 0 {
                continue;
            }
            let c_orig = orig[usize::from(label)];
            let c_perm = perm[usize::from(label)];
            // margin = (2·correct − total) / total, so the drop is 2·Δcorrect / total.
            let delta = T::from_i64(i64::from(c_orig) - i64::from(c_perm)).unwrap_or_else(T::nan);
            margin_drop = margin_drop + two * delta / T::from_u32(total).unwrap_or_else(T::nan);
            match c_perm.cmp(&c_orig) {
                std::cmp::Ordering::Less => decreased += 1,
                std::cmp::Ordering::Greater => increased += 1,
                std::cmp::Ordering::Equal => {}
            }
        }
        out.push(FeatureImportance {
            m1_oob_error_delta: T::from_usize_lossy(wrong_perm) / covered_t - base_error,
            m2_mean_margin_decrease: margin_drop / covered_t,
            m3_margin_count_norm: T::from_i64(decreased - increased).unwrap_or_else(T::nan)
                / covered_t,
            m4_gini_decrease: gini[j] / n_tree,
        });
    }
    Ok(out)
}
