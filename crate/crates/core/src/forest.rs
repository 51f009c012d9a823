//! CART trees, bagged random forests and information-gain feature ranking.
//!
//! Splits minimize weighted Gini impurity. Split scores are compared as exact
//! rationals over the class counts, so ties (and the "no improvement" check)
//! never depend on floating-point rounding.
//!
//! Randomness: tree `t` draws from a ChaCha8 generator seeded with
//! `rng_seed` on stream `t`. It first draws the bootstrap sample (`n` uniform
//! indices into the canonically ordered rows), then, at each node in
//! depth-first left-to-right order, a partial Fisher-Yates shuffle over the
//! feature indices. Candidate features are examined in shuffle order until
//! `features_per_split` non-constant ones have been scored.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Decision;
use crate::error::ForestError;
use crate::features::{FeatureMatrix, FeatureVector};

/// Column-major training data with binary labels (`true` = positive).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub schema_tag: String,
    columns: Vec<Vec<f64>>,
    labels: Vec<bool>,
}

impl Dataset {
    pub fn from_rows(
        names: Vec<String>,
        schema_tag: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Vec<bool>,
    ) -> Result<Self, ForestError> {
        let d = names.len();
        if rows.len() != labels.len() {
            return Err(ForestError::Config(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); d];
        for r in rows {
            if r.len() != d {
                return Err(ForestError::Dimension { expected: d, got: r.len() });
            }
            for (c, &v) in columns.iter_mut().zip(r) {
                c.push(v);
            }
        }
        Ok(Self { names, schema_tag: schema_tag.into(), columns, labels })
    }

    /// Builds a dataset from a feature matrix; `positive` picks the class.
    pub fn from_matrix(m: &FeatureMatrix, positive: impl Fn(&FeatureVector) -> bool) -> Self {
        let rows: Vec<Vec<f64>> = m.rows.iter().map(|r| r.values.clone()).collect();
        let labels = m.rows.iter().map(positive).collect();
        Self::from_rows(m.schema.names.clone(), m.schema.tag(), &rows, labels)
            .expect("feature matrix rows match their schema")
    }

    /// Punish-vs-pardon labeling.
    pub fn decisions(m: &FeatureMatrix) -> Self {
        Self::from_matrix(m, |r| r.label.is_punish())
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature][row]
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Rows in a new order (`order[i]` is the source row of row `i`).
    pub fn reorder(&self, order: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            schema_tag: self.schema_tag.clone(),
            columns: self.columns.iter().map(|c| order.iter().map(|&i| c[i]).collect()).collect(),
            labels: order.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Copy with one column passed through `f`.
    pub fn map_column(&self, feature: usize, f: impl Fn(f64) -> f64) -> Dataset {
        let mut out = self.clone();
        for v in &mut out.columns[feature] {
            *v = f(*v);
        }
        out
    }

    pub fn with_labels(&self, labels: Vec<bool>) -> Dataset {
        assert_eq!(labels.len(), self.n_rows());
        Dataset { labels, ..self.clone() }
    }

    fn check_trainable(&self) -> Result<(), ForestError> {
        if self.n_rows() < 2 {
            return Err(ForestError::TooFewRows(self.n_rows()));
        }
        match self.positives() {
            0 => Err(ForestError::SingleClass("negative (pardon)")),
            p if p == self.n_rows() => Err(ForestError::SingleClass("positive (punish)")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// `None` means ceil(sqrt(d)).
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: None,
            min_leaf: 5,
            features_per_split: None,
            bootstrap: true,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    /// Fills in `features_per_split` for `d` features and checks bounds.
    pub fn resolve(&self, d: usize) -> Result<TrainConfig, ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::Config("n_trees must be >= 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(ForestError::Config("min_leaf must be >= 1".into()));
        }
        if d == 0 {
            return Err(ForestError::Config("no features".into()));
        }
        let k = self.features_per_split.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize);
        if k == 0 || k > d {
            return Err(ForestError::Config(format!("features_per_split {k} not in 1..={d}")));
        }
        Ok(TrainConfig { features_per_split: Some(k), ..self.clone() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `value <= threshold` go left.
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
    Leaf { punish_fraction: f64, sample_count: usize },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { punish_fraction, .. } => return *punish_fraction,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split { feature, left, right, .. } => {
                [Some(*feature), left.max_feature(), right.max_feature()].into_iter().flatten().max()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub schema_version: String,
    pub config: TrainConfig,
    pub n_features: usize,
    pub trees: Vec<TreeNode>,
}

impl RandomForest {
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ForestError> {
        if x.len() != self.n_features {
            return Err(ForestError::Dimension { expected: self.n_features, got: x.len() });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok((sum / self.trees.len() as f64).clamp(0.0, 1.0))
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>, ForestError> {
        if data.n_features() != self.n_features {
            return Err(ForestError::Dimension {
                expected: self.n_features,
                got: data.n_features(),
            });
        }
        Ok((0..data.n_rows())
            .into_par_iter()
            .map(|i| self.predict_proba(&data.row(i)).expect("checked dimension"))
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ForestError> {
        let mut de = serde_json::Deserializer::from_str(s);
        de.disable_recursion_limit();
        let forest = RandomForest::deserialize(&mut de)
            .and_then(|f| de.end().map(|_| f))
            .map_err(|e| ForestError::Format(e.to_string()))?;
        if forest.trees.is_empty() {
            return Err(ForestError::Format("no trees".into()));
        }
        if let Some(f) = forest.trees.iter().filter_map(TreeNode::max_feature).max() {
            if f >= forest.n_features {
                return Err(ForestError::Format(format!(
                    "feature index {f} out of range for {} features",
                    forest.n_features
                )));
            }
        }
        Ok(forest)
    }

    /// Errors unless the model was fit on features with this schema tag.
    pub fn check_schema(&self, features_tag: &str) -> Result<(), ForestError> {
        if self.schema_version != features_tag {
            return Err(ForestError::SchemaMismatch {
                model: self.schema_version.clone(),
                features: features_tag.to_string(),
            });
        }
        Ok(())
    }
}

pub fn gini_impurity(labels: &[Decision]) -> Result<f64, ForestError> {
    if labels.is_empty() {
        return Err(ForestError::EmptyLabels);
    }
    let p = labels.iter().filter(|d| d.is_punish()).count() as f64 / labels.len() as f64;
    Ok(1.0 - p * p - (1.0 - p) * (1.0 - p))
}

/// S = pl*ql/nl + pr*qr/nr as an exact fraction; smaller is better. The
/// weighted child impurity is (2/n)*S.
#[derive(Debug, Clone, Copy)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn of(nl: u64, pl: u64, nr: u64, pr: u64) -> Self {
        let (nl, pl, nr, pr) = (nl as u128, pl as u128, nr as u128, pr as u128);
        SplitScore { num: pl * (nl - pl) * nr + pr * (nr - pr) * nl, den: nl * nr }
    }

    fn parent(n: u64, p: u64) -> Self {
        let (n, p) = (n as u128, p as u128);
        SplitScore { num: p * (n - p), den: n }
    }

    fn cmp(&self, o: &SplitScore) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }

    fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Parent Gini minus weighted child Gini.
    pub impurity_decrease: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    score: SplitScore,
}

impl Candidate {
    fn better_than(&self, o: &Candidate) -> bool {
        match self.score.cmp(&o.score) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => (self.feature, self.threshold) < (o.feature, o.threshold),
        }
    }
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi`.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi || !m.is_finite() {
        lo
    } else {
        m
    }
}

/// Best threshold on one feature. `pairs` must be sorted by value.
fn scan_feature(
    feature: usize,
    pairs: &[(f64, bool)],
    positives: u64,
    min_leaf: usize,
) -> Option<Candidate> {
    let n = pairs.len();
    let mut best: Option<Candidate> = None;
    let mut pl = 0u64;
    for i in 0..n - 1 {
        pl += pairs[i].1 as u64;
        let nl = i + 1;
        if nl < min_leaf {
            continue;
        }
        if n - nl < min_leaf {
            break;
        }
        if pairs[i].0 == pairs[i + 1].0 {
            continue;
        }
        let c = Candidate {
            feature,
            threshold: midpoint(pairs[i].0, pairs[i + 1].0),
            score: SplitScore::of(nl as u64, pl, (n - nl) as u64, positives - pl),
        };
        if best.as_ref().is_none_or(|b| c.score.cmp(&b.score) == Ordering::Less) {
            best = Some(c);
        }
    }
    best
}

fn gather(data: &Dataset, rows: &[usize], feature: usize, buf: &mut Vec<(f64, bool)>) -> bool {
    buf.clear();
    let col = &data.columns[feature];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &r in rows {
        let v = col[r];
        lo = lo.min(v);
        hi = hi.max(v);
        buf.push((v, data.labels[r]));
    }
    lo < hi
}

fn finish(best: Option<Candidate>, n: u64, positives: u64) -> Option<Split> {
    let best = best?;
    let parent = SplitScore::parent(n, positives);
    if best.score.cmp(&parent) != Ordering::Less {
        return None;
    }
    let decrease = 2.0 / n as f64 * (parent.as_f64() - best.score.as_f64());
    Some(Split { feature: best.feature, threshold: best.threshold, impurity_decrease: decrease })
}

/// Best Gini split of `rows` over `features`, or `None` when no threshold
/// leaving at least `min_leaf` rows per side lowers impurity. Ties go to the
/// lower feature index, then the lower threshold.
pub fn best_split(
    data: &Dataset,
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let min_leaf = min_leaf.max(1);
    if rows.len() < 2 * min_leaf {
        return None;
    }
    let positives = rows.iter().filter(|&&r| data.labels[r]).count() as u64;
    let mut buf = Vec::with_capacity(rows.len());
    let mut best: Option<Candidate> = None;
    for &f in features {
        if !gather(data, rows, f, &mut buf) {
            continue;
        }
        buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(c) = scan_feature(f, &buf, positives, min_leaf) {
            if best.as_ref().is_none_or(|b| c.better_than(b)) {
                best = Some(c);
            }
        }
    }
    finish(best, rows.len() as u64, positives)
}

struct TreeBuilder<'a> {
    data: &'a Dataset,
    min_leaf: usize,
    max_depth: usize,
    k: usize,
    rng: ChaCha8Rng,
    perm: Vec<usize>,
    buf: Vec<(f64, bool)>,
}

impl TreeBuilder<'_> {
    fn leaf(&self, n: usize, positives: usize) -> TreeNode {
        TreeNode::Leaf {
            punish_fraction: positives as f64 / n as f64,
            sample_count: n,
        }
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> TreeNode {
        let n = rows.len();
        let positives = rows.iter().filter(|&&r| self.data.labels[r]).count();
        if positives == 0 || positives == n || n < 2 * self.min_leaf || depth >= self.max_depth {
            return self.leaf(n, positives);
        }
        let d = self.perm.len();
        let mut best: Option<Candidate> = None;
        let mut scored = 0;
        let mut j = 0;
        while j < d && scored < self.k {
            let pick = self.rng.random_range(j..d);
            self.perm.swap(j, pick);
            let f = self.perm[j];
            j += 1;
            if !gather(self.data, rows, f, &mut self.buf) {
                continue;
            }
            scored += 1;
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if let Some(c) = scan_feature(f, &self.buf, positives as u64, self.min_leaf) {
                if best.as_ref().is_none_or(|b| c.better_than(b)) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = finish(best, n as u64, positives as u64) else {
            return self.leaf(n, positives);
        };
        let col = &self.data.columns[split.feature];
        let mut mid = 0;
        for i in 0..n {
            if col[rows[i]] <= split.threshold {
                rows.swap(i, mid);
                mid += 1;
            }
        }
        let (l, r) = rows.split_at_mut(mid);
        let left = Box::new(self.grow(l, depth + 1));
        let right = Box::new(self.grow(r, depth + 1));
        TreeNode::Split { feature: split.feature, threshold: split.threshold, left, right }
    }
}

/// Row order under which fitting is canonical: by label, then values.
fn canonical_order(data: &Dataset) -> Vec<usize> {
    let mut order: Vec<usize> = (0..data.n_rows()).collect();
    order.sort_by(|&a, &b| {
        data.labels[a].cmp(&data.labels[b]).then_with(|| {
            for c in &data.columns {
                let o = c[a].total_cmp(&c[b]);
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        })
    });
    order
}

fn fit_tree(data: &Dataset, config: &TrainConfig, tree_index: u64) -> TreeNode {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(tree_index);
    let n = data.n_rows();
    let mut rows: Vec<usize> = if config.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut builder = TreeBuilder {
        data,
        min_leaf: config.min_leaf,
        max_depth: config.max_depth.unwrap_or(usize::MAX),
        k: config.features_per_split.expect("resolved config"),
        rng,
        perm: (0..data.n_features()).collect(),
        buf: Vec::with_capacity(n),
    };
    builder.grow(&mut rows, 0)
}

/// Single CART tree over all rows and all features.
pub fn fit_tree_cart(data: &Dataset, min_leaf: usize, max_depth: Option<usize>) -> Result<TreeNode, ForestError> {
    data.check_trainable()?;
    let config = TrainConfig {
        n_trees: 1,
        max_depth,
        min_leaf,
        features_per_split: Some(data.n_features()),
        bootstrap: false,
        rng_seed: 0,
    }
    .resolve(data.n_features())?;
    Ok(fit_tree(&data.reorder(&canonical_order(data)), &config, 0))
}

pub fn fit_forest(data: &Dataset, config: &TrainConfig) -> Result<RandomForest, ForestError> {
    data.check_trainable()?;
    let config = config.resolve(data.n_features())?;
    let canonical = data.reorder(&canonical_order(data));
    let trees = (0..config.n_trees as u64)
        .into_par_iter()
        .map(|t| fit_tree(&canonical, &config, t))
        .collect();
    Ok(RandomForest {
        schema_version: data.schema_tag.clone(),
        config,
        n_features: data.n_features(),
        trees,
    })
}

fn entropy_bits(pos: usize, n: usize) -> f64 {
    if n == 0 || pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Upper bin edges for equal-frequency binning, duplicates collapsed. A value
/// falls in bin `i` = number of edges strictly below it.
pub fn equal_frequency_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..bins.max(1))
        .map(|k| (k * n).div_ceil(bins))
        .filter(|&idx| idx >= 1)
        .map(|idx| sorted[idx - 1])
        .collect();
    edges.dedup();
    edges
}

pub fn information_gain(values: &[f64], labels: &[bool], bins: usize) -> f64 {
    let n = values.len();
    let pos = labels.iter().filter(|&&l| l).count();
    let h = entropy_bits(pos, n);
    if h == 0.0 {
        return 0.0;
    }
    let edges = equal_frequency_edges(values, bins);
    let mut counts = vec![(0usize, 0usize); edges.len() + 1];
    for (&v, &l) in values.iter().zip(labels) {
        let b = edges.partition_point(|&e| e < v);
        counts[b].0 += 1;
        counts[b].1 += l as usize;
    }
    let cond: f64 = counts
        .iter()
        .filter(|c| c.0 > 0)
        .map(|&(nb, pb)| nb as f64 / n as f64 * entropy_bits(pb, nb))
        .sum();
    (h - cond).clamp(0.0, h)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureGain {
    pub index: usize,
    pub name: String,
    pub gain: f64,
}

/// Features ordered by information gain (bits), highest first; ties by index.
pub fn rank_features_information_gain(data: &Dataset, bins: usize) -> Vec<FeatureGain> {
    let mut out: Vec<FeatureGain> = (0..data.n_features())
        .into_par_iter()
        .map(|f| FeatureGain {
            index: f,
            name: data.names[f].clone(),
            gain: information_gain(&data.columns[f], &data.labels, bins),
        })
        .collect();
    out.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.index.cmp(&b.index)));
    out
}

pub const DEFAULT_BINS: usize = 10;
