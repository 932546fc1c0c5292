//! From-scratch binary classifiers (AdaBoost on decision stumps and a
//! random forest of Gini-split CART trees) plus the confusion-matrix
//! metrics used to score reduced representations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::Dense;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LabeledFeatures {
    pub features: Dense,
    /// 0 = negative class, 1 = positive class.
    pub labels: Vec<u8>,
}

impl LabeledFeatures {
    pub fn new(features: Dense, labels: Vec<u8>) -> Result<Self> {
        if features.rows != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows for {} labels",
                features.rows,
                labels.len()
            )));
        }
        if features.data.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidMatrix("NaN feature".into()));
        }
        Ok(Self { features, labels })
    }

    fn check_both_classes(&self) -> Result<()> {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == self.labels.len() {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Stump {
    feature: usize,
    threshold: f64,
    /// +1: predict positive when value > threshold; -1: inverted.
    polarity: i8,
}

impl Stump {
    fn predict(&self, row: &[f64]) -> i8 {
        let raw = if row[self.feature] > self.threshold { 1 } else { -1 };
        raw * self.polarity
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    feature: usize,
    threshold: f64,
    left: Option<Box<TreeNode>>,
    right: Option<Box<TreeNode>>,
    /// Majority label at this node, used at leaves.
    label: u8,
}

#[derive(Debug, Clone)]
pub enum TrainedClassifier {
    AdaboostStumps { stumps: Vec<(Stump, f64)> },
    RandomForest { trees: Vec<TreeNode> },
}

// The payload types are private; expose the width for validation.
impl TrainedClassifier {
    fn width(&self) -> Option<usize> {
        match self {
            TrainedClassifier::AdaboostStumps { stumps } => {
                stumps.iter().map(|(s, _)| s.feature + 1).max()
            }
            TrainedClassifier::RandomForest { trees } => {
                fn max_feat(n: &TreeNode) -> usize {
                    let mut m = n.feature + 1;
                    if let Some(l) = &n.left {
                        m = m.max(max_feat(l));
                    }
                    if let Some(r) = &n.right {
                        m = m.max(max_feat(r));
                    }
                    m
                }
                trees.iter().map(|t| max_feat(t)).max()
            }
        }
    }
}

/// Weighted-error-minimizing stump over all features and thresholds.
/// Returns the stump and its weighted error.
fn best_stump(data: &LabeledFeatures, weights: &[f64]) -> (Stump, f64) {
    let n = data.features.rows;
    let k = data.features.cols;
    let total: f64 = weights.iter().sum();
    // signed labels: +1 positive, -1 negative
    let y: Vec<f64> = data.labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();

    let mut best = Stump {
        feature: 0,
        threshold: f64::NEG_INFINITY,
        polarity: 1,
    };
    // "everything positive" baseline: error = weight of negatives
    let mut best_err = weights
        .iter()
        .zip(&y)
        .filter(|(_, &yy)| yy < 0.0)
        .map(|(w, _)| w)
        .sum::<f64>();
    if best_err > total - best_err {
        best_err = total - best_err;
        best.polarity = -1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    for f in 0..k {
        order.sort_by(|&a, &b| {
            data.features
                .get(a, f)
                .partial_cmp(&data.features.get(b, f))
                .unwrap()
                .then(a.cmp(&b))
        });
        // err(threshold, polarity=+1) = sum_{v > thr, y=-1} w + sum_{v <= thr, y=+1} w
        // scan thresholds between distinct values, updating incrementally
        let mut err = weights
            .iter()
            .zip(&y)
            .filter(|(_, &yy)| yy < 0.0)
            .map(|(w, _)| w)
            .sum::<f64>(); // threshold below all values: all predicted positive
        let mut i = 0;
        while i < n {
            let v = data.features.get(order[i], f);
            // move every point with this value to the "<= threshold" side
            while i < n && data.features.get(order[i], f) == v {
                let idx = order[i];
                err += y[idx] * weights[idx];
                i += 1;
            }
            let thr = if i < n {
                (v + data.features.get(order[i], f)) / 2.0
            } else {
                v
            };
            let (e, pol) = if err <= total - err {
                (err, 1)
            } else {
                (total - err, -1)
            };
            if e < best_err - 1e-15 {
                best_err = e;
                best = Stump {
                    feature: f,
                    threshold: thr,
                    polarity: pol,
                };
            }
        }
    }
    (best, best_err / total)
}

pub fn train_adaboost(data: &LabeledFeatures, rounds: usize, _seed: u64) -> Result<TrainedClassifier> {
    if rounds < 1 {
        return Err(Error::InvalidParameter("rounds must be >= 1".into()));
    }
    data.check_both_classes()?;
    let n = data.features.rows;
    let y: Vec<f64> = data.labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();
    for _round in 0..rounds {
        let (stump, err) = best_stump(data, &w);
        if err >= 0.5 - 1e-12 {
            break; // no better than chance; stop adding
        }
        if err < 1e-12 {
            stumps.push((stump, 12.0)); // perfect stump dominates the vote
            break;
        }
        let alpha = 0.5 * ((1.0 - err) / err).ln();
        // reweight: up-weight mistakes
        let mut total = 0.0;
        for i in 0..n {
            let pred = stump.predict(data.features.row(i)) as f64;
            w[i] *= (-alpha * y[i] * pred).exp();
            total += w[i];
        }
        for wi in &mut w {
            *wi /= total;
        }
        stumps.push((stump, alpha));
    }
    Ok(TrainedClassifier::AdaboostStumps { stumps })
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

fn majority(labels: &[u8], idx: &[usize]) -> u8 {
    let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
    u8::from(pos * 2 >= idx.len())
}

fn grow_tree(
    data: &LabeledFeatures,
    idx: &[usize],
    depth: usize,
    max_depth: usize,
    n_sub_features: usize,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    let label = majority(&data.labels, idx);
    let pos = idx.iter().filter(|&&i| data.labels[i] == 1).count();
    if depth >= max_depth || idx.len() < 2 || pos == 0 || pos == idx.len() {
        return TreeNode {
            feature: 0,
            threshold: 0.0,
            left: None,
            right: None,
            label,
        };
    }

    let k = data.features.cols;
    let mut candidates: Vec<usize> = (0..k).collect();
    // sample sqrt(k) features without replacement
    for i in 0..n_sub_features.min(k) {
        let j = rng.gen_range(i..k);
        candidates.swap(i, j);
    }
    candidates.truncate(n_sub_features.min(k));
    candidates.sort_unstable();

    let total_pos = pos as f64;
    let total = idx.len() as f64;
    let parent_gini = gini(total_pos, total);

    let mut best: Option<(usize, f64, f64)> = None; // feature, threshold, impurity
    let mut sorted = idx.to_vec();
    for &f in &candidates {
        sorted.sort_by(|&a, &b| {
            data.features
                .get(a, f)
                .partial_cmp(&data.features.get(b, f))
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut left_pos = 0.0;
        let mut left_n = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let v = data.features.get(sorted[i], f);
            while i < sorted.len() && data.features.get(sorted[i], f) == v {
                left_pos += f64::from(data.labels[sorted[i]]);
                left_n += 1.0;
                i += 1;
            }
            if i == sorted.len() {
                break; // no split puts everything on one side
            }
            let thr = (v + data.features.get(sorted[i], f)) / 2.0;
            let right_n = total - left_n;
            let right_pos = total_pos - left_pos;
            let impurity =
                (left_n / total) * gini(left_pos, left_n) + (right_n / total) * gini(right_pos, right_n);
            if best.map_or(true, |(_, _, b)| impurity < b - 1e-15) {
                best = Some((f, thr, impurity));
            }
        }
    }

    match best {
        Some((f, thr, impurity)) if impurity < parent_gini - 1e-15 => {
            let left_idx: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| data.features.get(i, f) <= thr)
                .collect();
            let right_idx: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| data.features.get(i, f) > thr)
                .collect();
            if left_idx.is_empty() || right_idx.is_empty() {
                return TreeNode {
                    feature: 0,
                    threshold: 0.0,
                    left: None,
                    right: None,
                    label,
                };
            }
            let left = grow_tree(data, &left_idx, depth + 1, max_depth, n_sub_features, rng);
            let right = grow_tree(data, &right_idx, depth + 1, max_depth, n_sub_features, rng);
            TreeNode {
                feature: f,
                threshold: thr,
                left: Some(Box::new(left)),
                right: Some(Box::new(right)),
                label,
            }
        }
        _ => TreeNode {
            feature: 0,
            threshold: 0.0,
            left: None,
            right: None,
            label,
        },
    }
}

fn tree_predict(node: &TreeNode, row: &[f64]) -> u8 {
    match (&node.left, &node.right) {
        (Some(l), Some(r)) => {
            if row[node.feature] <= node.threshold {
                tree_predict(l, row)
            } else {
                tree_predict(r, row)
            }
        }
        _ => node.label,
    }
}

pub fn train_random_forest(
    data: &LabeledFeatures,
    n_trees: usize,
    max_depth: usize,
    seed: u64,
) -> Result<TrainedClassifier> {
    if n_trees < 1 {
        return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
    }
    data.check_both_classes()?;
    let n = data.features.rows;
    let n_sub = (data.features.cols as f64).sqrt().ceil().max(1.0) as usize;
    let mut trees = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        // per-tree derived seed keeps training deterministic
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (t as u64).wrapping_mul(0x9e3779b97f4a7c15));
        let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        trees.push(grow_tree(data, &bootstrap, 0, max_depth, n_sub, &mut rng));
    }
    Ok(TrainedClassifier::RandomForest { trees })
}

pub fn predict(model: &TrainedClassifier, features: &Dense) -> Result<Vec<u8>> {
    if let Some(w) = model.width() {
        if features.cols < w {
            return Err(Error::DimensionMismatch(format!(
                "model uses feature {w}, input has {} columns",
                features.cols
            )));
        }
    }
    let out = (0..features.rows)
        .map(|r| {
            let row = features.row(r);
            match model {
                TrainedClassifier::AdaboostStumps { stumps } => {
                    let score: f64 = stumps
                        .iter()
                        .map(|(s, a)| a * f64::from(s.predict(row)))
                        .sum();
                    u8::from(score > 0.0)
                }
                TrainedClassifier::RandomForest { trees } => {
                    let pos = trees.iter().filter(|t| tree_predict(t, row) == 1).count();
                    u8::from(pos * 2 >= trees.len())
                }
            }
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tp: usize,
}

pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let mut cm = ConfusionMatrix {
        tn: 0,
        fp: 0,
        fn_: 0,
        tp: 0,
    };
    for (&p, &t) in pred.iter().zip(truth) {
        match (t, p) {
            (0, 0) => cm.tn += 1,
            (0, _) => cm.fp += 1,
            (_, 0) => cm.fn_ += 1,
            _ => cm.tp += 1,
        }
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.tp + cm.tn + cm.fp + cm.fn_;
    if total == 0 {
        return Err(Error::InvalidParameter("empty confusion matrix".into()));
    }
    Ok((cm.tp + cm.tn) as f64 / total as f64)
}
