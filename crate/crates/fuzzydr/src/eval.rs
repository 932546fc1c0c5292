//! Experiment harness: stratified k-fold cross validation over the
//! {reduction method x dimension x weighting x fuzzifier x classifier}
//! grid, with CSV / markdown reporting.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, ReduceMethod, ReduceOptions};
use crate::classify::{self, LabeledFeatures};
use crate::corpus::{self, CorpusFormat, Document, TokenizerConfig};
use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::fuzzy::{self, FuzzyConfig};
use crate::sparse::SparseMatrix;
use crate::weighting::{self, WeightingMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Adaboost,
    RandomForest,
}

impl ClassifierKind {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::Adaboost => "adaboost",
            ClassifierKind::RandomForest => "random_forest",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "adaboost" => Ok(ClassifierKind::Adaboost),
            "random_forest" => Ok(ClassifierKind::RandomForest),
            other => Err(Error::InvalidParameter(format!(
                "unknown classifier {other:?}"
            ))),
        }
    }
}

fn default_dimensions() -> Vec<usize> {
    (1..=10).map(|i| i * 10).collect()
}

fn default_methods() -> Vec<ReduceMethod> {
    vec![ReduceMethod::Fc, ReduceMethod::Pca, ReduceMethod::Svd]
}

fn default_fuzzifiers() -> Vec<f64> {
    vec![1.5, 2.0, 2.5, 3.0]
}

fn default_weightings() -> Vec<WeightingMethod> {
    vec![WeightingMethod::None]
}

fn default_folds() -> usize {
    5
}

fn default_classifiers() -> Vec<ClassifierKind> {
    vec![ClassifierKind::Adaboost, ClassifierKind::RandomForest]
}

fn default_master_seed() -> u64 {
    42
}

fn default_reduce_whole_corpus() -> bool {
    true
}

fn default_adaboost_rounds() -> usize {
    50
}

fn default_forest_trees() -> usize {
    50
}

fn default_forest_max_depth() -> usize {
    12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    #[serde(default = "default_dimensions")]
    pub dimensions: Vec<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<ReduceMethod>,
    #[serde(default = "default_fuzzifiers")]
    pub fuzzifiers: Vec<f64>,
    #[serde(default = "default_weightings")]
    pub weightings: Vec<WeightingMethod>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    /// When true (the default) the reduction is fitted once on the whole
    /// corpus before cross-validation; when false it is refitted on each
    /// training split and test documents are folded in.
    #[serde(default = "default_reduce_whole_corpus")]
    pub reduce_whole_corpus: bool,
    #[serde(default = "default_adaboost_rounds")]
    pub adaboost_rounds: usize,
    #[serde(default = "default_forest_trees")]
    pub forest_trees: usize,
    #[serde(default = "default_forest_max_depth")]
    pub forest_max_depth: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl ExperimentPlan {
    /// Parse a plan from JSON bytes. Entry point for untrusted input.
    pub fn parse_json(data: &[u8]) -> Result<Self> {
        let plan: ExperimentPlan = serde_json::from_slice(data).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidParameter("folds must be >= 2".into()));
        }
        if self.dimensions.iter().any(|&d| d < 2) {
            return Err(Error::InvalidParameter("dimensions must all be >= 2".into()));
        }
        if self.methods.contains(&ReduceMethod::Fc)
            && self.fuzzifiers.iter().any(|&q| q <= 1.0)
        {
            return Err(Error::InvalidParameter("fuzzifiers must be > 1".into()));
        }
        Ok(())
    }

    /// Methods expanded by fuzzifier: fc once per q, pca/svd once.
    pub fn variants(&self) -> Vec<(ReduceMethod, Option<f64>)> {
        let mut out = Vec::new();
        for &m in &self.methods {
            match m {
                ReduceMethod::Fc => {
                    for &q in &self.fuzzifiers {
                        out.push((m, Some(q)));
                    }
                }
                _ => out.push((m, None)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: ReduceMethod,
    pub fuzzifier: Option<f64>,
    pub weighting: WeightingMethod,
    pub dimension: usize,
    pub classifier: ClassifierKind,
    pub fold: usize,
    pub accuracy: f64,
    /// Number of document rows the reduction saw at fit time
    /// (leakage instrumentation).
    pub fit_rows_seen: usize,
}

impl ResultRow {
    pub fn series_label(&self) -> String {
        series_label(self.method, self.fuzzifier)
    }
}

pub fn series_label(method: ReduceMethod, fuzzifier: Option<f64>) -> String {
    match fuzzifier {
        Some(q) => format!("{}-{}", method.name(), q),
        None => method.name().to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct CellFailure {
    pub method: ReduceMethod,
    pub fuzzifier: Option<f64>,
    pub weighting: WeightingMethod,
    pub dimension: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<CellFailure>,
}

/// Stratified fold assignment: shuffles each class with the seeded RNG
/// and deals members round-robin, carrying the fold cursor across
/// classes so the fold sizes differ by at most one overall.
pub fn stratified_kfold(labels: &[String], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidParameter("folds must be >= 2".into()));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    for (label, members) in &by_class {
        if members.len() < folds {
            return Err(Error::ClassTooSmall {
                label: (*label).to_string(),
                count: members.len(),
                folds,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    let mut cursor = 0usize;
    for members in by_class.values() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        for &i in &shuffled {
            assignment[i] = cursor % folds;
            cursor += 1;
        }
    }
    Ok(assignment)
}

/// Binary label encoding: the corpus must carry exactly two distinct
/// labels; the lexicographically larger one is the positive class.
pub fn binarize_labels(labels: &[String]) -> Result<Vec<u8>> {
    let mut distinct: Vec<&String> = labels.iter().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "need exactly 2 classes, found {}",
            distinct.len()
        )));
    }
    let positive = distinct[1].clone();
    Ok(labels.iter().map(|l| u8::from(*l == positive)).collect())
}

fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = master ^ 0x9e3779b97f4a7c15;
    for &p in parts {
        h ^= p.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_mul(0xff51afd7ed558ccd);
        h ^= h >> 33;
    }
    h
}

struct Cell {
    weighting_idx: usize,
    variant_idx: usize,
    dimension: usize,
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    let path = plan
        .corpus
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("plan has no corpus path".into()))?;
    let format = if path.extension().is_some_and(|e| e == "csv") {
        CorpusFormat::Csv
    } else {
        CorpusFormat::Jsonl
    };
    let docs = corpus::load_corpus(path, format)?;
    run_experiment_on(&docs, plan)
}

pub fn run_experiment_on(docs: &[Document], plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let (dtm, _vocab) = corpus::build_dtm(docs, &TokenizerConfig::default())?;
    let labels: Vec<String> = docs.iter().map(|d| d.label.clone()).collect();
    run_experiment_matrix(&dtm, &labels, plan)
}

pub fn run_experiment_matrix(
    dtm: &SparseMatrix,
    labels: &[String],
    plan: &ExperimentPlan,
) -> Result<ExperimentResult> {
    plan.validate()?;
    let binary = binarize_labels(labels)?;
    let fold_of = stratified_kfold(labels, plan.folds, derive_seed(plan.master_seed, &[0]))?;

    // weighted matrices computed once per scheme
    let weighted: Vec<SparseMatrix> = plan
        .weightings
        .iter()
        .map(|&w| {
            let gw = weighting::compute_weights(dtm, w)?;
            weighting::apply_weights(dtm, &gw)
        })
        .collect::<Result<_>>()?;

    let variants = plan.variants();
    let mut cells = Vec::new();
    for wi in 0..plan.weightings.len() {
        for vi in 0..variants.len() {
            for &dim in &plan.dimensions {
                cells.push(Cell {
                    weighting_idx: wi,
                    variant_idx: vi,
                    dimension: dim,
                });
            }
        }
    }

    let outcomes: Vec<std::result::Result<Vec<ResultRow>, CellFailure>> = cells
        .par_iter()
        .map(|cell| {
            let (method, fuzzifier) = variants[cell.variant_idx];
            let weighting = plan.weightings[cell.weighting_idx];
            run_cell(
                &weighted[cell.weighting_idx],
                &binary,
                &fold_of,
                plan,
                method,
                fuzzifier,
                weighting,
                cell.dimension,
            )
            .map_err(|e| CellFailure {
                method,
                fuzzifier,
                weighting,
                dimension: cell.dimension,
                message: e.to_string(),
            })
        })
        .collect();

    let mut result = ExperimentResult::default();
    for outcome in outcomes {
        match outcome {
            Ok(rows) => result.rows.extend(rows),
            Err(fail) => result.failures.push(fail),
        }
    }
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    weighted: &SparseMatrix,
    binary: &[u8],
    fold_of: &[usize],
    plan: &ExperimentPlan,
    method: ReduceMethod,
    fuzzifier: Option<f64>,
    weighting: WeightingMethod,
    dim: usize,
) -> Result<Vec<ResultRow>> {
    let n = weighted.n_rows();
    let cell_seed = derive_seed(
        plan.master_seed,
        &[
            method as u64 + 1,
            fuzzifier.map_or(0, |q| (q * 1000.0) as u64),
            weighting as u64,
            dim as u64,
        ],
    );
    let opts = ReduceOptions {
        fuzzifier: fuzzifier.unwrap_or(2.0),
        seed: cell_seed,
        ..Default::default()
    };

    let mut rows = Vec::new();
    if plan.reduce_whole_corpus {
        let rep = baselines::reduce(weighted, method, dim, &opts)?;
        for fold in 0..plan.folds {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
            score_split(
                &rep, &rep, &train, &test, binary, plan, method, fuzzifier, weighting, dim, fold,
                cell_seed, n, &mut rows,
            )?;
        }
    } else {
        for fold in 0..plan.folds {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
            let train_m = weighted.select_rows(&train)?;
            let test_m = weighted.select_rows(&test)?;
            let (train_rep, test_rep) = match method {
                ReduceMethod::Fc => {
                    let mut cfg = FuzzyConfig::new(dim, opts.fuzzifier);
                    cfg.seed = cell_seed;
                    let fit = fuzzy::fit(&train_m, &cfg)?;
                    let test_mu = fuzzy::transform(&test_m, &fit.prototypes, opts.fuzzifier)?;
                    (
                        Dense {
                            rows: fit.memberships.n_rows,
                            cols: fit.memberships.k,
                            data: fit.memberships.data,
                        },
                        Dense {
                            rows: test_mu.n_rows,
                            cols: test_mu.k,
                            data: test_mu.data,
                        },
                    )
                }
                ReduceMethod::Svd => {
                    let svd = baselines::truncated_svd(
                        &train_m,
                        dim,
                        cell_seed,
                        opts.oversample,
                        opts.power_iters,
                    )?;
                    // fold-in: rows of A_test projected onto V
                    let mut test_rep = Dense::zeros(test_m.n_rows(), dim);
                    for r in 0..test_m.n_rows() {
                        let (cols, vals) = test_m.row(r);
                        for c in 0..dim {
                            let mut acc = 0.0;
                            for (&ci, &v) in cols.iter().zip(vals) {
                                acc += v * svd.v.get(ci, c);
                            }
                            test_rep.set(r, c, acc);
                        }
                    }
                    (svd.scores(), test_rep)
                }
                ReduceMethod::Pca => {
                    let pca = baselines::pca_scores_with(
                        &train_m,
                        dim,
                        cell_seed,
                        opts.oversample,
                        opts.power_iters,
                    )?;
                    let test_rep = pca.project(&test_m)?;
                    (pca.scores, test_rep)
                }
            };
            let local_train: Vec<usize> = (0..train.len()).collect();
            let local_test: Vec<usize> = (0..test.len()).collect();
            let train_labels: Vec<u8> = train.iter().map(|&i| binary[i]).collect();
            let test_labels: Vec<u8> = test.iter().map(|&i| binary[i]).collect();
            score_local(
                &train_rep,
                &test_rep,
                &local_train,
                &local_test,
                &train_labels,
                &test_labels,
                plan,
                method,
                fuzzifier,
                weighting,
                dim,
                fold,
                cell_seed,
                train.len(),
                &mut rows,
            )?;
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn score_split(
    train_rep: &Dense,
    test_rep: &Dense,
    train: &[usize],
    test: &[usize],
    binary: &[u8],
    plan: &ExperimentPlan,
    method: ReduceMethod,
    fuzzifier: Option<f64>,
    weighting: WeightingMethod,
    dim: usize,
    fold: usize,
    cell_seed: u64,
    fit_rows_seen: usize,
    rows: &mut Vec<ResultRow>,
) -> Result<()> {
    let train_labels: Vec<u8> = train.iter().map(|&i| binary[i]).collect();
    let test_labels: Vec<u8> = test.iter().map(|&i| binary[i]).collect();
    score_local(
        train_rep,
        test_rep,
        train,
        test,
        &train_labels,
        &test_labels,
        plan,
        method,
        fuzzifier,
        weighting,
        dim,
        fold,
        cell_seed,
        fit_rows_seen,
        rows,
    )
}

#[allow(clippy::too_many_arguments)]
fn score_local(
    train_rep: &Dense,
    test_rep: &Dense,
    train: &[usize],
    test: &[usize],
    train_labels: &[u8],
    test_labels: &[u8],
    plan: &ExperimentPlan,
    method: ReduceMethod,
    fuzzifier: Option<f64>,
    weighting: WeightingMethod,
    dim: usize,
    fold: usize,
    cell_seed: u64,
    fit_rows_seen: usize,
    rows: &mut Vec<ResultRow>,
) -> Result<()> {
    let gather = |rep: &Dense, idx: &[usize]| {
        Dense::from_rows(idx.iter().map(|&i| rep.row(i).to_vec()).collect())
    };
    let train_x = gather(train_rep, train);
    let test_x = gather(test_rep, test);
    let train_data = LabeledFeatures::new(train_x, train_labels.to_vec())?;
    for &kind in &plan.classifiers {
        let clf_seed = derive_seed(cell_seed, &[fold as u64, kind as u64]);
        let model = match kind {
            ClassifierKind::Adaboost => {
                classify::train_adaboost(&train_data, plan.adaboost_rounds, clf_seed)?
            }
            ClassifierKind::RandomForest => classify::train_random_forest(
                &train_data,
                plan.forest_trees,
                plan.forest_max_depth,
                clf_seed,
            )?,
        };
        let pred = classify::predict(&model, &test_x)?;
        let acc = classify::accuracy(&classify::confusion(&pred, test_labels)?)?;
        rows.push(ResultRow {
            method,
            fuzzifier,
            weighting,
            dimension: dim,
            classifier: kind,
            fold,
            accuracy: acc,
            fit_rows_seen,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub series: String,
    pub weighting: WeightingMethod,
    pub dimension: usize,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// Mean/std per (series, weighting, dimension), over folds and classifiers.
pub fn aggregate(rows: &[ResultRow]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.series_label(), r.weighting.name().to_string(), r.dimension))
            .or_default()
            .push(r.accuracy);
    }
    groups
        .into_iter()
        .map(|((series, weighting, dimension), accs)| {
            let n = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / n;
            let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
            Aggregate {
                series,
                weighting: WeightingMethod::parse(&weighting).unwrap(),
                dimension,
                mean,
                std: var.sqrt(),
                count: accs.len(),
            }
        })
        .collect()
}

/// Standard deviation of a series' per-dimension mean accuracies:
/// the stability measure reported alongside each method.
pub fn stability_across_dimensions(rows: &[ResultRow], series: &str) -> Option<f64> {
    let mut by_dim: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.series_label() == series) {
        by_dim.entry(r.dimension).or_default().push(r.accuracy);
    }
    if by_dim.len() < 2 {
        return None;
    }
    let means: Vec<f64> = by_dim
        .values()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let m = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / means.len() as f64;
    Some(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

pub fn emit_report<W: Write>(result: &ExperimentResult, mut w: W, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            writeln!(w, "method,fuzzifier,weighting,dimension,classifier,fold,accuracy")?;
            for r in &result.rows {
                let q = r.fuzzifier.map_or(String::new(), |q| q.to_string());
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.method.name(),
                    q,
                    r.weighting.name(),
                    r.dimension,
                    r.classifier.name(),
                    r.fold,
                    r.accuracy
                )?;
            }
        }
        ReportFormat::Markdown => {
            let aggs = aggregate(&result.rows);
            let mut dims: Vec<usize> = aggs.iter().map(|a| a.dimension).collect();
            dims.sort_unstable();
            dims.dedup();
            let mut series: Vec<String> = aggs.iter().map(|a| a.series.clone()).collect();
            series.sort();
            series.dedup();
            write!(w, "| method |")?;
            for d in &dims {
                write!(w, " k={d} |")?;
            }
            writeln!(w)?;
            write!(w, "|---|")?;
            for _ in &dims {
                write!(w, "---|")?;
            }
            writeln!(w)?;
            for s in &series {
                write!(w, "| {s} |")?;
                for d in &dims {
                    let cell: Vec<&Aggregate> = aggs
                        .iter()
                        .filter(|a| &a.series == s && a.dimension == *d)
                        .collect();
                    if cell.is_empty() {
                        write!(w, " - |")?;
                    } else {
                        let mean = cell.iter().map(|a| a.mean * a.count as f64).sum::<f64>()
                            / cell.iter().map(|a| a.count as f64).sum::<f64>();
                        write!(w, " {mean:.5} |")?;
                    }
                }
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

/// Parse a report CSV back into rows (round-trip support).
pub fn parse_report_csv(data: &[u8]) -> Result<Vec<ResultRow>> {
    let text = std::str::from_utf8(data).map_err(|_| Error::Parse {
        line: 0,
        msg: "report is not UTF-8".into(),
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == "method,fuzzifier,weighting,dimension,classifier,fold,accuracy" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "bad report header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let err = |msg: &str| Error::Parse {
            line: i + 1,
            msg: msg.to_string(),
        };
        if f.len() != 7 {
            return Err(err("expected 7 fields"));
        }
        rows.push(ResultRow {
            method: ReduceMethod::parse(f[0])?,
            fuzzifier: if f[1].is_empty() {
                None
            } else {
                Some(f[1].parse().map_err(|_| err("bad fuzzifier"))?)
            },
            weighting: WeightingMethod::parse(f[2])?,
            dimension: f[3].parse().map_err(|_| err("bad dimension"))?,
            classifier: ClassifierKind::parse(f[4])?,
            fold: f[5].parse().map_err(|_| err("bad fold"))?,
            accuracy: f[6].parse().map_err(|_| err("bad accuracy"))?,
            fit_rows_seen: 0,
        });
    }
    Ok(rows)
}

/// Peak resident set size of this process, from /proc (0 if unavailable).
pub fn peak_rss_bytes() -> u64 {
    if let Ok(status) = std::fs::read_to_string("/proc/self/status") {
        for line in status.lines() {
            if let Some(rest) = line.strip_prefix("VmHWM:") {
                let kb: u64 = rest
                    .trim()
                    .trim_end_matches("kB")
                    .trim()
                    .parse()
                    .unwrap_or(0);
                return kb * 1024;
            }
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{two_topic_corpus, SynthConfig};

    #[test]
    fn kfold_balanced_divisible() {
        let labels: Vec<String> = (0..10)
            .map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string())
            .collect();
        let assign = stratified_kfold(&labels, 5, 0).unwrap();
        for fold in 0..5 {
            let members: Vec<usize> = (0..10).filter(|&i| assign[i] == fold).collect();
            assert_eq!(members.len(), 2);
            let a = members.iter().filter(|&&i| labels[i] == "a").count();
            assert_eq!(a, 1, "fold {fold} should hold one of each class");
        }
    }

    #[test]
    fn kfold_deterministic() {
        let labels: Vec<String> = (0..30).map(|i| format!("c{}", i % 3)).collect();
        assert_eq!(
            stratified_kfold(&labels, 5, 9).unwrap(),
            stratified_kfold(&labels, 5, 9).unwrap()
        );
    }

    #[test]
    fn kfold_103_fold_sizes() {
        let labels: Vec<String> = (0..103)
            .map(|i| if i < 51 { "x" } else { "y" }.to_string())
            .collect();
        let assign = stratified_kfold(&labels, 5, 3).unwrap();
        let mut sizes: Vec<usize> = (0..5)
            .map(|f| assign.iter().filter(|&&a| a == f).count())
            .collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![20, 20, 21, 21, 21]);
    }

    #[test]
    fn kfold_class_too_small() {
        let labels: Vec<String> = vec!["a".into(), "a".into(), "b".into()];
        assert!(matches!(
            stratified_kfold(&labels, 2, 0),
            Err(Error::ClassTooSmall { .. })
        ));
    }

    #[test]
    fn kfold_per_class_proportions_within_one() {
        let labels: Vec<String> = (0..47)
            .map(|i| if i % 3 == 0 { "a" } else { "b" }.to_string())
            .collect();
        let assign = stratified_kfold(&labels, 5, 11).unwrap();
        for class in ["a", "b"] {
            let per_fold: Vec<usize> = (0..5)
                .map(|f| {
                    (0..47)
                        .filter(|&i| assign[i] == f && labels[i] == class)
                        .count()
                })
                .collect();
            let min = per_fold.iter().min().unwrap();
            let max = per_fold.iter().max().unwrap();
            assert!(max - min <= 1, "class {class} folds {per_fold:?}");
        }
    }

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            dimensions: vec![2],
            methods: vec![ReduceMethod::Svd],
            folds: 2,
            adaboost_rounds: 10,
            forest_trees: 10,
            forest_max_depth: 4,
            ..Default::default()
        }
    }

    fn small_corpus() -> Vec<Document> {
        two_topic_corpus(&SynthConfig {
            n_docs: 40,
            vocab_size: 60,
            shared_token_prob: 0.3,
            tokens_per_doc: 20,
            seed: 5,
        })
    }

    #[test]
    fn svd_plan_contract() {
        let result = run_experiment_on(&small_corpus(), &small_plan()).unwrap();
        assert!(result.failures.is_empty(), "{:?}", result.failures);
        // 1 method x 1 dim x 1 weighting x 2 classifiers x 2 folds
        assert_eq!(result.rows.len(), 4);
        for r in &result.rows {
            assert!((0.0..=1.0).contains(&r.accuracy));
        }
        let per_clf = result
            .rows
            .iter()
            .filter(|r| r.classifier == ClassifierKind::Adaboost)
            .count();
        assert_eq!(per_clf, 2);
    }

    #[test]
    fn experiment_deterministic() {
        let docs = small_corpus();
        let a = run_experiment_on(&docs, &small_plan()).unwrap();
        let b = run_experiment_on(&docs, &small_plan()).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn separable_corpus_scores_well_everywhere() {
        let docs = two_topic_corpus(&SynthConfig {
            n_docs: 60,
            vocab_size: 80,
            shared_token_prob: 0.0, // disjoint topic vocabularies
            tokens_per_doc: 20,
            seed: 2,
        });
        let plan = ExperimentPlan {
            dimensions: vec![2, 4],
            methods: vec![ReduceMethod::Fc, ReduceMethod::Pca, ReduceMethod::Svd],
            fuzzifiers: vec![2.0],
            folds: 3,
            adaboost_rounds: 20,
            forest_trees: 20,
            forest_max_depth: 6,
            ..Default::default()
        };
        let result = run_experiment_on(&docs, &plan).unwrap();
        assert!(result.failures.is_empty(), "{:?}", result.failures);
        for r in &result.rows {
            assert!(
                r.accuracy >= 0.9,
                "cell {:?} k={} fold={} clf={:?} acc={}",
                r.series_label(),
                r.dimension,
                r.fold,
                r.classifier,
                r.accuracy
            );
        }
    }

    #[test]
    fn strict_mode_fits_only_on_train() {
        let docs = small_corpus();
        let plan = ExperimentPlan {
            reduce_whole_corpus: false,
            ..small_plan()
        };
        let result = run_experiment_on(&docs, &plan).unwrap();
        assert!(result.failures.is_empty(), "{:?}", result.failures);
        for r in &result.rows {
            assert!(
                r.fit_rows_seen < docs.len(),
                "strict mode must not fit on all rows"
            );
        }
        // whole-corpus mode sees everything
        let loose = run_experiment_on(&docs, &small_plan()).unwrap();
        for r in &loose.rows {
            assert_eq!(r.fit_rows_seen, docs.len());
        }
    }

    #[test]
    fn aggregates_match_raw_rows() {
        let result = run_experiment_on(&small_corpus(), &small_plan()).unwrap();
        let aggs = aggregate(&result.rows);
        for a in &aggs {
            let members: Vec<f64> = result
                .rows
                .iter()
                .filter(|r| {
                    r.series_label() == a.series
                        && r.weighting == a.weighting
                        && r.dimension == a.dimension
                })
                .map(|r| r.accuracy)
                .collect();
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            assert!((mean - a.mean).abs() < 1e-12);
            assert_eq!(members.len(), a.count);
        }
    }

    #[test]
    fn report_csv_round_trip() {
        let result = run_experiment_on(&small_corpus(), &small_plan()).unwrap();
        let mut buf = Vec::new();
        emit_report(&result, &mut buf, ReportFormat::Csv).unwrap();
        let parsed = parse_report_csv(&buf).unwrap();
        assert_eq!(parsed.len(), result.rows.len());
        for (p, r) in parsed.iter().zip(&result.rows) {
            assert_eq!(p.method, r.method);
            assert_eq!(p.dimension, r.dimension);
            assert_eq!(p.fold, r.fold);
            assert_eq!(p.accuracy, r.accuracy);
        }
    }

    #[test]
    fn report_one_row() {
        let result = ExperimentResult {
            rows: vec![ResultRow {
                method: ReduceMethod::Pca,
                fuzzifier: None,
                weighting: WeightingMethod::None,
                dimension: 10,
                classifier: ClassifierKind::Adaboost,
                fold: 0,
                accuracy: 0.5,
                fit_rows_seen: 0,
            }],
            failures: vec![],
        };
        let mut buf = Vec::new();
        emit_report(&result, &mut buf, ReportFormat::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("pca,,none,10,adaboost,0,0.5"));
    }

    #[test]
    fn markdown_report_has_all_series() {
        let docs = small_corpus();
        let plan = ExperimentPlan {
            dimensions: vec![2, 3],
            methods: vec![ReduceMethod::Fc, ReduceMethod::Pca, ReduceMethod::Svd],
            fuzzifiers: vec![1.5, 2.0, 2.5, 3.0],
            folds: 2,
            adaboost_rounds: 5,
            forest_trees: 5,
            forest_max_depth: 3,
            ..Default::default()
        };
        let result = run_experiment_on(&docs, &plan).unwrap();
        let mut buf = Vec::new();
        emit_report(&result, &mut buf, ReportFormat::Markdown).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for series in ["fc-1.5", "fc-2", "fc-2.5", "fc-3", "pca", "svd"] {
            assert!(text.contains(&format!("| {series} |")), "missing {series}:\n{text}");
        }
    }

    #[test]
    fn grid_completeness() {
        let docs = small_corpus();
        let plan = ExperimentPlan {
            dimensions: vec![2, 3],
            methods: vec![ReduceMethod::Fc, ReduceMethod::Svd],
            fuzzifiers: vec![1.5, 2.0],
            weightings: vec![WeightingMethod::None, WeightingMethod::Idf],
            folds: 2,
            adaboost_rounds: 5,
            forest_trees: 5,
            forest_max_depth: 3,
            ..Default::default()
        };
        let result = run_experiment_on(&docs, &plan).unwrap();
        let variants = plan.variants().len(); // fc-1.5, fc-2, svd = 3
        assert_eq!(variants, 3);
        let expected = variants * 2 * 2 * 2 * 2; // weightings x dims x classifiers x folds
        assert_eq!(
            result.rows.len() + result.failures.len() * 2 * 2,
            expected
        );
    }

    #[test]
    fn plan_json_defaults_and_validation() {
        let plan = ExperimentPlan::parse_json(b"{}").unwrap();
        assert_eq!(plan.dimensions, default_dimensions());
        assert_eq!(plan.folds, 5);
        assert!(plan.reduce_whole_corpus);
        assert!(ExperimentPlan::parse_json(b"{\"folds\":1}").is_err());
        assert!(ExperimentPlan::parse_json(b"{\"dimensions\":[1]}").is_err());
        assert!(ExperimentPlan::parse_json(b"not json").is_err());
    }

    #[test]
    fn binarize_requires_two_classes() {
        let two = vec!["a".to_string(), "b".to_string(), "a".to_string()];
        assert_eq!(binarize_labels(&two).unwrap(), vec![0, 1, 0]);
        let one = vec!["a".to_string()];
        assert!(binarize_labels(&one).is_err());
    }
}
