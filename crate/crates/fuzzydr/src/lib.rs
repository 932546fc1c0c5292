//! fuzzydr: dimensionality reduction of sparse document-term matrices by
//! fuzzy spherical clustering membership embedding, with PCA/SVD
//! baselines, global term weighting, small from-scratch classifiers and
//! a cross-validation harness.

pub mod baselines;
pub mod bench;
pub mod classify;
pub mod corpus;
pub mod dense;
pub mod error;
pub mod eval;
pub mod fuzzy;
pub mod persist;
pub mod sparse;
pub mod synth;
pub mod weighting;

pub use baselines::{pca_scores, reduce, truncated_svd, ReduceMethod, ReduceOptions};
pub use corpus::{build_dtm, load_corpus, CorpusFormat, Document, TokenizerConfig, Vocabulary};
pub use error::{Error, Result};
pub use eval::{run_experiment, stratified_kfold, ExperimentPlan};
pub use fuzzy::{fit, transform, FuzzyConfig};
pub use persist::{decode_model, load_model, save_model, Model};
pub use sparse::SparseMatrix;
pub use weighting::{apply_weights, compute_weights, WeightingMethod};
