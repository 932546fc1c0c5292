//! Global term weighting schemes and their multiplicative application
//! to the document-term matrix.
//!
//! Conventions: a term with zero total frequency gets weight 0 instead
//! of NaN or infinity. `Idf` uses the global-frequency denominator
//! `log2(n / sum_j tf_ij)`; `IdfDf` is the conventional document-
//! frequency variant `log2(n / df_i)`. `ProbIdf` is the probabilistic
//! form `log2((n - df_i) / df_i)`, clamped below at `PROBIDF_FLOOR`
//! when df_i = n; it can be negative, so downstream cosine code must
//! not assume non-negative weights.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub const PROBIDF_FLOOR: f64 = -8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingMethod {
    None,
    Entropy,
    Gfidf,
    Idf,
    /// Document-frequency variant of IDF.
    IdfDf,
    Normal,
    Probidf,
}

impl WeightingMethod {
    pub fn name(&self) -> &'static str {
        match self {
            WeightingMethod::None => "none",
            WeightingMethod::Entropy => "entropy",
            WeightingMethod::Gfidf => "gfidf",
            WeightingMethod::Idf => "idf",
            WeightingMethod::IdfDf => "idf_df",
            WeightingMethod::Normal => "normal",
            WeightingMethod::Probidf => "probidf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(WeightingMethod::None),
            "entropy" => Ok(WeightingMethod::Entropy),
            "gfidf" => Ok(WeightingMethod::Gfidf),
            "idf" => Ok(WeightingMethod::Idf),
            "idf_df" => Ok(WeightingMethod::IdfDf),
            "normal" => Ok(WeightingMethod::Normal),
            "probidf" => Ok(WeightingMethod::Probidf),
            other => Err(Error::InvalidParameter(format!(
                "unknown weighting method {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalWeightVector {
    pub method: WeightingMethod,
    pub weights: Vec<f64>,
}

pub fn compute_weights(dtm: &SparseMatrix, method: WeightingMethod) -> Result<GlobalWeightVector> {
    match method {
        WeightingMethod::None => Ok(GlobalWeightVector {
            method,
            weights: vec![1.0; dtm.n_cols()],
        }),
        WeightingMethod::Entropy => entropy_weights(dtm),
        WeightingMethod::Gfidf => gfidf_weights(dtm),
        WeightingMethod::Idf => idf_weights(dtm, false),
        WeightingMethod::IdfDf => idf_weights(dtm, true),
        WeightingMethod::Normal => normal_weights(dtm),
        WeightingMethod::Probidf => probidf_weights(dtm),
    }
}

/// weight_i = 1 + sum_j p_ij log2(p_ij) / log2(n) with p_ij = tf_ij / gf_i.
pub fn entropy_weights(dtm: &SparseMatrix) -> Result<GlobalWeightVector> {
    let n = dtm.n_rows();
    if n < 2 {
        return Err(Error::SingleDocumentEntropy);
    }
    let stats = dtm.column_stats();
    let log2_n = (n as f64).log2();
    let mut entropy_sum = vec![0.0; dtm.n_cols()];
    for (cols, vals) in dtm.rows() {
        for (&c, &v) in cols.iter().zip(vals) {
            let p = v / stats.sum[c];
            entropy_sum[c] += p * p.log2();
        }
    }
    let weights = (0..dtm.n_cols())
        .map(|c| {
            if stats.sum[c] == 0.0 {
                0.0
            } else {
                1.0 + entropy_sum[c] / log2_n
            }
        })
        .collect();
    Ok(GlobalWeightVector {
        method: WeightingMethod::Entropy,
        weights,
    })
}

/// weight_i = gf_i / df_i.
pub fn gfidf_weights(dtm: &SparseMatrix) -> Result<GlobalWeightVector> {
    let stats = dtm.column_stats();
    let weights = (0..dtm.n_cols())
        .map(|c| {
            if stats.doc_freq[c] == 0 {
                0.0
            } else {
                stats.sum[c] / stats.doc_freq[c] as f64
            }
        })
        .collect();
    Ok(GlobalWeightVector {
        method: WeightingMethod::Gfidf,
        weights,
    })
}

/// weight_i = log2(n / gf_i), or log2(n / df_i) when `use_doc_freq`.
pub fn idf_weights(dtm: &SparseMatrix, use_doc_freq: bool) -> Result<GlobalWeightVector> {
    let n = dtm.n_rows() as f64;
    let stats = dtm.column_stats();
    let weights = (0..dtm.n_cols())
        .map(|c| {
            let denom = if use_doc_freq {
                stats.doc_freq[c] as f64
            } else {
                stats.sum[c]
            };
            if denom == 0.0 {
                0.0
            } else {
                (n / denom).log2()
            }
        })
        .collect();
    Ok(GlobalWeightVector {
        method: if use_doc_freq {
            WeightingMethod::IdfDf
        } else {
            WeightingMethod::Idf
        },
        weights,
    })
}

/// weight_i = 1 / sqrt(sum_j tf_ij^2).
pub fn normal_weights(dtm: &SparseMatrix) -> Result<GlobalWeightVector> {
    let stats = dtm.column_stats();
    let weights = (0..dtm.n_cols())
        .map(|c| {
            if stats.sum_sq[c] == 0.0 {
                0.0
            } else {
                1.0 / stats.sum_sq[c].sqrt()
            }
        })
        .collect();
    Ok(GlobalWeightVector {
        method: WeightingMethod::Normal,
        weights,
    })
}

/// weight_i = log2((n - df_i) / df_i), floored at PROBIDF_FLOOR.
pub fn probidf_weights(dtm: &SparseMatrix) -> Result<GlobalWeightVector> {
    probidf_weights_with_floor(dtm, PROBIDF_FLOOR)
}

pub fn probidf_weights_with_floor(dtm: &SparseMatrix, floor: f64) -> Result<GlobalWeightVector> {
    let n = dtm.n_rows();
    let stats = dtm.column_stats();
    let weights = (0..dtm.n_cols())
        .map(|c| {
            let df = stats.doc_freq[c];
            if df == 0 {
                0.0
            } else if df == n {
                floor
            } else {
                (((n - df) as f64) / df as f64).log2().max(floor)
            }
        })
        .collect();
    Ok(GlobalWeightVector {
        method: WeightingMethod::Probidf,
        weights,
    })
}

/// out(j,i) = tf_ij * weight_i; entries that become zero are dropped.
pub fn apply_weights(dtm: &SparseMatrix, gw: &GlobalWeightVector) -> Result<SparseMatrix> {
    dtm.scale_columns(&gw.weights)
}

/// CSV export: `term,method,weight`.
pub fn write_weights_csv<W: Write>(
    mut w: W,
    terms: &[String],
    gw: &GlobalWeightVector,
) -> Result<()> {
    if terms.len() != gw.weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} terms for {} weights",
            terms.len(),
            gw.weights.len()
        )));
    }
    writeln!(w, "term,method,weight")?;
    for (t, wt) in terms.iter().zip(&gw.weights) {
        writeln!(w, "{},{},{}", t, gw.method.name(), wt)?;
    }
    Ok(())
}
