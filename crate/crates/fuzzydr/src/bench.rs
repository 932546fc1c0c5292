//! Timing mode: wall-clock scaling of the reduction methods over
//! growing synthetic corpora.

use std::time::Instant;

use crate::baselines::{self, ReduceMethod, ReduceOptions};
use crate::corpus::{self, TokenizerConfig};
use crate::error::Result;
use crate::eval::peak_rss_bytes;
use crate::synth::{two_topic_corpus, SynthConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub phase: String,
    pub wall_ms: f64,
    pub peak_rss_bytes: u64,
}

/// Time DTM construction and each reduction at every corpus size. Fuzzy
/// fits run a fixed iteration budget (min_improvement = 0) so wall time
/// reflects per-iteration cost, not convergence luck.
pub fn bench_rows(
    sizes: &[usize],
    methods: &[ReduceMethod],
    vocab_size: usize,
    k: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in sizes {
        let docs = two_topic_corpus(&SynthConfig {
            n_docs: n,
            vocab_size,
            shared_token_prob: 0.7,
            tokens_per_doc: 40,
            seed,
        });
        let t0 = Instant::now();
        let (dtm, _vocab) = corpus::build_dtm(&docs, &TokenizerConfig::default())?;
        rows.push(BenchRow {
            phase: format!("build_dtm_n{n}"),
            wall_ms: t0.elapsed().as_secs_f64() * 1000.0,
            peak_rss_bytes: peak_rss_bytes(),
        });
        for &method in methods {
            let opts = ReduceOptions {
                seed,
                max_iterations: iterations,
                min_improvement: 0.0,
                ..Default::default()
            };
            let t0 = Instant::now();
            baselines::reduce(&dtm, method, k, &opts)?;
            rows.push(BenchRow {
                phase: format!("{}_n{n}", method.name()),
                wall_ms: t0.elapsed().as_secs_f64() * 1000.0,
                peak_rss_bytes: peak_rss_bytes(),
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of log(wall time) against log(n) for one
/// method's rows: the empirical scaling exponent.
pub fn fitted_exponent(rows: &[BenchRow], method: &str) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            let rest = r.phase.strip_prefix(method)?.strip_prefix("_n")?;
            let n: f64 = rest.parse().ok()?;
            Some((n.ln(), r.wall_ms.max(1e-3).ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_of_exact_power_law() {
        let rows: Vec<BenchRow> = [(100usize, 10.0), (200, 20.0), (400, 40.0)]
            .iter()
            .map(|&(n, ms)| BenchRow {
                phase: format!("fc_n{n}"),
                wall_ms: ms,
                peak_rss_bytes: 0,
            })
            .collect();
        let e = fitted_exponent(&rows, "fc").unwrap();
        assert!((e - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponent_ignores_other_phases() {
        let rows = vec![
            BenchRow {
                phase: "build_dtm_n100".into(),
                wall_ms: 5.0,
                peak_rss_bytes: 0,
            },
            BenchRow {
                phase: "fc_n100".into(),
                wall_ms: 1.0,
                peak_rss_bytes: 0,
            },
        ];
        assert!(fitted_exponent(&rows, "fc").is_none());
    }

    #[test]
    fn bench_emits_row_per_phase() {
        let rows = bench_rows(&[30, 60], &[ReduceMethod::Svd], 50, 3, 2, 7).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.wall_ms >= 0.0));
        assert!(rows.iter().any(|r| r.phase == "svd_n60"));
    }
}
