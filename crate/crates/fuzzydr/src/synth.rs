//! Synthetic two-topic corpus generator for desk-scale experiments
//! and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub vocab_size: usize,
    /// Fraction of tokens drawn from the shared (topic-neutral) pool.
    pub shared_token_prob: f64,
    pub tokens_per_doc: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_docs: 2000,
            vocab_size: 5000,
            shared_token_prob: 0.7,
            tokens_per_doc: 40,
            seed: 0,
        }
    }
}

/// Two overlapping topic vocabularies over a shared pool. The first
/// half of the vocabulary is the shared pool; the remainder is split
/// between the two topics. Every document draws each token from the
/// shared pool with probability `shared_token_prob`, otherwise from
/// its own topic's exclusive block, so separability (and hence the
/// Bayes accuracy) is controlled by that probability and the document
/// length.
pub fn two_topic_corpus(cfg: &SynthConfig) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shared = cfg.vocab_size / 2;
    let per_topic = (cfg.vocab_size - shared) / 2;
    let width = (cfg.vocab_size as f64).log10().ceil().max(1.0) as usize;

    let term = |i: usize| format!("t{:0w$}", i, w = width);
    (0..cfg.n_docs)
        .map(|d| {
            let topic = d % 2;
            let mut words = Vec::with_capacity(cfg.tokens_per_doc);
            for _ in 0..cfg.tokens_per_doc {
                let i = if rng.gen::<f64>() < cfg.shared_token_prob {
                    rng.gen_range(0..shared)
                } else {
                    shared + topic * per_topic + rng.gen_range(0..per_topic)
                };
                words.push(term(i));
            }
            Document {
                id: format!("d{d}"),
                label: if topic == 0 { "alpha" } else { "beta" }.to_string(),
                text: words.join(" "),
            }
        })
        .collect()
}
