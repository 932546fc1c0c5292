//! Corpus ingestion, tokenization and document-term matrix construction.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Document {
    pub id: String,
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Terms are sorted and deduplicated; column order is lexicographic.
    pub fn new(mut terms: Vec<String>) -> Self {
        terms.sort_unstable();
        terms.dedup();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Sidecar file: one term per line, line number = column.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for t in &self.terms {
            writeln!(f, "{t}")?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let terms: Vec<String> = text.lines().map(|l| l.to_string()).collect();
        Ok(Self::new(terms))
    }
}

#[derive(Debug, Clone)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub min_token_length: usize,
    pub stopword_list: Option<HashSet<String>>,
    pub strip_non_alphanumeric: bool,
    pub min_document_frequency: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            min_token_length: 2,
            stopword_list: None,
            strip_non_alphanumeric: true,
            min_document_frequency: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Document>> {
    let data = std::fs::read(path)?;
    parse_corpus(&data, format)
}

/// Parse corpus bytes. Entry point for untrusted input.
pub fn parse_corpus(data: &[u8], format: CorpusFormat) -> Result<Vec<Document>> {
    let docs = match format {
        CorpusFormat::Jsonl => parse_jsonl(data)?,
        CorpusFormat::Csv => parse_csv(data)?,
    };
    let mut seen = HashSet::new();
    for d in &docs {
        if !seen.insert(d.id.as_str()) {
            return Err(Error::DuplicateId(d.id.clone()));
        }
    }
    Ok(docs)
}

fn parse_jsonl(data: &[u8]) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in data.split(|&b| b == b'\n').enumerate() {
        let line = trim_ascii(line);
        if line.is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_slice(line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

fn trim_ascii(mut s: &[u8]) -> &[u8] {
    while let [b' ' | b'\t' | b'\r', rest @ ..] = s {
        s = rest;
    }
    while let [rest @ .., b' ' | b'\t' | b'\r'] = s {
        s = rest;
    }
    s
}

fn parse_csv(data: &[u8]) -> Result<Vec<Document>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(data);
    {
        let headers = reader.headers().map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        let expect = ["id", "label", "text"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expect {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header id,label,text, got {}", got.join(",")),
            });
        }
    }
    let mut docs = Vec::new();
    for result in reader.deserialize() {
        let doc: Document = result.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            msg: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if !current.is_empty() {
            let mut tok = if cfg.lowercase {
                current.to_lowercase()
            } else {
                current.clone()
            };
            current.clear();
            // lowercasing can introduce non-alphanumerics (e.g. U+0130
            // maps to "i" plus a combining dot), so filter again
            if cfg.strip_non_alphanumeric && !tok.chars().all(char::is_alphanumeric) {
                tok.retain(char::is_alphanumeric);
            }
            if tok.chars().count() >= cfg.min_token_length
                && cfg
                    .stopword_list
                    .as_ref()
                    .map_or(true, |sw| !sw.contains(&tok))
            {
                tokens.push(tok);
            }
        }
    };
    for ch in text.chars() {
        let keep = if cfg.strip_non_alphanumeric {
            ch.is_alphanumeric()
        } else {
            !ch.is_whitespace()
        };
        if keep {
            current.push(ch);
        } else {
            flush(&mut current, &mut tokens);
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

/// Count terms per document, prune by document frequency, and assemble
/// the CSR document-term matrix. Rows stay aligned with the corpus
/// order; a document with no surviving tokens yields an all-zero row.
pub fn build_dtm(
    corpus: &[Document],
    cfg: &TokenizerConfig,
) -> Result<(SparseMatrix, Vocabulary)> {
    if corpus.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let doc_counts: Vec<BTreeMap<String, f64>> = corpus
        .iter()
        .map(|d| {
            let mut counts = BTreeMap::new();
            for tok in tokenize(&d.text, cfg) {
                *counts.entry(tok).or_insert(0.0) += 1.0;
            }
            counts
        })
        .collect();

    let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for counts in &doc_counts {
        for term in counts.keys() {
            *doc_freq.entry(term).or_insert(0) += 1;
        }
    }
    let terms: Vec<String> = doc_freq
        .iter()
        .filter(|(_, &df)| df >= cfg.min_document_frequency)
        .map(|(&t, _)| t.to_string())
        .collect();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let vocab = Vocabulary::new(terms);

    let mut triplets = Vec::new();
    for (r, counts) in doc_counts.iter().enumerate() {
        for (term, &count) in counts {
            if let Some(c) = vocab.index_of(term) {
                triplets.push((r, c, count));
            }
        }
    }
    let dtm = SparseMatrix::from_triplets(corpus.len(), vocab.len(), triplets)?;
    Ok((dtm, vocab))
}

/// Re-tokenize documents against a fixed vocabulary (fold-in path).
pub fn dtm_with_vocabulary(
    corpus: &[Document],
    vocab: &Vocabulary,
    cfg: &TokenizerConfig,
) -> Result<SparseMatrix> {
    let mut triplets = Vec::new();
    for (r, d) in corpus.iter().enumerate() {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for tok in tokenize(&d.text, cfg) {
            if let Some(c) = vocab.index_of(&tok) {
                *counts.entry(c).or_insert(0.0) += 1.0;
            }
        }
        for (c, v) in counts {
            triplets.push((r, c, v));
        }
    }
    SparseMatrix::from_triplets(corpus.len(), vocab.len(), triplets)
}

pub fn read_corpus<R: BufRead>(mut r: R, format: CorpusFormat) -> Result<Vec<Document>> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    parse_corpus(&data, format)
}
