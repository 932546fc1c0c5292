//! Versioned binary container for fitted models and weight vectors.
//!
//! Layout (all integers little-endian):
//! ```text
//! [0..5)   magic "FZDM1"
//! [5..9)   format version, u32 (currently 1)
//! [9..10)  kind tag, u8: 1=fc, 2=svd, 3=pca, 4=weights
//! [10..42) sha-256 of the vocabulary (one term per line, '\n' separated)
//! then kind-specific payload, every vector/matrix prefixed by u64
//! lengths and stored as f64 values.
//! ```

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::baselines::{PcaResult, SvdResult};
use crate::corpus::Vocabulary;
use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::fuzzy::Prototypes;
use crate::weighting::{GlobalWeightVector, WeightingMethod};

pub const MAGIC: &[u8; 5] = b"FZDM1";
pub const FORMAT_VERSION: u32 = 1;

const TAG_FC: u8 = 1;
const TAG_SVD: u8 = 2;
const TAG_PCA: u8 = 3;
const TAG_WEIGHTS: u8 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Fc {
        fuzzifier: f64,
        prototypes: Prototypes,
    },
    Svd(SvdResult),
    Pca(PcaResult),
    Weights(GlobalWeightVector),
}

impl Model {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Fc { .. } => "fc",
            Model::Svd(_) => "svd",
            Model::Pca(_) => "pca",
            Model::Weights(_) => "weights",
        }
    }
}

pub fn vocabulary_checksum(vocab: &Vocabulary) -> [u8; 32] {
    let mut h = Sha256::new();
    for term in vocab.terms() {
        h.update(term.as_bytes());
        h.update(b"\n");
    }
    h.finalize().into()
}

struct Enc(Vec<u8>);

impl Enc {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn floats(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.f64(v);
        }
    }
    fn dense(&mut self, m: &Dense) {
        self.u64(m.rows as u64);
        self.u64(m.cols as u64);
        for &v in &m.data {
            self.f64(v);
        }
    }
}

struct Dec<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Dec<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated)?;
        if end > self.buf.len() {
            return Err(Error::Truncated);
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        // length prefix can't exceed what remains in the buffer
        let remaining = (self.buf.len() - self.pos) / 8;
        if n as usize > remaining {
            return Err(Error::Truncated);
        }
        Ok(n as usize)
    }
    fn floats(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn dense(&mut self) -> Result<Dense> {
        let rows = self.len()?;
        let cols = self.len()?;
        let total = rows.checked_mul(cols).ok_or(Error::Truncated)?;
        if total > (self.buf.len() - self.pos) / 8 {
            return Err(Error::Truncated);
        }
        let data: Vec<f64> = (0..total).map(|_| self.f64()).collect::<Result<_>>()?;
        Ok(Dense { rows, cols, data })
    }
}

pub fn encode_model(model: &Model, vocab: &Vocabulary) -> Vec<u8> {
    let mut enc = Enc(Vec::new());
    enc.0.extend_from_slice(MAGIC);
    enc.0.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let tag = match model {
        Model::Fc { .. } => TAG_FC,
        Model::Svd(_) => TAG_SVD,
        Model::Pca(_) => TAG_PCA,
        Model::Weights(_) => TAG_WEIGHTS,
    };
    enc.0.push(tag);
    enc.0.extend_from_slice(&vocabulary_checksum(vocab));
    match model {
        Model::Fc {
            fuzzifier,
            prototypes,
        } => {
            enc.f64(*fuzzifier);
            enc.u64(prototypes.k as u64);
            enc.u64(prototypes.n_cols as u64);
            for &v in &prototypes.data {
                enc.f64(v);
            }
        }
        Model::Svd(svd) => {
            enc.floats(&svd.s);
            enc.dense(&svd.u);
            enc.dense(&svd.v);
        }
        Model::Pca(pca) => {
            enc.floats(&pca.column_means);
            enc.dense(&pca.scores);
            enc.dense(&pca.loadings);
        }
        Model::Weights(w) => {
            enc.0.push(weighting_tag(w.method));
            enc.floats(&w.weights);
        }
    }
    enc.0
}

fn weighting_tag(m: WeightingMethod) -> u8 {
    match m {
        WeightingMethod::None => 0,
        WeightingMethod::Entropy => 1,
        WeightingMethod::Gfidf => 2,
        WeightingMethod::Idf => 3,
        WeightingMethod::IdfDf => 4,
        WeightingMethod::Normal => 5,
        WeightingMethod::Probidf => 6,
    }
}

fn weighting_from_tag(t: u8) -> Result<WeightingMethod> {
    Ok(match t {
        0 => WeightingMethod::None,
        1 => WeightingMethod::Entropy,
        2 => WeightingMethod::Gfidf,
        3 => WeightingMethod::Idf,
        4 => WeightingMethod::IdfDf,
        5 => WeightingMethod::Normal,
        6 => WeightingMethod::Probidf,
        _ => {
            return Err(Error::Parse {
                line: 0,
                msg: format!("unknown weighting tag {t}"),
            })
        }
    })
}

/// Decode a model container without a vocabulary check. Entry point for
/// untrusted bytes: never panics, errors on anything malformed.
pub fn decode_model(data: &[u8]) -> Result<(Model, [u8; 32])> {
    let mut dec = Dec { buf: data, pos: 0 };
    if dec.take(5)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = u32::from_le_bytes(dec.take(4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let tag = dec.take(1)?[0];
    let checksum: [u8; 32] = dec.take(32)?.try_into().unwrap();
    let model = match tag {
        TAG_FC => {
            let fuzzifier = dec.f64()?;
            if !(fuzzifier.is_finite() && fuzzifier > 1.0) {
                return Err(Error::Parse {
                    line: 0,
                    msg: "fuzzifier out of range".into(),
                });
            }
            let k = dec.len()?;
            let n_cols = dec.len()?;
            let total = k.checked_mul(n_cols).ok_or(Error::Truncated)?;
            if total > (data.len() - dec.pos) / 8 {
                return Err(Error::Truncated);
            }
            let vals: Vec<f64> = (0..total).map(|_| dec.f64()).collect::<Result<_>>()?;
            let prototypes = Prototypes {
                k,
                n_cols,
                data: vals,
            };
            prototypes.validate()?;
            Model::Fc {
                fuzzifier,
                prototypes,
            }
        }
        TAG_SVD => {
            let s = dec.floats()?;
            let u = dec.dense()?;
            let v = dec.dense()?;
            if u.cols != s.len() || v.cols != s.len() {
                return Err(Error::DimensionMismatch(format!(
                    "svd factors disagree: |s|={}, u cols={}, v cols={}",
                    s.len(),
                    u.cols,
                    v.cols
                )));
            }
            Model::Svd(SvdResult { u, s, v })
        }
        TAG_PCA => {
            let column_means = dec.floats()?;
            let scores = dec.dense()?;
            let loadings = dec.dense()?;
            if loadings.rows != column_means.len() || scores.cols != loadings.cols {
                return Err(Error::DimensionMismatch(format!(
                    "pca factors disagree: means={}, loadings {}x{}, scores cols={}",
                    column_means.len(),
                    loadings.rows,
                    loadings.cols,
                    scores.cols
                )));
            }
            Model::Pca(PcaResult {
                scores,
                loadings,
                column_means,
            })
        }
        TAG_WEIGHTS => {
            let method = weighting_from_tag(dec.take(1)?[0])?;
            let weights = dec.floats()?;
            Model::Weights(GlobalWeightVector { method, weights })
        }
        other => {
            return Err(Error::Parse {
                line: 0,
                msg: format!("unknown model tag {other}"),
            })
        }
    };
    if dec.pos != data.len() {
        return Err(Error::Parse {
            line: 0,
            msg: "trailing bytes after model payload".into(),
        });
    }
    Ok((model, checksum))
}

/// Decode and verify the container was written against `vocab`.
pub fn decode_model_checked(data: &[u8], vocab: &Vocabulary) -> Result<Model> {
    let (model, checksum) = decode_model(data)?;
    if checksum != vocabulary_checksum(vocab) {
        return Err(Error::ChecksumMismatch);
    }
    Ok(model)
}

/// Write atomically: temp file in the target directory, then rename.
pub fn save_model(path: &Path, model: &Model, vocab: &Vocabulary) -> Result<()> {
    let bytes = encode_model(model, vocab);
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into())
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_model(path: &Path, vocab: &Vocabulary) -> Result<Model> {
    let bytes = std::fs::read(path)?;
    decode_model_checked(&bytes, vocab)
}
