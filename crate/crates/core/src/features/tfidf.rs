use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_MAX_FEATURES: usize = 5000;

/// Sparse vector with strictly increasing indices and non-zero values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub dimension: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(dimension: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        for (k, &(i, v)) in entries.iter().enumerate() {
            if i >= dimension {
                return Err(Error::Dimension { expected: dimension, actual: i + 1 });
            }
            if k > 0 && entries[k - 1].0 >= i {
                return Err(Error::InvalidArgument("sparse indices must be strictly increasing".into()));
            }
            if !v.is_finite() || v == 0.0 {
                return Err(Error::NonFinite { index: i, value: v });
            }
        }
        Ok(Self { dimension, entries })
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dimension];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|(_, v)| v * v).sum())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Fitted vocabulary with smoothed inverse document frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfidfModelRepr", into = "TfidfModelRepr")]
pub struct TfidfModel {
    terms: Vec<String>,
    index: BTreeMap<String, usize>,
    doc_freq: Vec<u64>,
    idf: Vec<f64>,
    n_docs: u64,
    max_features: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct TfidfModelRepr {
    n_docs: u64,
    max_features: Option<usize>,
    vocabulary: Vec<String>,
    doc_freq: Vec<u64>,
    idf: Vec<f64>,
}

impl From<TfidfModel> for TfidfModelRepr {
    fn from(m: TfidfModel) -> Self {
        Self {
            n_docs: m.n_docs,
            max_features: m.max_features,
            vocabulary: m.terms,
            doc_freq: m.doc_freq,
            idf: m.idf,
        }
    }
}

impl TryFrom<TfidfModelRepr> for TfidfModel {
    type Error = Error;

    fn try_from(r: TfidfModelRepr) -> Result<Self> {
        let v = r.vocabulary.len();
        if r.doc_freq.len() != v || r.idf.len() != v {
            return Err(Error::Dimension { expected: v, actual: r.idf.len().min(r.doc_freq.len()) });
        }
        let index: BTreeMap<String, usize> = r.vocabulary.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        if index.len() != v {
            return Err(Error::InvalidArgument("duplicate vocabulary term".into()));
        }
        if let Some((i, &x)) = r.idf.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::NonFinite { index: i, value: x });
        }
        Ok(Self {
            terms: r.vocabulary,
            index,
            doc_freq: r.doc_freq,
            idf: r.idf,
            n_docs: r.n_docs,
            max_features: r.max_features,
        })
    }
}

/// Smoothed idf: `ln((1 + n) / (1 + df)) + 1`.
pub fn smooth_idf(n_docs: u64, doc_freq: u64) -> f64 {
    libm::log((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)) + 1.0
}

/// Fits the vocabulary on a corpus of token lists.
///
/// Terms are ranked by total corpus count (descending, ties by term) and the
/// ranking is cut at `max_features`.
pub fn tfidf_fit<'a, I>(corpus: I, max_features: Option<usize>) -> Result<TfidfModel>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut n_docs = 0u64;
    for doc in corpus {
        n_docs += 1;
        let mut seen = BTreeMap::new();
        for t in doc {
            let slot = counts.entry(t.as_str()).or_insert((0, 0));
            slot.0 += 1;
            if seen.insert(t.as_str(), ()).is_none() {
                slot.1 += 1;
            }
        }
    }
    if n_docs == 0 {
        return Err(Error::Empty("TF-IDF corpus"));
    }
    let mut ranked: Vec<(&str, u64, u64)> = counts.into_iter().map(|(t, (c, df))| (t, c, df)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if let Some(m) = max_features {
        ranked.truncate(m);
    }
    let terms: Vec<String> = ranked.iter().map(|(t, _, _)| String::from(*t)).collect();
    let doc_freq: Vec<u64> = ranked.iter().map(|(_, _, df)| *df).collect();
    let idf = doc_freq.iter().map(|&df| smooth_idf(n_docs, df)).collect();
    let index = terms.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    Ok(TfidfModel { terms, index, doc_freq, idf, n_docs, max_features })
}

impl TfidfModel {
    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn doc_freq(&self) -> &[u64] {
        &self.doc_freq
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn max_features(&self) -> Option<usize> {
        self.max_features
    }

    /// Raw count times idf, L2-normalised. Out-of-vocabulary terms are ignored.
    pub fn transform(&self, tokens: &[String]) -> SparseVector {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for t in tokens {
            if let Some(i) = self.index_of(t) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts.into_iter().map(|(i, c)| (i, c as f64 * self.idf[i])).collect();
        let norm = libm::sqrt(entries.iter().map(|(_, v)| v * v).sum());
        if norm > 0.0 {
            for (_, v) in &mut entries {
                *v /= norm;
            }
        }
        SparseVector { dimension: self.terms.len(), entries }
    }
}
