//! Chunked, mean-pooled document embeddings.
//!
//! A document's first 2048 tokens are split into four consecutive chunks of
//! at most 512 tokens. Each chunk's per-token 768-dim vectors are averaged
//! and the four averages are concatenated into one 3072-dim vector.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng::{fnv1a64, splitmix64, unit_f64};
use crate::{Error, Result};

pub const EMBED_DIM: usize = 768;
pub const N_CHUNKS: usize = 4;
pub const CHUNK_SIZE: usize = 512;
pub const MAX_TOKENS: usize = CHUNK_SIZE * N_CHUNKS;
pub const DOC_DIM: usize = EMBED_DIM * N_CHUNKS;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Chunks<'a, T> {
    pub chunks: [&'a [T]; N_CHUNKS],
}

impl<T> Chunks<'_, T> {
    pub fn counts(&self) -> [usize; N_CHUNKS] {
        self.chunks.map(|c| c.len())
    }
}

/// Truncates to `max_tokens` and splits into four consecutive chunks; later
/// chunks may be short or empty.
pub fn chunk_tokens<T>(tokens: &[T], chunk_size: usize, max_tokens: usize) -> Result<Chunks<'_, T>> {
    if chunk_size == 0 || chunk_size * N_CHUNKS != max_tokens {
        return Err(Error::InvalidArgument(format!(
            "chunk size {chunk_size} times {N_CHUNKS} must equal max tokens {max_tokens}"
        )));
    }
    let kept = &tokens[..tokens.len().min(max_tokens)];
    let mut chunks: [&[T]; N_CHUNKS] = [&[]; N_CHUNKS];
    for (i, slot) in chunks.iter_mut().enumerate() {
        let start = (i * chunk_size).min(kept.len());
        let end = ((i + 1) * chunk_size).min(kept.len());
        *slot = &kept[start..end];
    }
    Ok(Chunks { chunks })
}

/// Per-token vectors for one chunk: `rows` x 768.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenMatrix {
    rows: usize,
    data: Vec<f64>,
}

impl TokenMatrix {
    pub fn new(rows: usize, data: Vec<f64>) -> Result<Self> {
        if rows > CHUNK_SIZE {
            return Err(Error::Dimension { expected: CHUNK_SIZE, actual: rows });
        }
        if data.len() != rows * EMBED_DIM {
            return Err(Error::Dimension { expected: rows * EMBED_DIM, actual: data.len() });
        }
        if let Some((i, &v)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index: i, value: v });
        }
        Ok(Self { rows, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * EMBED_DIM);
        for r in rows {
            if r.len() != EMBED_DIM {
                return Err(Error::Dimension { expected: EMBED_DIM, actual: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * EMBED_DIM..(i + 1) * EMBED_DIM]
    }
}

/// Column means over the token rows, accumulated row by row; all zeros when
/// the chunk is empty.
pub fn mean_pool(matrix: &TokenMatrix) -> Vec<f64> {
    let mut acc = vec![0.0; EMBED_DIM];
    if matrix.rows == 0 {
        return acc;
    }
    for row in matrix.data.chunks_exact(EMBED_DIM) {
        for (a, x) in acc.iter_mut().zip(row) {
            *a += x;
        }
    }
    let n = matrix.rows as f64;
    for a in &mut acc {
        *a /= n;
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentEmbedding {
    pub hadm_id: u64,
    pub vector: Vec<f64>,
    pub chunk_token_counts: [usize; N_CHUNKS],
}

impl DocumentEmbedding {
    pub fn block(&self, i: usize) -> &[f64] {
        &self.vector[i * EMBED_DIM..(i + 1) * EMBED_DIM]
    }
}

/// Concatenates four pooled chunk vectors in chunk order.
pub fn assemble_document_embedding<V: AsRef<[f64]>>(
    hadm_id: u64,
    chunk_vectors: &[V],
    counts: [usize; N_CHUNKS],
) -> Result<DocumentEmbedding> {
    if chunk_vectors.len() != N_CHUNKS {
        return Err(Error::Dimension { expected: N_CHUNKS, actual: chunk_vectors.len() });
    }
    let mut vector = Vec::with_capacity(DOC_DIM);
    for (i, v) in chunk_vectors.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != EMBED_DIM {
            return Err(Error::Dimension { expected: EMBED_DIM, actual: v.len() });
        }
        if let Some((j, &x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinite { index: i * EMBED_DIM + j, value: x });
        }
        if counts[i] > CHUNK_SIZE {
            return Err(Error::InvalidArgument(format!("chunk {i} reports {} tokens", counts[i])));
        }
        if counts[i] == 0 && v.iter().any(|x| *x != 0.0) {
            return Err(Error::InvalidArgument(format!("chunk {i} has no tokens but a non-zero vector")));
        }
        vector.extend_from_slice(v);
    }
    Ok(DocumentEmbedding { hadm_id, vector, chunk_token_counts: counts })
}

/// Deterministic stand-in for a language-model token vector: components in
/// `[-1, 1)` drawn from SplitMix64 seeded by an FNV-1a hash of
/// `(seed, token bytes)`.
pub fn mock_token_vector(token: &str, seed: u64) -> Vec<f64> {
    let mut state = fnv1a64(seed, token.as_bytes());
    (0..EMBED_DIM).map(|_| unit_f64(splitmix64(&mut state)) * 2.0 - 1.0).collect()
}

pub fn mock_token_embedder<S: AsRef<str>>(tokens: &[S], seed: u64) -> Result<TokenMatrix> {
    let mut data = Vec::with_capacity(tokens.len() * EMBED_DIM);
    for t in tokens {
        data.extend(mock_token_vector(t.as_ref(), seed));
    }
    TokenMatrix::new(tokens.len(), data)
}

/// Chunk, embed with the mock embedder, pool and assemble.
pub fn embed_document_mock<S: AsRef<str>>(hadm_id: u64, tokens: &[S], seed: u64) -> Result<DocumentEmbedding> {
    let chunks = chunk_tokens(tokens, CHUNK_SIZE, MAX_TOKENS)?;
    let mut pooled = Vec::with_capacity(N_CHUNKS);
    for chunk in chunks.chunks {
        pooled.push(mean_pool(&mock_token_embedder(chunk, seed)?));
    }
    assemble_document_embedding(hadm_id, &pooled, chunks.counts())
}
