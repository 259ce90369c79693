//! Document representations: TF-IDF, chunked mean-pooled embeddings and PCA.

pub mod embedding;
pub mod pca;
pub mod tfidf;

pub use embedding::{
    assemble_document_embedding, chunk_tokens, embed_document_mock, mean_pool, mock_token_embedder,
    mock_token_vector, Chunks, DocumentEmbedding, TokenMatrix, CHUNK_SIZE, DOC_DIM, EMBED_DIM,
    MAX_TOKENS, N_CHUNKS,
};
pub use pca::{pca_fit, PcaFit, PcaModel};
pub use tfidf::{tfidf_fit, SparseVector, TfidfModel, DEFAULT_MAX_FEATURES};
