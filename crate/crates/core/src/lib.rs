//! Core algorithms for predicting 30-day hospital readmission from
//! discharge-summary text.
//!
//! Everything in this crate is pure computation over in-memory data: cohort
//! and label construction, text cleaning, TF-IDF and chunk-pooled document
//! embeddings, PCA, six binary classifiers and the evaluation metrics. File
//! formats, the embedding service client and the command line live in the
//! `readmit` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cohort;
pub mod error;
pub mod eval;
pub mod features;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod textprep;
pub mod time;

pub use error::{Error, Result};

/// Non-fatal condition noticed while processing; callers decide how to surface it.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Warning {
    pub context: &'static str,
    pub message: alloc::string::String,
}

impl Warning {
    pub fn new(context: &'static str, message: impl Into<alloc::string::String>) -> Self {
        Self {
            context,
            message: message.into(),
        }
    }
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}
