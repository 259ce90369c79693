//! File formats, embedding providers, the synthetic generator and the
//! `readmit` command line around [`readmit_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod features;
pub mod provider;
pub mod service;
pub mod stages;
pub mod synth;
pub mod tables;

pub use error::{Error, Result};
