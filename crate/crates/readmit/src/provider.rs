//! Where document embeddings come from.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use readmit_core::features::{embed_document_mock, DOC_DIM};
use readmit_core::linalg::Matrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::features::{read_embeddings, FeatureTable};
use crate::service::{ServiceClient, EMBED_URL_ENV};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provider {
    /// Hash-seeded token vectors, offline.
    Mock,
    /// A precomputed embedding CSV.
    File(PathBuf),
    /// The embedding service at this base URL.
    Service(String),
}

impl FromStr for Provider {
    type Err = Error;

    /// `mock`, `file=<path>`, `service=<url>`, or bare `service` to take the
    /// URL from `READMIT_EMBED_URL`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once('=') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind.to_ascii_lowercase().as_str(), arg) {
            ("mock", None) => Ok(Self::Mock),
            ("file", Some(p)) if !p.is_empty() => Ok(Self::File(PathBuf::from(p))),
            ("service", Some(u)) if !u.is_empty() => Ok(Self::Service(u.to_string())),
            ("service", None) => match std::env::var(EMBED_URL_ENV) {
                Ok(u) if !u.trim().is_empty() => Ok(Self::Service(u.trim().to_string())),
                _ => Err(Error::Invalid(format!("provider `service` needs a URL or {EMBED_URL_ENV}"))),
            },
            _ => Err(Error::Invalid(format!("unknown provider {s:?}; use mock, file=<path> or service=<url>"))),
        }
    }
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mock => f.write_str("mock"),
            Self::File(p) => write!(f, "file={}", p.display()),
            Self::Service(u) => write!(f, "service={u}"),
        }
    }
}

impl Serialize for Provider {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Provider {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Embeds `(hadm_id, cleaned text)` pairs into a 3072-column table in input order.
pub fn embed_documents(provider: &Provider, docs: &[(u64, &str)], seed: u64) -> Result<FeatureTable> {
    let ids: Vec<u64> = docs.iter().map(|d| d.0).collect();
    match provider {
        Provider::Mock => {
            let mut data = Vec::with_capacity(docs.len() * DOC_DIM);
            for (id, text) in docs {
                let tokens: Vec<&str> = text.split_whitespace().collect();
                data.extend(embed_document_mock(*id, &tokens, seed)?.vector);
            }
            FeatureTable::new(ids, Matrix::from_vec(docs.len(), DOC_DIM, data)?)
        }
        Provider::File(path) => {
            let table = read_embeddings(path)?;
            let matrix = table.select(&ids).map_err(|e| Error::format(path, e.to_string()))?;
            FeatureTable::new(ids, matrix)
        }
        Provider::Service(url) => {
            let client = ServiceClient::new(url);
            let health = client.health()?;
            if health.status != "ok" {
                return Err(Error::Service { url: url.clone(), message: format!("service status is {:?}", health.status) });
            }
            log::info!("embedding with {} (checkpoint {})", health.model_id, health.checkpoint_hash);
            let mut data = Vec::with_capacity(docs.len() * DOC_DIM);
            for (i, (id, text)) in docs.iter().enumerate() {
                data.extend(client.embed_document(*id, text)?.vector);
                if (i + 1) % 500 == 0 {
                    log::info!("embedded {} of {} documents", i + 1, docs.len());
                }
            }
            FeatureTable::new(ids, Matrix::from_vec(docs.len(), DOC_DIM, data)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for s in ["mock", "file=emb.csv", "service=http://localhost:8080"] {
            assert_eq!(s.parse::<Provider>().unwrap().to_string(), s);
        }
        assert!("file=".parse::<Provider>().is_err());
        assert!("bert".parse::<Provider>().is_err());
        let json = serde_json::to_string(&Provider::Mock).unwrap();
        assert_eq!(json, "\"mock\"");
        assert_eq!(serde_json::from_str::<Provider>(&json).unwrap(), Provider::Mock);
    }

    #[test]
    fn mock_matches_core() {
        let t = embed_documents(&Provider::Mock, &[(3, "chronic renal failure"), (4, "")], 11).unwrap();
        let direct = embed_document_mock(3, &["chronic", "renal", "failure"], 11).unwrap();
        assert_eq!(t.matrix.row(0), direct.vector.as_slice());
        assert!(t.matrix.row(1).iter().all(|v| *v == 0.0));
    }
}
