//! Binary classifiers producing positive-class scores.
//!
//! Every model trains deterministically from `(data, hyperparameters, seed)`
//! and serializes to a self-describing record tagged by its kind.

mod forest;
mod gnb;
pub mod gradcheck;
mod interpret;
mod knn;
mod logreg;
mod mlp;
mod svm;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

pub use forest::{ForestModel, ForestParams, Node, Tree};
pub use gnb::{GnbModel, GnbParams};
pub use gradcheck::{check_at, gradient_check, relative_error, GradientModel, Objective};
pub use interpret::{logreg_top_features, TopFeatures};
pub use knn::{KnnModel, KnnParams};
pub use logreg::{LogRegModel, LogRegParams, LogRegObjective};
pub use mlp::{Layer, MlpModel, MlpObjective, MlpParams, Optimizer};
pub use svm::{SvmModel, SvmParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Feature matrix with binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Dimension { expected: features.rows(), actual: labels.len() });
        }
        if labels.is_empty() {
            return Err(Error::Empty("dataset has no rows"));
        }
        if let Some(i) = labels.iter().position(|l| *l > 1) {
            return Err(Error::InvalidArgument(format!("label {} at row {i} is not 0 or 1", labels[i])));
        }
        if let Some((i, v)) = features.first_non_finite() {
            return Err(Error::NonFinite { index: i, value: v });
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| **l == 1).count()
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        let pos = self.positives();
        if pos == 0 {
            return Err(Error::MissingClass(1));
        }
        if pos == self.len() {
            return Err(Error::MissingClass(0));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Logreg,
    Knn,
    Gnb,
    Rf,
    Svm,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [Self::Logreg, Self::Knn, Self::Gnb, Self::Rf, Self::Svm, Self::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Logreg => "LOGREG",
            Self::Knn => "KNN",
            Self::Gnb => "GNB",
            Self::Rf => "RF",
            Self::Svm => "SVM",
            Self::Mlp => "MLP",
        }
    }

    /// Cut-off turning scores into labels: 0 for SVM margins, 0.5 otherwise.
    pub fn decision_threshold(self) -> f64 {
        match self {
            Self::Svm => 0.0,
            _ => 0.5,
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind {s:?}")))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum Model {
    Logreg { hyperparameters: LogRegParams, parameters: LogRegModel },
    Knn { hyperparameters: KnnParams, parameters: KnnModel },
    Gnb { hyperparameters: GnbParams, parameters: GnbModel },
    Rf { hyperparameters: ForestParams, parameters: ForestModel },
    Svm { hyperparameters: SvmParams, parameters: SvmModel },
    Mlp { hyperparameters: MlpParams, parameters: MlpModel },
}

/// Hyperparameters for any kind; selects what [`train`] builds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum Hyperparameters {
    Logreg(LogRegParams),
    Knn(KnnParams),
    Gnb(GnbParams),
    Rf(ForestParams),
    Svm(SvmParams),
    Mlp(MlpParams),
}

impl Hyperparameters {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Logreg => Self::Logreg(LogRegParams::default()),
            ModelKind::Knn => Self::Knn(KnnParams::default()),
            ModelKind::Gnb => Self::Gnb(GnbParams::default()),
            ModelKind::Rf => Self::Rf(ForestParams::default()),
            ModelKind::Svm => Self::Svm(SvmParams::default()),
            ModelKind::Mlp => Self::Mlp(MlpParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Logreg(_) => ModelKind::Logreg,
            Self::Knn(_) => ModelKind::Knn,
            Self::Gnb(_) => ModelKind::Gnb,
            Self::Rf(_) => ModelKind::Rf,
            Self::Svm(_) => ModelKind::Svm,
            Self::Mlp(_) => ModelKind::Mlp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    #[serde(flatten)]
    pub model: Model,
    pub train_seed: u64,
    pub feature_dim: usize,
}

/// Trains the model selected by `hyperparameters`.
pub fn train(data: &Dataset, hyperparameters: &Hyperparameters, seed: u64) -> Result<TrainedModel> {
    let model = match hyperparameters {
        Hyperparameters::Logreg(h) => Model::Logreg { hyperparameters: h.clone(), parameters: logreg::train(data, h)? },
        Hyperparameters::Knn(h) => Model::Knn { hyperparameters: h.clone(), parameters: knn::train(data, h)? },
        Hyperparameters::Gnb(h) => Model::Gnb { hyperparameters: h.clone(), parameters: gnb::train(data, h)? },
        Hyperparameters::Rf(h) => Model::Rf { hyperparameters: h.clone(), parameters: forest::train(data, h, seed)? },
        Hyperparameters::Svm(h) => Model::Svm { hyperparameters: h.clone(), parameters: svm::train(data, h, seed)? },
        Hyperparameters::Mlp(h) => Model::Mlp { hyperparameters: h.clone(), parameters: mlp::train(data, h, seed)? },
    };
    Ok(TrainedModel { format_version: MODEL_FORMAT_VERSION, model, train_seed: seed, feature_dim: data.dim() })
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.model {
            Model::Logreg { .. } => ModelKind::Logreg,
            Model::Knn { .. } => ModelKind::Knn,
            Model::Gnb { .. } => ModelKind::Gnb,
            Model::Rf { .. } => ModelKind::Rf,
            Model::Svm { .. } => ModelKind::Svm,
            Model::Mlp { .. } => ModelKind::Mlp,
        }
    }

    /// One score per row of `x`; higher means more likely readmitted.
    pub fn predict_scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.feature_dim {
            return Err(Error::Dimension { expected: self.feature_dim, actual: x.cols() });
        }
        let scores = match &self.model {
            Model::Logreg { parameters, .. } => parameters.predict(x),
            Model::Knn { parameters, .. } => parameters.predict(x),
            Model::Gnb { parameters, .. } => parameters.predict(x),
            Model::Rf { parameters, .. } => parameters.predict(x),
            Model::Svm { parameters, .. } => parameters.predict(x),
            Model::Mlp { parameters, .. } => parameters.predict(x),
        };
        if let Some((i, &s)) = scores.iter().enumerate().find(|(_, s)| !s.is_finite()) {
            return Err(Error::NonFinite { index: i, value: s });
        }
        Ok(scores)
    }

    pub fn describe(&self) -> String {
        format!("{} over {} features (seed {})", self.kind(), self.feature_dim, self.train_seed)
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit, `ln(1 + e^z) - y z`, without overflow.
pub(crate) fn bce_from_logit(z: f64, y: f64) -> f64 {
    let softplus = if z > 0.0 { z + libm::log1p(libm::exp(-z)) } else { libm::log1p(libm::exp(z)) };
    softplus - y * z
}

/// Non-zero entries of each row, used to skip zeros in sparse TF-IDF rows.
pub(crate) fn sparse_rows(x: &Matrix) -> Vec<Vec<(usize, f64)>> {
    x.iter_rows()
        .map(|r| r.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn toy() -> Dataset {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.2, 0.1], [1.0, 1.0], [0.9, 1.2], [0.1, 0.3], [1.1, 0.8]], 2).unwrap();
        Dataset::new(x, vec![0, 0, 1, 1, 0, 1]).unwrap()
    }

    #[test]
    fn dataset_validation() {
        let x = Matrix::from_rows(&[[0.0], [1.0]], 1).unwrap();
        assert!(Dataset::new(x.clone(), vec![0]).is_err());
        assert!(Dataset::new(x.clone(), vec![0, 2]).is_err());
        let bad = Matrix::from_rows(&[[f64::NAN], [1.0]], 1).unwrap();
        assert!(Dataset::new(bad, vec![0, 1]).is_err());
        assert!(Dataset::new(Matrix::zeros(0, 1), vec![]).is_err());
    }

    #[test]
    fn every_kind_trains_and_scores_in_range() {
        let data = toy();
        for kind in ModelKind::ALL {
            let mut h = Hyperparameters::default_for(kind);
            if let Hyperparameters::Knn(p) = &mut h {
                p.k = 3;
            }
            let m = train(&data, &h, 3).unwrap();
            assert_eq!(m.kind(), kind);
            let s = m.predict_scores(&data.features).unwrap();
            assert_eq!(s.len(), 6);
            if kind != ModelKind::Svm {
                assert!(s.iter().all(|v| (0.0..=1.0).contains(v)), "{kind}: {s:?}");
            }
            assert!(m.predict_scores(&Matrix::zeros(1, 3)).is_err());
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("logreg".parse::<ModelKind>().unwrap(), ModelKind::Logreg);
        assert_eq!("MLP".parse::<ModelKind>().unwrap(), ModelKind::Mlp);
        assert!("xgboost".parse::<ModelKind>().is_err());
        assert_eq!(ModelKind::Svm.decision_threshold(), 0.0);
    }

    #[test]
    fn numerics() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) == 1.0 && sigmoid(-800.0) >= 0.0);
        assert!((bce_from_logit(0.0, 1.0) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!(bce_from_logit(1000.0, 0.0).is_finite());
    }
}
