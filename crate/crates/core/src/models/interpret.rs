use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Model, TrainedModel};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopFeatures {
    /// Largest weights first.
    pub positive: Vec<(String, f64)>,
    /// Smallest weights first.
    pub negative: Vec<(String, f64)>,
}

/// Ranks logistic-regression weights by sign; ties go to the
/// alphabetically smaller term.
pub fn logreg_top_features<S: AsRef<str>>(model: &TrainedModel, vocabulary: &[S], top_n: usize) -> Result<TopFeatures> {
    let Model::Logreg { parameters, .. } = &model.model else {
        return Err(Error::ModelKind { expected: "LOGREG", actual: model.kind().as_str() });
    };
    if parameters.weights.len() != vocabulary.len() {
        return Err(Error::InvalidArgument(format!(
            "vocabulary has {} terms but the model has {} weights",
            vocabulary.len(),
            parameters.weights.len()
        )));
    }
    let mut pairs: Vec<(&str, f64)> =
        vocabulary.iter().map(AsRef::as_ref).zip(parameters.weights.iter().copied()).collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let positive = pairs.iter().take(top_n).map(|(t, w)| (String::from(*t), *w)).collect();
    pairs.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let negative = pairs.iter().take(top_n).map(|(t, w)| (String::from(*t), *w)).collect();
    Ok(TopFeatures { positive, negative })
}
