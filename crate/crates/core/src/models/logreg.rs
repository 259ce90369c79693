use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{bce_from_logit, sigmoid, sparse_rows, Dataset};
use crate::linalg::{dot, Matrix};
use crate::models::gradcheck::Objective;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self { lr: 0.1, epochs: 500, l2: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogRegModel {
    pub fn zeros(dim: usize) -> Self {
        Self { weights: vec![0.0; dim], bias: 0.0 }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| sigmoid(dot(&self.weights, r) + self.bias)).collect()
    }
}

/// Mean cross-entropy plus `l2 / 2 * |w|^2` over parameters `[w.., b]`.
pub struct LogRegObjective<'a> {
    rows: Vec<Vec<(usize, f64)>>,
    labels: &'a [u8],
    dim: usize,
    l2: f64,
}

impl<'a> LogRegObjective<'a> {
    pub fn new(data: &'a Dataset, l2: f64) -> Self {
        Self { rows: sparse_rows(&data.features), labels: &data.labels, dim: data.dim(), l2 }
    }

    fn logits(&self, params: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let (w, b) = (&params[..self.dim], params[self.dim]);
        let w: Vec<f64> = w.to_vec();
        self.rows.iter().map(move |r| r.iter().map(|&(j, v)| w[j] * v).sum::<f64>() + b)
    }
}

impl Objective for LogRegObjective<'_> {
    fn dim(&self) -> usize {
        self.dim + 1
    }

    fn loss(&self, params: &[f64]) -> f64 {
        let n = self.labels.len() as f64;
        let data: f64 = self
            .logits(params)
            .zip(self.labels)
            .map(|(z, &y)| bce_from_logit(z, f64::from(y)))
            .sum::<f64>()
            / n;
        let w = &params[..self.dim];
        data + 0.5 * self.l2 * dot(w, w)
    }

    fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let n = self.labels.len() as f64;
        let mut g = vec![0.0; self.dim + 1];
        let residuals: Vec<f64> = self
            .logits(params)
            .zip(self.labels)
            .map(|(z, &y)| sigmoid(z) - f64::from(y))
            .collect();
        for (row, r) in self.rows.iter().zip(&residuals) {
            for &(j, v) in row {
                g[j] += r * v;
            }
            g[self.dim] += r;
        }
        for (j, gj) in g.iter_mut().enumerate() {
            *gj /= n;
            if j < self.dim {
                *gj += self.l2 * params[j];
            }
        }
        g
    }
}

/// Full-batch gradient descent from zero weights.
pub(crate) fn train(data: &Dataset, h: &LogRegParams) -> Result<LogRegModel> {
    if h.lr.is_nan() || h.lr <= 0.0 || h.l2.is_nan() || h.l2 < 0.0 {
        return Err(Error::InvalidArgument(alloc::format!("logistic regression needs lr > 0 and l2 >= 0, got {h:?}")));
    }
    let objective = LogRegObjective::new(data, h.l2);
    let mut params = vec![0.0; data.dim() + 1];
    for epoch in 0..h.epochs {
        let g = objective.gradient(&params);
        for (p, gi) in params.iter_mut().zip(&g) {
            *p -= h.lr * gi;
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { iteration: epoch, loss: objective.loss(&params) });
        }
    }
    let loss = objective.loss(&params);
    if !loss.is_finite() {
        return Err(Error::Diverged { iteration: h.epochs, loss });
    }
    let bias = params.pop().unwrap_or(0.0);
    Ok(LogRegModel { weights: params, bias })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_score_half() {
        let m = LogRegModel::zeros(3);
        let x = Matrix::from_rows(&[[1.0, -4.0, 9.0]], 3).unwrap();
        assert_eq!(m.predict(&x), vec![0.5]);
    }

    #[test]
    fn separable_pair() {
        let x = Matrix::from_rows(&[[-1.0], [1.0]], 1).unwrap();
        let data = Dataset::new(x.clone(), vec![0, 1]).unwrap();
        let m = train(&data, &LogRegParams { lr: 0.5, epochs: 2000, l2: 0.0 }).unwrap();
        let s = m.predict(&x);
        assert!(s[1] > 0.9 && s[0] < 0.1, "{s:?}");
        let d = train(&data, &LogRegParams::default()).unwrap();
        let s = d.predict(&x);
        assert!(s[1] > 0.5 && s[0] < 0.5);
    }

    #[test]
    fn diverging_training_reports_iteration() {
        let x = Matrix::from_rows(&[[1e300], [-1e300]], 1).unwrap();
        let data = Dataset::new(x, vec![1, 0]).unwrap();
        let err = train(&data, &LogRegParams { lr: 1e10, epochs: 10, l2: 1.0 }).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err:?}");
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let data = crate::models::tests::toy();
        assert!(train(&data, &LogRegParams { lr: 0.0, ..Default::default() }).is_err());
        assert!(train(&data, &LogRegParams { l2: -1.0, ..Default::default() }).is_err());
    }
}
