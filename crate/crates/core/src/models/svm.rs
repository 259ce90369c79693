use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{sparse_rows, Dataset};
use crate::linalg::{dot, Matrix};
use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { lambda: 1e-4, epochs: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    /// Raw margins `w.x + b`.
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| dot(&self.weights, r) + self.bias).collect()
    }
}

/// Stochastic subgradient descent on `lambda/2 |w|^2 + mean hinge`, one
/// seeded permutation per epoch and step size `1 / (lambda (t + t0))` with
/// `t0 = 1 / lambda` so the first steps stay O(1).
///
/// The weight vector is stored as `scale * v` so the shrink step costs O(1)
/// and each update only touches the sample's non-zero entries.
pub(crate) fn train(data: &Dataset, h: &SvmParams, seed: u64) -> Result<SvmModel> {
    if !h.lambda.is_finite() || h.lambda <= 0.0 {
        return Err(Error::InvalidArgument(alloc::format!("SVM lambda must be > 0, got {}", h.lambda)));
    }
    let rows = sparse_rows(&data.features);
    let n = data.len();
    let t0 = 1.0 / h.lambda;
    let mut v = vec![0.0; data.dim()];
    let mut scale = 1.0;
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for epoch in 0..h.epochs {
        order.shuffle(&mut seeded(seed, epoch as u64));
        for &i in &order {
            let eta = 1.0 / (h.lambda * (t as f64 + t0));
            t += 1;
            let y = if data.labels[i] == 1 { 1.0 } else { -1.0 };
            let margin = scale * rows[i].iter().map(|&(j, x)| v[j] * x).sum::<f64>() + bias;
            scale *= 1.0 - eta * h.lambda;
            if y * margin < 1.0 {
                for &(j, x) in &rows[i] {
                    v[j] += eta * y * x / scale;
                }
                bias += eta * y;
            }
            if scale < 1e-9 {
                for w in &mut v {
                    *w *= scale;
                }
                scale = 1.0;
            }
        }
        if !bias.is_finite() || v.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { iteration: epoch, loss: f64::NAN });
        }
    }
    let weights: Vec<f64> = v.iter().map(|w| w * scale).collect();
    if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite()) {
        return Err(Error::NonFinite { index: i, value: w });
    }
    Ok(SvmModel { weights, bias })
}
