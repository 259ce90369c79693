use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::linalg::Matrix;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnbParams {
    pub var_smoothing: f64,
}

impl Default for GnbParams {
    fn default() -> Self {
        Self { var_smoothing: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    /// Indexed by class (0, 1).
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

fn moments<'a>(rows: impl Iterator<Item = &'a [f64]>, d: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let rows: Vec<&[f64]> = rows.collect();
    let n = rows.len();
    let mut mean = vec![0.0; d];
    for r in &rows {
        for (m, x) in mean.iter_mut().zip(*r) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; d];
    for r in &rows {
        for ((v, x), m) in var.iter_mut().zip(*r).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    for v in &mut var {
        *v /= n as f64;
    }
    (mean, var, n)
}

/// Per-class Gaussian moments; variances are floored at
/// `var_smoothing * max feature variance` (or `var_smoothing` itself when
/// every feature is constant).
pub(crate) fn train(data: &Dataset, h: &GnbParams) -> Result<GnbModel> {
    data.require_both_classes()?;
    let d = data.dim();
    let (_, all_var, _) = moments(data.features.iter_rows(), d);
    let max_var = all_var.iter().copied().fold(0.0, f64::max);
    let floor = if max_var > 0.0 { h.var_smoothing * max_var } else { h.var_smoothing };
    let mut out = GnbModel { log_prior: [0.0; 2], mean: [vec![], vec![]], var: [vec![], vec![]] };
    for class in 0..2u8 {
        let rows = data.features.iter_rows().zip(&data.labels).filter(|(_, l)| **l == class).map(|(r, _)| r);
        let (mean, mut var, n) = moments(rows, d);
        for v in &mut var {
            *v = v.max(floor);
        }
        let c = usize::from(class);
        out.log_prior[c] = libm::log(n as f64 / data.len() as f64);
        out.mean[c] = mean;
        out.var[c] = var;
    }
    Ok(out)
}

impl GnbModel {
    fn joint_log_likelihood(&self, x: &[f64]) -> [f64; 2] {
        let mut jll = self.log_prior;
        for (c, slot) in jll.iter_mut().enumerate() {
            for ((xi, m), v) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
                *slot -= 0.5 * (libm::log(2.0 * core::f64::consts::PI * v) + (xi - m) * (xi - m) / v);
            }
        }
        jll
    }

    /// Normalised posteriors `[P(0|x), P(1|x)]` via log-sum-exp.
    pub fn posteriors(&self, x: &[f64]) -> [f64; 2] {
        let jll = self.joint_log_likelihood(x);
        let m = jll[0].max(jll[1]);
        let lse = m + libm::log(libm::exp(jll[0] - m) + libm::exp(jll[1] - m));
        [libm::exp(jll[0] - lse), libm::exp(jll[1] - lse)]
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.posteriors(r)[1]).collect()
    }
}
