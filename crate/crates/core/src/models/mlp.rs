use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bce_from_logit, sigmoid, Dataset};
use crate::linalg::{dot, Matrix};
use crate::models::gradcheck::Objective;
use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    /// Beta1 0.9, beta2 0.999, eps 1e-8.
    #[default]
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self { hidden: vec![32], lr: 0.01, epochs: 30, batch_size: 64, l2: 0.0, optimizer: Optimizer::Adam }
    }
}

/// Fully connected layer; `weights` is `out x in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

impl MlpModel {
    /// Glorot-uniform weights and zero biases for `sizes = [d, h1, .., 1]`.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        validate_sizes(sizes)?;
        let mut rng = seeded(seed, 0);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
                let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..=limit)).collect();
                Layer { weights: Matrix::from_vec(fan_out, fan_in, data).expect("shape"), bias: vec![0.0; fan_out] }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.weights.cols()).collect();
        s.extend(self.layers.last().map(|l| l.weights.rows()));
        s
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.rows() * (l.weights.cols() + 1)).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn from_flat(sizes: &[usize], params: &[f64]) -> Result<Self> {
        validate_sizes(sizes)?;
        let mut at = 0;
        let mut layers = Vec::new();
        for w in sizes.windows(2) {
            let (i, o) = (w[0], w[1]);
            let need = o * (i + 1);
            let chunk = params.get(at..at + need).ok_or(Error::Dimension { expected: at + need, actual: params.len() })?;
            layers.push(Layer { weights: Matrix::from_vec(o, i, chunk[..o * i].to_vec())?, bias: chunk[o * i..].to_vec() });
            at += need;
        }
        if at != params.len() {
            return Err(Error::Dimension { expected: at, actual: params.len() });
        }
        Ok(Self { layers })
    }

    /// Activations of every layer for one input; the last entry holds the
    /// output logit.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let input = acts.last().expect("input");
            let z: Vec<f64> = l
                .weights
                .iter_rows()
                .zip(&l.bias)
                .map(|(w, b)| {
                    let z = dot(w, input) + b;
                    if li == last { z } else { z.max(0.0) }
                })
                .collect();
            acts.push(z);
        }
        acts
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.forward(x).last().expect("output")[0]
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| sigmoid(self.logit(r))).collect()
    }

    /// Adds the gradient of `sum_i bce(x_i)` into `grad` (flat layout) and
    /// returns the summed loss.
    fn accumulate(&self, x: &Matrix, labels: &[u8], rows: &[usize], grad: &mut [f64]) -> f64 {
        let offsets = self.offsets();
        let mut loss = 0.0;
        for &i in rows {
            let acts = self.forward(x.row(i));
            let logit = acts.last().expect("output")[0];
            let y = f64::from(labels[i]);
            loss += bce_from_logit(logit, y);
            let mut delta = vec![sigmoid(logit) - y];
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let (o, n_in) = (layer.weights.rows(), layer.weights.cols());
                let base = offsets[li];
                for r in 0..o {
                    let d = delta[r];
                    if d == 0.0 {
                        continue;
                    }
                    let g = &mut grad[base + r * n_in..base + (r + 1) * n_in];
                    for (gj, xj) in g.iter_mut().zip(input) {
                        *gj += d * xj;
                    }
                    grad[base + o * n_in + r] += d;
                }
                if li > 0 {
                    let mut prev = vec![0.0; n_in];
                    for (r, d) in delta.iter().enumerate() {
                        if *d == 0.0 {
                            continue;
                        }
                        for (p, w) in prev.iter_mut().zip(layer.weights.row(r)) {
                            *p += d * w;
                        }
                    }
                    for (p, a) in prev.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        loss
    }

    fn offsets(&self) -> Vec<usize> {
        let mut at = 0;
        self.layers
            .iter()
            .map(|l| {
                let o = at;
                at += l.weights.rows() * (l.weights.cols() + 1);
                o
            })
            .collect()
    }

    /// Mask marking weight (not bias) positions in the flat layout.
    fn weight_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            mask.extend(core::iter::repeat_n(true, l.weights.rows() * l.weights.cols()));
            mask.extend(core::iter::repeat_n(false, l.bias.len()));
        }
        mask
    }
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.last() != Some(&1) || sizes.contains(&0) {
        return Err(Error::InvalidArgument(format!("layer sizes {sizes:?} must chain from d >= 1 to a single output")));
    }
    Ok(())
}

/// Mean cross-entropy plus `l2 / 2` times the squared weights (biases
/// excluded), as a function of the flat parameter vector.
pub struct MlpObjective<'a> {
    sizes: Vec<usize>,
    data: &'a Dataset,
    l2: f64,
}

impl<'a> MlpObjective<'a> {
    pub fn new(data: &'a Dataset, hidden: &[usize], l2: f64) -> Result<Self> {
        let mut sizes = vec![data.dim()];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        validate_sizes(&sizes)?;
        Ok(Self { sizes, data, l2 })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn model(&self, params: &[f64]) -> MlpModel {
        MlpModel::from_flat(&self.sizes, params).expect("parameter count")
    }
}

impl Objective for MlpObjective<'_> {
    fn dim(&self) -> usize {
        self.sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    fn loss(&self, params: &[f64]) -> f64 {
        let m = self.model(params);
        let n = self.data.len() as f64;
        let data: f64 = self
            .data
            .features
            .iter_rows()
            .zip(&self.data.labels)
            .map(|(x, &y)| bce_from_logit(m.logit(x), f64::from(y)))
            .sum();
        let reg: f64 = params.iter().zip(m.weight_mask()).filter(|(_, w)| *w).map(|(p, _)| p * p).sum();
        data / n + 0.5 * self.l2 * reg
    }

    fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let m = self.model(params);
        let mut g = vec![0.0; params.len()];
        let rows: Vec<usize> = (0..self.data.len()).collect();
        m.accumulate(&self.data.features, &self.data.labels, &rows, &mut g);
        let n = self.data.len() as f64;
        for ((gi, p), w) in g.iter_mut().zip(params).zip(m.weight_mask()) {
            *gi /= n;
            if w {
                *gi += self.l2 * p;
            }
        }
        g
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Mini-batch training; batch order per epoch comes from `seeded(seed, epoch + 1)`.
pub(crate) fn train(data: &Dataset, h: &MlpParams, seed: u64) -> Result<MlpModel> {
    if h.lr.is_nan() || h.lr <= 0.0 || h.l2.is_nan() || h.l2 < 0.0 || h.batch_size == 0 {
        return Err(Error::InvalidArgument(format!("MLP needs lr > 0, l2 >= 0 and batch_size >= 1, got {h:?}")));
    }
    let objective = MlpObjective::new(data, &h.hidden, h.l2)?;
    let mut model = MlpModel::init(objective.sizes(), seed)?;
    let mut params = model.to_flat();
    let mask = model.weight_mask();
    let mut adam = Adam { m: vec![0.0; params.len()], v: vec![0.0; params.len()], t: 0 };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; params.len()];
    for epoch in 0..h.epochs {
        order.shuffle(&mut seeded(seed, epoch as u64 + 1));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(h.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            epoch_loss += model.accumulate(&data.features, &data.labels, batch, &mut grad);
            let b = batch.len() as f64;
            for ((g, p), w) in grad.iter_mut().zip(&params).zip(&mask) {
                *g /= b;
                if *w {
                    *g += h.l2 * p;
                }
            }
            match h.optimizer {
                Optimizer::Sgd => {
                    for (p, g) in params.iter_mut().zip(&grad) {
                        *p -= h.lr * g;
                    }
                }
                Optimizer::Adam => {
                    adam.t += 1;
                    let c1 = 1.0 - libm::pow(ADAM_BETA1, f64::from(adam.t));
                    let c2 = 1.0 - libm::pow(ADAM_BETA2, f64::from(adam.t));
                    for i in 0..params.len() {
                        adam.m[i] = ADAM_BETA1 * adam.m[i] + (1.0 - ADAM_BETA1) * grad[i];
                        adam.v[i] = ADAM_BETA2 * adam.v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
                        params[i] -= h.lr * (adam.m[i] / c1) / (libm::sqrt(adam.v[i] / c2) + ADAM_EPS);
                    }
                }
            }
            model = MlpModel::from_flat(objective.sizes(), &params)?;
        }
        if !epoch_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { iteration: epoch, loss: epoch_loss / data.len() as f64 });
        }
    }
    Ok(model)
}
