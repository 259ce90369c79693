use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::linalg::{squared_distance, Matrix};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Stores the training set; scores are the positive fraction among the
/// `k` nearest rows (Euclidean, ties to the lower row index).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub features: Matrix,
    pub labels: Vec<u8>,
}

pub(crate) fn train(data: &Dataset, h: &KnnParams) -> Result<KnnModel> {
    if h.k == 0 || h.k > data.len() {
        return Err(Error::InvalidArgument(alloc::format!("k = {} must be in 1..={}", h.k, data.len())));
    }
    Ok(KnnModel { k: h.k, features: data.features.clone(), labels: data.labels.clone() })
}

impl KnnModel {
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .features
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (squared_distance(r, query), i))
            .collect();
        let k = self.k.min(d.len());
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, by_distance);
            d.truncate(k);
        }
        d.sort_by(by_distance);
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows()
            .map(|q| {
                let hits = self.neighbors(q).into_iter().filter(|&i| self.labels[i] == 1).count();
                hits as f64 / self.k as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn nearest_neighbor() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]], 2).unwrap();
        let m = train(&Dataset::new(x, vec![0, 1]).unwrap(), &KnnParams { k: 1 }).unwrap();
        let q = Matrix::from_rows(&[[0.9, 0.9]], 2).unwrap();
        assert_eq!(m.predict(&q), vec![1.0]);
    }

    #[test]
    fn fraction_of_three() {
        let x = Matrix::from_rows(&[[0.0], [0.1], [0.2], [5.0]], 1).unwrap();
        let m = train(&Dataset::new(x, vec![1, 1, 0, 1]).unwrap(), &KnnParams { k: 3 }).unwrap();
        let s = m.predict(&Matrix::from_rows(&[[0.05]], 1).unwrap());
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let x = Matrix::from_rows(&[[1.0], [-1.0], [1.0]], 1).unwrap();
        let m = train(&Dataset::new(x, vec![1, 0, 0]).unwrap(), &KnnParams { k: 2 }).unwrap();
        assert_eq!(m.neighbors(&[0.0]), vec![0, 1]);
    }

    #[test]
    fn k_one_recovers_training_labels() {
        let data = crate::models::tests::toy();
        let m = train(&data, &KnnParams { k: 1 }).unwrap();
        let s = m.predict(&data.features);
        let labels: Vec<u8> = s.iter().map(|v| *v as u8).collect();
        assert_eq!(labels, data.labels);
    }

    #[test]
    fn k_bounds() {
        let data = crate::models::tests::toy();
        assert!(train(&data, &KnnParams { k: 0 }).is_err());
        assert!(train(&data, &KnnParams { k: 7 }).is_err());
    }
}
