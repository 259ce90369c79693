use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::linalg::Matrix;
use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
    /// Features examined per node; `None` means `round(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: Some(16), min_leaf: 2, bootstrap: true, max_features: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf { label: u8 },
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub root: Node,
}

impl Tree {
    /// Vote of this tree: `x[feature] <= threshold` goes left.
    pub fn vote(&self, x: &[f64]) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label } => return *label,
                Node::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(left).max(go(right)),
            }
        }
        go(&self.root)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows()
            .map(|r| {
                let votes: usize = self.trees.iter().map(|t| usize::from(t.vote(r))).sum();
                votes as f64 / self.trees.len() as f64
            })
            .collect()
    }
}

struct Builder<'a, R> {
    x: &'a Matrix,
    y: &'a [u8],
    max_depth: usize,
    min_leaf: usize,
    max_features: usize,
    rng: R,
    features: Vec<usize>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

fn majority(pos: usize, n: usize) -> u8 {
    u8::from(2 * pos > n)
}

impl<R: Rng> Builder<'_, R> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> Node {
        let n = rows.len();
        let pos = rows.iter().filter(|&&i| self.y[i] == 1).count();
        if pos == 0 || pos == n || depth >= self.max_depth || n < 2 * self.min_leaf {
            return Node::Leaf { label: majority(pos, n) };
        }
        let Some((feature, threshold)) = self.best_split(rows, pos) else {
            return Node::Leaf { label: majority(pos, n) };
        };
        let x = self.x;
        let mut split = 0;
        for i in 0..n {
            if x[(rows[i], feature)] <= threshold {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        Node::Split { feature, threshold, left: Box::new(left), right: Box::new(right) }
    }

    /// Visits features in a random order until `max_features` non-constant
    /// ones have been scored; returns the lowest weighted Gini split.
    fn best_split(&mut self, rows: &[usize], pos: usize) -> Option<(usize, f64)> {
        let n = rows.len();
        self.features.shuffle(&mut self.rng);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut evaluated = 0;
        let mut values: Vec<(f64, u8)> = Vec::with_capacity(n);
        for fi in 0..self.features.len() {
            if evaluated >= self.max_features {
                break;
            }
            let f = self.features[fi];
            values.clear();
            values.extend(rows.iter().map(|&i| (self.x[(i, f)], self.y[i])));
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            if values[0].0 == values[n - 1].0 {
                continue;
            }
            evaluated += 1;
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += usize::from(values[k - 1].1);
                if values[k - 1].0 == values[k].0 || k < self.min_leaf || n - k < self.min_leaf {
                    continue;
                }
                let impurity =
                    (k as f64 * gini(left_pos, k) + (n - k) as f64 * gini(pos - left_pos, n - k)) / n as f64;
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    let (lo, hi) = (values[k - 1].0, values[k].0);
                    let mut t = lo + (hi - lo) / 2.0;
                    if t >= hi {
                        t = lo;
                    }
                    best = Some((impurity, f, t));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

pub(crate) fn train(data: &Dataset, h: &ForestParams, seed: u64) -> Result<ForestModel> {
    if h.n_trees == 0 || h.min_leaf == 0 {
        return Err(Error::InvalidArgument(alloc::format!("forest needs n_trees >= 1 and min_leaf >= 1, got {h:?}")));
    }
    let d = data.dim();
    let max_features = match h.max_features {
        Some(m) if m == 0 || m > d => {
            return Err(Error::InvalidArgument(alloc::format!("max_features {m} must be in 1..={d}")))
        }
        Some(m) => m,
        None => (libm::round(libm::sqrt(d as f64)) as usize).max(1),
    };
    let n = data.len();
    let trees = (0..h.n_trees)
        .map(|t| {
            let mut rng = seeded(seed, t as u64 + 1);
            let mut rows: Vec<usize> =
                if h.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
            let mut b = Builder {
                x: &data.features,
                y: &data.labels,
                max_depth: h.max_depth.unwrap_or(usize::MAX),
                min_leaf: h.min_leaf,
                max_features,
                rng,
                features: (0..d).collect(),
            };
            Tree { root: b.grow(&mut rows, 0) }
        })
        .collect();
    Ok(ForestModel { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn full_tree() -> ForestParams {
        ForestParams { n_trees: 1, max_depth: None, min_leaf: 1, bootstrap: false, max_features: None }
    }

    #[test]
    fn single_full_tree_fits_consistent_data() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.0], [4.0, 0.0], [5.0, 5.0]], 2).unwrap();
        let data = Dataset::new(x, vec![0, 1, 0, 1, 1, 0]).unwrap();
        let m = train(&data, &ForestParams { max_features: Some(2), ..full_tree() }, 1).unwrap();
        let s = m.predict(&data.features);
        let labels: Vec<u8> = s.iter().map(|v| *v as u8).collect();
        assert_eq!(labels, data.labels);
    }

    #[test]
    fn score_is_vote_fraction() {
        let leaf = |label| Tree { root: Node::Leaf { label } };
        let m = ForestModel { trees: vec![leaf(1), leaf(1), leaf(0)] };
        let s = m.predict(&Matrix::zeros(1, 1));
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn depth_is_capped() {
        let data = crate::models::tests::toy();
        let m = train(&data, &ForestParams { max_depth: Some(1), n_trees: 5, ..Default::default() }, 4).unwrap();
        assert!(m.trees.iter().all(|t| t.depth() <= 1));
    }

    #[test]
    fn adjacent_floats_split_cleanly() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let x = Matrix::from_rows(&[[a], [b]], 1).unwrap();
        let data = Dataset::new(x, vec![0, 1]).unwrap();
        let m = train(&data, &full_tree(), 0).unwrap();
        assert_eq!(m.predict(&data.features), vec![0.0, 1.0]);
    }

    #[test]
    fn seeded_and_repeatable() {
        let data = crate::models::tests::toy();
        let h = ForestParams { n_trees: 7, ..Default::default() };
        assert_eq!(train(&data, &h, 9).unwrap(), train(&data, &h, 9).unwrap());
    }

    #[test]
    fn bad_parameters() {
        let data = crate::models::tests::toy();
        assert!(train(&data, &ForestParams { n_trees: 0, ..Default::default() }, 0).is_err());
        assert!(train(&data, &ForestParams { max_features: Some(3), ..Default::default() }, 0).is_err());
    }
}
