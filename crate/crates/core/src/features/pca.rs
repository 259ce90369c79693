use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, symmetric_eigen, Matrix};
use crate::{Error, Result, Warning};

/// Eigenvalues at or below this fraction of the largest are treated as zero.
const RELATIVE_RANK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub input_dim: usize,
    pub k: usize,
    pub mean: Vec<f64>,
    /// `k` x `input_dim`, orthonormal rows.
    pub components: Matrix,
    /// Sample-covariance eigenvalues (divisor N-1), non-increasing.
    pub explained_variance: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PcaFit {
    pub model: PcaModel,
    pub warnings: Vec<Warning>,
}

/// Fits the top-`k` principal components of the rows of `data`.
///
/// The eigenproblem is solved on the D x D covariance when `D <= N`, and on
/// the N x N Gram matrix of the centred rows otherwise. Each component is
/// signed so that its largest-magnitude entry (lowest index on ties) is
/// positive.
pub fn pca_fit(data: &Matrix, k: usize) -> Result<PcaFit> {
    let (n, d) = (data.rows(), data.cols());
    if n < 2 {
        return Err(Error::InvalidArgument(format!("PCA needs at least 2 rows, got {n}")));
    }
    if k == 0 || k > (n - 1).min(d) {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={} for {n} rows of dimension {d}",
            (n - 1).min(d)
        )));
    }
    if let Some((i, v)) = data.first_non_finite() {
        return Err(Error::NonFinite { index: i, value: v });
    }

    let mut mean = vec![0.0; d];
    for row in data.iter_rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut centered = data.clone();
    for i in 0..n {
        for (x, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *x -= m;
        }
    }

    let denom = (n - 1) as f64;
    let (mut values, mut vectors) = if d <= n {
        let mut cov = Matrix::zeros(d, d);
        for row in centered.iter_rows() {
            for i in 0..d {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                let target = cov.row_mut(i);
                for j in 0..=i {
                    target[j] += ri * row[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..=i {
                cov[(i, j)] /= denom;
            }
        }
        let eig = symmetric_eigen(&cov)?;
        let values: Vec<f64> = eig.values.iter().rev().take(k).copied().collect();
        let vectors: Vec<Vec<f64>> = (0..k).map(|i| eig.vectors.row(d - 1 - i).to_vec()).collect();
        (values, vectors)
    } else {
        let mut gram = Matrix::zeros(n, n);
        for a in 0..n {
            for b in 0..=a {
                gram[(a, b)] = dot(centered.row(a), centered.row(b)) / denom;
            }
        }
        let eig = symmetric_eigen(&gram)?;
        let values: Vec<f64> = eig.values.iter().rev().take(k).copied().collect();
        let vectors = (0..k)
            .map(|i| {
                let u = eig.vectors.row(n - 1 - i);
                let mut v = vec![0.0; d];
                for (ua, row) in u.iter().zip(centered.iter_rows()) {
                    for (vj, x) in v.iter_mut().zip(row) {
                        *vj += ua * x;
                    }
                }
                v
            })
            .collect();
        (values, vectors)
    };

    let mut warnings = Vec::new();
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = top * RELATIVE_RANK_TOL;
    let mut rank = 0;
    for v in &mut values {
        if *v > cutoff && top > 0.0 {
            rank += 1;
        } else {
            *v = 0.0;
        }
    }
    if top == 0.0 {
        warnings.push(Warning::new("pca_fit", "input has zero variance; components are an arbitrary orthonormal basis"));
    } else if rank < k {
        warnings.push(Warning::new(
            "pca_fit",
            format!("only {rank} of {k} components carry variance; the rest complete an orthonormal basis"),
        ));
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    for v in vectors.drain(..rank) {
        if let Some(u) = orthonormalize_against(&basis, v) {
            basis.push(u);
        }
    }
    let mut probe = 0;
    while basis.len() < k && probe < d {
        let mut e = vec![0.0; d];
        e[probe] = 1.0;
        probe += 1;
        if let Some(u) = orthonormalize_against(&basis, e) {
            basis.push(u);
        }
    }
    // A Gram-route vector can only be dropped here if it was numerically
    // dependent; its slot has been filled from the standard basis.
    for (i, v) in values.iter_mut().enumerate() {
        if i >= rank || i >= basis.len() {
            *v = 0.0;
        }
    }
    for c in &mut basis {
        orient(c);
    }

    let components = Matrix::from_rows(&basis, d)?;
    Ok(PcaFit {
        model: PcaModel {
            input_dim: d,
            k,
            mean,
            components,
            explained_variance: values,
        },
        warnings,
    })
}

/// Two passes of modified Gram-Schmidt; `None` when `v` lies in the span.
fn orthonormalize_against(basis: &[Vec<f64>], mut v: Vec<f64>) -> Option<Vec<f64>> {
    let original = libm::sqrt(dot(&v, &v));
    if original == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let p = dot(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
    }
    let norm = libm::sqrt(dot(&v, &v));
    if norm <= original * 1e-10 {
        return None;
    }
    for x in &mut v {
        *x /= norm;
    }
    Some(v)
}

fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if libm::fabs(*x) > libm::fabs(v[best]) {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

impl PcaModel {
    /// `components * (x - mean)`.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.components.iter_rows().map(|c| dot(c, &centered)).collect())
    }

    pub fn transform_rows(&self, data: &Matrix) -> Result<Matrix> {
        let mut out = Vec::with_capacity(data.rows() * self.k);
        for row in data.iter_rows() {
            out.extend(self.transform(row)?);
        }
        Matrix::from_vec(data.rows(), self.k, out)
    }
}
