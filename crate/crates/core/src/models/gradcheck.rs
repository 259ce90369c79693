//! Finite-difference checks of analytic gradients.

use alloc::vec::Vec;

use rand::Rng;

use super::{Dataset, LogRegObjective, MlpObjective};
use crate::rng::seeded;
use crate::Result;

/// A differentiable scalar function of a flat parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;
    fn loss(&self, params: &[f64]) -> f64;
    fn gradient(&self, params: &[f64]) -> Vec<f64>;
}

/// `|a - b| / max(|a|, |b|)`, or the absolute difference when both are
/// below `1e-10`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = libm::fabs(a).max(libm::fabs(b));
    let diff = libm::fabs(a - b);
    if scale < 1e-10 {
        diff
    } else {
        diff / scale
    }
}

/// Worst relative error between analytic and central-difference gradients
/// of `objective` at one parameter point.
pub fn check_at(objective: &dyn Objective, params: &[f64], h: f64) -> f64 {
    let analytic = objective.gradient(params);
    let mut p = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = objective.loss(&p);
        p[i] = orig - h;
        let down = objective.loss(&p);
        p[i] = orig;
        worst = worst.max(relative_error(analytic[i], (up - down) / (2.0 * h)));
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub enum GradientModel {
    Logreg { l2: f64 },
    Mlp { hidden: Vec<usize>, l2: f64 },
}

/// Checks the gradient at `draws` parameter points drawn uniformly from
/// `[-1, 1]` and returns the worst relative error.
pub fn gradient_check(model: &GradientModel, data: &Dataset, h: f64, draws: usize, seed: u64) -> Result<f64> {
    let objective: alloc::boxed::Box<dyn Objective + '_> = match model {
        GradientModel::Logreg { l2 } => alloc::boxed::Box::new(LogRegObjective::new(data, *l2)),
        GradientModel::Mlp { hidden, l2 } => alloc::boxed::Box::new(MlpObjective::new(data, hidden, *l2)?),
    };
    let mut rng = seeded(seed, 0);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let params: Vec<f64> = (0..objective.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        worst = worst.max(check_at(objective.as_ref(), &params, h));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use alloc::vec;

    /// `f(p) = sum_i c_i p_i^2 + p_0 p_1`.
    struct Quadratic {
        c: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.c.len()
        }
        fn loss(&self, p: &[f64]) -> f64 {
            p.iter().zip(&self.c).map(|(x, c)| c * x * x).sum::<f64>() + p[0] * p[1]
        }
        fn gradient(&self, p: &[f64]) -> Vec<f64> {
            let mut g: Vec<f64> = p.iter().zip(&self.c).map(|(x, c)| 2.0 * c * x).collect();
            g[0] += p[1];
            g[1] += p[0];
            g
        }
    }

    fn random_data(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = seeded(seed, 1);
        let x = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y = (0..n).map(|i| (i % 2) as u8).collect();
        Dataset::new(Matrix::from_vec(n, d, x).unwrap(), y).unwrap()
    }

    #[test]
    fn quadratic_fixture() {
        let q = Quadratic { c: vec![1.5, -0.5, 2.0] };
        let p = [0.3, -1.2, 0.7];
        // hand gradient: (2*1.5*0.3 - 1.2, 2*-0.5*-1.2 + 0.3, 2*2*0.7)
        let g = q.gradient(&p);
        let hand = [-0.3, 1.5, 2.8];
        for (a, b) in g.iter().zip(hand) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(check_at(&q, &p, 1e-5) < 1e-6);
    }

    #[test]
    fn logistic_regression_gradient() {
        let data = random_data(20, 10, 3);
        let err = gradient_check(&GradientModel::Logreg { l2: 0.1 }, &data, 1e-5, 10, 7).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn mlp_gradient() {
        let data = random_data(15, 4, 4);
        let err = gradient_check(&GradientModel::Mlp { hidden: vec![3], l2: 0.05 }, &data, 1e-5, 10, 8).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn relative_error_cases() {
        assert_eq!(relative_error(1.0, 1.0), 0.0);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(relative_error(1e-12, 0.0), 1e-12);
    }
}
