//! Feature standardization and a linear SVM trained by seeded stochastic
//! subgradient descent.
//!
//! The objective is `λ‖w‖² + (1/n) Σ hinge(1 − ỹ(w·x + b))` with labels
//! remapped to ỹ ∈ {−1, +1} and step size `η_t = 1/(λ·t)`. Training is
//! single-threaded and fully determined by the hyperparameter seed.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::Error;
use crate::rng::rng_from_seed;

/// Per-column mean and population standard deviation fitted on training rows.
/// Zero-variance columns are passed through centered only.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn fit_standardizer(rows: &[Vec<f64>]) -> Result<Standardizer, Error> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput("standardizer needs at least one row".to_string()));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::ShapeMismatch("ragged feature rows".to_string()));
    }
    let mut means = vec![0.0; dim];
    for row in rows {
        for (m, &x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut vars = vec![0.0; dim];
    for row in rows {
        for ((v, &m), &x) in vars.iter_mut().zip(&means).zip(row) {
            let d = x - m;
            *v += d * d;
        }
    }
    let stds = vars
        .iter()
        .map(|&v| libm::sqrt(v / n as f64))
        .collect();
    Ok(Standardizer { means, stds })
}

impl Standardizer {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>, Error> {
        if row.len() != self.dim() {
            return Err(Error::ShapeMismatch("row width != standardizer width".to_string()));
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&x, (&m, &s))| if s > 0.0 { (x - m) / s } else { x - m })
            .collect())
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, Error> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Learning-rate schedule. Only inverse scaling `η_t = 1/(λ·t)` is
/// instantiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LearningSchedule {
    #[default]
    InverseScaling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmHyper {
    pub lambda: f64,
    pub epochs: usize,
    pub schedule: LearningSchedule,
    pub seed: u64,
}

impl Default for SvmHyper {
    fn default() -> SvmHyper {
        SvmHyper {
            lambda: 1e-4,
            epochs: 200,
            schedule: LearningSchedule::InverseScaling,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyper: SvmHyper,
}

/// Full objective `λ‖w‖² + (1/n) Σ hinge(1 − ỹ(w·x + b))`.
pub fn svm_objective(x: &[Vec<f64>], y: &[u8], weights: &[f64], bias: f64, lambda: f64) -> f64 {
    let reg: f64 = lambda * weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let margin = signed(label) * (dot(weights, row) + bias);
            (1.0 - margin).max(0.0)
        })
        .sum::<f64>()
        / x.len() as f64;
    reg + hinge
}

// Subgradient of the per-sample objective λ‖w‖² + hinge(1 − ỹ(w·x+b)).
fn sample_subgradient(
    row: &[f64],
    label: u8,
    weights: &[f64],
    bias: f64,
    lambda: f64,
) -> (Vec<f64>, f64) {
    let ys = signed(label);
    let violated = ys * (dot(weights, row) + bias) < 1.0;
    let grad_w = weights
        .iter()
        .zip(row)
        .map(|(&w, &x)| 2.0 * lambda * w - if violated { ys * x } else { 0.0 })
        .collect();
    let grad_b = if violated { -ys } else { 0.0 };
    (grad_w, grad_b)
}

fn signed(label: u8) -> f64 {
    if label == 0 {
        -1.0
    } else {
        1.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains the linear SVM. Requires both classes to be present; the epoch
/// shuffle and therefore the weights are bit-reproducible from the seed.
pub fn train_svm(x: &[Vec<f64>], y: &[u8], hyper: &SvmHyper) -> Result<LinearModel, Error> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::ShapeMismatch(
            "training matrix and labels must be non-empty and equal length".to_string(),
        ));
    }
    if !hyper.lambda.is_finite() || hyper.lambda <= 0.0 {
        return Err(Error::InvalidConfig("svm lambda must be positive".to_string()));
    }
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::ShapeMismatch("ragged training rows".to_string()));
    }
    if y.iter().all(|&l| l == 0) || y.iter().all(|&l| l != 0) {
        return Err(Error::SingleClass);
    }

    let LearningSchedule::InverseScaling = hyper.schedule;
    let mut rng = rng_from_seed(hyper.seed);
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut t: u64 = 0;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (hyper.lambda * t as f64);
            let (grad_w, grad_b) = sample_subgradient(&x[i], y[i], &weights, bias, hyper.lambda);
            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w -= eta * g;
            }
            bias -= eta * grad_b;
        }
    }
    Ok(LinearModel {
        weights,
        bias,
        hyper: *hyper,
    })
}

/// Scores are `w·x + b`; the label is 1 exactly when the score is >= 0, so a
/// tie at zero predicts compromised.
pub fn predict(model: &LinearModel, x: &[Vec<f64>]) -> Result<(Vec<u8>, Vec<f64>), Error> {
    if x.iter().any(|r| r.len() != model.weights.len()) {
        return Err(Error::ShapeMismatch("row width != model width".to_string()));
    }
    let scores: Vec<f64> = x.iter().map(|row| dot(&model.weights, row) + model.bias).collect();
    let labels = scores.iter().map(|&s| u8::from(s >= 0.0)).collect();
    Ok((labels, scores))
}
