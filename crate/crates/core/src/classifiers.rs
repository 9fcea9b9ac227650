//! Linear reference classifiers: least-squares LDA and the analytic Bayes rule
//! for two equal-covariance Gaussian classes in latent space.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::sign;

pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Decision rule `sign(⟨weights, x⟩ + intercept)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearClassifier {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept)
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(sign(self.decision(x)?))
    }

    /// Labels for every column of `inputs`.
    pub fn predict_batch(&self, inputs: &DMatrix<f64>) -> Result<Vec<i8>> {
        if inputs.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: inputs.nrows(),
            });
        }
        let w = DVector::from_column_slice(&self.weights);
        Ok(inputs
            .tr_mul(&w)
            .iter()
            .map(|v| sign(v + self.intercept))
            .collect())
    }

    pub fn accuracy(&self, inputs: &DMatrix<f64>, labels: &[i8]) -> Result<f64> {
        let pred = self.predict_batch(inputs)?;
        if pred.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: pred.len(),
                got: labels.len(),
            });
        }
        let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / pred.len().max(1) as f64)
    }
}

/// Least squares on `±1` targets with an unpenalized intercept:
/// minimizes `Σ (⟨w, x⟩ + b − y)² + ridge ‖w‖²`.
///
/// `inputs` holds one sample per column. The intercept is eliminated by
/// centering, and the `d × d` normal equations are solved by Cholesky.
pub fn fit_lda(inputs: &DMatrix<f64>, labels: &[i8], ridge: f64) -> Result<LinearClassifier> {
    let (d, n) = inputs.shape();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if n < 2 {
        return Err(Error::config("need at least two samples"));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::config("both classes must be present"));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::config("labels must be ±1"));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::config("ridge must be non-negative"));
    }

    let y = DVector::from_iterator(n, labels.iter().map(|&v| f64::from(v)));
    let x_mean = inputs.column_mean();
    let y_mean = y.mean();
    let mut xc = inputs.clone();
    for mut col in xc.column_iter_mut() {
        col -= &x_mean;
    }
    let yc = y.add_scalar(-y_mean);

    let mut gram = &xc * xc.transpose();
    for i in 0..d {
        gram[(i, i)] += ridge;
    }
    let rhs = &xc * &yc;

    if ridge == 0.0 {
        let sv = gram.clone().singular_values();
        let max = sv.max();
        let tol = max * d as f64 * f64::EPSILON;
        if max == 0.0 || sv.iter().any(|&s| s <= tol) {
            return Err(Error::Singular(format!(
                "centered Gram matrix of {n} samples in {d} dimensions is rank deficient"
            )));
        }
    }

    let w = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None if ridge == 0.0 => {
            return Err(Error::Singular("Cholesky factorization failed".into()));
        }
        // Rounding can defeat a tiny ridge on rank-deficient data.
        None => gram
            .svd(true, true)
            .solve(&rhs, f64::EPSILON)
            .map_err(|e| Error::Singular(e.to_string()))?,
    };
    let intercept = y_mean - w.dot(&x_mean);
    let clf = LinearClassifier {
        weights: w.iter().copied().collect(),
        intercept,
    };
    if !(clf.intercept.is_finite() && clf.weights.iter().all(|v| v.is_finite())) {
        return Err(Error::Singular("non-finite solution".into()));
    }
    Ok(clf)
}

/// Bayes rule for latents `z | y ~ N(y μ, Σ)` with `Σ = [[1, σ], [σ, 1]]`:
/// weights `Σ⁻¹ μ`, intercept 0.
pub fn bayes_latent_rule(mu_s: f64, mu_c: f64, sigma_sc: f64) -> Result<LinearClassifier> {
    if !(sigma_sc.abs() < 1.0) {
        return Err(Error::domain(format!("|sigma_sc| = {} must be < 1", sigma_sc.abs())));
    }
    let det = 1.0 - sigma_sc * sigma_sc;
    Ok(LinearClassifier {
        weights: vec![(mu_s - sigma_sc * mu_c) / det, (mu_c - sigma_sc * mu_s) / det],
        intercept: 0.0,
    })
}
