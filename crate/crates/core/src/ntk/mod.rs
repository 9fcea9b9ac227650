//! Infinite-width kernel account of availability bias.
//!
//! Inputs are `x = A z` with `A = diag(a1, a2)` and class means `±μ`. In the
//! small-covariance limit the data measure collapses onto the two points
//! `±c` with `c = A μ`, every integral becomes a two-term average, and the
//! kernels below have closed-form spectra:
//!
//! - linear: `k(x, z) = ⟨x, z⟩`, one eigenpair;
//! - relu_quadratic: `k(x, z) = ‖x‖ ‖z‖ a* (1 + cos θ)²`, two eigenpairs with
//!   equal eigenvalues;
//! - relu_exact: `k(x, z) = ‖x‖ ‖z‖ h(cos θ)`, evaluation only.
//!
//! Rescaling the class mean to `B c` with `B = diag(b)` changes the kernel
//! predictor; the alignment `γ(b)` between old and new predictors and its
//! high-order derivatives `ζ_i` at `b = 1` measure how strongly each feature's
//! availability steers the predictor.

mod alignment;
mod emit;
pub mod jet;
pub mod quad;
mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use alignment::{
    gamma, gamma_closed_form, gap_closed_form, predictor, sensitivity, sign_map, zeta, Predictor,
    SensitivityResult, SignMap, MAX_ORDER,
};
pub use emit::{
    default_a_grid, write_sensitivity_csv, write_signmap_csv, write_spectrum_json, SpectrumFile,
};
pub use quad::{fit_quad, fit_quad_numeric, quad_error, quad_error_numeric, relu_h, A_STAR};
pub use spectrum::{
    constructive_spectrum, eigen_residual, feature_map, projector, spectrum, ConstructiveSpectrum,
    Spectrum,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    ReluQuadratic,
    ReluExact,
}

/// Availabilities `a1, a2` and class means `mu1, mu2` of the two features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDataModel {
    pub a1: f64,
    pub a2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub kind: KernelKind,
}

impl KernelDataModel {
    pub fn new(a1: f64, a2: f64, mu1: f64, mu2: f64, kind: KernelKind) -> Result<Self> {
        let m = KernelDataModel {
            a1,
            a2,
            mu1,
            mu2,
            kind,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a1", self.a1),
            ("a2", self.a2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// The class mean in input space, `c = A μ`.
    pub fn center(&self) -> [f64; 2] {
        [self.a1 * self.mu1, self.a2 * self.mu2]
    }

    /// `‖A μ‖²`.
    pub fn center_norm_sq(&self) -> f64 {
        let [c1, c2] = self.center();
        c1 * c1 + c2 * c2
    }

    /// The same model with the roles of the two features exchanged.
    pub fn swapped(&self) -> Self {
        KernelDataModel {
            a1: self.a2,
            a2: self.a1,
            mu1: self.mu2,
            mu2: self.mu1,
            kind: self.kind,
        }
    }
}

pub(crate) fn dot(x: [f64; 2], z: [f64; 2]) -> f64 {
    x[0] * z[0] + x[1] * z[1]
}

pub(crate) fn norm(x: [f64; 2]) -> f64 {
    x[0].hypot(x[1])
}

pub fn kernel_eval(kind: KernelKind, x: [f64; 2], z: [f64; 2]) -> Result<f64> {
    if kind == KernelKind::Linear {
        return Ok(dot(x, z));
    }
    let (nx, nz) = (norm(x), norm(z));
    if nx == 0.0 || nz == 0.0 {
        return Err(Error::domain("arc-cosine kernels are undefined at the origin"));
    }
    let u = (dot(x, z) / (nx * nz)).clamp(-1.0, 1.0);
    Ok(match kind {
        KernelKind::ReluQuadratic => nx * nz * A_STAR * (1.0 + u) * (1.0 + u),
        KernelKind::ReluExact => nx * nz * relu_h(u)?,
        KernelKind::Linear => unreachable!(),
    })
}

/// Sign with `sign(0) = 0`, used for the sign map and gap indicators.
pub(crate) fn sign3(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kernel_reference_values() {
        assert_eq!(kernel_eval(KernelKind::Linear, [1.0, 0.0], [1.0, 0.0]).unwrap(), 1.0);
        let x = [0.6, -0.8];
        let q = kernel_eval(KernelKind::ReluQuadratic, x, x).unwrap();
        assert!((q - 4.0 * A_STAR).abs() < 1e-15);
        let e = kernel_eval(KernelKind::ReluExact, [1.0, 0.0], [0.0, 1.0]).unwrap();
        assert!((e - 1.0 / PI).abs() < 1e-15);
        assert!(kernel_eval(KernelKind::ReluExact, [0.0, 0.0], x).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(KernelDataModel::new(1.0, 0.0, 1.0, 1.0, KernelKind::Linear).is_err());
        assert!(KernelDataModel::new(1.0, 2.0, 1.0, 1.0, KernelKind::Linear).is_ok());
    }

    #[test]
    fn kind_names() {
        let s = serde_json::to_string(&KernelKind::ReluQuadratic).unwrap();
        assert_eq!(s, "\"relu_quadratic\"");
    }
}
