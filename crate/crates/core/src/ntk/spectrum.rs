//! Closed-form eigenpairs of the kernel operator under the two-point measure,
//! plus an independent construction from the kernel's finite feature map.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{dot, kernel_eval, norm, KernelDataModel, KernelKind, A_STAR};
use crate::error::{Error, Result};

/// Nonzero eigenvalues and closed-form eigenfunctions.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub kind: KernelKind,
    pub center: [f64; 2],
    pub eigenvalues: Vec<f64>,
    /// Scale factors in front of each eigenfunction: `1/‖c‖²` for the linear
    /// kernel; `d1 = 1/(2‖c‖²)` and `d2 = 1/‖c‖²` for the quadratic ReLU kernel.
    pub normalization: Vec<f64>,
}

pub fn spectrum(model: &KernelDataModel) -> Result<Spectrum> {
    model.validate()?;
    let n2 = model.center_norm_sq();
    let (eigenvalues, normalization) = match model.kind {
        KernelKind::Linear => (vec![n2], vec![1.0 / n2]),
        KernelKind::ReluQuadratic => {
            let lam = 2.0 * A_STAR * n2;
            (vec![lam, lam], vec![1.0 / (2.0 * n2), 1.0 / n2])
        }
        KernelKind::ReluExact => {
            return Err(Error::Unsupported(
                "the exact arc-cosine kernel has no closed-form spectrum".into(),
            ))
        }
    };
    Ok(Spectrum {
        kind: model.kind,
        center: model.center(),
        eigenvalues,
        normalization,
    })
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// The `i`-th eigenfunction (0-based) at `x`.
    pub fn eigenfunction(&self, i: usize, x: [f64; 2]) -> f64 {
        let c = self.center;
        let d = self.normalization[i];
        match (self.kind, i) {
            (KernelKind::ReluQuadratic, 0) => {
                let nx = norm(x);
                if nx == 0.0 {
                    return 0.0;
                }
                let nc = norm(c);
                let cos = dot(x, c) / (nx * nc);
                d * nx * nc * (1.0 + cos * cos)
            }
            _ => d * dot(x, c),
        }
    }

    pub fn eigenfunctions(&self, x: [f64; 2]) -> Vec<f64> {
        (0..self.len()).map(|i| self.eigenfunction(i, x)).collect()
    }
}

/// Explicit feature map with `k(x, z) = s · ⟨v(x), v(z)⟩`: `v(x) = x` for the
/// linear kernel and, for the quadratic ReLU kernel,
/// `v(x) = [‖x‖, √2 x1, √2 x2, x1²/‖x‖, x2²/‖x‖, √2 x1 x2/‖x‖]` with `s = a*`.
pub fn feature_map(kind: KernelKind, x: [f64; 2]) -> Result<DVector<f64>> {
    match kind {
        KernelKind::Linear => Ok(DVector::from_column_slice(&x)),
        KernelKind::ReluQuadratic => {
            let n = norm(x);
            if n == 0.0 {
                return Ok(DVector::zeros(6));
            }
            let r2 = std::f64::consts::SQRT_2;
            Ok(DVector::from_vec(vec![
                n,
                r2 * x[0],
                r2 * x[1],
                x[0] * x[0] / n,
                x[1] * x[1] / n,
                r2 * x[0] * x[1] / n,
            ]))
        }
        KernelKind::ReluExact => Err(Error::Unsupported(
            "the exact arc-cosine kernel has no finite feature map".into(),
        )),
    }
}

fn feature_scale(kind: KernelKind) -> f64 {
    match kind {
        KernelKind::ReluQuadratic => A_STAR,
        _ => 1.0,
    }
}

/// Eigenpairs obtained numerically from the coefficient matrix
/// `C = ½ (v⁺ v⁺ᵀ + v⁻ v⁻ᵀ)`, `v± = v(±c)`. An eigenfunction is
/// `φ(x) = ⟨v(x), α⟩` with `α` an eigenvector of `C` scaled to unit norm
/// under the measure.
#[derive(Debug, Clone)]
pub struct ConstructiveSpectrum {
    pub kind: KernelKind,
    pub coefficient_matrix: DMatrix<f64>,
    pub v_plus: DVector<f64>,
    pub v_minus: DVector<f64>,
    pub eigenvalues: Vec<f64>,
    pub coefficients: Vec<DVector<f64>>,
}

pub fn constructive_spectrum(model: &KernelDataModel) -> Result<ConstructiveSpectrum> {
    model.validate()?;
    let c = model.center();
    let v_plus = feature_map(model.kind, c)?;
    let v_minus = feature_map(model.kind, [-c[0], -c[1]])?;
    let cm = (&v_plus * v_plus.transpose() + &v_minus * v_minus.transpose()) * 0.5;
    let eig = SymmetricEigen::new(cm.clone());
    let tol = 1e-12 * cm.trace();
    let scale = feature_scale(model.kind);
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .filter(|(l, _)| **l > tol)
        .map(|(l, v)| {
            let v = v.into_owned();
            let unit = (v.dot(&(&cm * &v))).sqrt();
            (scale * l, v / unit)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (eigenvalues, coefficients) = pairs.into_iter().unzip();
    Ok(ConstructiveSpectrum {
        kind: model.kind,
        coefficient_matrix: cm,
        v_plus,
        v_minus,
        eigenvalues,
        coefficients,
    })
}

impl ConstructiveSpectrum {
    pub fn eigenfunction(&self, i: usize, x: [f64; 2]) -> Result<f64> {
        Ok(feature_map(self.kind, x)?.dot(&self.coefficients[i]))
    }

    pub fn eigenfunctions(&self, x: [f64; 2]) -> Result<Vec<f64>> {
        (0..self.eigenvalues.len())
            .map(|i| self.eigenfunction(i, x))
            .collect()
    }

    /// The candidate eigenvectors `v⁺ + v⁻` and `v⁺ − v⁻`, unit length.
    pub fn symmetric_candidates(&self) -> (DVector<f64>, DVector<f64>) {
        let s = &self.v_plus + &self.v_minus;
        let d = &self.v_plus - &self.v_minus;
        let unit = |v: DVector<f64>| {
            let n = v.norm();
            if n == 0.0 {
                v
            } else {
                v / n
            }
        };
        (unit(s), unit(d))
    }
}

/// Kernel of the orthogonal projection onto the span of the given
/// eigenfunction values: `Σ φ_i(x) φ_i(y)`. It does not depend on the basis
/// chosen inside a degenerate eigenspace.
pub fn projector(phi_x: &[f64], phi_y: &[f64]) -> f64 {
    phi_x.iter().zip(phi_y).map(|(a, b)| a * b).sum()
}

/// Largest `|∫ k(x, z) φ(z) p(z) dz − λ φ(x)| / λ` over samples and eigenpairs,
/// with `p` the two-point measure at `±c`.
pub fn eigen_residual(spec: &Spectrum, xs: &[[f64; 2]]) -> Result<f64> {
    let c = spec.center;
    let m = [-c[0], -c[1]];
    let mut worst: f64 = 0.0;
    for (i, &lam) in spec.eigenvalues.iter().enumerate() {
        let (phi_c, phi_m) = (spec.eigenfunction(i, c), spec.eigenfunction(i, m));
        for &x in xs {
            let op = 0.5 * (kernel_eval(spec.kind, x, c)? * phi_c + kernel_eval(spec.kind, x, m)? * phi_m);
            worst = worst.max((op - lam * spec.eigenfunction(i, x)).abs() / lam);
        }
    }
    Ok(worst)
}
