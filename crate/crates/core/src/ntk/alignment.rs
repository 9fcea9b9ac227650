//! Kernel predictor, alignment `γ(b)` under availability rescaling, its
//! high-order sensitivities, and the resulting sign map.

use serde::{Deserialize, Serialize};

use super::jet::{Jet, Scalar};
use super::spectrum::{spectrum, Spectrum};
use super::{sign3, KernelDataModel, KernelKind};
use crate::error::{Error, Result};

/// Largest supported derivative order.
pub const MAX_ORDER: usize = 12;

/// `f(x) = ½ Σ φ_i(x) φ_i(c)`.
#[derive(Debug, Clone)]
pub struct Predictor {
    spectrum: Spectrum,
    weights: Vec<f64>,
}

impl Predictor {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        0.5 * self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.spectrum.eigenfunction(i, x))
            .sum::<f64>()
    }
}

pub fn predictor(model: &KernelDataModel) -> Result<Predictor> {
    let spectrum = spectrum(model)?;
    let weights = spectrum.eigenfunctions(spectrum.center);
    Ok(Predictor { spectrum, weights })
}

/// `(φ1 + φ2, φ1 − φ2)` of the quadratic ReLU spectrum at `x`, written through
/// `(1 ± cos θ)`. Whichever of the two factors vanishes near `±c` is computed
/// from the 2-D cross product, so it is exactly zero at `±c` and free of
/// cancellation nearby.
fn sum_diff<T: Scalar>(x1: T, x2: T, c: [f64; 2]) -> Result<(T, T)> {
    let n = c[0].hypot(c[1]);
    let q = (x1.clone() * x1.clone() + x2.clone() * x2.clone()).sqrt()?;
    if q.value() == 0.0 {
        return Err(Error::domain("eigenfunctions evaluated at the origin"));
    }
    let p = x1.clone() * c[0] + x2.clone() * c[1];
    let cross = x1 * c[1] - x2 * c[0];
    let qn = q.clone() * n;
    let cross2 = cross.clone() * cross;
    let (one_plus, one_minus) = if p.value() >= 0.0 {
        let s = qn.clone() + p;
        (s.clone() / qn.clone(), cross2 / (qn * s))
    } else {
        let d = qn.clone() - p;
        (cross2 / (qn.clone() * d.clone()), d / qn)
    };
    let half = q * (0.5 / n);
    Ok((
        half.clone() * (one_plus.clone() * one_plus),
        half * (one_minus.clone() * one_minus),
    ))
}

/// `Σ_i φ_i(x) φ_i(y)` for the model's spectrum, with `y` possibly a jet.
fn pairing<T: Scalar>(kind: KernelKind, c: [f64; 2], x: [f64; 2], y: (T, T)) -> Result<T> {
    let n2 = c[0] * c[0] + c[1] * c[1];
    match kind {
        KernelKind::Linear => {
            let px = (x[0] * c[0] + x[1] * c[1]) / n2;
            let py = (y.0 * c[0] + y.1 * c[1]) * (1.0 / n2);
            Ok(py * px)
        }
        KernelKind::ReluQuadratic => {
            let (sx, dx) = sum_diff(x[0], x[1], c)?;
            let (sy, dy) = sum_diff(y.0, y.1, c)?;
            // φ1 = (S + D)/2, φ2 = (S − D)/2, so φ1φ1' + φ2φ2' = (S S' + D D')/2.
            Ok((sy * sx + dy * dx) * 0.5)
        }
        KernelKind::ReluExact => Err(Error::Unsupported(
            "alignment needs a closed-form spectrum".into(),
        )),
    }
}

/// γ by direct evaluation of the normalized inner product of `f` and `g_B`
/// over the two support points `±c`.
///
/// With `F = (f(c), f(−c))` and `G = (g(c), g(−c))` the cosine is rewritten via
/// Lagrange's identity as `sign(⟨F, G⟩) / √(1 + (F × G / ⟨F, G⟩)²)`. Near
/// `b = (1, 1)` the deviation of γ from 1 is of high order, and the plain
/// ratio `⟨F, G⟩ / (‖F‖ ‖G‖)` would cancel in every lower-order coefficient.
fn gamma_generic<T: Scalar>(model: &KernelDataModel, b1: T, b2: T) -> Result<T> {
    let c = model.center();
    let m = [-c[0], -c[1]];
    let v = (b1 * c[0], b2 * c[1]);
    let f = [
        0.5 * pairing(model.kind, c, c, (c[0], c[1]))?,
        0.5 * pairing(model.kind, c, m, (c[0], c[1]))?,
    ];
    let g = [
        pairing(model.kind, c, c, v.clone())? * 0.5,
        pairing(model.kind, c, m, v)? * 0.5,
    ];
    // The measure weights (½ each) cancel in the cosine.
    let dot = g[0].clone() * f[0] + g[1].clone() * f[1];
    let cross = g[1].clone() * f[0] - g[0].clone() * f[1];
    let (d, x) = (dot.value(), cross.value());
    if f[0] == 0.0 && f[1] == 0.0 {
        return Err(Error::domain("predictor vanishes on the support; alignment undefined"));
    }
    if d == 0.0 && x == 0.0 {
        return Err(Error::domain("g vanishes on the support; alignment undefined"));
    }
    if d.abs() >= x.abs() {
        let t = cross / dot;
        let one = t.lift(1.0);
        Ok(one.clone() / (one + t.clone() * t).sqrt()? * d.signum())
    } else {
        let t = dot / cross;
        let one = t.lift(1.0);
        Ok(t.clone() / (one + t.clone() * t).sqrt()? * x.signum())
    }
}

fn check_b(b: [f64; 2]) -> Result<()> {
    if !(b[0] > 0.0 && b[1] > 0.0 && b[0].is_finite() && b[1].is_finite()) {
        return Err(Error::domain(format!("b = {b:?} must be positive")));
    }
    Ok(())
}

/// Alignment `γ(b)` by two-point evaluation.
pub fn gamma(model: &KernelDataModel, b: [f64; 2]) -> Result<f64> {
    model.validate()?;
    check_b(b)?;
    gamma_generic(model, b[0], b[1])
}

/// Alignment from its closed form. For the quadratic ReLU kernel
/// `γ = (1 + R²)^{−1/2}` with `R = (c1 c2 (b1 − b2))⁴ / (‖Bc‖ ‖c‖ + ⟨Bc, c⟩)⁴`;
/// for the linear kernel `γ = sign(b1 c1² + b2 c2²)`.
pub fn gamma_closed_form(model: &KernelDataModel, b: [f64; 2]) -> Result<f64> {
    model.validate()?;
    check_b(b)?;
    let [c1, c2] = model.center();
    let p = b[0] * c1 * c1 + b[1] * c2 * c2;
    match model.kind {
        KernelKind::Linear => Ok(p.signum()),
        KernelKind::ReluQuadratic => {
            let q = (b[0] * c1).hypot(b[1] * c2);
            let n = c1.hypot(c2);
            let r = (c1 * c2 * (b[0] - b[1]) / (q * n + p)).powi(4);
            Ok(1.0 / (1.0 + r * r).sqrt())
        }
        KernelKind::ReluExact => Err(Error::Unsupported(
            "alignment needs a closed-form spectrum".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub order: usize,
    pub zeta1: f64,
    pub zeta2: f64,
    /// `|ζ1| − |ζ2|`.
    pub gap: f64,
    /// `sign(gap · (a1 − a2))`: `+1` when the more available feature dominates.
    pub sign_indicator: i8,
}

/// `ζ_i`: the `m`-th derivative of `γ` with respect to `b_i` at `b = (1, 1)`,
/// by jet propagation through the two-point evaluation.
pub fn zeta(model: &KernelDataModel, feature: usize, m: usize) -> Result<f64> {
    model.validate()?;
    if !(1..=MAX_ORDER).contains(&m) {
        return Err(Error::config(format!("order {m} outside 1..={MAX_ORDER}")));
    }
    if !(feature == 1 || feature == 2) {
        return Err(Error::config(format!("feature index {feature} must be 1 or 2")));
    }
    match model.kind {
        // γ ≡ 1 on the positive orthant.
        KernelKind::Linear => Ok(0.0),
        KernelKind::ReluExact => Err(Error::Unsupported(
            "sensitivities need a closed-form spectrum".into(),
        )),
        KernelKind::ReluQuadratic => {
            let degree = MAX_ORDER.max(m + 2);
            let t = Jet::variable(1.0, degree);
            let one = Jet::constant(1.0, degree);
            let (b1, b2) = if feature == 1 { (t, one) } else { (one, t) };
            let g = gamma_generic(model, b1, b2)?;
            if g.coeffs().iter().any(|c| !c.is_finite()) {
                return Err(Error::domain("non-finite series coefficient"));
            }
            Ok(g.derivative(m))
        }
    }
}

pub fn sensitivity(model: &KernelDataModel, m: usize) -> Result<SensitivityResult> {
    let zeta1 = zeta(model, 1, m)?;
    let zeta2 = zeta(model, 2, m)?;
    let gap = zeta1.abs() - zeta2.abs();
    Ok(SensitivityResult {
        order: m,
        zeta1,
        zeta2,
        gap,
        sign_indicator: sign3(gap * (model.a1 - model.a2)),
    })
}

/// Lowest-order gap `5670 (c1 c2)⁸ (c1² − c2²) / ‖c‖¹⁸`, reached at order 9.
pub fn gap_closed_form(model: &KernelDataModel) -> Result<f64> {
    model.validate()?;
    match model.kind {
        KernelKind::Linear => Ok(0.0),
        KernelKind::ReluQuadratic => {
            let [c1, c2] = model.center();
            let n2 = c1 * c1 + c2 * c2;
            Ok(5670.0 / n2.powi(9) * (c1 * c2).powi(8) * (c1 * c1 - c2 * c2))
        }
        KernelKind::ReluExact => Err(Error::Unsupported(
            "no closed-form gap for the exact kernel".into(),
        )),
    }
}

/// `sign((a1² μ1² − a2² μ2²)(a1 − a2))` over a grid; `signs[i][j]` belongs to
/// `(a1[i], a2[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignMap {
    pub mu1: f64,
    pub mu2: f64,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub signs: Vec<Vec<i8>>,
}

pub fn sign_map(mu1: f64, mu2: f64, a1_grid: &[f64], a2_grid: &[f64]) -> Result<SignMap> {
    if !(mu1 > 0.0 && mu2 > 0.0) {
        return Err(Error::config("class means must be positive"));
    }
    if a1_grid.iter().chain(a2_grid).any(|a| !(*a > 0.0)) {
        return Err(Error::config("availability grids must be positive"));
    }
    let signs = a1_grid
        .iter()
        .map(|&a1| {
            a2_grid
                .iter()
                .map(|&a2| {
                    let avail = (a1 * mu1).powi(2) - (a2 * mu2).powi(2);
                    sign3(avail * (a1 - a2))
                })
                .collect()
        })
        .collect();
    Ok(SignMap {
        mu1,
        mu2,
        a1: a1_grid.to_vec(),
        a2: a2_grid.to_vec(),
        signs,
    })
}
