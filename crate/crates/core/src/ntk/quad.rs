//! The arc-cosine function `h` of the two-layer ReLU kernel and its best
//! quadratic surrogate `a (1 + u)²` in the `L²[−1, 1]` sense.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Optimal surrogate coefficient `815 / 3072`.
pub const A_STAR: f64 = 815.0 / 3072.0;

/// `h(u) = (u (π − arccos u) + √(1 − u²)) / π` on `[−1, 1]`.
///
/// Inputs within `1e−12` outside the interval are clamped.
pub fn relu_h(u: f64) -> Result<f64> {
    if !(u.abs() <= 1.0 + 1e-12) {
        return Err(Error::domain(format!("h is defined on [-1, 1], got {u}")));
    }
    let u = u.clamp(-1.0, 1.0);
    Ok((u * (PI - u.acos()) + (1.0 - u * u).sqrt()) / PI)
}

/// Surrogate `ĥ(u) = a* (1 + u)²`.
pub fn relu_h_quad(u: f64) -> f64 {
    A_STAR * (1.0 + u) * (1.0 + u)
}

fn h_unchecked(u: f64) -> f64 {
    relu_h(u.clamp(-1.0, 1.0)).expect("clamped")
}

/// `e_a = ∫_{−1}^{1} (h(u) − a (1 + u)²)² du`, closed form.
pub fn quad_error(a: f64) -> f64 {
    1.0 / 3.0 - 163.0 / 48.0 * a + 32.0 / 5.0 * a * a + 32.0 / (27.0 * PI * PI)
}

/// `e_a` by adaptive quadrature.
pub fn quad_error_numeric(a: f64) -> f64 {
    integrate(
        |u| {
            let r = h_unchecked(u) - a * (1.0 + u) * (1.0 + u);
            r * r
        },
        -1.0,
        1.0,
        1e-14,
    )
}

/// Minimizer of the closed-form `e_a`.
pub fn fit_quad() -> f64 {
    (163.0 / 48.0) / (2.0 * 32.0 / 5.0)
}

/// Minimizer of the quadrature `e_a`. The error is quadratic in `a`, so the
/// minimizer is the projection `∫ h (1+u)² / ∫ (1+u)⁴`, both integrals
/// evaluated numerically.
pub fn fit_quad_numeric() -> f64 {
    let num = integrate(|u| h_unchecked(u) * (1.0 + u).powi(2), -1.0, 1.0, 1e-15);
    let den = integrate(|u| (1.0 + u).powi(4), -1.0, 1.0, 1e-15);
    num / den
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Kronrod estimate and `|Kronrod − Gauss|` on `[a, b]`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (est, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return est;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod quadrature with absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 50)
}
