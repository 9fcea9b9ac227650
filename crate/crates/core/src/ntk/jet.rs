//! Truncated power series in one variable.
//!
//! A [`Jet`] of degree `d` stores Taylor coefficients `c_0..=c_d` of a function
//! of `t` around `t = 0`; arithmetic on jets propagates those coefficients
//! exactly up to rounding. The `k`-th derivative at 0 is `k! c_k`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Arithmetic shared by plain floats and jets, so that one evaluation routine
/// yields values or derivatives.
pub trait Scalar:
    Sized
    + Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    /// A constant with the same shape as `self`.
    fn lift(&self, v: f64) -> Self;
    fn sqrt(&self) -> Result<Self>;
    /// Value at `t = 0`.
    fn value(&self) -> f64;
}

impl Scalar for f64 {
    fn lift(&self, v: f64) -> Self {
        v
    }

    fn sqrt(&self) -> Result<Self> {
        if *self < 0.0 {
            return Err(Error::domain(format!("square root of negative value {self}")));
        }
        Ok(f64::sqrt(*self))
    }

    fn value(&self) -> f64 {
        *self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[0] = v;
        Jet { coeffs }
    }

    /// The identity series `t ↦ v + t`.
    pub fn variable(v: f64, degree: usize) -> Self {
        let mut j = Jet::constant(v, degree);
        if degree > 0 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Jet { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `k`-th derivative at `t = 0`.
    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeffs.get(k).copied().unwrap_or(0.0) * fact
    }

    fn check_degree(&self, other: &Jet) {
        assert_eq!(self.degree(), other.degree(), "jet degree mismatch");
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self.check_degree(&rhs);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        self.check_degree(&rhs);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.check_degree(&rhs);
        let a = &self.coeffs;
        let b = &rhs.coeffs;
        let coeffs = (0..a.len())
            .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
            .collect();
        Jet { coeffs }
    }
}

impl Div for Jet {
    type Output = Jet;
    /// Series quotient; a zero constant term in the divisor yields non-finite
    /// coefficients.
    fn div(self, rhs: Jet) -> Jet {
        self.check_degree(&rhs);
        let a = &self.coeffs;
        let b = &rhs.coeffs;
        let mut q = vec![0.0; a.len()];
        for k in 0..a.len() {
            let acc: f64 = (0..k).map(|j| q[j] * b[k - j]).sum();
            q[k] = (a[k] - acc) / b[0];
        }
        Jet { coeffs: q }
    }
}

impl Scalar for Jet {
    fn lift(&self, v: f64) -> Self {
        Jet::constant(v, self.degree())
    }

    fn sqrt(&self) -> Result<Self> {
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(Error::domain(format!(
                "square root of a series with constant term {}",
                a[0]
            )));
        }
        let mut s = vec![0.0; a.len()];
        s[0] = a[0].sqrt();
        for k in 1..a.len() {
            let acc: f64 = (1..k).map(|j| s[j] * s[k - j]).sum();
            s[k] = (a[k] - acc) / (2.0 * s[0]);
        }
        Ok(Jet { coeffs: s })
    }

    fn value(&self) -> f64 {
        self.coeffs[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_matches_binomial_series() {
        let u = Jet::variable(1.0, 12);
        let s = u.sqrt().unwrap();
        // binom(1/2, k) by the ratio recurrence.
        let mut b = 1.0;
        for k in 0..=12 {
            assert!((s.coeffs()[k] - b).abs() <= 1e-14 * b.abs().max(1e-300));
            b *= (0.5 - k as f64) / (k as f64 + 1.0);
        }
    }

    #[test]
    fn quotient_inverts_product() {
        let a = Jet::from_coeffs(vec![2.0, -1.0, 0.5, 3.0]);
        let b = Jet::from_coeffs(vec![1.5, 0.25, -2.0, 1.0]);
        let back = (a.clone() * b.clone()) / b;
        for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn geometric_series() {
        let one = Jet::constant(1.0, 6);
        let q = one.clone() / (one - Jet::variable(0.0, 6));
        assert!(q.coeffs().iter().all(|c| (c - 1.0).abs() < 1e-15));
        assert_eq!(q.derivative(3), 6.0);
    }

    #[test]
    fn sqrt_domain() {
        assert!(Jet::variable(0.0, 4).sqrt().is_err());
        assert!(Jet::constant(-1.0, 4).sqrt().is_err());
        assert!(Scalar::sqrt(&-1.0f64).is_err());
    }
}
