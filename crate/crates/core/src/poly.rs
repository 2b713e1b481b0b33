//! Real polynomials in `z`, stored in ascending powers.
//!
//! `coeffs[k]` multiplies `z^k`. Transfer functions written in the delay
//! variable `z⁻¹` are converted with [`Poly::from_delay`] and
//! [`Poly::to_delay`], which reverse the coefficient order against an
//! explicit degree.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients with magnitude at or below this fraction of the largest one
/// are treated as round-off and set to zero by [`Poly::cleaned`].
pub const CLEAN_REL_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    /// Builds a polynomial, dropping trailing (highest-power) exact zeros.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    /// Like [`Poly::new`] but rejects non-finite coefficients.
    pub fn try_new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite polynomial coefficient {c}"
            )));
        }
        Ok(Self::new(coeffs))
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c z^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// Builds `gain * prod (z - r)` from a conjugate-symmetric root set.
    ///
    /// Roots with a positive imaginary part contribute the real quadratic
    /// `z² - 2 Re(r) z + |r|²`; their conjugates are skipped. Roots with a
    /// zero imaginary part contribute a linear factor.
    pub fn from_roots(gain: f64, roots: &[Complex64]) -> Self {
        let mut p = Poly::constant(gain);
        for r in roots {
            if r.im > 0.0 {
                p = p.mul(&Poly::new(vec![r.norm_sqr(), -2.0 * r.re, 1.0]));
            } else if r.im == 0.0 {
                p = p.mul(&Poly::new(vec![-r.re, 1.0]));
            }
        }
        p
    }

    /// Polynomial in `z` equal to `z^degree * sum_j delay[j] z^-j`.
    pub fn from_delay(delay: &[f64], degree: usize) -> Self {
        assert!(
            delay.len() <= degree + 1,
            "delay form longer than target degree"
        );
        let mut coeffs = vec![0.0; degree + 1];
        for (j, &c) in delay.iter().enumerate() {
            coeffs[degree - j] = c;
        }
        Self::new(coeffs)
    }

    /// Coefficients of `z^-degree * self` in ascending powers of `z⁻¹`,
    /// i.e. `out[j]` multiplies `z^-j`. Requires `degree >= self.degree()`.
    pub fn to_delay(&self, degree: usize) -> Vec<f64> {
        assert!(
            self.coeffs.len() <= degree + 1,
            "degree below polynomial degree"
        );
        (0..=degree).map(|j| self.coeff(degree - j)).collect()
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `z^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Number of exactly vanishing low-order coefficients, i.e. the
    /// multiplicity of the root at the origin.
    pub fn origin_multiplicity(&self) -> usize {
        self.coeffs.iter().take_while(|&&c| c == 0.0).count()
    }

    /// Zeroes coefficients that are round-off relative to the largest one.
    pub fn cleaned(&self) -> Self {
        let tol = CLEAN_REL_TOL * self.max_abs();
        Poly::new(
            self.coeffs
                .iter()
                .map(|&c| if c.abs() <= tol { 0.0 } else { c })
                .collect(),
        )
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Self {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Multiplies by `z^k`.
    pub fn shift_up(&self, k: usize) -> Self {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![0.0; k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly::new(coeffs)
    }

    /// Divides by `z^k`, which must divide exactly.
    pub fn shift_down(&self, k: usize) -> Self {
        debug_assert!(self.origin_multiplicity() >= k || self.is_zero());
        Poly::new(self.coeffs.iter().skip(k).copied().collect())
    }

    /// Euclidean division: `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn div_rem(&self, divisor: &Poly) -> Result<(Poly, Poly)> {
        let dd = divisor
            .degree()
            .ok_or_else(|| Error::InvalidInput("polynomial division by zero".into()))?;
        let Some(nd) = self.degree() else {
            return Ok((Poly::zero(), Poly::zero()));
        };
        if nd < dd {
            return Ok((Poly::zero(), self.clone()));
        }
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let c = rem[k + dd] / lead;
            quot[k] = c;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= c * d;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        Ok((Poly::new(quot), Poly::new(rem)))
    }

    /// Coefficient reversal over `degree + 1` slots: `z^degree p(1/z)`.
    pub fn reversed(&self, degree: usize) -> Self {
        Poly::new(self.to_delay(degree))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", c.abs())?,
                1 => write!(f, "{}z", c.abs())?,
                _ => write!(f, "{}z^{k}", c.abs())?,
            }
        }
        Ok(())
    }
}
