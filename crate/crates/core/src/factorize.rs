//! Outer-inner factorization, greatest common inner divisor, causal
//! projection and spectrally equivalent polynomial stabilization.
//!
//! Inner functions are built from Blaschke factors `(z - α) / (1 - ᾱ z)`
//! with `|α| > 1`, possibly times a pure delay `z⁻ᵈ`. Every such factor
//! equals one at `z = 1`, so the inner factors returned here are positive
//! there.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::ratfun::{angle_grid, RatTF, CANCEL_REL_TOL, TOL_CIRCLE};
use crate::roots::roots;

/// Tolerance on `||Q(e^{iθ})| - 1|` when accepting a function as inner.
pub const INNER_CHECK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OuterInnerPair {
    pub outer: RatTF,
    pub inner: RatTF,
}

/// `(z - α) / (1 - ᾱ z)` over a conjugate-symmetric zero set.
pub fn blaschke(zeros: &[Complex64]) -> Result<RatTF> {
    let (gain, reflected) = reflect(zeros);
    RatTF::reduce(
        Poly::from_roots(1.0, zeros),
        Poly::from_roots(gain, &reflected),
    )
}

/// Writes `prod (1 - ᾱ z)` as `gain * prod (z - 1/ᾱ)`.
fn reflect(zeros: &[Complex64]) -> (f64, Vec<Complex64>) {
    let mut gain = 1.0;
    let mut out = Vec::with_capacity(zeros.len());
    for a in zeros {
        if a.im == 0.0 {
            gain *= -a.re;
            out.push(Complex64::new(1.0 / a.re, 0.0));
        } else {
            if a.im > 0.0 {
                gain *= a.norm_sqr();
            }
            out.push(1.0 / a.conj());
        }
    }
    (gain, out)
}

fn check_circle(zs: &[Complex64]) -> Result<()> {
    match zs.iter().find(|z| (z.norm() - 1.0).abs() <= TOL_CIRCLE) {
        Some(z) => Err(Error::IndeterminateZero { re: z.re, im: z.im }),
        None => Ok(()),
    }
}

/// Splits a stable causal `W` into `G Q` with `G` minimum phase and `Q` inner.
///
/// Zeros outside the unit disc are reflected into `G`; a relative degree
/// `d > 0` (zeros at infinity) goes into `Q` as the delay `z⁻ᵈ`.
pub fn outer_inner(w: &RatTF) -> Result<OuterInnerPair> {
    if w.is_zero() {
        return Err(Error::InvalidInput(
            "outer-inner factorization of zero".into(),
        ));
    }
    if !w.is_causal() || !w.is_stable()? {
        return Err(Error::InvalidInput(format!(
            "{w} must be stable and causal"
        )));
    }
    let zeros = w.zeros()?;
    check_circle(&zeros)?;
    let (outside, inside): (Vec<Complex64>, Vec<Complex64>) =
        zeros.into_iter().partition(|z| z.norm() > 1.0);
    let delay = w.relative_degree().unwrap_or(0) as usize;

    let (gain, reflected) = reflect(&outside);
    let mut outer_zeros = inside;
    outer_zeros.extend(reflected);
    let outer = RatTF::reduce(
        Poly::from_roots(w.num().leading() * gain, &outer_zeros).shift_up(delay),
        w.den().clone(),
    )?;
    let inner = blaschke(&outside)?.shifted(-(delay as isize))?;
    Ok(OuterInnerPair { outer, inner })
}

fn check_inner(q: &RatTF, name: &str) -> Result<()> {
    let ok = q.is_causal()
        && q.is_stable()?
        && q.eval_circle(&angle_grid(64))?
            .iter()
            .all(|v| (v.norm() - 1.0).abs() <= INNER_CHECK_TOL);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {q} is not inner")))
    }
}

/// Greatest common inner divisor of two inner functions, positive at `z = 1`.
///
/// Returns one when the arguments are coprime.
pub fn inner_gcd(qa: &RatTF, qb: &RatTF) -> Result<RatTF> {
    check_inner(qa, "Qa")?;
    check_inner(qb, "Qb")?;
    let za = qa.zeros()?;
    let zb = qb.zeros()?;
    let mut used = vec![false; zb.len()];
    let mut common = Vec::new();
    for a in za.iter().filter(|a| a.im >= 0.0) {
        let tol = CANCEL_REL_TOL * a.norm().max(1.0);
        if let Some(j) = (0..zb.len()).find(|&j| !used[j] && (zb[j] - a).norm() <= tol) {
            used[j] = true;
            if a.im == 0.0 {
                common.push(Complex64::new(0.5 * (a.re + zb[j].re), 0.0));
            } else {
                let m = 0.5 * (a + zb[j]);
                common.extend([m, m.conj()]);
            }
        }
    }
    let delay = qa
        .relative_degree()
        .unwrap_or(0)
        .min(qb.relative_degree().unwrap_or(0));
    blaschke(&common)?.shifted(-delay)
}

/// Causal projection `[W]₊`: the part of the Laurent expansion of `W` on the
/// unit circle carrying nonnegative powers of `z⁻¹`.
///
/// Poles inside the disc stay with the causal part; poles outside, and the
/// positive powers of the polynomial part, go to the anticausal remainder,
/// except for the constant term of their expansion.
pub fn causal_project(w: &RatTF) -> Result<RatTF> {
    if w.is_zero() {
        return Ok(RatTF::zero());
    }
    let poles = w.poles()?;
    if let Some(p) = poles.iter().find(|p| (p.norm() - 1.0).abs() <= TOL_CIRCLE) {
        return Err(Error::SingularProjection { re: p.re, im: p.im });
    }
    let (inside, outside): (Vec<Complex64>, Vec<Complex64>) =
        poles.into_iter().partition(|p| p.norm() < 1.0);
    if outside.is_empty() && w.is_causal() {
        return Ok(w.clone());
    }

    let d_in = Poly::from_roots(1.0, &inside);
    let d_out = Poly::from_roots(1.0, &outside);
    let den = d_in.mul(&d_out);
    let (quot, rem) = w.num().div_rem(&den)?;
    let n_in = inside.len();
    let n_out = outside.len();
    let n = n_in + n_out;

    // rem = X d_out + Y d_in, deg X < n_in, deg Y < n_out
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n_in {
        for (k, &c) in d_out.coeffs().iter().enumerate() {
            m[(j + k, j)] = c;
        }
    }
    for j in 0..n_out {
        for (k, &c) in d_in.coeffs().iter().enumerate() {
            m[(j + k, n_in + j)] = c;
        }
    }
    let rhs = DVector::from_iterator(n, (0..n).map(|k| rem.coeff(k)));
    let sol = if n == 0 {
        rhs
    } else {
        m.lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NumericFactorization("singular partial-fraction system".into()))?
    };
    let x = Poly::new(sol.iter().take(n_in).copied().collect());
    let y = Poly::new(sol.iter().skip(n_in).copied().collect());

    // The outside-pole part Y/d_out contributes only its value at the origin.
    let constant = quot.coeff(0) + y.coeff(0) / d_out.coeff(0);
    RatTF::reduce(x.add(&d_in.scale(constant)), d_in)
}

/// Replaces every root `α` of `d` outside the unit disc by `1/ᾱ` and scales
/// by `|α|`, leaving `|d(e^{iθ})|` unchanged. The sign of the leading
/// coefficient is preserved; a stable input is returned as is.
pub fn stabilize_poly(d: &Poly) -> Result<Poly> {
    if d.is_zero() {
        return Err(Error::InvalidInput(
            "cannot stabilize the zero polynomial".into(),
        ));
    }
    if d.degree() == Some(0) {
        return Ok(d.clone());
    }
    let rs = roots(d)?;
    check_circle(&rs)?;
    if rs.iter().all(|r| r.norm() < 1.0) {
        return Ok(d.clone());
    }
    let mut gain = d.leading();
    let stable: Vec<Complex64> = rs
        .iter()
        .map(|r| {
            if r.norm() > 1.0 {
                gain *= r.norm();
                1.0 / r.conj()
            } else {
                *r
            }
        })
        .collect();
    Ok(Poly::from_roots(gain, &stable))
}
