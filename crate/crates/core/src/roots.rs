//! Polynomial roots via eigenvalues of the balanced companion matrix,
//! followed by Newton polishing on the original coefficients.

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Poly;

/// Residual bound accepted for a root of a monic-scaled polynomial.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;
const NEWTON_STEPS: usize = 6;

/// All roots of `p`, with multiplicity, in conjugate-symmetric form.
///
/// Roots at the origin are detected exactly from vanishing low-order
/// coefficients. Real roots carry an exactly zero imaginary part and every
/// complex root with positive imaginary part is immediately followed by its
/// exact conjugate.
pub fn roots(p: &Poly) -> Result<Vec<Complex64>> {
    let Some(deg) = p.degree() else {
        return Err(Error::InvalidInput("roots of the zero polynomial".into()));
    };
    let k0 = p.origin_multiplicity();
    let mut out = vec![Complex64::new(0.0, 0.0); k0];
    let reduced = p.shift_down(k0);
    let n = deg - k0;
    if n == 0 {
        return Ok(out);
    }

    let lead = reduced.leading();
    let monic = reduced.scale(1.0 / lead);
    let raw: Vec<Complex64> = if n == 1 {
        vec![Complex64::new(-monic.coeff(0), 0.0)]
    } else if n == 2 {
        quadratic(monic.coeff(1), monic.coeff(0))
    } else {
        companion_eigenvalues(&monic)?
    };

    let dp = monic.derivative();
    let scale = monic.coeffs().iter().map(|c| c.abs()).sum::<f64>();
    for z in raw {
        // Polish the upper half-plane member only; its partner is mirrored.
        if z.im < 0.0 {
            continue;
        }
        let paired = z.im > 0.0;
        let z = polish(&monic, &dp, z);
        let resid = monic.eval(z).norm() / (scale * z.norm().max(1.0).powi(n as i32));
        if !resid.is_finite() || resid > ROOT_RESIDUAL_TOL {
            return Err(Error::RootFinding(format!(
                "root {z} of {p} has relative residual {resid:e}"
            )));
        }
        let real = z.im.abs() <= 1e-12 * z.norm().max(1.0);
        match (paired, real) {
            (false, _) => out.push(Complex64::new(z.re, 0.0)),
            // a split double real root
            (true, true) => out.extend([Complex64::new(z.re, 0.0); 2]),
            (true, false) => {
                let z = Complex64::new(z.re, z.im.abs());
                out.extend([z, z.conj()]);
            }
        }
    }
    if out.len() != deg {
        return Err(Error::RootFinding(format!(
            "conjugate pairing lost roots of {p}: found {} of {deg}",
            out.len()
        )));
    }
    Ok(out)
}

fn quadratic(b: f64, c: f64) -> Vec<Complex64> {
    // z^2 + b z + c
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let q = -0.5 * (b + b.signum() * s);
        if q == 0.0 {
            return vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        }
        vec![Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        vec![Complex64::new(-0.5 * b, im), Complex64::new(-0.5 * b, -im)]
    }
}

fn companion_eigenvalues(monic: &Poly) -> Result<Vec<Complex64>> {
    let n = monic.degree().expect("nonzero");
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -monic.coeff(i);
    }
    balance_parlett_reinsch(&mut m);
    let schur = Schur::try_new(m, SCHUR_EPS, SCHUR_MAX_ITER).ok_or_else(|| {
        Error::RootFinding(format!("Schur iteration did not converge for {monic}"))
    })?;
    let ev = schur.complex_eigenvalues();
    Ok(ev.iter().copied().collect())
}

fn polish(p: &Poly, dp: &Poly, mut z: Complex64) -> Complex64 {
    let mut fz = p.eval(z).norm();
    for _ in 0..NEWTON_STEPS {
        let d = dp.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - p.eval(z) / d;
        let fc = p.eval(cand).norm();
        if fc.is_nan() || fc >= fz {
            break;
        }
        z = cand;
        fz = fc;
    }
    z
}
