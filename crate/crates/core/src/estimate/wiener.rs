use serde::Serialize;

use crate::error::{Error, Result};
use crate::factorize::{causal_project, inner_gcd, outer_inner};
use num_complex::Complex64;

use crate::ratfun::{angle_grid, RatTF};
use crate::simulate::require_stable_causal;

/// Relative grid tolerance on `W1 - (1 - z⁻¹ F₊ H)⁻¹ K`.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct WienerPair {
    pub f_plus: RatTF,
    pub k: RatTF,
    pub g2: RatTF,
    pub q2: RatTF,
    /// `[W1; W2]` is jointly minimum phase (inner factors coprime).
    pub joint_outer: bool,
}

/// Canonical feedback pair: `F₊ = [z W1 Q2*]₊ / G2`, `K = W1 - z⁻¹ F₊ W2`.
pub fn wiener_predictor(w1: &RatTF, w2: &RatTF) -> Result<WienerPair> {
    require_stable_causal("W1", w1)?;
    require_stable_causal("W2", w2)?;
    if w1.is_zero() || w2.is_zero() {
        return Err(Error::InvalidInput("W1 and W2 must be nonzero".into()));
    }
    let oi2 = outer_inner(w2)?;
    let target = RatTF::shift().mul(w1)?.mul(&oi2.inner.para_conjugate()?)?;
    let f_plus = causal_project(&target)?.div(&oi2.outer)?;
    if !f_plus.is_causal() || !f_plus.is_stable()? {
        return Err(Error::NumericFactorization(format!(
            "F+ = {f_plus} is not stable and causal"
        )));
    }
    let k = w1.sub(&RatTF::delay().mul(&f_plus)?.mul(w2)?)?;

    // Pointwise W1 = K / (1 - z⁻¹ F₊ W2/W1); composing the factors
    // symbolically would add the cancellation error of every product.
    let grid = angle_grid(128);
    let fv = f_plus.eval_circle(&grid)?;
    let kv = k.eval_circle(&grid)?;
    let a = w1.eval_circle(&grid)?;
    let b = w2.eval_circle(&grid)?;
    let mut err = 0.0f64;
    for i in 0..grid.len() {
        let zinv = Complex64::from_polar(1.0, -grid[i]);
        let sens = a[i] - zinv * fv[i] * b[i];
        if sens.norm() == 0.0 {
            return Err(Error::SingularLoop);
        }
        err = err.max((kv[i] * a[i] / sens - a[i]).norm() / a[i].norm().max(1.0));
    }
    if err > RECONSTRUCTION_TOL {
        return Err(Error::NumericFactorization(format!(
            "predictor reconstruction error {err:e} exceeds {RECONSTRUCTION_TOL:e}"
        )));
    }

    let joint_outer = match outer_inner(w1) {
        Ok(oi1) => inner_gcd(&oi1.inner, &oi2.inner)?.is_constant(),
        Err(Error::IndeterminateZero { .. }) => false,
        Err(e) => return Err(e),
    };
    Ok(WienerPair {
        f_plus,
        k,
        g2: oi2.outer,
        q2: oi2.inner,
        joint_outer,
    })
}
