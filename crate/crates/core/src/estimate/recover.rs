use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factorize::blaschke;
use crate::ratfun::{RatTF, TOL_CIRCLE};

#[derive(Clone, Debug, Serialize)]
pub struct RecoveredPair {
    pub w1: RatTF,
    pub w2: RatTF,
    pub q1: RatTF,
}

/// Rebuilds `(W1, W2)` from the outer factor `G1` of `W1` and the feedback
/// channel `H = W2/W1`.
///
/// `Q1` is the Blaschke product whose zeros are the unstable poles of
/// `H G1`; then `W2 = H G1 Q1` and `W1 = G1 Q1`.
pub fn recover_w1_w2(g1: &RatTF, h: &RatTF) -> Result<RecoveredPair> {
    let cls = g1.classify()?;
    if cls.indeterminate || !cls.causal || !cls.minimum_phase {
        return Err(Error::InvalidInput(format!(
            "G1 = {g1} must be causal, stable and minimum phase"
        )));
    }
    let m = h.mul(g1)?;
    let poles = m.poles()?;
    if let Some(p) = poles.iter().find(|p| (p.norm() - 1.0).abs() <= TOL_CIRCLE) {
        return Err(Error::SingularProjection { re: p.re, im: p.im });
    }
    let unstable: Vec<Complex64> = poles.into_iter().filter(|p| p.norm() > 1.0).collect();
    let q1 = blaschke(&unstable)?;
    let w2 = m.mul(&q1)?;
    if !w2.is_causal() || !w2.is_stable()? {
        return Err(Error::Inconsistent(format!(
            "H G1 Q1 = {w2} is not stable and causal"
        )));
    }
    let w1 = g1.mul(&q1)?;
    Ok(RecoveredPair { w1, w2, q1 })
}
