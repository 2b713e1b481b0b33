use serde::Serialize;

use crate::error::{Error, Result};
use crate::ratfun::{closed_loop, RatTF};

#[derive(Clone, Debug, Serialize)]
pub struct FamilyMember {
    pub f: RatTF,
    pub k: RatTF,
    pub internally_stable: bool,
}

/// Member of the family of feedback pairs realizing the same `W1` for a
/// stable `H`: `F = S/(1 + S H)`, `K = W1/(1 + S H)`.
pub fn f_family(h: &RatTF, w1: &RatTF, s: &RatTF) -> Result<FamilyMember> {
    if !h.is_causal() || !h.is_stable()? {
        return Err(Error::Unsupported(format!(
            "H = {h} is not stable; the scalar family formula does not apply"
        )));
    }
    if !s.is_causal() || !s.is_stable()? {
        return Err(Error::InvalidInput(format!(
            "S = {s} must be stable and proper"
        )));
    }
    let p = RatTF::one().add(&s.mul(h)?)?;
    if p.is_zero() {
        return Err(Error::SingularLoop);
    }
    let f = s.div(&p)?;
    let k = w1.div(&p)?;
    let internally_stable = closed_loop(&f, h)?.internally_stable;
    Ok(FamilyMember {
        f,
        k,
        internally_stable,
    })
}
