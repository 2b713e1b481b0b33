//! Scalar rational transfer functions over real coefficients.
//!
//! A [`RatTF`] is always kept canonical: common roots of numerator and
//! denominator are cancelled and the denominator is monic. Every operation
//! returns a new canonical value; nothing is mutated after construction.

use std::fmt;
use std::ops::Neg;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::roots::roots;

/// Two roots cancel iff `|r1 - r2| <= CANCEL_REL_TOL * max(1, |r1|)`.
pub const CANCEL_REL_TOL: f64 = 1e-8;

/// Half-width of the band around the unit circle in which roots are
/// classified as indeterminate.
pub const TOL_CIRCLE: f64 = 1e-9;

/// `n` equally spaced angles covering `[0, π]` inclusive.
pub fn angle_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|k| std::f64::consts::PI * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RatTfRepr", into = "RatTfRepr")]
pub struct RatTF {
    num: Poly,
    den: Poly,
}

/// JSON form: ascending-`z` coefficient lists.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatTfRepr {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl TryFrom<RatTfRepr> for RatTF {
    type Error = Error;

    fn try_from(r: RatTfRepr) -> Result<Self> {
        RatTF::from_coeffs(r.num, r.den)
    }
}

impl From<RatTF> for RatTfRepr {
    fn from(w: RatTF) -> Self {
        RatTfRepr {
            num: w.num.coeffs().to_vec(),
            den: w.den.coeffs().to_vec(),
        }
    }
}

/// Structural flags of a transfer function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub causal: bool,
    pub strictly_causal: bool,
    pub stable: bool,
    pub minimum_phase: bool,
    /// Some pole or zero lies within [`TOL_CIRCLE`] of the unit circle.
    pub indeterminate: bool,
}

impl RatTF {
    /// Canonical form of `num / den`.
    pub fn reduce(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        if num
            .coeffs()
            .iter()
            .chain(den.coeffs())
            .any(|c| !c.is_finite())
        {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        let mut num = num.cleaned();
        let mut den = den.cleaned();
        if num.is_zero() {
            return Ok(Self::zero());
        }

        let k = num.origin_multiplicity().min(den.origin_multiplicity());
        if k > 0 {
            num = num.shift_down(k);
            den = den.shift_down(k);
        }

        // Split multiple roots are only matched once their partners have
        // been divided out, so repeat until nothing cancels.
        while num.degree() > Some(0) && den.degree() > Some(0) {
            let common = common_roots(&roots(&num)?, &roots(&den)?);
            if common.is_empty() {
                break;
            }
            let factor = Poly::from_roots(1.0, &common);
            num = num.div_rem(&factor)?.0;
            den = den.div_rem(&factor)?.0;
        }

        let lead = den.leading();
        Ok(RatTF {
            num: num.scale(1.0 / lead).cleaned(),
            den: den.scale(1.0 / lead).cleaned(),
        })
    }

    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        Self::reduce(num, den)
    }

    /// From ascending-`z` coefficient lists.
    pub fn from_coeffs(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        Self::reduce(Poly::try_new(num)?, Poly::try_new(den)?)
    }

    /// From coefficient lists in ascending powers of `z⁻¹`:
    /// `(n0 + n1 z⁻¹ + ...) / (d0 + d1 z⁻¹ + ...)`.
    pub fn from_delay(num: &[f64], den: &[f64]) -> Result<Self> {
        let deg = num.len().max(den.len()).saturating_sub(1);
        Self::reduce(Poly::from_delay(num, deg), Poly::from_delay(den, deg))
    }

    /// Builds `gain * prod(z - zeros) / prod(z - poles)`.
    pub fn from_zpk(zeros: &[Complex64], poles: &[Complex64], gain: f64) -> Result<Self> {
        Self::reduce(Poly::from_roots(gain, zeros), Poly::from_roots(1.0, poles))
    }

    pub fn zero() -> Self {
        RatTF {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        RatTF {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    /// The forward shift `z`.
    pub fn shift() -> Self {
        RatTF {
            num: Poly::monomial(1.0, 1),
            den: Poly::one(),
        }
    }

    /// The unit delay `z⁻¹`.
    pub fn delay() -> Self {
        RatTF {
            num: Poly::one(),
            den: Poly::monomial(1.0, 1),
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// `deg(den) - deg(num)`; `None` for the zero function.
    pub fn relative_degree(&self) -> Option<isize> {
        let n = self.num.degree()? as isize;
        Some(self.den.degree().unwrap_or(0) as isize - n)
    }

    pub fn is_causal(&self) -> bool {
        self.relative_degree().is_none_or(|d| d >= 0)
    }

    pub fn is_strictly_causal(&self) -> bool {
        self.relative_degree().is_none_or(|d| d > 0)
    }

    /// `W(∞)` for a causal function.
    pub fn value_at_infinity(&self) -> Result<f64> {
        match self.relative_degree() {
            None => Ok(0.0),
            Some(d) if d > 0 => Ok(0.0),
            Some(0) => Ok(self.num.leading()),
            Some(_) => Err(Error::InvalidInput(format!("{self} is not causal"))),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.den.degree() == Some(0) && self.num.degree().unwrap_or(0) == 0
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Values at `z = e^{iθ}` for every angle.
    pub fn eval_circle(&self, angles: &[f64]) -> Result<Vec<Complex64>> {
        let scale: f64 = self.den.coeffs().iter().map(|c| c.abs()).sum();
        angles
            .iter()
            .map(|&theta| {
                let z = Complex64::from_polar(1.0, theta);
                let d = self.den.eval(z);
                if d.norm() <= 1e-13 * scale {
                    return Err(Error::SingularEvaluation { angle: theta });
                }
                Ok(self.num.eval(z) / d)
            })
            .collect()
    }

    pub fn add(&self, rhs: &RatTF) -> Result<Self> {
        if self.den == rhs.den {
            return Self::reduce(self.num.add(&rhs.num), self.den.clone());
        }
        Self::reduce(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn sub(&self, rhs: &RatTF) -> Result<Self> {
        self.add(&-rhs)
    }

    pub fn mul(&self, rhs: &RatTF) -> Result<Self> {
        Self::reduce(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }

    pub fn div(&self, rhs: &RatTF) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::InvalidInput(
                "division by the zero transfer function".into(),
            ));
        }
        Self::reduce(self.num.mul(&rhs.den), self.den.mul(&rhs.num))
    }

    pub fn recip(&self) -> Result<Self> {
        Self::one().div(self)
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        RatTF {
            num: self.num.scale(s),
            den: self.den.clone(),
        }
    }

    /// Multiplies by `z^k` (`k` may be negative).
    pub fn shifted(&self, k: isize) -> Result<Self> {
        if k >= 0 {
            Self::reduce(self.num.shift_up(k as usize), self.den.clone())
        } else {
            Self::reduce(self.num.clone(), self.den.shift_up((-k) as usize))
        }
    }

    /// `W*(z) = W(1/z)`; equals the complex conjugate on the unit circle.
    pub fn para_conjugate(&self) -> Result<Self> {
        let Some(nn) = self.num.degree() else {
            return Ok(Self::zero());
        };
        let nd = self.den.degree().unwrap_or(0);
        // W(1/z) = z^nd rev(num) / (z^nn rev(den))
        Self::reduce(
            self.num.reversed(nn).shift_up(nd),
            self.den.reversed(nd).shift_up(nn),
        )
    }

    /// Zeros (roots of the numerator) and poles (roots of the denominator).
    pub fn poles_zeros(&self) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let poles = if self.den.degree() > Some(0) {
            roots(&self.den)?
        } else {
            Vec::new()
        };
        let zeros = if self.num.degree() > Some(0) {
            roots(&self.num)?
        } else {
            Vec::new()
        };
        Ok((poles, zeros))
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        Ok(self.poles_zeros()?.0)
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        Ok(self.poles_zeros()?.1)
    }

    pub fn classify(&self) -> Result<Classification> {
        let (poles, zeros) = self.poles_zeros()?;
        let on_band = |r: &Complex64| (r.norm() - 1.0).abs() <= TOL_CIRCLE;
        let inside = |r: &Complex64| r.norm() < 1.0 - TOL_CIRCLE;
        let stable = poles.iter().all(inside);
        Ok(Classification {
            causal: self.is_causal(),
            strictly_causal: self.is_strictly_causal(),
            stable,
            minimum_phase: stable && !self.is_zero() && zeros.iter().all(inside),
            indeterminate: poles.iter().chain(&zeros).any(on_band),
        })
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.classify()?.stable)
    }

    /// Numerator and denominator in ascending powers of `z⁻¹`, with trailing
    /// zeros removed. The denominator's constant term is one.
    pub fn to_delay_form(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if !self.is_causal() {
            return Err(Error::InvalidInput(format!("{self} is not causal")));
        }
        let deg = self.den.degree().unwrap_or(0);
        let trim = |mut v: Vec<f64>| {
            while v.last() == Some(&0.0) {
                v.pop();
            }
            v
        };
        Ok((trim(self.num.to_delay(deg)), trim(self.den.to_delay(deg))))
    }
}

impl Neg for &RatTF {
    type Output = RatTF;

    fn neg(self) -> RatTF {
        self.scale(-1.0)
    }
}

impl fmt::Display for RatTF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

fn common_roots(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut used = vec![false; b.len()];
    let mut out = Vec::new();
    for r in a.iter().filter(|r| r.im >= 0.0) {
        let tol = CANCEL_REL_TOL * r.norm().max(1.0);
        let hit = b
            .iter()
            .enumerate()
            .filter(|(j, s)| !used[*j] && s.im >= 0.0 && (*r - **s).norm() <= tol)
            .min_by(|x, y| (*r - *x.1).norm().total_cmp(&(*r - *y.1).norm()));
        if let Some((j, s)) = hit {
            used[j] = true;
            let m = (*r + *s) * 0.5;
            if r.im == 0.0 || s.im == 0.0 {
                out.push(Complex64::new(m.re, 0.0));
            } else {
                out.push(m);
                out.push(m.conj());
            }
        }
    }
    out
}

/// Closed-loop maps of the feedback pair `y1 = F y2 + v`, `y2 = H y1 + r`.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    /// `(1 - F H)⁻¹`
    pub p: RatTF,
    /// `(1 - H F)⁻¹`, equal to `p` for scalars.
    pub qs: RatTF,
    /// `[[P, P F], [Q H, Q]]`
    pub t: [[RatTF; 2]; 2],
    pub internally_stable: bool,
}

pub fn closed_loop(f: &RatTF, h: &RatTF) -> Result<ClosedLoop> {
    if !f.is_causal() || !h.is_causal() {
        return Err(Error::InvalidInput(
            "feedback loop requires causal F and H".into(),
        ));
    }
    let loop_gain = f.mul(h)?;
    let sens = RatTF::one().sub(&loop_gain)?;
    if sens.is_zero() {
        return Err(Error::SingularLoop);
    }
    if sens.value_at_infinity()? == 0.0 {
        return Err(Error::InvalidInput(
            "ill-posed loop: 1 - F(∞)H(∞) = 0".into(),
        ));
    }
    let p = sens.recip()?;
    let pf = p.mul(f)?;
    let qh = p.mul(h)?;
    let mut internally_stable = true;
    for w in [&p, &pf, &qh] {
        internally_stable &= w.is_stable()?;
    }
    Ok(ClosedLoop {
        qs: p.clone(),
        t: [[p.clone(), pf], [qh, p.clone()]],
        p,
        internally_stable,
    })
}

/// Joint spectral density of `[y1; y2] = [W1; W2] e` sampled on a grid.
#[derive(Clone, Debug)]
pub struct SpectrumGrid {
    pub angles: Vec<f64>,
    pub phi11: Vec<Complex64>,
    pub phi12: Vec<Complex64>,
    pub phi21: Vec<Complex64>,
    pub phi22: Vec<Complex64>,
    pub det_phi: Vec<Complex64>,
}

/// Samples `Φ = W W*` on `angles` and returns the feedback-channel
/// transfer function `H = Φ21 Φ11⁻¹ = W2 / W1`.
pub fn spectrum(w1: &RatTF, w2: &RatTF, angles: &[f64]) -> Result<(SpectrumGrid, RatTF)> {
    if w1.is_zero() {
        return Err(Error::InvalidInput("W1 must be nonzero".into()));
    }
    for (name, w) in [("W1", w1), ("W2", w2)] {
        if !w.is_causal() || !w.is_stable()? {
            return Err(Error::InvalidInput(format!(
                "{name} must be stable and causal"
            )));
        }
    }
    let a = w1.eval_circle(angles)?;
    let b = w2.eval_circle(angles)?;
    let n = angles.len();
    let mut grid = SpectrumGrid {
        angles: angles.to_vec(),
        phi11: Vec::with_capacity(n),
        phi12: Vec::with_capacity(n),
        phi21: Vec::with_capacity(n),
        phi22: Vec::with_capacity(n),
        det_phi: Vec::with_capacity(n),
    };
    for (x, y) in a.into_iter().zip(b) {
        let p11 = Complex64::new(x.norm_sqr(), 0.0);
        let p22 = Complex64::new(y.norm_sqr(), 0.0);
        let p12 = x * y.conj();
        let p21 = p12.conj();
        grid.phi11.push(p11);
        grid.phi12.push(p12);
        grid.phi21.push(p21);
        grid.phi22.push(p22);
        grid.det_phi.push(p11 * p22 - p12 * p21);
    }
    Ok((grid, w2.div(w1)?))
}
