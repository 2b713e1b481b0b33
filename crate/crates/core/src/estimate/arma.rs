//! AR and ARMA fits for scalar series.

use serde::Serialize;

use super::lsq::{lagged_system, solve_min_norm, LagBlock};
use crate::error::{Error, Result};
use crate::factorize::stabilize_poly;
use crate::poly::Poly;
use crate::ratfun::RatTF;
use crate::simulate::{filter, TimeSeries};

/// `A(z⁻¹) y(t) = C(z⁻¹) e(t)` with monic `A`, `C`.
#[derive(Clone, Debug, Serialize)]
pub struct ArmaFit {
    /// `a_1..a_p`
    pub ar: Vec<f64>,
    /// `c_1..c_q`; empty for a pure AR fit.
    pub ma: Vec<f64>,
    pub innovation_variance: f64,
    /// `1/A` for AR fits, `λ C / A` for ARMA fits.
    pub g_hat: RatTF,
    pub minimum_phase: bool,
    pub rank_deficient: bool,
    /// The MA polynomial had roots outside the disc and was reflected.
    pub ma_stabilized: bool,
    /// The MA polynomial has roots on the unit circle.
    pub noninvertible: bool,
}

fn monic(coeffs: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(coeffs.len() + 1);
    v.push(1.0);
    v.extend_from_slice(coeffs);
    v
}

/// Conditional least-squares AR fit `y(t) = -sum a_k y(t-k) + e(t)`.
pub fn fit_ar(y: &TimeSeries, order: usize) -> Result<ArmaFit> {
    if y.len() <= 3 * order || y.is_empty() {
        return Err(Error::InvalidInput(format!(
            "AR({order}) needs more than {} samples, got {}",
            3 * order,
            y.len()
        )));
    }
    let blocks: Vec<LagBlock> = (order > 0)
        .then(|| LagBlock {
            series: &y.samples,
            lags: 1..=order,
            sign: -1.0,
        })
        .into_iter()
        .collect();
    let (a_mat, b_vec) = lagged_system(&y.samples, None, &blocks, order);
    let sol = solve_min_norm(a_mat, b_vec)?;
    let variance = sol.rss / sol.rows as f64;
    let g_hat = RatTF::from_delay(&[1.0], &monic(&sol.coeffs))?;
    let minimum_phase = g_hat.is_stable()?;
    Ok(ArmaFit {
        rank_deficient: sol.rank_deficient(),
        ar: sol.coeffs,
        ma: Vec::new(),
        innovation_variance: variance,
        g_hat,
        minimum_phase,
        ma_stabilized: false,
        noninvertible: false,
    })
}

/// Reflects the roots of `C(z⁻¹)` into the disc and renormalizes to `c_0 = 1`.
fn stabilize_ma(c: &[f64]) -> Result<(Vec<f64>, bool)> {
    let q = c.len();
    let p = Poly::from_delay(&monic(c), q);
    let s = stabilize_poly(&p)?;
    if s == p {
        return Ok((c.to_vec(), false));
    }
    let d = s.to_delay(q);
    Ok((d[1..].iter().map(|v| v / d[0]).collect(), true))
}

struct Regression {
    ar: Vec<f64>,
    ma: Vec<f64>,
    rss: f64,
    rows: usize,
    rank_deficient: bool,
}

fn regress(y: &[f64], eps: &[f64], p: usize, q: usize, start: usize) -> Result<Regression> {
    let mut blocks = Vec::with_capacity(2);
    if p > 0 {
        blocks.push(LagBlock {
            series: y,
            lags: 1..=p,
            sign: -1.0,
        });
    }
    if q > 0 {
        blocks.push(LagBlock {
            series: eps,
            lags: 1..=q,
            sign: 1.0,
        });
    }
    let (a_mat, b_vec) = lagged_system(y, None, &blocks, start);
    let sol = solve_min_norm(a_mat, b_vec)?;
    Ok(Regression {
        ar: sol.coeffs[..p].to_vec(),
        ma: sol.coeffs[p..].to_vec(),
        rss: sol.rss,
        rows: sol.rows,
        rank_deficient: sol.rank_deficient(),
    })
}

/// Hannan–Rissanen ARMA(p, q) fit.
///
/// A long AR model supplies innovation proxies and a linear regression gives
/// the first ARMA estimate. With `refine`, one Gauss-Newton step regresses
/// the residuals `A/C y` on `y/C` and on the residuals filtered by `1/C`;
/// the step is kept only if it lowers the innovation variance. The MA
/// polynomial is made minimum phase by root reflection and the innovation
/// variance is the mean square of the inverse-filter residuals.
pub fn fit_arma(y: &TimeSeries, p: usize, q: usize, refine: bool) -> Result<ArmaFit> {
    let n = y.len();
    if n < 10 * (p + q + 1) {
        return Err(Error::InvalidInput(format!(
            "ARMA({p},{q}) needs at least {} samples, got {n}",
            10 * (p + q + 1)
        )));
    }
    let m = if q == 0 {
        0
    } else {
        (n / 10).min(20).max(p + q)
    };
    let eps = if q == 0 {
        vec![0.0; n]
    } else {
        let long = fit_ar(y, m)?;
        let a_long = RatTF::from_delay(&monic(&long.ar), &[1.0])?;
        filter(&a_long, y)?.samples
    };
    let start = (m + q).max(p);
    let reg = regress(&y.samples, &eps, p, q, start)?;
    let mut best = Candidate::evaluate(y, reg.ar, reg.ma, start, reg.rss / reg.rows as f64)?;

    if q > 0 && refine && !best.noninvertible {
        // Gauss-Newton correction on regressors filtered through 1/C.
        let inv_c = RatTF::from_delay(&[1.0], &monic(&best.ma))?;
        let resid = filter(&RatTF::from_delay(&monic(&best.ar), &monic(&best.ma))?, y)?;
        let v = filter(&inv_c, y)?.samples;
        let w = filter(&inv_c, &resid)?.samples;
        let mut blocks = Vec::with_capacity(2);
        if p > 0 {
            blocks.push(LagBlock {
                series: &v,
                lags: 1..=p,
                sign: 1.0,
            });
        }
        blocks.push(LagBlock {
            series: &w,
            lags: 1..=q,
            sign: 1.0,
        });
        let (a_mat, b_vec) = lagged_system(&resid.samples, None, &blocks, start);
        let step = solve_min_norm(a_mat, b_vec)?;
        let ar: Vec<f64> = best
            .ar
            .iter()
            .zip(&step.coeffs[..p])
            .map(|(a, d)| a - d)
            .collect();
        let ma: Vec<f64> = best
            .ma
            .iter()
            .zip(&step.coeffs[p..])
            .map(|(c, d)| c + d)
            .collect();
        let refined = Candidate::evaluate(y, ar, ma, start, f64::INFINITY)?;
        if !refined.noninvertible && refined.variance < best.variance {
            best = refined;
        }
    }

    let lambda = best.variance.sqrt();
    let num: Vec<f64> = monic(&best.ma).iter().map(|c| lambda * c).collect();
    let g_hat = RatTF::from_delay(&num, &monic(&best.ar))?;
    let cls = g_hat.classify()?;
    Ok(ArmaFit {
        ar: best.ar,
        ma: best.ma,
        innovation_variance: best.variance,
        g_hat,
        minimum_phase: cls.minimum_phase,
        rank_deficient: reg.rank_deficient,
        ma_stabilized: best.stabilized,
        noninvertible: best.noninvertible,
    })
}

struct Candidate {
    ar: Vec<f64>,
    ma: Vec<f64>,
    variance: f64,
    stabilized: bool,
    noninvertible: bool,
}

impl Candidate {
    /// Stabilizes the MA part and measures the inverse-filter residual
    /// variance; `fallback` is used when `C` has roots on the circle.
    fn evaluate(
        y: &TimeSeries,
        ar: Vec<f64>,
        ma: Vec<f64>,
        start: usize,
        fallback: f64,
    ) -> Result<Self> {
        if ma.is_empty() {
            return Ok(Candidate {
                ar,
                ma,
                variance: fallback,
                stabilized: false,
                noninvertible: false,
            });
        }
        match stabilize_ma(&ma) {
            Ok((ma, stabilized)) => {
                let inv = RatTF::from_delay(&monic(&ar), &monic(&ma))?;
                let variance = filter(&inv, y)?.skip(start).mean_square();
                Ok(Candidate {
                    ar,
                    ma,
                    variance,
                    stabilized,
                    noninvertible: false,
                })
            }
            Err(Error::IndeterminateZero { .. }) => Ok(Candidate {
                ar,
                ma,
                variance: fallback,
                stabilized: false,
                noninvertible: true,
            }),
            Err(e) => Err(e),
        }
    }
}
