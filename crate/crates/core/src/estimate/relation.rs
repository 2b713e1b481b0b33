use serde::Serialize;

use super::lsq::{lagged_system, solve_min_norm, LagBlock};
use crate::error::{Error, Result};
use crate::ratfun::RatTF;
use crate::simulate::TimeSeries;

/// Least-squares fit of `A(z⁻¹) y(t) = z⁻ᵈ B(z⁻¹) x(t)` with monic `A`.
#[derive(Clone, Debug, Serialize)]
pub struct RelationFit {
    /// `a_1..a_q`
    pub a: Vec<f64>,
    /// `b_0..b_r`; `b_0 = 1` when pinned.
    pub b: Vec<f64>,
    pub h_hat: RatTF,
    pub residual_rms: f64,
    pub rss: f64,
    pub rows: usize,
    pub solver_rank: usize,
    /// Number of free coefficients.
    pub n_params: usize,
    pub pinned_b0: bool,
}

impl RelationFit {
    pub fn rank_deficient(&self) -> bool {
        self.solver_rank < self.n_params
    }
}

fn check_lengths(y: &TimeSeries, x: &TimeSeries) -> Result<()> {
    if y.len() != x.len() {
        return Err(Error::InvalidInput(format!(
            "series lengths differ: {} vs {}",
            y.len(),
            x.len()
        )));
    }
    Ok(())
}

/// Core regression shared by the feedback-channel fit and the input stage.
///
/// Model: `y(t) = -sum_{k=1}^q a_k y(t-k) + sum_{k=0}^r b_k x(t-delay-k)`,
/// rows `t = start..n`.
pub(crate) fn fit_lagged(
    y: &TimeSeries,
    x: &TimeSeries,
    q: usize,
    r: usize,
    delay: usize,
    pin_b0: bool,
    start: usize,
) -> Result<RelationFit> {
    check_lengths(y, x)?;
    debug_assert!(!pin_b0 || delay == 0);
    debug_assert!(start >= q && start >= delay + r);
    let n_params = q + r + usize::from(!pin_b0);
    let rows = y.len().saturating_sub(start);
    if rows <= n_params {
        return Err(Error::InvalidInput(format!(
            "{rows} usable rows for {n_params} parameters"
        )));
    }
    let first_b = usize::from(pin_b0);
    let mut blocks = Vec::with_capacity(2);
    if q > 0 {
        blocks.push(LagBlock {
            series: &y.samples,
            lags: 1..=q,
            sign: -1.0,
        });
    }
    if first_b <= r {
        blocks.push(LagBlock {
            series: &x.samples,
            lags: delay + first_b..=delay + r,
            sign: 1.0,
        });
    }
    let offset = pin_b0.then_some(x.samples.as_slice());
    let (a_mat, b_vec) = lagged_system(&y.samples, offset, &blocks, start);
    let sol = solve_min_norm(a_mat, b_vec)?;

    let a = sol.coeffs[..q].to_vec();
    let mut b = Vec::with_capacity(r + 1);
    if pin_b0 {
        b.push(1.0);
    }
    b.extend_from_slice(&sol.coeffs[q..]);

    let mut num = vec![0.0; delay];
    num.extend_from_slice(&b);
    let mut den = vec![1.0];
    den.extend_from_slice(&a);
    let h_hat = RatTF::from_delay(&num, &den)?;
    Ok(RelationFit {
        a,
        b,
        h_hat,
        residual_rms: sol.residual_rms(),
        rss: sol.rss,
        rows: sol.rows,
        solver_rank: sol.rank,
        n_params,
        pinned_b0: pin_b0,
    })
}

/// Deterministic fit of the feedback channel `y2 = H y1` with free `b_0`.
pub fn fit_relation(y1: &TimeSeries, y2: &TimeSeries, q: usize, r: usize) -> Result<RelationFit> {
    fit_relation_with(y1, y2, q, r, false)
}

/// As [`fit_relation`]; with `pin_b0` the leading numerator coefficient is
/// fixed to one and the target becomes `y2(t) - y1(t)`.
pub fn fit_relation_with(
    y1: &TimeSeries,
    y2: &TimeSeries,
    q: usize,
    r: usize,
    pin_b0: bool,
) -> Result<RelationFit> {
    check_lengths(y1, y2)?;
    let needed = q + r + 1 + q.max(r);
    if y1.len() <= needed {
        return Err(Error::InvalidInput(format!(
            "need more than {needed} samples for orders ({q}, {r}), got {}",
            y1.len()
        )));
    }
    fit_lagged(y2, y1, q, r, 0, pin_b0, q.max(r))
}

/// Least-squares ARX fit of `y` on its own lags and `u` delayed by `delay`.
pub fn fit_arx(
    y: &TimeSeries,
    u: &TimeSeries,
    q: usize,
    r: usize,
    delay: usize,
) -> Result<RelationFit> {
    fit_lagged(y, u, q, r, delay, false, q.max(r + delay))
}

/// RSS floor per usable row; exact fits otherwise drive the score to -∞.
pub const BIC_RSS_FLOOR: f64 = 1e-24;

/// `n ln(RSS/n) + k ln n`, with `RSS` clamped below at `n * BIC_RSS_FLOOR`.
pub fn bic_score(rss: f64, n_eff: usize, k: usize) -> f64 {
    let n = n_eff as f64;
    let rss = rss.max(n * BIC_RSS_FLOOR);
    n * (rss / n).ln() + k as f64 * n.ln()
}

#[derive(Clone, Debug, Serialize)]
pub struct BicEntry {
    pub q: usize,
    pub r: usize,
    pub bic: f64,
    pub rss: f64,
    pub n_eff: usize,
    pub k: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BicTable {
    pub entries: Vec<BicEntry>,
    pub best: (usize, usize),
}

impl BicTable {
    pub fn get(&self, q: usize, r: usize) -> Option<&BicEntry> {
        self.entries.iter().find(|e| e.q == q && e.r == r)
    }
}

fn scan<F>(q_max: usize, r_max: usize, mut fit: F) -> Result<BicTable>
where
    F: FnMut(usize, usize) -> Result<RelationFit>,
{
    let mut entries = Vec::with_capacity((q_max + 1) * (r_max + 1));
    for q in 0..=q_max {
        for r in 0..=r_max {
            let f = fit(q, r)?;
            entries.push(BicEntry {
                q,
                r,
                bic: bic_score(f.rss, f.rows, f.n_params),
                rss: f.rss,
                n_eff: f.rows,
                k: f.n_params,
            });
        }
    }
    let best = entries
        .iter()
        .min_by(|x, y| {
            x.bic
                .total_cmp(&y.bic)
                .then((x.q + x.r).cmp(&(y.q + y.r)))
                .then(x.q.cmp(&y.q))
        })
        .map(|e| (e.q, e.r))
        .ok_or_else(|| Error::InvalidInput("empty order grid".into()))?;
    Ok(BicTable { entries, best })
}

/// BIC over `0..=q_max x 0..=r_max` for the feedback-channel fit. All
/// candidates share the row window of the largest model.
pub fn scan_bic(
    y1: &TimeSeries,
    y2: &TimeSeries,
    q_max: usize,
    r_max: usize,
    pin_b0: bool,
) -> Result<BicTable> {
    check_lengths(y1, y2)?;
    let needed = q_max + r_max + 1 + q_max.max(r_max);
    if y1.len() <= needed {
        return Err(Error::InvalidInput(format!(
            "need more than {needed} samples for the order grid, got {}",
            y1.len()
        )));
    }
    let start = q_max.max(r_max);
    scan(q_max, r_max, |q, r| {
        fit_lagged(y2, y1, q, r, 0, pin_b0, start)
    })
}

/// BIC over ARX orders with input delay `delay`, on a common row window.
pub fn scan_arx_bic(
    y: &TimeSeries,
    u: &TimeSeries,
    q_max: usize,
    r_max: usize,
    delay: usize,
) -> Result<BicTable> {
    let start = q_max.max(r_max + delay);
    scan(q_max, r_max, |q, r| {
        fit_lagged(y, u, q, r, delay, false, start)
    })
}
