//! Minimum-norm least squares and lagged-regression design matrices.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Singular values at or below this fraction of the largest are treated as zero.
pub const RANK_REL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct LsqSolution {
    pub coeffs: Vec<f64>,
    pub rss: f64,
    pub rows: usize,
    pub rank: usize,
}

impl LsqSolution {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.coeffs.len()
    }

    pub fn residual_rms(&self) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            (self.rss / self.rows as f64).sqrt()
        }
    }
}

/// Minimum-norm solution of `a x ≈ b` through the SVD.
pub fn solve_min_norm(a: DMatrix<f64>, b: DVector<f64>) -> Result<LsqSolution> {
    let rows = a.nrows();
    if a.ncols() == 0 {
        return Ok(LsqSolution {
            coeffs: Vec::new(),
            rss: b.norm_squared(),
            rows,
            rank: 0,
        });
    }
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.max();
    let eps = RANK_REL_TOL * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let x = if smax == 0.0 {
        DVector::zeros(a.ncols())
    } else {
        svd.solve(&b, eps)
            .map_err(|e| Error::NumericFactorization(e.to_string()))?
    };
    let resid = &b - &a * &x;
    Ok(LsqSolution {
        coeffs: x.iter().copied().collect(),
        rss: resid.norm_squared(),
        rows,
        rank,
    })
}

/// One block of lagged regressors: `sign * x(t - lag)` for each lag.
pub(crate) struct LagBlock<'a> {
    pub series: &'a [f64],
    pub lags: std::ops::RangeInclusive<usize>,
    pub sign: f64,
}

impl LagBlock<'_> {
    fn width(&self) -> usize {
        self.lags.clone().count()
    }
}

/// Design matrix and target for rows `t = start..n`.
///
/// The target at row `t` is `target(t) - offset(t)` when an offset series
/// is given (used to pin a known coefficient).
pub(crate) fn lagged_system(
    target: &[f64],
    offset: Option<&[f64]>,
    blocks: &[LagBlock<'_>],
    start: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = target.len();
    let rows = n.saturating_sub(start);
    let cols: usize = blocks.iter().map(LagBlock::width).sum();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    for (i, t) in (start..n).enumerate() {
        b[i] = target[t] - offset.map_or(0.0, |o| o[t]);
        let mut c = 0;
        for blk in blocks {
            for lag in blk.lags.clone() {
                a[(i, c)] = blk.sign * blk.series[t - lag];
                c += 1;
            }
        }
    }
    (a, b)
}
