//! Two-stage identification with a measured external input.

use serde::{Deserialize, Serialize};

use super::arma::{fit_arma, ArmaFit};
use super::relation::{fit_arx, fit_relation_with, scan_arx_bic, scan_bic, BicTable, RelationFit};
use crate::error::{Error, Result};
use crate::ratfun::RatTF;
use crate::simulate::{filter, TimeSeries};

/// Orders given directly or picked by BIC over a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrderChoice {
    Fixed { q: usize, r: usize },
    Bic { q_max: usize, r_max: usize },
}

#[derive(Clone, Debug)]
pub struct InputOptions {
    /// Stage-1 ARX orders per channel.
    pub channel_orders: [OrderChoice; 2],
    /// Orders of the feedback-channel fit on the stage-1 residuals.
    pub h_orders: OrderChoice,
    /// ARMA orders for `K1`.
    pub k1_orders: (usize, usize),
    pub arma_refine: bool,
    pub pin_b0: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputModelFit {
    pub f1_hat: RatTF,
    pub f2_hat: RatTF,
    pub k1_hat: RatTF,
    pub k2_hat: RatTF,
    pub h_hat: RatTF,
    pub stage1: [RelationFit; 2],
    pub stage1_bic: [Option<BicTable>; 2],
    pub relation: RelationFit,
    pub relation_bic: Option<BicTable>,
    pub k1_fit: ArmaFit,
    #[serde(skip)]
    pub residuals: (TimeSeries, TimeSeries),
}

/// Input delay of the stage-1 regression: `u(t - 1 - k)`.
const INPUT_DELAY: usize = 1;

fn stage1(
    y: &TimeSeries,
    u: &TimeSeries,
    choice: OrderChoice,
) -> Result<(RelationFit, Option<BicTable>)> {
    match choice {
        OrderChoice::Fixed { q, r } => Ok((fit_arx(y, u, q, r, INPUT_DELAY)?, None)),
        OrderChoice::Bic { q_max, r_max } => {
            let table = scan_arx_bic(y, u, q_max, r_max, INPUT_DELAY)?;
            let (q, r) = table.best;
            Ok((fit_arx(y, u, q, r, INPUT_DELAY)?, Some(table)))
        }
    }
}

/// Stage 1 regresses each `y_i` on its own lags and `u(t-1-k)`, giving
/// `F̂_i = z⁻¹ B̂_i / Â_i` and residuals `ỹ_i = y_i - F̂_i u`. Stage 2 fits
/// `Ĥ` on `(ỹ1, ỹ2)` and an ARMA model `K̂1` on `ỹ1`; `K̂2 = Ĥ K̂1`.
///
/// `u` must be uncorrelated with the noise driving `y`.
pub fn identify_with_input(
    y1: &TimeSeries,
    y2: &TimeSeries,
    u: &TimeSeries,
    opts: &InputOptions,
) -> Result<InputModelFit> {
    if y1.len() != u.len() || y2.len() != u.len() {
        return Err(Error::InvalidInput(format!(
            "series lengths differ: {}, {}, {}",
            y1.len(),
            y2.len(),
            u.len()
        )));
    }
    let (fit1, bic1) = stage1(y1, u, opts.channel_orders[0])?;
    let (fit2, bic2) = stage1(y2, u, opts.channel_orders[1])?;
    let residual = |y: &TimeSeries, f: &RatTF| -> Result<TimeSeries> {
        let fu = filter(f, u)?;
        let s = y
            .samples
            .iter()
            .zip(&fu.samples)
            .map(|(a, b)| a - b)
            .collect();
        Ok(TimeSeries::new(y.label.clone(), s))
    };
    let yt1 = residual(y1, &fit1.h_hat)?;
    let yt2 = residual(y2, &fit2.h_hat)?;

    let (relation, relation_bic) = match opts.h_orders {
        OrderChoice::Fixed { q, r } => (fit_relation_with(&yt1, &yt2, q, r, opts.pin_b0)?, None),
        OrderChoice::Bic { q_max, r_max } => {
            let table = scan_bic(&yt1, &yt2, q_max, r_max, opts.pin_b0)?;
            let (q, r) = table.best;
            (
                fit_relation_with(&yt1, &yt2, q, r, opts.pin_b0)?,
                Some(table),
            )
        }
    };
    let (p, q) = opts.k1_orders;
    let k1_fit = fit_arma(&yt1, p, q, opts.arma_refine)?;
    let h_hat = relation.h_hat.clone();
    let k2_hat = h_hat.mul(&k1_fit.g_hat)?;
    Ok(InputModelFit {
        f1_hat: fit1.h_hat.clone(),
        f2_hat: fit2.h_hat.clone(),
        k1_hat: k1_fit.g_hat.clone(),
        k2_hat,
        h_hat,
        stage1: [fit1, fit2],
        stage1_bic: [bic1, bic2],
        relation,
        relation_bic,
        k1_fit,
        residuals: (yt1, yt2),
    })
}
