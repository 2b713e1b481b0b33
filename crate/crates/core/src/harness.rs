//! Monte-Carlo batches, box-plot statistics and Bode magnitude comparisons.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::ratfun::RatTF;
use crate::simulate::mix_seed;

/// Share of failed runs above which a batch summary is marked invalid.
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// Floor on the reference magnitude in relative Bode errors.
pub const BODE_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxStats {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub min: f64,
    pub max: f64,
    pub variance: f64,
    pub outlier_count: usize,
}

/// Type-7 quantile of sorted data: linear interpolation at `(n - 1) p`.
fn quantile_sorted(x: &[f64], p: f64) -> f64 {
    let h = (x.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(x.len() - 1);
    x[lo] + (h - lo as f64) * (x[hi] - x[lo])
}

/// Median, type-7 quartiles, extremes, unbiased variance (zero for a
/// single sample) and the number of points outside the 1.5 IQR fences.
pub fn boxplot_stats(samples: &[f64]) -> Result<BoxStats> {
    if samples.is_empty() {
        return Err(Error::InvalidInput(
            "box-plot statistics of an empty sample".into(),
        ));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "box-plot statistics of non-finite data".into(),
        ));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let q25 = quantile_sorted(&x, 0.25);
    let q75 = quantile_sorted(&x, 0.75);
    let iqr = q75 - q25;
    let (lo, hi) = (q25 - 1.5 * iqr, q75 + 1.5 * iqr);
    let mean = x.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(BoxStats {
        median: quantile_sorted(&x, 0.5),
        q25,
        q75,
        min: x[0],
        max: x[n - 1],
        variance,
        outlier_count: x.iter().filter(|&&v| v < lo || v > hi).count(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub true_value: Option<f64>,
    #[serde(flatten)]
    pub stats: BoxStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct McSummary {
    pub scenario_id: String,
    pub runs: usize,
    pub failures: usize,
    pub valid: bool,
    pub params: Vec<ParamSummary>,
}

impl McSummary {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Output of one successful run.
#[derive(Clone, Debug, Default)]
pub struct RunRecord {
    /// Estimates in the order of the batch's parameter names.
    pub params: Vec<f64>,
    pub residual_rms: f64,
    /// Magnitude curves averaged over the batch (e.g. Bode magnitudes).
    pub curves: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub run_index: usize,
    pub seed: u64,
    /// Error code of a failed run.
    pub result: std::result::Result<RunRecord, &'static str>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Thread count; zero picks the default. Runs sequentially when the
    /// crate is built without the `parallel` feature.
    Parallel {
        threads: usize,
    },
}

/// Static description of a batch.
#[derive(Clone, Debug)]
pub struct McSpec {
    pub scenario_id: String,
    pub param_names: Vec<String>,
    pub true_values: Vec<Option<f64>>,
    pub runs: usize,
    pub master_seed: u64,
}

#[derive(Clone, Debug)]
pub struct McBatch {
    pub outcomes: Vec<RunOutcome>,
    pub summary: McSummary,
    /// Pointwise mean of each curve over the successful runs.
    pub mean_curves: Vec<Vec<f64>>,
}

fn run_one<F>(spec: &McSpec, run: &F, i: usize) -> RunOutcome
where
    F: Fn(usize, u64) -> Result<RunRecord>,
{
    let seed = mix_seed(spec.master_seed, i as u64);
    let result = match run(i, seed) {
        Ok(r) if r.params.len() != spec.param_names.len() => Err("inconsistent"),
        Ok(r) if r.params.iter().any(|v| !v.is_finite()) => Err("non_finite_output"),
        Ok(r) => Ok(r),
        Err(e) => Err(e.code()),
    };
    RunOutcome {
        run_index: i,
        seed,
        result,
    }
}

fn execute<F>(spec: &McSpec, run: &F, exec: Execution) -> Result<Vec<RunOutcome>>
where
    F: Fn(usize, u64) -> Result<RunRecord> + Sync,
{
    match exec {
        Execution::Sequential => Ok((0..spec.runs).map(|i| run_one(spec, run, i)).collect()),
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(|| {
                (0..spec.runs)
                    .into_par_iter()
                    .map(|i| run_one(spec, run, i))
                    .collect()
            }))
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => Ok((0..spec.runs).map(|i| run_one(spec, run, i)).collect()),
    }
}

/// Runs `run(index, child_seed)` for every index with
/// `child_seed = mix_seed(master_seed, index)` and aggregates by index.
///
/// Failed runs are counted and excluded; the result does not depend on
/// the execution mode or thread count.
pub fn run_monte_carlo<F>(spec: &McSpec, exec: Execution, run: F) -> Result<McBatch>
where
    F: Fn(usize, u64) -> Result<RunRecord> + Sync,
{
    if spec.runs == 0 {
        return Err(Error::InvalidInput("runs must be at least 1".into()));
    }
    if spec.true_values.len() != spec.param_names.len() {
        return Err(Error::InvalidInput(
            "one true value slot per parameter required".into(),
        ));
    }
    let outcomes = execute(spec, &run, exec)?;
    let ok: Vec<&RunRecord> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok())
        .collect();
    let failures = spec.runs - ok.len();

    let mut params = Vec::new();
    if !ok.is_empty() {
        for (j, name) in spec.param_names.iter().enumerate() {
            let xs: Vec<f64> = ok.iter().map(|r| r.params[j]).collect();
            params.push(ParamSummary {
                name: name.clone(),
                true_value: spec.true_values[j],
                stats: boxplot_stats(&xs)?,
            });
        }
    }
    let mean_curves = mean_curves(&ok)?;
    let summary = McSummary {
        scenario_id: spec.scenario_id.clone(),
        runs: spec.runs,
        failures,
        valid: !ok.is_empty() && failures as f64 <= MAX_FAILURE_RATE * spec.runs as f64,
        params,
    };
    Ok(McBatch {
        outcomes,
        summary,
        mean_curves,
    })
}

fn mean_curves(ok: &[&RunRecord]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = ok.first() else {
        return Ok(Vec::new());
    };
    let mut acc: Vec<Vec<f64>> = first.curves.iter().map(|c| vec![0.0; c.len()]).collect();
    for r in ok {
        if r.curves.len() != acc.len() || r.curves.iter().zip(&acc).any(|(c, a)| c.len() != a.len())
        {
            return Err(Error::Inconsistent(
                "runs returned curves of different shapes".into(),
            ));
        }
        for (a, c) in acc.iter_mut().zip(&r.curves) {
            for (x, y) in a.iter_mut().zip(c) {
                *x += y;
            }
        }
    }
    let n = ok.len() as f64;
    for a in &mut acc {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
    Ok(acc)
}

/// `runs.csv`: `run_index,seed,<params...>,residual_rms,status`.
pub fn write_runs_csv<W: Write>(
    out: &mut W,
    names: &[String],
    outcomes: &[RunOutcome],
) -> std::io::Result<()> {
    write!(out, "run_index,seed")?;
    for n in names {
        write!(out, ",{n}")?;
    }
    writeln!(out, ",residual_rms,status")?;
    for o in outcomes {
        write!(out, "{},{}", o.run_index, o.seed)?;
        match &o.result {
            Ok(r) => {
                for v in &r.params {
                    write!(out, ",{}", fmt_f64(*v))?;
                }
                writeln!(out, ",{},ok", fmt_f64(r.residual_rms))?;
            }
            Err(code) => {
                for _ in names {
                    write!(out, ",")?;
                }
                writeln!(out, ",,error:{code}")?;
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct BodeComparison {
    pub angles: Vec<f64>,
    pub mag_a: Vec<f64>,
    pub mag_b: Vec<f64>,
    pub max_rel_err: f64,
    pub mean_rel_err: f64,
}

/// Compares two magnitude curves on a shared grid; `a` is the reference.
pub fn compare_magnitudes(
    angles: Vec<f64>,
    mag_a: Vec<f64>,
    mag_b: Vec<f64>,
) -> Result<BodeComparison> {
    if angles.len() != mag_a.len() || angles.len() != mag_b.len() || angles.is_empty() {
        return Err(Error::InvalidInput(
            "magnitude curves must share a nonempty grid".into(),
        ));
    }
    let errs: Vec<f64> = mag_a
        .iter()
        .zip(&mag_b)
        .map(|(a, b)| (a - b).abs() / a.max(BODE_EPS))
        .collect();
    let max_rel_err = errs.iter().copied().fold(0.0, f64::max);
    let mean_rel_err = errs.iter().sum::<f64>() / errs.len() as f64;
    Ok(BodeComparison {
        angles,
        mag_a,
        mag_b,
        max_rel_err,
        mean_rel_err,
    })
}

pub fn magnitudes(w: &RatTF, angles: &[f64]) -> Result<Vec<f64>> {
    Ok(w.eval_circle(angles)?.iter().map(|v| v.norm()).collect())
}

/// Relative magnitude error `||Wa| - |Wb|| / max(|Wa|, ε)` per angle.
pub fn bode_compare(wa: &RatTF, wb: &RatTF, angles: &[f64]) -> Result<BodeComparison> {
    compare_magnitudes(
        angles.to_vec(),
        magnitudes(wa, angles)?,
        magnitudes(wb, angles)?,
    )
}

/// `bode.csv`: `theta,mag_true,mag_est`.
pub fn write_bode_csv<W: Write>(out: &mut W, cmp: &BodeComparison) -> std::io::Result<()> {
    writeln!(out, "theta,mag_true,mag_est")?;
    for ((t, a), b) in cmp.angles.iter().zip(&cmp.mag_a).zip(&cmp.mag_b) {
        writeln!(out, "{},{},{}", fmt_f64(*t), fmt_f64(*a), fmt_f64(*b))?;
    }
    Ok(())
}
