//! Scenario pipelines: simulate, estimate and aggregate.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lowrank_core::estimate::{
    fit_ar, fit_arma, fit_relation_with, identify_with_input, recover_w1_w2, scan_bic,
    wiener_predictor, EstimationReport, InputOptions, OrderChoice, RelationFit,
};
use lowrank_core::factorize::outer_inner;
use lowrank_core::harness::{
    compare_magnitudes, magnitudes, run_monte_carlo, write_bode_csv, write_runs_csv,
    BodeComparison, Execution, McBatch, McSpec, McSummary, RunRecord,
};
use lowrank_core::ratfun::spectrum;
use lowrank_core::simulate::{
    mix_seed, sim_low_rank, sim_with_input, write_csv, InputSystem, NoiseSpec,
};
use lowrank_core::{angle_grid, Error, RatTF, Result, TimeSeries};
use serde::Serialize;

use crate::config::{Kind, ScenarioConfig};

/// Angles of every Bode grid written by the runner.
pub const BODE_POINTS: usize = 128;

#[derive(Clone, Debug)]
pub struct Param {
    pub name: String,
    pub truth: Option<f64>,
}

fn push_params(
    out: &mut Vec<Param>,
    prefix: &str,
    truths: Option<Vec<f64>>,
    len: usize,
    first: usize,
) {
    for k in 0..len {
        out.push(Param {
            name: format!("{prefix}{}", k + first),
            truth: truths.as_ref().map(|t| t[k]),
        });
    }
}

fn padded(v: &[f64], len: usize) -> Option<Vec<f64>> {
    (v.len() <= len).then(|| {
        let mut p = v.to_vec();
        p.resize(len, 0.0);
        p
    })
}

/// Delay-form `(a_1.., b_0..)` of `w` padded to orders `(q, r)` after
/// removing `delay` leading zeros of the numerator.
fn arx_truth(w: &RatTF, q: usize, r: usize, delay: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let (num, den) = w.to_delay_form().ok()?;
    let mut num = num;
    num.resize(num.len().max(delay), 0.0);
    if num[..delay].iter().any(|c| *c != 0.0) {
        return None;
    }
    Some((padded(&den[1..], q)?, padded(&num[delay..], r + 1)?))
}

/// `(ar, ma, λ²)` of the outer factor of `sigma * w`, if the orders fit.
fn arma_truth(w: &RatTF, sigma: f64, p: usize, q: usize) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let g = outer_inner(w).ok()?.outer.scale(sigma);
    let (num, den) = g.to_delay_form().ok()?;
    if num[0] == 0.0 {
        return None;
    }
    let ma: Vec<f64> = num[1..].iter().map(|c| c / num[0]).collect();
    Some((padded(&den[1..], p)?, padded(&ma, q)?, num[0] * num[0]))
}

fn relation_layout(
    out: &mut Vec<Param>,
    prefix: &str,
    choice: OrderChoice,
    pin_b0: bool,
    truth: Option<&RatTF>,
) {
    let (q, r) = match choice {
        OrderChoice::Fixed { q, r } => (q, r),
        OrderChoice::Bic { q_max, r_max } => {
            out.push(Param {
                name: format!("{prefix}q"),
                truth: None,
            });
            out.push(Param {
                name: format!("{prefix}r"),
                truth: None,
            });
            (q_max, r_max)
        }
    };
    let t = truth.and_then(|h| arx_truth(h, q, r, 0));
    push_params(
        out,
        &format!("{prefix}a"),
        t.as_ref().map(|t| t.0.clone()),
        q,
        1,
    );
    let first = usize::from(pin_b0);
    push_params(
        out,
        &format!("{prefix}b"),
        t.map(|t| t.1[first..].to_vec()),
        r + 1 - first,
        first,
    );
}

fn relation_values(out: &mut Vec<f64>, fit: &RelationFit, choice: OrderChoice) {
    let (q, r) = match choice {
        OrderChoice::Fixed { q, r } => (q, r),
        OrderChoice::Bic { q_max, r_max } => {
            out.push(fit.a.len() as f64);
            out.push((fit.b.len() - 1) as f64);
            (q_max, r_max)
        }
    };
    out.extend(padded(&fit.a, q).expect("orders within grid"));
    let b = padded(&fit.b, r + 1).expect("orders within grid");
    out.extend(&b[usize::from(fit.pinned_b0)..]);
}

fn fit_choice(
    y1: &TimeSeries,
    y2: &TimeSeries,
    choice: OrderChoice,
    pin_b0: bool,
) -> Result<RelationFit> {
    match choice {
        OrderChoice::Fixed { q, r } => fit_relation_with(y1, y2, q, r, pin_b0),
        OrderChoice::Bic { q_max, r_max } => {
            let (q, r) = scan_bic(y1, y2, q_max, r_max, pin_b0)?.best;
            fit_relation_with(y1, y2, q, r, pin_b0)
        }
    }
}

/// A magnitude curve written as `file`, compared against `truth`.
#[derive(Clone, Debug)]
pub struct BodeTarget {
    pub file: &'static str,
    pub name: &'static str,
    pub truth: RatTF,
}

/// Parameter layout and Bode targets of a scenario.
#[derive(Clone, Debug)]
pub struct Plan {
    pub params: Vec<Param>,
    pub bode: Vec<BodeTarget>,
}

fn system(cfg: &ScenarioConfig) -> (RatTF, RatTF) {
    let s = &cfg.system;
    match cfg.kind {
        Kind::LowRank => (s.w1.clone().unwrap(), s.w2.clone().unwrap()),
        Kind::WithInput => (s.k1.clone().unwrap(), s.k2.clone().unwrap()),
    }
}

pub fn plan(cfg: &ScenarioConfig) -> Plan {
    let est = &cfg.estimation;
    let sigma = cfg.noise.e_variance.sqrt();
    let mut params = Vec::new();
    let mut bode = Vec::new();
    match cfg.kind {
        Kind::LowRank => {
            let (w1, w2) = system(cfg);
            let h = w2.div(&w1).ok();
            if let Some(p) = est.ar_order {
                for (i, w) in [(1, &w1), (2, &w2)] {
                    let t = arma_truth(w, sigma, p, 0)
                        .filter(|t| {
                            t.1.is_empty()
                                && w.num().degree() == w.num().origin_multiplicity().into()
                        })
                        .map(|t| t.0);
                    push_params(&mut params, &format!("a{i}_"), t, p, 1);
                }
            }
            if let Some(choice) = est.relation {
                relation_layout(&mut params, "h_", choice, est.pin_b0, h.as_ref());
            }
            if let Some(o) = est.arma {
                let t = arma_truth(&w1, sigma, o.p, o.q);
                push_params(
                    &mut params,
                    "g1_ar",
                    t.as_ref().map(|t| t.0.clone()),
                    o.p,
                    1,
                );
                push_params(
                    &mut params,
                    "g1_ma",
                    t.as_ref().map(|t| t.1.clone()),
                    o.q,
                    1,
                );
                params.push(Param {
                    name: "g1_lambda2".into(),
                    truth: t.map(|t| t.2),
                });
            }
            if est.arma.is_some() && est.relation.is_some() {
                bode.push(BodeTarget {
                    file: "bode.csv",
                    name: "w1",
                    truth: w1.scale(sigma),
                });
                bode.push(BodeTarget {
                    file: "bode_w2.csv",
                    name: "w2",
                    truth: w2.scale(sigma),
                });
            } else if est.ar_order.is_some() {
                bode.push(BodeTarget {
                    file: "bode.csv",
                    name: "w1",
                    truth: w1.scale(sigma),
                });
            } else if let Some(h) = h {
                bode.push(BodeTarget {
                    file: "bode.csv",
                    name: "h",
                    truth: h,
                });
            }
        }
        Kind::WithInput => {
            let s = &cfg.system;
            let (k1, k2) = system(cfg);
            let orders = est.input_orders.unwrap();
            for (i, f) in [(1, s.f1.as_ref().unwrap()), (2, s.f2.as_ref().unwrap())] {
                let choice = orders[i - 1];
                let prefix = format!("f{i}_");
                let (q, r) = match choice {
                    OrderChoice::Fixed { q, r } => (q, r),
                    OrderChoice::Bic { q_max, r_max } => {
                        params.push(Param {
                            name: format!("{prefix}q"),
                            truth: None,
                        });
                        params.push(Param {
                            name: format!("{prefix}r"),
                            truth: None,
                        });
                        (q_max, r_max)
                    }
                };
                let t = arx_truth(f, q, r, 1);
                push_params(
                    &mut params,
                    &format!("{prefix}a"),
                    t.as_ref().map(|t| t.0.clone()),
                    q,
                    1,
                );
                push_params(&mut params, &format!("{prefix}b"), t.map(|t| t.1), r + 1, 0);
            }
            let h = k2.div(&k1).ok();
            relation_layout(
                &mut params,
                "h_",
                est.relation.unwrap(),
                est.pin_b0,
                h.as_ref(),
            );
            let o = est.arma.unwrap();
            let t = arma_truth(&k1, sigma, o.p, o.q);
            push_params(
                &mut params,
                "k1_ar",
                t.as_ref().map(|t| t.0.clone()),
                o.p,
                1,
            );
            push_params(
                &mut params,
                "k1_ma",
                t.as_ref().map(|t| t.1.clone()),
                o.q,
                1,
            );
            params.push(Param {
                name: "k1_lambda2".into(),
                truth: t.map(|t| t.2),
            });
            bode.push(BodeTarget {
                file: "bode.csv",
                name: "k1",
                truth: k1.scale(sigma),
            });
            bode.push(BodeTarget {
                file: "bode_k2.csv",
                name: "k2",
                truth: k2.scale(sigma),
            });
        }
    }
    Plan { params, bode }
}

/// Data of one realization: `[y1, y2]` or `[y1, y2, u]`.
pub fn simulate(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<TimeSeries>> {
    match cfg.kind {
        Kind::LowRank => {
            let (w1, w2) = system(cfg);
            let (y1, y2) = sim_low_rank(
                &w1,
                &w2,
                cfg.n,
                NoiseSpec::new(cfg.noise.e_variance, seed),
                cfg.burn_in,
            )?;
            Ok(vec![y1, y2])
        }
        Kind::WithInput => {
            let s = &cfg.system;
            let sys = InputSystem {
                f1: s.f1.clone().unwrap(),
                f2: s.f2.clone().unwrap(),
                k1: s.k1.clone().unwrap(),
                k2: s.k2.clone().unwrap(),
            };
            let u_spec = NoiseSpec::new(cfg.noise.u_variance.unwrap_or(0.0), mix_seed(seed, 1));
            let e_spec = NoiseSpec::new(cfg.noise.e_variance, mix_seed(seed, 2));
            let (y1, y2, u) = sim_with_input(&sys, cfg.n, u_spec, e_spec, cfg.burn_in)?;
            Ok(vec![y1, y2, u])
        }
    }
}

/// Estimates of one realization in the layout of [`plan`].
#[derive(Clone, Debug)]
pub struct Estimates {
    pub values: Vec<f64>,
    pub residual_rms: f64,
    pub curves: Vec<Vec<f64>>,
    pub report: EstimationReport,
}

pub fn estimate(cfg: &ScenarioConfig, data: &[TimeSeries]) -> Result<Estimates> {
    let est = &cfg.estimation;
    let grid = angle_grid(BODE_POINTS);
    let mut values = Vec::new();
    let mut curves = Vec::new();
    match cfg.kind {
        Kind::LowRank => {
            let [y1, y2] = data else {
                return Err(Error::InvalidInput(
                    "low-rank scenarios need series y1, y2".into(),
                ));
            };
            let mut report = EstimationReport::new("low_rank");
            let mut residual_rms = None;
            let mut ar1 = None;
            if let Some(p) = est.ar_order {
                for (name, y) in [("ar_y1", y1), ("ar_y2", y2)] {
                    let f = fit_ar(y, p)?;
                    values.extend(&f.ar);
                    report.arma(name, &f);
                    if ar1.is_none() {
                        ar1 = Some(f);
                    }
                }
            }
            let mut h_hat = None;
            if let Some(choice) = est.relation {
                let f = fit_choice(y1, y2, choice, est.pin_b0)?;
                relation_values(&mut values, &f, choice);
                report.relation("h", &f).tf("h_hat", &f.h_hat);
                residual_rms = Some(f.residual_rms);
                h_hat = Some(f.h_hat);
            }
            let mut g1 = None;
            if let Some(o) = est.arma {
                let f = fit_arma(y1, o.p, o.q, est.arma_refine)?;
                values.extend(&f.ar);
                values.extend(&f.ma);
                values.push(f.innovation_variance);
                report.arma("g1", &f).tf("g1_hat", &f.g_hat);
                g1 = Some(f.g_hat);
            }
            match (g1, h_hat) {
                (Some(g1), Some(h)) => {
                    let r = recover_w1_w2(&g1, &h)?;
                    report
                        .tf("q1_hat", &r.q1)
                        .tf("w1_hat", &r.w1)
                        .tf("w2_hat", &r.w2);
                    curves.push(magnitudes(&r.w1, &grid)?);
                    curves.push(magnitudes(&r.w2, &grid)?);
                }
                (None, h) => {
                    if let Some(f) = &ar1 {
                        let g = f.g_hat.scale(f.innovation_variance.sqrt());
                        curves.push(magnitudes(&g, &grid)?);
                    } else if let Some(h) = h {
                        curves.push(magnitudes(&h, &grid)?);
                    }
                }
                (Some(_), None) => {}
            }
            let residual_rms = residual_rms
                .or(ar1.map(|f| f.innovation_variance.sqrt()))
                .unwrap_or(0.0);
            Ok(Estimates {
                values,
                residual_rms,
                curves,
                report,
            })
        }
        Kind::WithInput => {
            let [y1, y2, u] = data else {
                return Err(Error::InvalidInput(
                    "input scenarios need series y1, y2, u".into(),
                ));
            };
            let o = est.arma.unwrap();
            let opts = InputOptions {
                channel_orders: est.input_orders.unwrap(),
                h_orders: est.relation.unwrap(),
                k1_orders: (o.p, o.q),
                arma_refine: est.arma_refine,
                pin_b0: est.pin_b0,
            };
            let fit = identify_with_input(y1, y2, u, &opts)?;
            let mut report = EstimationReport::new("with_input");
            for (i, s) in fit.stage1.iter().enumerate() {
                relation_values(&mut values, s, opts.channel_orders[i]);
                let name = format!("f{}", i + 1);
                report
                    .relation(&name, s)
                    .tf(&format!("{name}_hat"), &s.h_hat);
            }
            relation_values(&mut values, &fit.relation, opts.h_orders);
            values.extend(&fit.k1_fit.ar);
            values.extend(&fit.k1_fit.ma);
            values.push(fit.k1_fit.innovation_variance);
            report
                .relation("h", &fit.relation)
                .tf("h_hat", &fit.h_hat)
                .arma("k1", &fit.k1_fit)
                .tf("k1_hat", &fit.k1_hat)
                .tf("k2_hat", &fit.k2_hat);
            curves.push(magnitudes(&fit.k1_hat, &grid)?);
            curves.push(magnitudes(&fit.k2_hat, &grid)?);
            Ok(Estimates {
                values,
                residual_rms: fit.relation.residual_rms,
                curves,
                report,
            })
        }
    }
}

/// Closed-form results on the true low-rank system.
#[derive(Clone, Debug, Serialize)]
pub struct ExactChain {
    pub h: RatTF,
    pub f_plus: RatTF,
    pub f_plus_delay: (Vec<f64>, Vec<f64>),
    pub k: RatTF,
    pub joint_outer: bool,
    pub g1: RatTF,
    pub q1: RatTF,
    pub recovered_w1: RatTF,
    pub recovered_w2: RatTF,
    pub max_det_phi: f64,
}

pub fn exact_chain(cfg: &ScenarioConfig) -> Result<ExactChain> {
    let (w1, w2) = system(cfg);
    let grid = angle_grid(BODE_POINTS);
    let (sg, h) = spectrum(&w1, &w2, &grid)?;
    let wp = wiener_predictor(&w1, &w2)?;
    let oi = outer_inner(&w1)?;
    let rec = recover_w1_w2(&oi.outer, &h)?;
    Ok(ExactChain {
        h,
        f_plus_delay: wp.f_plus.to_delay_form()?,
        f_plus: wp.f_plus,
        k: wp.k,
        joint_outer: wp.joint_outer,
        g1: oi.outer,
        q1: rec.q1,
        recovered_w1: rec.w1,
        recovered_w2: rec.w2,
        max_det_phi: sg.det_phi.iter().map(|d| d.norm()).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BodeSummary {
    pub file: String,
    pub target: String,
    pub max_rel_err: f64,
    pub mean_rel_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioSummary {
    #[serde(flatten)]
    pub mc: McSummary,
    pub bode: Vec<BodeSummary>,
}

pub struct ScenarioOutput {
    pub plan: Plan,
    pub batch: McBatch,
    pub bode: Vec<(BodeTarget, BodeComparison)>,
    pub summary: ScenarioSummary,
    pub exact: Option<ExactChain>,
}

/// Runs the Monte-Carlo batch of a scenario; run `i` uses the child seed
/// `mix_seed(master_seed, i)`.
pub fn run(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioOutput> {
    let plan = plan(cfg);
    let spec = McSpec {
        scenario_id: cfg.scenario_id.clone(),
        param_names: plan.params.iter().map(|p| p.name.clone()).collect(),
        true_values: plan.params.iter().map(|p| p.truth).collect(),
        runs: cfg.runs,
        master_seed: cfg.master_seed,
    };
    let batch = run_monte_carlo(&spec, exec, |_, seed| {
        let data = simulate(cfg, seed)?;
        let e = estimate(cfg, &data)?;
        Ok(RunRecord {
            params: e.values,
            residual_rms: e.residual_rms,
            curves: e.curves,
        })
    })?;
    let grid = angle_grid(BODE_POINTS);
    let mut bode = Vec::new();
    if batch.mean_curves.len() == plan.bode.len() {
        for (t, est) in plan.bode.iter().zip(&batch.mean_curves) {
            let cmp = compare_magnitudes(grid.clone(), magnitudes(&t.truth, &grid)?, est.clone())?;
            bode.push((t.clone(), cmp));
        }
    }
    let exact = match (cfg.kind, cfg.estimation.exact_chain) {
        (Kind::LowRank, true) => Some(exact_chain(cfg)?),
        _ => None,
    };
    let summary = ScenarioSummary {
        mc: batch.summary.clone(),
        bode: bode
            .iter()
            .map(|(t, c)| BodeSummary {
                file: t.file.into(),
                target: t.name.into(),
                max_rel_err: c.max_rel_err,
                mean_rel_err: c.mean_rel_err,
            })
            .collect(),
    };
    Ok(ScenarioOutput {
        plan,
        batch,
        bode,
        summary,
        exact,
    })
}

fn create(path: &Path) -> std::io::Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> std::io::Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, v)?;
    writeln!(f)?;
    f.flush()
}

/// Writes `config.echo.json`, `runs.csv`, `summary.json`, the Bode grids
/// and, when requested, `exact.json`.
pub fn write_outputs(
    dir: &Path,
    cfg: &ScenarioConfig,
    out: &ScenarioOutput,
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("config.echo.json");
    fs::write(&path, cfg.to_json())?;
    written.push(path);

    let path = dir.join("runs.csv");
    let mut f = create(&path)?;
    let names: Vec<String> = out.plan.params.iter().map(|p| p.name.clone()).collect();
    write_runs_csv(&mut f, &names, &out.batch.outcomes)?;
    f.flush()?;
    written.push(path);

    let path = dir.join("summary.json");
    write_json(&path, &out.summary)?;
    written.push(path);

    for (t, cmp) in &out.bode {
        let path = dir.join(t.file);
        let mut f = create(&path)?;
        write_bode_csv(&mut f, cmp)?;
        f.flush()?;
        written.push(path);
    }
    if let Some(x) = &out.exact {
        let path = dir.join("exact.json");
        write_json(&path, x)?;
        written.push(path);
    }
    Ok(written)
}

/// `data.csv` for the realization of run 0.
pub fn write_data(dir: &Path, data: &[TimeSeries]) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("data.csv");
    let mut f = create(&path)?;
    let refs: Vec<&TimeSeries> = data.iter().collect();
    write_csv(&mut f, &refs)?;
    f.flush()?;
    Ok(path)
}

pub fn write_report(dir: &Path, report: &EstimationReport) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("estimation.json");
    write_json(&path, report)?;
    Ok(path)
}

/// Picks the columns a scenario needs out of a parsed CSV, by label.
pub fn select_series(cfg: &ScenarioConfig, series: Vec<TimeSeries>) -> Result<Vec<TimeSeries>> {
    let wanted: &[&str] = match cfg.kind {
        Kind::LowRank => &["y1", "y2"],
        Kind::WithInput => &["y1", "y2", "u"],
    };
    wanted
        .iter()
        .map(|w| {
            series
                .iter()
                .find(|s| s.label == *w)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("data has no column `{w}`")))
        })
        .collect()
}
