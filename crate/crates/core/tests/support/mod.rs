//! Random system generators, FFT and quadrature oracles, and the property
//! checks shared by the property tests and the acceptance suite.

#![allow(dead_code)]

use std::f64::consts::PI;

use lowrank_core::estimate::{f_family, wiener_predictor};
use lowrank_core::factorize::{causal_project, outer_inner};
use lowrank_core::ratfun::spectrum;
use lowrank_core::simulate::{filter, sim_low_rank, NoiseSpec};
use lowrank_core::{angle_grid, RatTF};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};
use rustfft::FftPlanner;

pub const MASTER_SEED: u64 = 20_240_917;
pub const CASES: u32 = 128;
pub const FFT_POINTS: usize = 4096;
pub const GRID_POINTS: usize = 128;

pub fn config() -> Config {
    Config {
        cases: CASES,
        rng_seed: RngSeed::Fixed(MASTER_SEED),
        failure_persistence: None,
        max_global_rejects: 100_000,
        ..Config::default()
    }
}

pub fn runner() -> TestRunner {
    TestRunner::new(config())
}

/// Where the roots of a random factor may lie.
#[derive(Clone, Copy, Debug)]
pub enum Region {
    /// `|r| ≤ 0.85`
    Inside,
    /// `|r| ≤ 0.8` or `1.25 ≤ |r| ≤ 3`
    Anywhere,
}

fn radius(region: Region) -> BoxedStrategy<f64> {
    match region {
        Region::Inside => (0.05..0.85f64).boxed(),
        Region::Anywhere => prop_oneof![0.05..0.8f64, 1.25..3.0f64].boxed(),
    }
}

/// One real root or a conjugate pair.
fn root_group(region: Region) -> impl Strategy<Value = Vec<Complex64>> {
    let real = (radius(region), any::<bool>())
        .prop_map(|(r, neg)| vec![Complex64::new(if neg { -r } else { r }, 0.0)]);
    let pair = (radius(region), 0.15..(PI - 0.15)).prop_map(|(r, phi)| {
        let z = Complex64::from_polar(r, phi);
        vec![z, z.conj()]
    });
    prop_oneof![real, pair]
}

fn roots(region: Region, max_groups: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(root_group(region), 0..=max_groups)
        .prop_map(|g| g.into_iter().flatten().collect())
}

/// Stable causal factor in zero-pole-gain form.
#[derive(Clone, Debug)]
pub struct Zpk {
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    pub gain: f64,
}

impl Zpk {
    pub fn tf(&self) -> RatTF {
        RatTF::from_zpk(&self.zeros, &self.poles, self.gain).expect("generated transfer function")
    }

    pub fn relative_degree(&self) -> usize {
        self.poles.len() - self.zeros.len()
    }
}

fn gain() -> impl Strategy<Value = f64> {
    (0.5..2.0f64, any::<bool>()).prop_map(|(g, neg)| if neg { -g } else { g })
}

/// Stable causal `W` with zeros in `zeros` and relative degree up to
/// `max_delay`; missing poles or zeros are placed at the origin.
pub fn stable_tf(zeros: Region, max_delay: usize) -> impl Strategy<Value = Zpk> {
    (
        roots(zeros, 2),
        roots(Region::Inside, 2),
        gain(),
        0..=max_delay,
    )
        .prop_map(|(mut zeros, mut poles, gain, delay)| {
            while poles.len() < zeros.len() + delay {
                poles.push(Complex64::new(0.0, 0.0));
            }
            while poles.len() > zeros.len() + delay {
                zeros.push(Complex64::new(0.0, 0.0));
            }
            Zpk { zeros, poles, gain }
        })
}

/// True when every two roots in the set are at least `gap` apart.
pub fn separated(sets: &[&[Complex64]], gap: f64) -> bool {
    let all: Vec<Complex64> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    all.iter().enumerate().all(|(i, a)| {
        all[i + 1..]
            .iter()
            .all(|b| (a - b).norm() >= gap || (a.norm() == 0.0 && b.norm() == 0.0))
    })
}

pub fn separated_tf() -> impl Strategy<Value = Zpk> {
    stable_tf(Region::Anywhere, 2).prop_filter("roots too close", |w| {
        separated(&[&w.zeros, &w.poles], 0.05)
    })
}

/// Rational function with poles inside and outside the disc, and a numerator
/// of arbitrary degree, so that it has a genuinely two-sided expansion.
pub fn laurent_tf() -> impl Strategy<Value = RatTF> {
    (
        prop::collection::vec(-2.0..2.0f64, 1..=5),
        roots(Region::Anywhere, 3),
    )
        .prop_filter("roots too close", |(_, poles)| separated(&[poles], 0.05))
        .prop_map(|(num, poles)| {
            RatTF::reduce(
                lowrank_core::Poly::new(num),
                lowrank_core::Poly::from_roots(1.0, &poles),
            )
            .expect("generated transfer function")
        })
        .prop_filter("zero function", |w| !w.is_zero())
}

/// `(W1, W2)` with `W2/W1` causal; `W2/W1` is stable when `W1` has its
/// zeros in the disc.
pub fn low_rank_pair(w1_zeros: Region, w2_zeros: Region) -> impl Strategy<Value = (Zpk, Zpk)> {
    (stable_tf(w1_zeros, 0), stable_tf(w2_zeros, 1)).prop_filter("roots too close", |(a, b)| {
        separated(&[&a.zeros, &a.poles, &b.zeros], 0.05) && separated(&[&a.poles, &b.poles], 0.05)
    })
}

/// Minimum-phase `W2` with relative degree zero.
pub fn min_phase_pair() -> impl Strategy<Value = (Zpk, Zpk)> {
    (stable_tf(Region::Anywhere, 0), stable_tf(Region::Inside, 0)).prop_filter(
        "roots too close",
        |(a, b)| {
            separated(&[&a.zeros, &a.poles, &b.zeros], 0.05)
                && separated(&[&a.poles, &b.poles], 0.05)
        },
    )
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

fn lift<T>(r: lowrank_core::Result<T>, what: &str) -> Result<T, TestCaseError> {
    r.map_err(|e| fail(format!("{what}: {e}")))
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Laurent coefficients of `W` on the unit circle: entry `k` is the
/// coefficient of `z^{-k}`, negative `k` wrap to `N - |k|`.
pub fn laurent_coeffs(w: &RatTF, n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| w.eval(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c / n as f64).collect()
}

/// `E[a(t) b(t-k)]` for `a = A e`, `b = B e` with unit white `e`, by
/// trapezoidal quadrature of `A conj(B) e^{ikθ}` over `n` angles.
pub fn cross_covariance(a: &RatTF, b: &RatTF, k: i64, n: usize) -> f64 {
    let sum: Complex64 = (0..n)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n as f64;
            let z = Complex64::from_polar(1.0, theta);
            a.eval(z) * b.eval(z).conj() * Complex64::from_polar(1.0, k as f64 * theta)
        })
        .sum();
    sum.re / n as f64
}

pub fn check_outer_inner(w: &Zpk) -> Result<(), TestCaseError> {
    let w = w.tf();
    let oi = lift(outer_inner(&w), "outer_inner")?;
    let grid = angle_grid(GRID_POINTS);
    let q = lift(oi.inner.eval_circle(&grid), "eval Q")?;
    let g = lift(oi.outer.eval_circle(&grid), "eval G")?;
    let wv = lift(w.eval_circle(&grid), "eval W")?;
    let unit = q.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max);
    prop_assert!(unit <= 1e-10, "||Q| - 1| = {unit:e} for {w}");
    let gq: Vec<Complex64> = g.iter().zip(&q).map(|(a, b)| a * b).collect();
    let err = max_diff(&gq, &wv) / max_abs(&wv).max(1.0);
    prop_assert!(err <= 1e-10, "|GQ - W| = {err:e} for {w}");
    let cls = lift(oi.outer.classify(), "classify G")?;
    prop_assert!(
        cls.stable && cls.minimum_phase && cls.causal,
        "G = {} not minimum phase",
        oi.outer
    );
    Ok(())
}

pub fn check_causal_project(w: &RatTF) -> Result<(), TestCaseError> {
    let n = FFT_POINTS;
    let p = lift(causal_project(w), "causal_project")?;
    let lw = laurent_coeffs(w, n);
    let lp = laurent_coeffs(&p, n);
    let scale = max_abs(&lw).max(1.0);
    let mut err = 0.0f64;
    for k in 0..n {
        let want = if k < n / 2 {
            lw[k]
        } else {
            Complex64::new(0.0, 0.0)
        };
        err = err.max((lp[k] - want).norm());
    }
    prop_assert!(
        err / scale <= 1e-8,
        "coefficient error {:e} for {w}",
        err / scale
    );
    prop_assert!(
        p.is_causal() && lift(p.is_stable(), "stability")?,
        "[W]+ = {p} not stable causal"
    );
    let again = lift(causal_project(&p), "causal_project twice")?;
    let grid = angle_grid(GRID_POINTS);
    let a = lift(again.eval_circle(&grid), "eval")?;
    let b = lift(p.eval_circle(&grid), "eval")?;
    prop_assert!(
        max_diff(&a, &b) <= 1e-10 * max_abs(&b).max(1.0),
        "projection not idempotent for {w}"
    );
    Ok(())
}

pub fn check_projection_linear(
    a: &RatTF,
    b: &RatTF,
    alpha: f64,
    beta: f64,
) -> Result<(), TestCaseError> {
    let combo = lift(a.scale(alpha).add(&b.scale(beta)), "combination")?;
    let lhs = lift(causal_project(&combo), "causal_project")?;
    let pa = lift(causal_project(a), "causal_project")?;
    let pb = lift(causal_project(b), "causal_project")?;
    let grid = angle_grid(GRID_POINTS);
    let l = lift(lhs.eval_circle(&grid), "eval")?;
    let ra = lift(pa.eval_circle(&grid), "eval")?;
    let rb = lift(pb.eval_circle(&grid), "eval")?;
    let r: Vec<Complex64> = ra
        .iter()
        .zip(&rb)
        .map(|(x, y)| alpha * x + beta * y)
        .collect();
    let err = max_diff(&l, &r) / max_abs(&r).max(1.0);
    prop_assert!(err <= 1e-8, "linearity error {err:e}");
    Ok(())
}

pub fn check_f_family(h_w1: &(Zpk, Zpk), s: &Zpk) -> Result<(), TestCaseError> {
    let w1 = h_w1.0.tf();
    let h = lift(h_w1.1.tf().div(&w1), "H")?;
    let s = s.tf();
    let p = lift(RatTF::one().add(&lift(s.mul(&h), "SH")?), "1 + SH")?;
    let pz = lift(p.zeros(), "zeros of 1 + SH")?;
    let others: Vec<Complex64> = lift(s.zeros(), "zeros of S")?
        .into_iter()
        .chain(lift(w1.zeros(), "zeros of W1")?)
        .collect();
    if pz.iter().any(|a| {
        others
            .iter()
            .any(|b| (1e-12..1e-6).contains(&(a - b).norm()))
    }) {
        return Err(TestCaseError::reject("near pole-zero cancellation"));
    }
    let m = match f_family(&h, &w1, &s) {
        Err(lowrank_core::Error::SingularLoop) => return Err(TestCaseError::reject("1 + S H = 0")),
        r => lift(r, "f_family")?,
    };
    prop_assert!(
        m.internally_stable,
        "S = {s}, H = {h} not internally stable"
    );
    let grid = angle_grid(GRID_POINTS);
    let f = lift(m.f.eval_circle(&grid), "eval F")?;
    let k = lift(m.k.eval_circle(&grid), "eval K")?;
    let hv = lift(h.eval_circle(&grid), "eval H")?;
    let wv = lift(w1.eval_circle(&grid), "eval W1")?;
    let recon: Vec<Complex64> = f
        .iter()
        .zip(&k)
        .zip(&hv)
        .map(|((f, k), h)| k / (1.0 - f * h))
        .collect();
    let err = max_diff(&recon, &wv) / max_abs(&wv).max(1.0);
    prop_assert!(err <= 1e-9, "reconstruction error {err:e}");
    Ok(())
}

/// `W1 = z⁻¹ F₊ W2 + K` with `K e` orthogonal to the strict past of `W2 e`.
pub fn check_wiener(pair: &(Zpk, Zpk), expect_constant_k: bool) -> Result<(), TestCaseError> {
    let w1 = pair.0.tf();
    let w2 = pair.1.tf();
    let p = lift(wiener_predictor(&w1, &w2), "wiener_predictor")?;
    let worst = (1..=20)
        .map(|k| cross_covariance(&p.k, &w2, k, FFT_POINTS).abs())
        .fold(0.0, f64::max);
    prop_assert!(
        worst <= 1e-6,
        "max |c_k| = {worst:e} for W1 = {w1}, W2 = {w2}"
    );
    if expect_constant_k {
        let kv = lift(p.k.eval_circle(&angle_grid(GRID_POINTS)), "eval K")?;
        let spread = kv.iter().map(|v| (v - kv[0]).norm()).fold(0.0, f64::max);
        prop_assert!(spread <= 1e-9, "K = {} varies by {spread:e}", p.k);
    }
    Ok(())
}

pub fn check_spectrum(pair: &(Zpk, Zpk)) -> Result<(), TestCaseError> {
    let w1 = pair.0.tf();
    let w2 = pair.1.tf();
    let grid = angle_grid(GRID_POINTS);
    let (s, h) = lift(spectrum(&w1, &w2, &grid), "spectrum")?;
    for (i, theta) in grid.iter().enumerate() {
        let scale = (s.phi11[i].re * s.phi22[i].re).max(1.0);
        let det = s.phi11[i] * s.phi22[i] - s.phi12[i] * s.phi21[i];
        prop_assert!(det.norm() <= 1e-10 * scale, "det Φ = {det} at θ = {theta}");
        prop_assert!(
            s.det_phi[i].norm() <= 1e-10 * scale,
            "reported det Φ = {}",
            s.det_phi[i]
        );
    }
    let hv = lift(h.eval_circle(&grid), "eval H")?;
    let ratio: Vec<Complex64> = grid
        .iter()
        .map(|&t| {
            let z = Complex64::from_polar(1.0, t);
            w2.eval(z) / w1.eval(z)
        })
        .collect();
    let err = max_diff(&hv, &ratio) / max_abs(&ratio).max(1.0);
    prop_assert!(err <= 1e-9, "H error {err:e}");
    Ok(())
}

/// The second channel is an exact filtered copy of the first.
pub fn check_deterministic_relation(pair: &(Zpk, Zpk), seed: u64) -> Result<(), TestCaseError> {
    let w1 = pair.0.tf();
    let w2 = pair.1.tf();
    let h = lift(w2.div(&w1), "H")?;
    let (y1, y2) = lift(
        sim_low_rank(&w1, &w2, 400, NoiseSpec::new(1.0, seed), 0),
        "sim_low_rank",
    )?;
    let hy = lift(filter(&h, &y1), "filter")?;
    let scale = y2.samples.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let err = y2
        .samples
        .iter()
        .zip(&hy.samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    prop_assert!(
        err <= 1e-9 * scale,
        "max |y2 - H y1| = {err:e} (scale {scale})"
    );
    Ok(())
}

/// Named property suites with their strategies; each returns the failure
/// message of the first falsified case.
pub fn run_suites() -> Vec<(&'static str, Result<(), String>)> {
    fn go<S: Strategy>(
        s: S,
        f: impl Fn(S::Value) -> Result<(), TestCaseError>,
    ) -> Result<(), String> {
        runner().run(&s, f).map_err(|e| e.to_string())
    }
    vec![
        ("outer_inner", go(separated_tf(), |w| check_outer_inner(&w))),
        (
            "causal_project vs FFT oracle",
            go(laurent_tf(), |w| check_causal_project(&w)),
        ),
        (
            "causal_project linearity",
            go(
                (laurent_tf(), laurent_tf(), -2.0..2.0f64, -2.0..2.0f64),
                |(a, b, x, y)| check_projection_linear(&a, &b, x, y),
            ),
        ),
        (
            "f_family",
            go(
                (
                    low_rank_pair(Region::Inside, Region::Anywhere),
                    stable_tf(Region::Anywhere, 1),
                ),
                |(p, s)| check_f_family(&p, &s),
            ),
        ),
        (
            "wiener orthogonality",
            go(low_rank_pair(Region::Anywhere, Region::Anywhere), |p| {
                check_wiener(&p, false)
            }),
        ),
        (
            "wiener constant K",
            go(min_phase_pair(), |p| check_wiener(&p, true)),
        ),
        (
            "spectrum",
            go(low_rank_pair(Region::Anywhere, Region::Anywhere), |p| {
                check_spectrum(&p)
            }),
        ),
        (
            "sim_low_rank relation",
            go(
                (
                    low_rank_pair(Region::Inside, Region::Anywhere),
                    any::<u64>(),
                ),
                |(p, seed)| check_deterministic_relation(&p, seed),
            ),
        ),
    ]
}
