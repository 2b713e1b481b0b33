mod support;

use std::f64::consts::PI;

use lowrank_core::estimate::{f_family, fit_relation, recover_w1_w2, wiener_predictor};
use lowrank_core::factorize::{causal_project, inner_gcd, outer_inner, stabilize_poly};
use lowrank_core::harness::bode_compare;
use lowrank_core::ratfun::spectrum;
use lowrank_core::simulate::{filter, impulse_response, sim_low_rank, NoiseSpec};
use lowrank_core::{angle_grid, Poly, RatTF};
use num_complex::Complex64;
use rustfft::FftPlanner;
use support::{laurent_coeffs, FFT_POINTS};

fn tf(num: &[f64], den: &[f64]) -> RatTF {
    RatTF::from_coeffs(num.to_vec(), den.to_vec()).unwrap()
}

fn assert_coeffs(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
    for (a, b) in got.iter().zip(want) {
        assert!((a - b).abs() <= tol, "{got:?} vs {want:?}");
    }
}

fn assert_tf(got: &RatTF, want: &RatTF, tol: f64) {
    assert_coeffs(got.num().coeffs(), want.num().coeffs(), tol);
    assert_coeffs(got.den().coeffs(), want.den().coeffs(), tol);
}

fn ex1() -> (RatTF, RatTF) {
    (
        tf(&[0.0, 0.0, 0.0, 1.0], &[0.05, -0.25, -0.2, 1.0]),
        tf(&[0.0, 0.0, 0.0, 1.0], &[0.01, 0.03, -0.6, 1.0]),
    )
}

fn ex2() -> (RatTF, RatTF) {
    (
        tf(&[2.0, 1.0], &[-0.2, 1.0]),
        tf(&[-2.0, 1.0], &[-0.2, 1.0]),
    )
}

fn grid_values(w: &RatTF) -> Vec<Complex64> {
    w.eval_circle(&grid(FFT_POINTS)).unwrap()
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Keeps the coefficients of `z^0, z^{-1}, ...` of sampled circle values and
/// returns the causal part on the same grid.
fn fft_causal_part(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        *c = if k < n / 2 {
            *c / n as f64
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    planner.plan_fft_forward(n).process(&mut buf);
    buf
}

/// Minimum-phase factor of `|W|²` on the grid via the cepstrum.
fn cepstral_outer(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values
        .iter()
        .map(|v| Complex64::new(v.norm().ln(), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let w = match k {
            0 => 1.0,
            k if k < n / 2 => 2.0,
            _ => 0.0,
        };
        *c *= w / n as f64;
    }
    planner.plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|c| c.exp()).collect()
}

#[test]
fn ex1_channels_are_coprime_and_give_h() {
    let (w1, w2) = ex1();
    assert_tf(
        &w1,
        &tf(&[0.0, 0.0, 0.0, 1.0], &[0.05, -0.25, -0.2, 1.0]),
        0.0,
    );
    let h = w2.div(&w1).unwrap();
    assert_tf(&h, &tf(&[0.5, 1.0], &[0.1, 1.0]), 1e-12);
    assert_tf(&h.mul(&w1).unwrap(), &w2, 1e-12);
    let v = h.eval_circle(&[0.0]).unwrap()[0];
    assert!((v.re - 1.5 / 1.1).abs() < 1e-12 && v.im.abs() < 1e-15);
    let cls = w1.classify().unwrap();
    assert!(cls.causal && cls.stable && cls.minimum_phase);
}

#[test]
fn ex1_spectrum_gives_h() {
    let (w1, w2) = ex1();
    let (s, h) = spectrum(&w1, &w2, &angle_grid(128)).unwrap();
    assert_tf(&h, &tf(&[0.5, 1.0], &[0.1, 1.0]), 1e-10);
    assert!(s.det_phi.iter().all(|d| d.norm() < 1e-10));
}

#[test]
fn ex2_phi11_at_one() {
    let (w1, w2) = ex2();
    let (s, _) = spectrum(&w1, &w2, &[0.0]).unwrap();
    assert!((s.phi11[0].re - 14.0625).abs() < 1e-12);
}

#[test]
fn ex2_evaluation_matches_horner() {
    let (w1, _) = ex2();
    let g = angle_grid(128);
    for (theta, v) in g.iter().zip(w1.eval_circle(&g).unwrap()) {
        let z = Complex64::from_polar(1.0, *theta);
        let want = (z + 2.0) / (z - 0.2);
        assert!((v.norm() - want.norm()).abs() < 1e-12);
    }
}

#[test]
fn impulse_response_by_long_division() {
    let h = tf(&[0.5, 1.0], &[0.1, 1.0]);
    assert_coeffs(
        &impulse_response(&h, 4).unwrap(),
        &[1.0, 0.4, -0.04, 0.004],
        1e-15,
    );
}

#[test]
fn ex2_outer_inner() {
    let (w1, w2) = ex2();
    let oi = outer_inner(&w1).unwrap();
    assert_tf(&oi.outer, &tf(&[1.0, 2.0], &[-0.2, 1.0]), 1e-12);
    assert_tf(&oi.inner, &tf(&[1.0, 0.5], &[0.5, 1.0]), 1e-12);
    let oi2 = outer_inner(&w2).unwrap();
    let g = angle_grid(64);
    for (a, b) in oi2
        .outer
        .eval_circle(&g)
        .unwrap()
        .iter()
        .zip(w2.eval_circle(&g).unwrap())
    {
        assert!((a.norm() - b.norm()).abs() < 1e-10);
    }
    let zeros = oi2.outer.zeros().unwrap();
    assert!(zeros.len() == 1 && (zeros[0].re - 0.5).abs() < 1e-12);
    assert!((oi2.outer.num().leading().abs() - 2.0).abs() < 1e-12);
}

#[test]
fn ex2_inner_factors_are_coprime() {
    let q1 = tf(&[2.0, 1.0], &[1.0, 2.0]);
    let q2 = tf(&[-2.0, 1.0], &[-1.0, 2.0]);
    assert!(inner_gcd(&q1, &q2).unwrap().is_constant());
    assert_tf(&inner_gcd(&q1, &q1).unwrap(), &q1, 1e-12);
}

#[test]
fn inner_gcd_keeps_shared_zero() {
    let c = |x: f64| Complex64::new(x, 0.0);
    let qa = lowrank_core::factorize::blaschke(&[c(-2.0), c(3.0)]).unwrap();
    let qb = lowrank_core::factorize::blaschke(&[c(3.0), c(4.0)]).unwrap();
    let g = inner_gcd(&qa, &qb).unwrap();
    let zeros = g.zeros().unwrap();
    assert_eq!(zeros.len(), 1);
    assert!((zeros[0] - c(3.0)).norm() < 1e-9);
}

#[test]
fn reflection_preserves_magnitude() {
    let d = Poly::new(vec![-2.0, 1.0]);
    let s = stabilize_poly(&d).unwrap();
    assert_coeffs(s.coeffs(), &[-1.0, 2.0], 1e-12);
    let d = Poly::new(vec![1.0, -2.5, 1.0]);
    let s = stabilize_poly(&d).unwrap();
    assert_coeffs(s.coeffs(), &[0.5, -2.0, 2.0], 1e-12);
    for theta in angle_grid(32) {
        let z = Complex64::from_polar(1.0, theta);
        assert!((s.eval(z).norm() - d.eval(z).norm()).abs() < 1e-12);
    }
}

#[test]
fn causal_part_of_two_sided_function() {
    let w = tf(&[1.0], &[1.0, -2.5, 1.0]);
    let p = causal_project(&w).unwrap();
    let l = laurent_coeffs(&w, FFT_POINTS);
    let h = impulse_response(&p, 64).unwrap();
    for k in 0..64 {
        assert!((h[k] - l[k].re).abs() < 1e-8, "k = {k}");
    }
    assert_eq!(causal_project(&p).unwrap(), p);
}

#[test]
fn ex1_predictor_closed_form() {
    let (w1, w2) = ex1();
    let p = wiener_predictor(&w1, &w2).unwrap();
    let (num, den) = p.f_plus.to_delay_form().unwrap();
    assert_coeffs(&num, &[0.2, 0.27, -0.025, -0.005], 1e-10);
    assert_coeffs(&den, &[1.0, 0.5], 1e-10);
    assert!(p.k.is_constant());
    assert!((p.k.value_at_infinity().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn ex1_third_family_member() {
    let (w1, w2) = ex1();
    let h = w2.div(&w1).unwrap();
    // F3 = z⁻¹ F₊ = (0.2z² + 0.25z - 0.05)(z + 0.1) / ((z + 0.5) z³)
    let f3 = RatTF::reduce(
        Poly::new(vec![-0.05, 0.25, 0.2]).mul(&Poly::new(vec![0.1, 1.0])),
        Poly::new(vec![0.5, 1.0]).shift_up(3),
    )
    .unwrap();
    let m = f_family(&h, &w1, &f3.mul(&w1).unwrap()).unwrap();
    assert_tf(&m.f, &f3, 1e-10);
    assert!(m.k.is_constant() && (m.k.value_at_infinity().unwrap() - 1.0).abs() < 1e-10);
    assert!(m.internally_stable);
}

#[test]
fn ex2_predictor_matches_cepstral_oracle() {
    let (w1, w2) = ex2();
    let p = wiener_predictor(&w1, &w2).unwrap();
    let a = grid_values(&w1);
    let b = grid_values(&w2);
    let g2 = cepstral_outer(&b);
    let cross: Vec<Complex64> = grid(FFT_POINTS)
        .iter()
        .zip(a.iter().zip(b.iter().zip(&g2)))
        .map(|(t, (a, (b, g)))| Complex64::from_polar(1.0, *t) * a * b.conj() / g.conj())
        .collect();
    let f_oracle: Vec<Complex64> = fft_causal_part(&cross)
        .iter()
        .zip(&g2)
        .map(|(c, g)| c / g)
        .collect();
    let f = grid_values(&p.f_plus);
    let k = grid_values(&p.k);
    for i in 0..FFT_POINTS {
        let t = 2.0 * PI * i as f64 / FFT_POINTS as f64;
        assert!((f[i] - f_oracle[i]).norm() < 1e-6, "F+ at {t}");
        let k_oracle = a[i] - Complex64::from_polar(1.0, -t) * f_oracle[i] * b[i];
        assert!((k[i] - k_oracle).norm() < 1e-6, "K at {t}");
    }
    assert!(!p.k.is_constant());
}

#[test]
fn predictor_from_reference_estimates() {
    let w1 = tf(&[1.177, 2.666, 1.039], &[-0.0721, 0.3558, 1.0]);
    let w2 = tf(&[-1.177, -1.489, 1.039], &[-0.0721, 0.3558, 1.0]);
    let p = wiener_predictor(&w1, &w2).unwrap();
    let f_ref = tf(&[0.0, 0.3915 * 0.6023, 0.3915], &[-0.2834, 0.0667, 1.0]);
    let k_ref = tf(
        &[-0.0988, 0.4125, 1.7397, 1.039],
        &[0.0361, -0.25, -0.1442, 1.0],
    );
    let g = angle_grid(128);
    for (got, want) in [(&p.f_plus, &f_ref), (&p.k, &k_ref)] {
        for (x, y) in got
            .eval_circle(&g)
            .unwrap()
            .iter()
            .zip(want.eval_circle(&g).unwrap())
        {
            assert!(
                (x - y).norm() <= 5e-3 * y.norm().max(1.0),
                "{got} vs {want}"
            );
        }
    }
}

#[test]
fn ex2_recovery_chain() {
    let g1 = tf(&[1.0, 2.0], &[-0.2, 1.0]);
    let h = tf(&[-2.0, 1.0], &[2.0, 1.0]);
    let r = recover_w1_w2(&g1, &h).unwrap();
    let (w1, w2) = ex2();
    assert_tf(&r.q1, &tf(&[2.0, 1.0], &[1.0, 2.0]), 1e-10);
    assert_tf(&r.w1, &w1, 1e-10);
    assert_tf(&r.w2, &w2, 1e-10);
}

#[test]
fn reference_w1_estimate_is_close() {
    let (w1, _) = ex2();
    let w1_hat = tf(&[1.177, 2.666, 1.039], &[-0.0721, 0.3558, 1.0]);
    let c = bode_compare(&w1, &w1_hat, &angle_grid(128)).unwrap();
    assert!(c.max_rel_err < 0.25, "{}", c.max_rel_err);
}

#[test]
fn deterministic_relation_in_simulated_data() {
    let (w1, w2) = ex1();
    let (y1, y2) = sim_low_rank(&w1, &w2, 500, NoiseSpec::new(1.0, 17), 0).unwrap();
    let hy = filter(&w2.div(&w1).unwrap(), &y1).unwrap();
    let err = y2
        .samples
        .iter()
        .zip(&hy.samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-9, "{err:e}");

    let (y1, y2) = sim_low_rank(&w1, &w2, 500, NoiseSpec::new(1.0, 17), 500).unwrap();
    let fit = fit_relation(&y1, &y2, 1, 1).unwrap();
    assert_coeffs(&fit.a, &[0.1], 1e-10);
    assert_coeffs(&fit.b, &[1.0, 0.5], 1e-10);
    assert!(fit.residual_rms <= 1e-10);
}

#[test]
fn unstable_feedback_channel_is_fitted() {
    let (w1, w2) = ex2();
    let (y1, y2) = sim_low_rank(&w1, &w2, 500, NoiseSpec::new(1.0, 4), 500).unwrap();
    let fit = fit_relation(&y1, &y2, 1, 1).unwrap();
    assert_coeffs(&fit.a, &[2.0], 1e-6);
    assert_coeffs(&fit.b, &[1.0, -2.0], 1e-6);
}

/// Hann-windowed averaged periodogram of a long rank-one run: the two
/// channels are coherent at every frequency.
#[test]
fn sample_spectrum_is_singular() {
    let (w1, w2) = ex1();
    let seg = 256;
    let (y1, y2) = sim_low_rank(&w1, &w2, 1 << 14, NoiseSpec::new(1.0, 23), 500).unwrap();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg);
    let hann: Vec<f64> = (0..seg)
        .map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / seg as f64).cos())
        .collect();
    let mut s = vec![[Complex64::new(0.0, 0.0); 4]; seg];
    for start in (0..y1.len() - seg + 1).step_by(seg) {
        let taper = |y: &[f64]| -> Vec<Complex64> {
            y.iter().zip(&hann).map(|(v, w)| (v * w).into()).collect()
        };
        let mut a = taper(&y1.samples[start..start + seg]);
        let mut b = taper(&y2.samples[start..start + seg]);
        fft.process(&mut a);
        fft.process(&mut b);
        for k in 0..seg {
            s[k][0] += a[k] * a[k].conj();
            s[k][1] += a[k] * b[k].conj();
            s[k][2] += b[k] * a[k].conj();
            s[k][3] += b[k] * b[k].conj();
        }
    }
    let worst = s
        .iter()
        .map(|m| ((m[0] * m[3] - m[1] * m[2]) / (m[0] * m[3])).norm())
        .fold(0.0, f64::max);
    println!("max normalized det {worst:e}");
    assert!(worst <= 1e-3, "{worst:e}");
}
