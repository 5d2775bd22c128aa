use std::f64::consts::PI;

use arrayloc::array::{
    average_saaf, classify_uoa, diameter, enclosing_circle, moments, saaf, saaf_from_moments,
    saaf_ula, uca, ula,
};
use arrayloc::efim::{schur_complement, speb};
use arrayloc::geometry::trace_inverse_monotone_check;
use arrayloc::linalg::sym_eigenvalues;
use arrayloc::signal::{balanced_phase_residual, gaussian_pulse, trms};
use arrayloc::{AntennaArray, ComplexSampleSeries};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn points(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 2..=max)
}

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        &a * a.transpose() + DMatrix::identity(n, n) * 0.05
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn saaf_moment_rewrite(pts in points(16), theta in -PI..PI) {
        let a = AntennaArray::from_body_coords(&pts).unwrap();
        let g = saaf(&a, theta);
        let m = saaf_from_moments(moments(&a), theta);
        prop_assert!((g - m).abs() <= 1e-12 * (1.0 + g));
    }

    #[test]
    fn saaf_closed_forms(n in 2usize..16, d in 0.1..3.0f64, theta in -PI..PI) {
        let g = saaf(&ula(n, d).unwrap(), theta);
        prop_assert!((g - saaf_ula(n, d, theta)).abs() <= 1e-12 * d * d);
        if n >= 3 {
            let g = saaf(&uca(n, d).unwrap(), theta);
            prop_assert!((g - d * d / 8.0).abs() <= 1e-12 * d * d);
        }
    }

    #[test]
    fn average_saaf_bounded_by_diameter(pts in points(16)) {
        let a = AntennaArray::from_body_coords(&pts).unwrap();
        let d = diameter(&a);
        prop_assert!(average_saaf(&a) <= d * d / 8.0 + 1e-12);
    }

    #[test]
    fn enclosing_circle_is_minimal(pts in points(12)) {
        let (c, r) = enclosing_circle(&pts);
        for p in &pts {
            prop_assert!((p.0 - c.0).hypot(p.1 - c.1) <= r * (1.0 + 1e-9) + 1e-12);
        }
        // Brute force: smallest circle through 2 or 3 points that covers all of them.
        let covers = |c: (f64, f64), r: f64| pts.iter().all(|p| (p.0 - c.0).hypot(p.1 - c.1) <= r * (1.0 + 1e-9) + 1e-12);
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let (a, b) = (pts[i], pts[j]);
                let cc = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
                let rr = 0.5 * (a.0 - b.0).hypot(a.1 - b.1);
                if covers(cc, rr) { best = best.min(rr); }
                for k in j + 1..pts.len() {
                    let p = pts[k];
                    let d = 2.0 * (a.0 * (b.1 - p.1) + b.0 * (p.1 - a.1) + p.0 * (a.1 - b.1));
                    if d.abs() < 1e-12 { continue; }
                    let (a2, b2, p2) = (a.0 * a.0 + a.1 * a.1, b.0 * b.0 + b.1 * b.1, p.0 * p.0 + p.1 * p.1);
                    let ux = (a2 * (b.1 - p.1) + b2 * (p.1 - a.1) + p2 * (a.1 - b.1)) / d;
                    let uy = (a2 * (p.0 - b.0) + b2 * (a.0 - p.0) + p2 * (b.0 - a.0)) / d;
                    let rr = (a.0 - ux).hypot(a.1 - uy);
                    if covers((ux, uy), rr) { best = best.min(rr); }
                }
            }
        }
        prop_assert!((r - best).abs() <= 1e-9 * (1.0 + best), "{} vs {}", r, best);
    }

    #[test]
    fn schur_matches_block_inverse(j in spd(5), k in 1usize..4) {
        let keep: Vec<usize> = (0..k).collect();
        let s = schur_complement(&j, &keep).unwrap();
        prop_assert!(!s.pinv_used);
        let inv = j.clone().try_inverse().unwrap();
        let blk = inv.view((0, 0), (k, k)).into_owned().try_inverse().unwrap();
        let err = (&s.matrix - &blk).abs().max();
        prop_assert!(err <= 1e-8 * blk.abs().max());
        // An EFIM never exceeds the corresponding FIM block.
        let a = DMatrix::from_fn(k, k, |r, c| j[(r, c)]);
        let gap = sym_eigenvalues(&(a - &s.matrix));
        prop_assert!(gap.iter().all(|e| *e >= -1e-10));
    }

    #[test]
    fn trace_inverse_is_monotone(a in spd(2), b in spd(2)) {
        let hi = &a + &b;
        let (psd, holds) = trace_inverse_monotone_check(&hi, &a);
        prop_assert!(psd);
        prop_assert!(holds);
        prop_assert!(speb(&hi).value <= speb(&a).value);
    }

    #[test]
    fn trms_matches_pairwise_sum(centre in 1.0..3.0f64, sigma in 0.05..0.4f64, skew in 0.0..0.8f64) {
        let series = ComplexSampleSeries::from_fn(128, 32.0, 0.0, |t| {
            let x = (t - centre) / sigma;
            let y = (t - centre - 0.3) / sigma;
            Complex64::new((-0.5 * x * x).exp() + skew * (-0.5 * y * y).exp(), 0.0)
        });
        let w: Vec<f64> = series.samples.iter().map(|s| s.norm_sqr()).collect();
        let e: f64 = w.iter().sum();
        let mut acc = 0.0;
        for m in 0..w.len() {
            for n in m + 1..w.len() {
                acc += w[m] * w[n] * (series.time(n) - series.time(m)).powi(2);
            }
        }
        let want = (acc / (e * e)).sqrt();
        prop_assert!((trms(&series) - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn centred_real_pulse_has_no_phase_residual(sigma in 0.1..0.3f64, shift in -0.2..0.2f64) {
        let g = gaussian_pulse(128, 32.0, 0.0, 2.0 + shift, sigma);
        prop_assert!(balanced_phase_residual(&g).abs() < 1e-9);
    }
}

#[test]
fn two_element_ula_meets_diameter_bound() {
    let a = ula(2, 1.3).unwrap();
    assert!((average_saaf(&a) - 1.3 * 1.3 / 8.0).abs() < 1e-15);
}

#[test]
fn ucoa_meets_diameter_bound() {
    for n in 3..10 {
        let a = uca(n, 0.9).unwrap();
        assert!(classify_uoa(&a, 1e-12).ucoa);
        assert!((average_saaf(&a) - 0.81 / 8.0).abs() < 1e-15);
    }
}

#[test]
fn chirp_has_phase_residual() {
    let g = gaussian_pulse(128, 32.0, 0.0, 2.0, 0.2);
    let chirp = ComplexSampleSeries::new(
        g.samples
            .iter()
            .enumerate()
            .map(|(n, v)| v * Complex64::from_polar(1.0, 6.0 * (g.time(n) - 2.0).powi(2)))
            .collect(),
        g.sample_rate,
        g.t0,
    )
    .unwrap();
    assert!(balanced_phase_residual(&chirp).abs() > 1e-3);
}
