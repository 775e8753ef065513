mod common;

use std::f64::consts::PI;

use axisheet::curve::{enclosed_volume, reconstruct, Anchor, CurveState};
use axisheet::meshref::{
    analytic_envelope, arclength_coeffs, build_guideline, build_r, tangential_velocity, Guideline,
    GuidelineParams, RFunction,
};
use axisheet::nufft::NufftPlan;
use axisheet::problems::P2Curve;
use axisheet::reparam::{geometric_distance, to_uniform};
use axisheet::spectral;
use proptest::prelude::*;

use common::*;

/// Relative max distance of the uniformized P2 curve from the exact polar curve.
fn p2_uniform_error(n: usize) -> (f64, f64) {
    let c = P2Curve::new(2.0 / 7.0).unwrap();
    let st = c.state(n, 0.0, 0.0).unwrap();
    let anchor = Anchor::Fixed(c.south_pole());
    let u = to_uniform(&st, &reconstruct(&st, anchor).unwrap()).unwrap();
    let g = reconstruct(&u.to_state(0.0, 0.0).unwrap(), anchor).unwrap();
    let (mut er, mut ez) = (0.0_f64, 0.0_f64);
    let (mut sr, mut sz) = (0.0_f64, 0.0_f64);
    for (r, z) in g.r.iter().zip(&g.z) {
        let (re, ze) = c.point(P2Curve::polar_angle(*r, *z));
        er = er.max((r - re).abs());
        ez = ez.max((z - ze).abs());
        sr = sr.max(re.abs());
        sz = sz.max(ze.abs());
    }
    (er / sr, ez / sz)
}

#[test]
fn uniformized_p2_converges_exponentially() {
    let sizes = [32, 64, 96, 128, 160, 192, 256];
    let errs: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let (r, z) = p2_uniform_error(n);
            r.max(z)
        })
        .collect();
    assert!(
        errs[0] > 1e-9,
        "coarse grid should not be resolved yet: {errs:?}"
    );
    assert!(errs[1] < 1e-3 * errs[0], "{errs:?}");
    for (&n, &e) in sizes.iter().zip(&errs) {
        if n >= 160 {
            assert!(e <= 1e-13, "N={n}: {e:e}");
        }
    }
}

#[test]
fn coefficients_do_not_depend_on_parametrization() {
    let n = 128;
    let c = P2Curve::new(2.0 / 7.0).unwrap();
    let a = c.state(n, 0.0, 0.0).unwrap();
    let b = c.state(n, 0.35, 0.0).unwrap();
    let plan = NufftPlan::new(1e-15, 128).unwrap();
    let ka = reconstruct(&a, Anchor::Fixed(0.0)).unwrap().kappa_z;
    let kb = reconstruct(&b, Anchor::Fixed(0.0)).unwrap().kappa_z;
    let ca = arclength_coeffs(&ka, &a, 8 * n, &plan).unwrap();
    let cb = arclength_coeffs(&kb, &b, 8 * n, &plan).unwrap();
    for k in -63..64 {
        assert!((ca.coeff(k) - cb.coeff(k)).norm() < 1e-10, "k={k}");
    }
}

#[test]
fn pulse_envelope_has_one_bump_per_pulse() {
    let n = 1024;
    let f: Vec<f64> = grid(n)
        .iter()
        .map(|&x| {
            let (c1, c2, w) = (PI / 2.0, 1.5 * PI, 16.0);
            (-64.0 * (x - c1).powi(2)).exp() * (w * (x - c1)).sin()
                + (-64.0 * (x - c2).powi(2)).exp() * (w * (x - c2)).cos()
        })
        .collect();
    let er = analytic_envelope(&f).unwrap();
    assert!(er.iter().all(|v| *v >= 1.0));
    // crossings are counted on the unregularized envelope, since the regularized one
    // never drops below 1
    let e: Vec<f64> = er.iter().map(|v| (v * v - 1.0).max(0.0).sqrt()).collect();
    let half = e.iter().cloned().fold(0.0, f64::max) / 2.0;
    let crossings = (0..n)
        .filter(|&j| (e[j] - half).signum() != (e[(j + 1) % n] - half).signum())
        .count();
    assert_eq!(crossings, 4);
}

#[test]
fn guideline_is_parametrization_blind() {
    let n = 128;
    let c = P2Curve::new(2.0 / 7.0).unwrap();
    let p = GuidelineParams::defaults(n);
    let plan = p.plan().unwrap();
    let gl = |warp: f64| {
        let st = c.state(n, warp, 0.0).unwrap();
        let g = reconstruct(&st, Anchor::Fixed(0.0)).unwrap();
        build_guideline(&st, &g, &p, &plan).unwrap()
    };
    let a = gl(0.0);
    let b = gl(0.35);
    assert!(max_abs_diff(&a.gl_uniform, &b.gl_uniform) < 1e-8);
    assert!(a.gl_at_nodes.iter().all(|v| *v >= 1.0));
}

#[test]
fn uniformization_preserves_length_and_volume() {
    let c = P2Curve::new(0.3).unwrap();
    let st = c.state(128, 0.3, 0.0).unwrap();
    let g = reconstruct(&st, Anchor::Fixed(0.0)).unwrap();
    let u = to_uniform(&st, &g).unwrap();
    assert!((u.l_p - g.l_p).abs() < 1e-12 * g.l_p);
    let gu = reconstruct(&u.to_state(0.0, 0.0).unwrap(), Anchor::Fixed(0.0)).unwrap();
    let (v0, v1) = (enclosed_volume(&g).unwrap(), enclosed_volume(&gu).unwrap());
    assert!((v0 - v1).abs() < 1e-10 * v0);
}

#[test]
fn distance_ignores_parametrization() {
    let c = P2Curve::new(2.0 / 7.0).unwrap();
    let a = c.state(128, 0.0, 0.0).unwrap();
    let b = c.state(128, 0.35, 0.0).unwrap();
    assert!(geometric_distance(&a, &b).unwrap() <= 1e-10);
}

#[test]
fn distance_is_a_pseudometric() {
    let states: Vec<CurveState> = [0.1, 0.2, 0.25]
        .iter()
        .map(|&e| P2Curve::new(e).unwrap().state(64, 0.2, 0.0).unwrap())
        .collect();
    let d = |i: usize, j: usize| geometric_distance(&states[i], &states[j]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert!((d(i, j) - d(j, i)).abs() < 1e-12);
            for k in 0..3 {
                assert!(d(i, k) <= d(i, j) + d(j, k) + 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn density_is_normalized_and_floored(
        amp in 0.0f64..5.0, k in 1usize..6, t in 0.0f64..5.0, delta in 0.01f64..0.99,
    ) {
        let n = 64;
        let gl = Guideline {
            gl_at_nodes: grid(n).iter().map(|a| 1.0 + amp * (1.0 + (k as f64 * a).cos())).collect(),
            gl_uniform: vec![],
            l_p: 2.0 * PI,
        };
        let p = GuidelineParams { delta_r: delta, ..GuidelineParams::defaults(n) };
        let r = build_r(&gl, t, &p).unwrap();
        prop_assert!((spectral::integral_to_pi(&r).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(r.iter().all(|v| *v >= delta / PI - 1e-15));
    }

    #[test]
    fn tangential_velocity_vanishes_at_poles(
        seed in 0u64..1000, tau in 1e-4f64..1.0, eps in 0.0f64..0.3,
    ) {
        use rand::Rng;
        let n = 64;
        let mut rng = rng(seed);
        let st = P2Curve::new(eps).unwrap().state(n, 0.2, 0.0).unwrap();
        let g = reconstruct(&st, Anchor::Fixed(0.0)).unwrap();
        // even random fields about alpha = pi
        let even = |rng: &mut rand_chacha::ChaCha8Rng, base: f64| -> Vec<f64> {
            let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-0.1..0.1)).collect();
            grid(n).iter().map(|a| base + c.iter().enumerate().map(|(m, c)| c * (m as f64 * a).cos()).sum::<f64>()).collect()
        };
        let unit = |f: Vec<f64>| -> Vec<f64> {
            let s = spectral::integral_to_pi(&f).unwrap();
            f.into_iter().map(|v| v / s).collect()
        };
        let u = even(&mut rng, 0.0);
        let now = unit(even(&mut rng, 1.0 / PI));
        let past = unit(even(&mut rng, 1.0 / PI));
        let rf = RFunction::new(now, Some(&past), tau).unwrap();
        let v = tangential_velocity(&g, &u, &rf).unwrap();
        let scale = max_abs(&rf.drdt).max(1.0);
        prop_assert!(v[0].abs() < 1e-12 * scale);
        prop_assert!(v[n / 2].abs() < 1e-12 * scale, "V(pi) = {:e}", v[n / 2]);
    }
}

#[test]
fn volume_of_uniformized_curve_matches_polar_formula() {
    let c = P2Curve::new(2.0 / 7.0).unwrap();
    let st = c.state(192, 0.0, 0.0).unwrap();
    let g = reconstruct(&st, Anchor::Fixed(0.0)).unwrap();
    let u = to_uniform(&st, &g).unwrap().to_state(0.0, 0.0).unwrap();
    let gu = reconstruct(&u, Anchor::Fixed(0.0)).unwrap();
    assert!((enclosed_volume(&gu).unwrap() - c.volume()).abs() < 1e-12);
}
