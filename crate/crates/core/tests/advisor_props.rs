mod common;

use common::{argmax, normal, random_model, rng, with_beta};
use delreg_core::advisor::{
    advise, breakpoints, ellipse_axes, f_beta_pattern_a, interval_length_c, interval_length_c_exch,
    vd_pattern_b, ExchangeableModel, Parameter, PatternSpec, Verdict,
};
use delreg_core::asymptotics::v_matrices;
use delreg_core::data::CovarianceModel;
use delreg_core::error::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn exch(p: f64, kappa: f64, s1: f64, s2: f64, s12: f64, s23: f64) -> ExchangeableModel {
    ExchangeableModel {
        p,
        sigma1_sq: s1,
        sigma2_sq: s2,
        sigma12: s12,
        sigma23: s23,
        resid_var: 1.0,
        kappa,
    }
}

const CONFIGS: [(f64, f64, f64, f64, f64, f64); 6] = [
    (3.0, 0.0, 1.0, 1.0, 0.3, 0.2),
    (4.0, 0.5, 1.0, 1.0, 0.35, 0.3),
    (5.0, 0.0, 2.0, 1.0, 0.4, 0.1),
    (3.0, 0.0, 1.0, 1.0, 0.6, 0.5),
    (4.0, 0.0, 1.0, 1.0, 0.5, 0.4),
    (6.0, 1.0, 1.0, 1.0, 0.2, 0.05),
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pattern_a_sign_agrees_with_matrix(seed in any::<u64>(), p in 2usize..6, q1 in 0.3f64..1.0, frac in 0.1f64..0.99) {
        let mut r = rng(seed);
        let m = random_model(&mut r, p);
        let qm = q1 * frac;
        let f = f_beta_pattern_a(&m, q1, qm).unwrap();
        let props = PatternSpec::pattern_a(q1, qm).unwrap().proportions(p + 1).unwrap();
        let vd = v_matrices(&m, &props, 1.0).unwrap().v_d[(0, 0)];
        prop_assert!((f - vd).abs() <= 1e-8 * f.abs().max(vd.abs()).max(1e-12), "{} vs {}", f, vd);
        if vd.abs() > 1e-10 {
            prop_assert_eq!(f > 0.0, vd > 0.0);
        }
    }

    #[test]
    fn pattern_b_never_favours_ac(seed in any::<u64>(), p in 2usize..6, q1 in 0.2f64..1.0, frac in 0.0f64..1.0) {
        let mut r = rng(seed);
        let m = random_model(&mut r, p);
        let qm = q1 + (1.0 - q1) * frac;
        let v = vd_pattern_b(&m, q1, qm).unwrap();
        prop_assert!(v <= 1e-12);
        let props = PatternSpec::pattern_b(q1, qm).unwrap().proportions(p + 1).unwrap();
        let vd = v_matrices(&m, &props, 1.0).unwrap().v_d[(0, 0)];
        prop_assert!((v - vd).abs() <= 1e-8 * v.abs().max(vd.abs()).max(1e-12));
    }

    #[test]
    fn scaling_is_linear(seed in any::<u64>(), p in 2usize..5, t in 0.1f64..3.0) {
        let mut r = rng(seed);
        let m = random_model(&mut r, p);
        // 1/qm - 1/q1 = 0.25 at (1, 0.8); choose qm' so the gap is 0.25 t.
        let base = f_beta_pattern_a(&m, 1.0, 0.8).unwrap();
        let qm = 1.0 / (1.0 + 0.25 * t);
        let scaled = f_beta_pattern_a(&m, 1.0, qm).unwrap();
        prop_assert!((scaled - t * base).abs() <= 1e-10 * base.abs().max(1e-12) * t.max(1.0));
    }
}

#[test]
fn independent_predictors_flip_at_signal_variance() {
    let mut r = rng(11);
    for _ in 0..100 {
        let p = r.random_range(2..6);
        let vars: Vec<f64> = (0..p).map(|_| r.random_range(0.3..3.0)).collect();
        let sx = DMatrix::from_diagonal(&DVector::from_vec(vars.clone()));
        let dir: Vec<f64> = (0..p).map(|_| normal(&mut r)).collect();
        let sig: f64 = (1..p).map(|g| vars[g] * dir[g] * dir[g]).sum();
        let resid_var: f64 = r.random_range(0.2..2.0);
        // Scale β_2..β_p so that Σ σ_g² β_g² = σ² exactly at t = 1.
        let at = |t: f64| {
            let k = t * (resid_var / sig).sqrt();
            let beta: Vec<f64> = (0..p).map(|g| if g == 0 { dir[0] } else { k * dir[g] }).collect();
            let m = CovarianceModel::from_parts(&sx, &DVector::from_vec(beta), resid_var).unwrap();
            f_beta_pattern_a(&m, 0.9, 0.6).unwrap()
        };
        assert!(at(1.0).abs() < 1e-10);
        assert!(at(0.999) > 0.0);
        assert!(at(1.001) < 0.0);
    }
}

#[test]
fn strong_correlation_means_cc_for_every_beta2() {
    let mut r = rng(12);
    for _ in 0..20 {
        let rho: f64 = r.random_range(0.7072..0.99) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let (s1, s2): (f64, f64) = (r.random_range(0.5..2.0), r.random_range(0.5..2.0));
        let s12 = rho * (s1 * s2).sqrt();
        let sx = DMatrix::from_row_slice(2, 2, &[s1, s12, s12, s2]);
        let base = CovarianceModel::from_parts(&sx, &DVector::from_vec(vec![0.3, 0.0]), 1.0)
            .unwrap()
            .with_kappa(r.random_range(-0.4..1.0))
            .unwrap();
        assert_eq!(interval_length_c(&base), Err(Error::EmptyInterval));
        for _ in 0..100 {
            let b2 = 3.0 * normal(&mut r);
            let m = with_beta(&base, &[0.3, b2]);
            assert!(f_beta_pattern_a(&m, 1.0, 0.8).unwrap() < 0.0);
        }
    }
}

#[test]
fn interval_matches_sign_change() {
    let mut r = rng(13);
    for _ in 0..50 {
        let m = random_model(&mut r, 2);
        let Ok(c) = interval_length_c(&m) else { continue };
        let half = c / 2.0;
        let b1 = m.beta()[0];
        let inside = with_beta(&m, &[b1, 0.99 * half]);
        let outside = with_beta(&m, &[b1, -1.01 * half]);
        assert!(f_beta_pattern_a(&inside, 1.0, 0.7).unwrap() > 0.0);
        assert!(f_beta_pattern_a(&outside, 1.0, 0.7).unwrap() < 0.0);
    }
}

#[test]
fn interval_symmetric_and_decreasing_in_kappa() {
    let e = exch(2.0, 0.0, 1.3, 0.9, 0.4, 0.0);
    let c = interval_length_c_exch(&e).unwrap();
    let flipped = interval_length_c_exch(&ExchangeableModel { sigma12: -0.4, ..e }).unwrap();
    assert_eq!(c, flipped);
    let mut prev = f64::INFINITY;
    for i in 0..50 {
        let k = -0.49 + i as f64 * 0.1;
        let v = interval_length_c_exch(&e.with(Parameter::Kappa, k)).unwrap();
        assert!(v < prev);
        prev = v;
    }
}

#[test]
fn uncorrelated_axes_match_root_search() {
    // σ_12' = σ_2'3' = 0: circle, A = B; locate f = 0 along (1, 1) by bisection.
    let e = exch(3.0, 0.0, 1.4, 0.8, 0.0, 0.0);
    let axes = ellipse_axes(&e).unwrap();
    assert!((axes.a - axes.b).abs() < 1e-14);
    let f_at = |t: f64| {
        let s = t / 2f64.sqrt();
        let m = e.to_model(&DVector::from_vec(vec![0.5, s, s])).unwrap();
        f_beta_pattern_a(&m, 1.0, 0.8).unwrap()
    };
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f_at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((lo - axes.a).abs() < 1e-10, "{lo} vs {}", axes.a);
}

#[test]
fn ellipse_membership() {
    let mut r = rng(14);
    for &(p, k, s1, s2, s12, s23) in &CONFIGS {
        let e = exch(p, k, s1, s2, s12, s23);
        let axes = ellipse_axes(&e).unwrap();
        let (u, v) = (1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt());
        for side in [0.0, 1.0] {
            for _ in 0..100 {
                let th: f64 = r.random_range(0.0..std::f64::consts::TAU);
                let s = if side == 0.0 { r.random_range(0.0..0.98) } else { r.random_range(1.02..3.0) };
                let (x, y) = (s * axes.a * th.cos(), s * axes.b * th.sin());
                // x along (1,1)/√2, y along (1,-1)/√2.
                let (b2, b3) = (x * u + y * v, x * u - y * v);
                let mut beta = vec![0.0; p as usize];
                beta[0] = normal(&mut r);
                beta[1] = b2;
                beta[2] = b3;
                let m = e.to_model(&DVector::from_vec(beta)).unwrap();
                let f = f_beta_pattern_a(&m, 1.0, 0.75).unwrap();
                if side == 0.0 {
                    assert!(f > 0.0, "inside point gave {f}");
                } else {
                    assert!(f < 0.0, "outside point gave {f}");
                }
            }
        }
    }
}

#[test]
fn scenario_two_maximum_at_origin() {
    for &(p, k, s1, s2, s12, s23) in &CONFIGS {
        let e = exch(p, k, s1, s2, s12, s23);
        let pu = p as usize;
        let f0 = f_beta_pattern_a(&e.to_model(&DVector::zeros(pu)).unwrap(), 1.0, 0.8).unwrap();
        for i in -10..=10 {
            for j in -10..=10 {
                if i == 0 && j == 0 {
                    continue;
                }
                let mut beta = vec![0.0; pu];
                beta[1] = 0.2 * i as f64;
                beta[2] = 0.2 * j as f64;
                if pu > 3 {
                    beta[3] = 0.1 * (i - j) as f64;
                }
                let f = f_beta_pattern_a(&e.to_model(&DVector::from_vec(beta)).unwrap(), 1.0, 0.8).unwrap();
                assert!(f < f0);
            }
        }
    }
}

#[test]
fn axes_shrink_with_p() {
    for &(_, k, s1, s2, s12, s23) in &CONFIGS {
        let mut prev: Option<(f64, f64)> = None;
        for p in 3..12 {
            let e = exch(p as f64, k, s1, s2, s12, s23);
            let Ok(axes) = ellipse_axes(&e) else { break };
            if let Some((a, b)) = prev {
                assert!(axes.a < a && axes.b < b);
            }
            prev = Some((axes.a, axes.b));
        }
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Check that `m` (if inside the scanned range) is where `g` peaks, and that
/// otherwise the peak is at an end of the range.
fn check_peak(xs: &[f64], g: impl Fn(f64) -> f64, m: Option<f64>, label: &str) {
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let (i, at_end) = argmax(&vals);
    let step = xs[1] - xs[0];
    match m {
        Some(m) if m > xs[0] + 2.0 * step && m < xs[xs.len() - 1] - 2.0 * step => {
            assert!((xs[i] - m).abs() <= 2.0 * step, "{label}: peak {} vs breakpoint {m}", xs[i]);
        }
        _ => assert!(at_end, "{label}: interior peak at {} with no breakpoint inside", xs[i]),
    }
}

#[test]
fn breakpoints_locate_peaks() {
    for &(p, k, s1, s2, s12, s23) in &CONFIGS {
        let e = exch(p, k, s1, s2, s12, s23);

        let bp = breakpoints(&e, Parameter::Sigma23).unwrap();
        let xs = grid(bp.lower, bp.upper, 20_000);
        let a_of = |x: f64| ellipse_axes(&e.with(Parameter::Sigma23, x)).map(|ax| ax.a).unwrap_or(f64::NAN);
        let b_of = |x: f64| ellipse_axes(&e.with(Parameter::Sigma23, x)).map(|ax| ax.b).unwrap_or(f64::NAN);
        check_peak(&xs, a_of, bp.m1, "A vs sigma23");
        // B has no interior peak under the admissibility constraints.
        check_peak(&xs, b_of, None, "B vs sigma23");
        assert!(bp.m3.is_none_or(|m| m <= bp.lower || m >= bp.upper));

        let bp = breakpoints(&e, Parameter::Sigma2Sq).unwrap();
        let xs = grid(bp.lower, bp.lower + 50.0, 50_000);
        let a_of = |x: f64| ellipse_axes(&e.with(Parameter::Sigma2Sq, x)).map(|ax| ax.a).unwrap_or(f64::NAN);
        let b_of = |x: f64| ellipse_axes(&e.with(Parameter::Sigma2Sq, x)).map(|ax| ax.b).unwrap_or(f64::NAN);
        let m2 = bp.m2.filter(|_| bp.con1.unwrap() > 0.0);
        check_peak(&xs, a_of, m2, "A vs sigma2^2");
        check_peak(&xs, b_of, bp.m4, "B vs sigma2^2");
    }
}

#[test]
fn m0_locates_peak_of_c() {
    for (k, s1, s12) in [(0.0, 1.0, 0.4), (1.0, 1.5, 0.3), (-0.3, 0.8, -0.5)] {
        let e = exch(2.0, k, s1, 1.0, s12, 0.0);
        let bp = breakpoints(&e, Parameter::Sigma2Sq).unwrap();
        let xs = grid(bp.lower, bp.lower + 20.0, 40_000);
        let c_of = |x: f64| interval_length_c_exch(&e.with(Parameter::Sigma2Sq, x)).unwrap();
        check_peak(&xs, c_of, bp.m0, "C vs sigma2^2");
    }
}

#[test]
fn advise_general_uses_matrix_route() {
    let mut r = rng(15);
    let m = random_model(&mut r, 3);
    let props = delreg_core::data::ProportionSet::independent(&[0.8, 0.9, 0.7, 0.95]).unwrap();
    let rec = advise(&m, &PatternSpec::general(props.clone()), 500.0, 1).unwrap();
    let rep = v_matrices(&m, &props, 500.0).unwrap();
    assert_eq!(rec.decisive_value, rep.v_d[(1, 1)]);
    let expect = if rep.v_d[(1, 1)] > 0.0 { Verdict::Ac } else { Verdict::Cc };
    assert_eq!(rec.verdict, expect);
}
