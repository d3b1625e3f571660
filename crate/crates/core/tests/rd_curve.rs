use divbound::quad::{integrate, Tolerance};
use divbound::rd::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn identities_hold_across_the_grid() {
    for k in 1..=6 {
        for j in -3..=30 {
            let s = 10f64.powi(j);
            let p = rd_point(s, k).unwrap();
            assert!(p.identity_residual() < IDENTITY_TOL, "s=1e{j} k={k}: {}", p.identity_residual());
            assert!(p.d > 0.0 && p.d <= 1.0 / 12.0);
            assert!(p.r >= -1.0 && p.r < 0.0);
        }
    }
}

#[test]
fn high_resolution_constants() {
    let s = 1e8;
    let p = cfg_integrals(s, 1).unwrap();
    assert!(rel(p.c, s.sqrt() / C1) < 1e-3);
    let p = cfg_integrals(s, 2).unwrap();
    assert!(rel(1.0 / p.c, 2.0 / s.sqrt()) < 1e-3);
}

#[test]
fn curve_is_monotone() {
    for k in 1..=6 {
        let pts: Vec<RDPoint> = (-36..=120)
            .map(|j| rd_point(10f64.powf(j as f64 / 4.0), k).unwrap())
            .collect();
        for w in pts.windows(2) {
            assert!(w[1].d < w[0].d, "k={k} D not decreasing at s={}", w[1].s);
            // R + 1 = O(s²) is below double resolution for the first decades.
            assert!(w[1].r >= w[0].r - 1e-14, "k={k} R not increasing at s={}: {} {}", w[1].s, w[0].r, w[1].r);
        }
        // Strictly increasing once R has moved off -1 at double precision.
        for w in pts.windows(2).filter(|w| w[0].s >= 1e-3) {
            assert!(w[1].r > w[0].r);
        }
    }
}

#[test]
fn k1_tracks_one_over_s() {
    let p = rd_point(1e6, 1).unwrap();
    assert!(rel(p.d, 1e-6) < 0.01, "{}", p.d);
}

/// Reference ratios `D/D_asym − 1` from 30-digit quadrature.
#[test]
fn high_resolution_convergence() {
    let cases = [
        (1, 1e6, 2.55e-3),
        (1, 1e8, 2.55e-4),
        (3, 1e6, 0.275),
        (3, 1e8, 0.1173),
        (4, 1e6, 0.0841),
        (4, 1e8, 0.0258),
        (5, 1e6, 0.0430),
        (5, 1e8, 0.01064),
        (6, 1e6, 0.0277),
        (6, 1e8, 0.00591),
    ];
    for (k, s, expect) in cases {
        let p = rd_point(s, k).unwrap();
        let got = p.d / rd_asymptotic(p.r, k, Regime::High).unwrap() - 1.0;
        assert!((got - expect).abs() < 0.01 * expect, "k={k} s={s:e}: {got} vs {expect}");
    }
    let p = rd_point(1e6, 3).unwrap();
    assert!((p.r / p.d + 84.69).abs() < 0.05, "{}", p.r / p.d);
}

#[test]
fn low_resolution_agreement() {
    for (k, expect) in [(1, -7.4e-5), (2, -4.8e-5), (3, -4.0e-5)] {
        let p = rd_point(1e-3, k).unwrap();
        let got = p.d / rd_asymptotic(p.r, k, Regime::Low).unwrap() - 1.0;
        assert!(got.abs() < 0.01);
        assert!((got - expect).abs() < 0.05 * expect.abs(), "k={k}: {got}");
    }
}

#[test]
fn low_resolution_slope() {
    // The true small-s slope of (1/12 − D) against √(1+R) is larger than 1/15.
    for (k, ratio) in [(1, 2.236), (2, 1.936), (3, 1.826)] {
        let p = rd_point(1e-3, k).unwrap();
        let got = (1.0 / 12.0 - p.d) / ((1.0 + p.r).sqrt() / 15.0);
        assert!((got - ratio).abs() < 0.01, "k={k}: {got}");
    }
}

#[test]
fn k2_log_ratio_reference_values() {
    for (s, expect) in [(1e4, 2.4451), (1e8, 1.5728), (1e12, 1.3655)] {
        let got = k2_log_ratio(s).unwrap();
        assert!((got - expect).abs() < 5e-4, "s={s:e}: {got}");
    }
    assert!(k2_log_ratio(5.0).is_err());
}

#[test]
fn rate_inversion_examples() {
    let d = distortion_at_rate(-0.01, 1).unwrap();
    assert!(rel(d, 2.5434e-6) < 1e-3, "{d}");
    assert!(rel(d, 1e-4 / (4.0 * std::f64::consts::PI.powi(2))) < 0.02);
    let d = distortion_at_rate(-0.01, 3).unwrap();
    assert!(rel(d, 1.3479e-4) < 1e-3, "{d}");
    let d = distortion_at_rate(-1.0 + 1e-9, 2).unwrap();
    assert!((d - 1.0 / 12.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn inversion_is_consistent(log_s in -3.0f64..14.0, k in 1usize..7) {
        let p = rd_point(10f64.powf(log_s), k).unwrap();
        let q = solve_rate(p.r, k).unwrap();
        prop_assert!(rel(q.d, p.d) < 1e-6, "s={} k={k}: {} vs {}", p.s, q.d, p.d);
    }
}

/// Parametric solution with `|w|^p` in place of `w²`, used as an oracle for the
/// moment coefficients.
fn moment_point(s: f64, k: usize, p: f64) -> (f64, f64) {
    let e = 1.0 + 1.0 / k as f64;
    let tol = Tolerance::default();
    let l = 0.5 * s.powf(1.0 / p);
    let half = |h: &dyn Fn(f64) -> f64| {
        let head = integrate(h, 0.0, 1.0, tol).unwrap().value;
        let tail = integrate(|u: f64| h(u.exp()) * u.exp(), 0.0, l.ln(), tol).unwrap().value;
        head + tail
    };
    // t = s^{1/p} w
    let sc = s.powf(-1.0 / p);
    let i0 = 2.0 * sc * half(&|t: f64| (1.0 + t.powf(p)).powf(-e));
    let f = 2.0 * sc / s * half(&|t: f64| t.powf(p) * (1.0 + t.powf(p)).powf(-e));
    let g = 2.0 * sc * half(&|t: f64| (1.0 + t.powf(p)).powf(-1.0 / k as f64));
    let c = 1.0 / i0;
    (c * f, -c * g.powi(k as i32 + 1))
}

#[test]
fn moment_oracle_reduces_to_the_quadratic_case() {
    for k in [1, 3] {
        let (d, r) = moment_point(1e6, k, 2.0);
        let p = rd_point(1e6, k).unwrap();
        assert!(rel(d, p.d) < 1e-10 && rel(r, p.r) < 1e-10);
    }
}

#[test]
fn moment_constant_matches_quadrature() {
    for (p, k) in [(2.0, 1), (3.0, 2), (4.0, 3), (2.5, 1)] {
        let spec = MomentSpec::new(p, k).unwrap();
        let e = 1.0 + 1.0 / k as f64;
        let tol = Tolerance::default();
        let head = integrate(|t: f64| (1.0 + t.powf(p)).powf(-e), 0.0, 1.0, tol).unwrap().value;
        // t = 1/v on the tail
        let tail = integrate(|v: f64| (1.0 + v.powf(-p)).powf(-e) / (v * v), 0.0, 1.0, tol).unwrap().value;
        assert!(rel(spec.c().unwrap(), 2.0 * (head + tail)) < 1e-10, "p={p} k={k}");
    }
}

/// Ratio of the `|w|^p` parametric distortion to the asymptotic formula.
#[test]
fn moment_asymptotics_against_parametric_oracle() {
    let cases = [
        (2.0, 1, 1e8, 1.00025),
        (3.0, 2, 1e8, 1.1537),
        (3.0, 2, 1e12, 1.0308),
        (4.0, 3, 1e8, 2.522),
        (4.0, 3, 1e12, 1.501),
        (1.0, 3, 1e8, 1.0000074),
    ];
    for (p, k, s, expect) in cases {
        let spec = MomentSpec::new(p, k).unwrap();
        let (d, r) = moment_point(s, k, p);
        let got = d / moment_rd_asymptotic(&spec, r).unwrap();
        assert!((got - expect).abs() < 2e-3 * expect, "p={p} k={k} s={s:e}: {got}");
    }
    let spec = MomentSpec::new(2.0, 4).unwrap();
    assert_eq!(
        moment_rd_asymptotic(&spec, -0.001).unwrap(),
        rd_asymptotic(-0.001, 4, Regime::High).unwrap()
    );
}
