//! Hand-derived and published reference values, checked through the public API.

use std::f64::consts::PI;

use decaylab::applications::{lookup, lorenz_spectrum, zoo};
use decaylab::dynamics::{verify_conditions, BranchWord};
use decaylab::skew::{contraction_check, default_pairs, skew_iterate, FiberMap, FiberSpace, SkewMap};
use decaylab::suspension::{
    decay_fit, flow, mean_roof_on_grid, sample_mu_r, transform_at, CorrelationCurve, CurveMethod, CurvePoint,
    ObservableSpec, SuspensionPoint, TransformSign, TRANSFORM_PANEL,
};
use decaylab::transfer::{apply_a, apply_p, leading_spectrum, mu_integral};
use decaylab::uni::{build_ledger, eta0, psi, uni_scan};
use decaylab::{Complex64, GridFunction};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn doubling_orbit_and_words() {
    let map = zoo::doubling_map();
    let orbit = map.eval_forward(0.3, 2).unwrap();
    assert_eq!(orbit.len(), 3);
    assert!(close(orbit[1], 0.6, 1e-15) && close(orbit[2], 0.2, 1e-15));
    let w = BranchWord::new(&map, vec![0]).unwrap();
    assert_eq!(w.eval(&map, 0.4), (0.2, 0.5));
    // Letters compose outermost first: [1,0] is h₁∘h₀ and [0,1] is h₀∘h₁.
    let w = BranchWord::new(&map, vec![1, 0]).unwrap();
    assert_eq!(w.eval(&map, 0.0), (0.5, 0.25));
    let w = BranchWord::new(&map, vec![0, 1]).unwrap();
    assert_eq!(w.eval(&map, 0.0), (0.25, 0.25));
}

#[test]
fn quadratic_roof_birkhoff_values() {
    let m = lookup("doubling-quadratic").unwrap();
    let h0 = BranchWord::new(&m.map, vec![0]).unwrap();
    let h1 = BranchWord::new(&m.map, vec![1]).unwrap();
    assert_eq!(m.roof.birkhoff(&m.map, &h0, 0.0), (2.0, 0.0));
    let (r, dr) = m.roof.birkhoff(&m.map, &h1, 1.0);
    // (R∘h₁)'(1) = R'(1)·h₁' = 1·½.
    assert!(close(r, 2.5, 1e-15) && close(dr, 0.5, 1e-15));
    for y in [0.0, 0.2, 0.7, 1.0] {
        let (p, dp) = psi(&m.map, &m.roof, &h0, &h1, y).unwrap();
        assert!(close(p, -(2.0 * y + 1.0) / 8.0, 1e-15));
        assert!(close(dp, -0.25, 1e-15));
    }
}

#[test]
fn conditions_on_doubling_quadratic() {
    let m = lookup("doubling-quadratic").unwrap();
    let rep = verify_conditions(&m.map, &m.roof, 256, 3, None).unwrap();
    assert!(rep.all_pass());
    assert!(close(rep.measured_c1, 1.0, 1e-12));
    assert!(close(rep.measured_rho0, 0.5, 1e-12));
}

#[test]
fn uni_examples() {
    let m = lookup("doubling-quadratic").unwrap();
    let w = uni_scan(&m.map, &m.roof, &[1], 1024, 1e-8).unwrap().witness.unwrap();
    assert_eq!((w.n0, w.d), (1, 0.25));
    let lin = lookup("doubling-linear").unwrap();
    assert!(uni_scan(&lin.map, &lin.roof, &[1, 2, 3], 1024, 1e-8).unwrap().witness.is_none());

    let sp = leading_spectrum(&m.map, &m.roof, 0.0, 512).unwrap();
    let ledger = build_ledger(&m.map, &m.roof, &sp, Some(&w)).unwrap();
    assert!(close(ledger.c2, 2.0, 1e-15));
    assert!(close(ledger.big_delta, 8.0 * PI, 1e-12));
    assert!(close(ledger.eta0, 0.8228756555322954, 1e-15));
    assert_eq!(ledger.eta0, eta0());
}

#[test]
fn transfer_examples() {
    let m = lookup("doubling-quadratic").unwrap();
    let v = GridFunction::from_real_fn(64, 1.0, |y| y);
    let h0 = BranchWord::new(&m.map, vec![0]).unwrap();
    let a = apply_a(&m.map, &m.roof, &h0, Complex64::new(0.0, 0.0), &v);
    let p = apply_p(&m.map, &m.roof, Complex64::new(0.0, 0.0), &v).unwrap();
    for k in 0..=64 {
        let y = k as f64 / 64.0;
        assert!((a.eval(y) - Complex64::new(y / 4.0, 0.0)).norm() <= 1e-14);
        assert!((p.eval(y) - Complex64::new(y / 2.0 + 0.25, 0.0)).norm() <= 1e-14);
    }
    let f0 = leading_spectrum(&m.map, &m.roof, 0.0, 64).unwrap().density;
    assert!(close(mu_integral(&v, &f0).re, 0.5, 1e-12));
    // The trapezoid rule overshoots ∫y²/2 by exactly h²/12.
    assert!(close(mean_roof_on_grid(&m.map, &m.roof, &f0), 13.0 / 6.0 + 1.0 / (12.0 * 64.0 * 64.0), 1e-12));
    assert!(leading_spectrum(&m.map, &m.roof, 0.05, 512).unwrap().lambda < 1.0);
    assert!(leading_spectrum(&m.map, &m.roof, -0.05, 512).unwrap().lambda > 1.0);
}

#[test]
fn suspension_examples() {
    let constant = lookup("doubling-constant").unwrap();
    let (p, visits) = flow(&constant.map, &constant.roof, SuspensionPoint::new(0.3, 0.0), 3.0).unwrap();
    assert_eq!(visits, 1);
    assert!(close(p.y, 0.6, 1e-15) && close(p.u, 1.0, 1e-15));
    let m = lookup("doubling-quadratic").unwrap();
    let (p, visits) = flow(&m.map, &m.roof, SuspensionPoint::new(0.0, 0.0), 3.0).unwrap();
    assert_eq!((p.y, p.u, visits), (0.0, 1.0, 1));

    let f0 = GridFunction::constant(256, 1.0, Complex64::new(1.0, 0.0));
    let samples = sample_mu_r(&m.map, &m.roof, &f0, 13.0 / 6.0, 100_000, 7);
    let (mean, se) = samples.mean_weight();
    assert!((mean - 1.0).abs() <= 3.0 * se);

    let one = ObservableSpec::Constant { value: 1.0 }.build(1.0, 2.0);
    let vs = transform_at(&one, Complex64::new(1.0, 0.0), TransformSign::Plus, 0.5, 2.0);
    let panels = (2.0 / TRANSFORM_PANEL).ceil();
    let simpson = (2.0 / panels).powi(4) / 180.0 * 2.0 * 2f64.exp();
    assert!((vs - Complex64::new(2f64.exp() - 1.0, 0.0)).norm() <= simpson);
}

#[test]
fn synthetic_decay_rate() {
    let points = (0..=60)
        .map(|k| {
            let t = 0.25 * k as f64;
            CurvePoint {
                t,
                estimate: (-0.5 * t).exp() * (1.0 + 0.2 * t.cos()),
                se: 1e-4,
            }
        })
        .collect();
    let fit = decay_fit(&CorrelationCurve::new(CurveMethod::Direct, points)).unwrap();
    assert!(close(fit.rate, 0.5, 0.05), "rate {}", fit.rate);
}

#[test]
fn skew_examples() {
    let m = lookup("doubling-quadratic").unwrap();
    let f = m.skew().unwrap();
    let orbit = skew_iterate(&f, (0.0, 1.0), 2).unwrap();
    assert_eq!(orbit, vec![(0.0, 1.0), (0.0, 0.5), (0.0, 0.25)]);
    let half = SkewMap::new(
        zoo::doubling_map(),
        FiberMap::Affine {
            z_coef: 0.5,
            y_coef: 0.0,
            offset: 0.0,
            space: FiberSpace::Interval,
        },
    )
    .unwrap();
    let rep = contraction_check(&half, &default_pairs(32), &[1, 2, 4, 8, 16]).unwrap();
    assert!(close(rep.gamma0, 0.5, 1e-12) && close(rep.c, 1.0, 1e-10));
}

#[test]
fn lorenz_values() {
    let s = lorenz_spectrum(10.0, 28.0, 8.0 / 3.0).unwrap();
    assert_eq!(s.divergence, -41.0 / 3.0);
    assert_eq!(s.lambda_s, -8.0 / 3.0);
    assert!(close(s.lambda_u, 11.8277, 1e-4) && close(s.lambda_ss, -22.8277, 1e-4));
    assert!(s.lorenz_like_ordering && s.strong_dissipativity);
    let d = lorenz_spectrum(10.0, 1.0, 8.0 / 3.0).unwrap();
    assert_eq!((d.lambda_u, d.lambda_ss), (0.0, -11.0));
    assert!(!d.lorenz_like_ordering);
}
