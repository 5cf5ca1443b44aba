use std::f64::consts::PI;
use std::sync::OnceLock;

use decaylab::applications::{lookup, lorenz_spectrum, zoo};
use decaylab::cone::{cone_check, sample_cone};
use decaylab::dynamics::{birkhoff_letters, compose, BranchWord, ExpandingMap, RoofFunction, RoofKind};
use decaylab::skew::{eta_average, skew_iterate, SkewObservable};
use decaylab::suspension::{correlation_series, LevelQuadrature, LevelRule, ObservableSpec};
use decaylab::transfer::{leading_spectrum, leading_spectrum_with, NormalizedOperator, SpectralData, TwistedOperator};
use decaylab::uni::{admissible_witness, n0_admissible, psi, uni_scan, ConstantsLedger};
use decaylab::{Complex64, GridFunction};
use proptest::prelude::*;

fn maps() -> Vec<ExpandingMap> {
    vec![zoo::doubling_map(), zoo::ternary_map(), zoo::mobius_map(), zoo::geometric_map(0.5).with_truncation(8)]
}

struct Doubling {
    op: TwistedOperator,
    sp: SpectralData,
    ledger: ConstantsLedger,
}

fn doubling() -> &'static Doubling {
    static CELL: OnceLock<Doubling> = OnceLock::new();
    CELL.get_or_init(|| {
        let m = lookup("doubling-quadratic").unwrap();
        let op = TwistedOperator::new(&m.map, &m.roof, 256).unwrap();
        let sp = leading_spectrum_with(&op, &m.map, &m.roof, 0.0).unwrap();
        let scan = uni_scan(&m.map, &m.roof, &[1], 1024, 1e-8).unwrap();
        let w = scan.witness.unwrap();
        let ledger = admissible_witness(&m.map, &m.roof, &sp, &w, 1.0, 1024).unwrap().ledger;
        Doubling { op, sp, ledger }
    })
}

fn series_quadrature() -> &'static LevelQuadrature {
    static CELL: OnceLock<LevelQuadrature> = OnceLock::new();
    CELL.get_or_init(|| {
        let m = lookup("doubling-quadratic").unwrap();
        let f0 = leading_spectrum(&m.map, &m.roof, 0.0, 256).unwrap().density;
        LevelQuadrature::for_horizon(&m.map, &m.roof, &f0, 6.0, LevelRule::default()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_derivative_and_distortion(which in 0usize..4, letters in proptest::collection::vec(0usize..8, 1..6), y in 0.0f64..=1.0) {
        let map = &maps()[which];
        let letters: Vec<usize> = letters.iter().map(|&m| m % map.active_branches()).collect();
        let n = letters.len() as i32;
        let word = BranchWord::new(map, letters).unwrap();
        let (_, d) = word.eval(map, y);
        prop_assert!(d.abs() <= map.c1 * map.rho0.powi(n) * (1.0 + 1e-12));
        let c2 = map.c1 * map.c1 / (1.0 - map.rho0.powf(map.alpha));
        let (lo, hi) = word.image();
        let diam = hi - lo;
        prop_assert!(d.abs() >= (-c2).exp() * diam * (1.0 - 1e-12));
        prop_assert!(d.abs() <= c2.exp() * diam * (1.0 + 1e-12));
    }

    #[test]
    fn birkhoff_cocycle(outer in proptest::collection::vec(0usize..2, 1..5), inner in proptest::collection::vec(0usize..2, 1..5), y in 0.0f64..=1.0) {
        let m = lookup("doubling-quadratic").unwrap();
        let mut joined = outer.clone();
        joined.extend_from_slice(&inner);
        let (gy, _) = compose(&m.map, &inner, y);
        let whole = birkhoff_letters(&m.map, &m.roof, &joined, y).0;
        let split = birkhoff_letters(&m.map, &m.roof, &outer, gy).0 + birkhoff_letters(&m.map, &m.roof, &inner, y).0;
        prop_assert!((whole - split).abs() <= 1e-12);
    }

    #[test]
    fn roof_shift_leaves_psi(a in proptest::collection::vec(0usize..2, 1..5), seed in 0u64..1000, c in -1.5f64..5.0, y in 0.0f64..=1.0) {
        let map = zoo::doubling_map();
        let mut b = a.clone();
        b[(seed as usize) % a.len()] ^= 1;
        let roof = zoo::quadratic_roof();
        let RoofKind::Polynomial { mut coeffs } = roof.kind.clone() else { unreachable!() };
        coeffs[0] += c;
        let shifted = RoofFunction::new(RoofKind::Polynomial { coeffs }, roof.epsilon);
        let w1 = BranchWord::new(&map, a).unwrap();
        let w2 = BranchWord::new(&map, b).unwrap();
        let (p, dp) = psi(&map, &roof, &w1, &w2, y).unwrap();
        let (q, dq) = psi(&map, &shifted, &w1, &w2, y).unwrap();
        prop_assert!((p - q).abs() <= 1e-12);
        prop_assert_eq!(dp, dq);
    }

    #[test]
    fn admissibility_is_monotone(n0 in 1usize..40, extra in 1usize..10) {
        let ledger = &doubling().ledger;
        if n0_admissible(ledger, n0).unwrap().passes() {
            prop_assert!(n0_admissible(ledger, n0 + extra).unwrap().passes());
        }
    }

    #[test]
    fn normalized_operator_is_sup_contracting(b in -150.0f64..150.0, coeffs in proptest::collection::vec(-1.0f64..1.0, 6)) {
        let d = doubling();
        let v = GridFunction::from_fn(256, 1.0, |y| {
            coeffs.chunks(2).enumerate().fold(Complex64::new(0.0, 0.0), |acc, (k, c)| {
                acc + Complex64::new(c[0], c[1]) * Complex64::new(0.0, 2.0 * PI * k as f64 * y).exp()
            })
        });
        let l = NormalizedOperator::new(&d.op, &d.sp, Complex64::new(0.0, b)).unwrap();
        prop_assert!(l.apply(&v).sup_norm() <= v.sup_norm() * (1.0 + 1e-9));
    }

    #[test]
    fn sampled_pairs_are_cone_members(seed in any::<u64>(), b in 1.0f64..200.0) {
        let d = doubling();
        let pair = sample_cone(b, &d.ledger, 256, seed);
        prop_assert!(cone_check(&pair, &d.ledger).member);
    }

    #[test]
    fn skew_projects_onto_base(y in 0.0f64..1.0, z in 0.0f64..=1.0, n in 0usize..12) {
        let m = lookup("doubling-quadratic").unwrap();
        let f = m.skew().unwrap();
        let orbit = skew_iterate(&f, (y, z), n).unwrap();
        let base = m.map.eval_forward(y, n).unwrap();
        prop_assert_eq!(orbit.len(), base.len());
        for ((py, pz), by) in orbit.iter().zip(&base) {
            prop_assert_eq!(py, by);
            prop_assert!((0.0..=1.0).contains(pz));
        }
    }

    #[test]
    fn centering_leaves_series_correlation(cv in -3.0f64..3.0, cw in -3.0f64..3.0, t in 0.0f64..6.0) {
        let q = series_quadrature();
        let v = ObservableSpec::Polynomial { coeffs: vec![0.0, 1.0] }.build(1.0, 0.0);
        let w = ObservableSpec::Cosine { freq: 1.0 }.build(1.0, 0.0);
        let base = correlation_series(q, &v, &w, t).unwrap();
        let moved = correlation_series(q, &v.shifted(cv), &w.shifted(cw), t).unwrap();
        prop_assert!((base - moved).abs() <= 1e-10 * (1.0 + cv.abs() + cw.abs()));
    }

    #[test]
    fn lorenz_roots_and_flags(sigma in 0.1f64..30.0, rho in 0.1f64..60.0, beta in 0.0f64..10.0) {
        let s = lorenz_spectrum(sigma, rho, beta).unwrap();
        prop_assert!((s.lambda_u + s.lambda_ss + sigma + 1.0).abs() <= 1e-12 * (sigma + 1.0));
        prop_assert_eq!(s.lambda_s, -beta);
        prop_assert_eq!(s.divergence, -(sigma + 1.0 + beta));
        let ordering = s.lambda_ss < s.lambda_s && s.lambda_s < 0.0 && -s.lambda_s < s.lambda_u;
        prop_assert_eq!(s.lorenz_like_ordering, ordering);
        prop_assert_eq!(s.strong_dissipativity, s.divergence < 0.0 && s.lambda_u + s.lambda_ss < s.lambda_s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn eta_of_one_is_one(n in 1usize..12, u in 0.0f64..2.0) {
        let m = lookup("doubling-quadratic").unwrap();
        let f = m.skew().unwrap();
        let f0 = GridFunction::constant(64, 1.0, Complex64::new(1.0, 0.0));
        let one = SkewObservable::from_base(&ObservableSpec::Constant { value: 1.0 }.build(1.0, 0.0));
        let avg = eta_average(&f, &f0, &one, u, n, 1e-9).unwrap();
        for k in 0..=64 {
            prop_assert!((avg.at(k as f64 / 64.0) - 1.0).abs() <= 1e-12);
        }
    }
}
