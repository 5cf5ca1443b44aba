use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::grid::GridFunction;
use crate::uni::ConstantsLedger;

/// A (u, v) pair tested against the cone conditions at frequency b.
#[derive(Clone, Debug, Serialize)]
pub struct ConePair {
    pub u: GridFunction,
    pub v: GridFunction,
    pub b: f64,
}

impl ConePair {
    pub fn new(u: GridFunction, v: GridFunction, b: f64) -> Self {
        assert_eq!(u.n(), v.n(), "grid mismatch");
        Self { u, v, b }
    }

    /// (1, v/|v|∞).
    pub fn normalized(v: &GridFunction, b: f64) -> Self {
        let sup = v.sup_norm();
        let scale = if sup > 0.0 { 1.0 / sup } else { 0.0 };
        let u = GridFunction::constant(v.n(), v.alpha(), Complex64::new(1.0, 0.0));
        Self::new(u, v.scale(Complex64::new(scale, 0.0)), b)
    }

    pub fn unit(n: usize, alpha: f64, b: f64) -> Self {
        let one = GridFunction::constant(n, alpha, Complex64::new(1.0, 0.0));
        Self::new(one.clone(), one, b)
    }

    /// ∫ u² dμ.
    pub fn u_mass(&self, f0: &GridFunction) -> f64 {
        self.u.map(|x| x * x).integrate_weighted(f0).re
    }

    /// ∫ |v|² dμ.
    pub fn v_mass(&self, f0: &GridFunction) -> f64 {
        self.v.map(|x| Complex64::new(x.norm_sqr(), 0.0)).integrate_weighted(f0).re
    }
}

/// The four cone conditions; ratios at most 1 mean the condition holds.
#[derive(Clone, Debug, Serialize)]
pub struct ConeReport {
    pub min_u: f64,
    /// max |v|/u.
    pub modulus_ratio: f64,
    /// |log u|_α / (C₄|b|^α).
    pub log_u_ratio: f64,
    /// max |v(x) − v(y)| / (C₄|b|^α u(y)|x − y|^α).
    pub v_ratio: f64,
    pub member: bool,
}

impl ConeReport {
    /// First violated condition, if any.
    pub fn violation(&self) -> Option<&'static str> {
        if self.min_u <= 0.0 {
            Some("u > 0")
        } else if self.modulus_ratio > 1.0 {
            Some("|v| <= u")
        } else if self.log_u_ratio > 1.0 {
            Some("|log u|_alpha <= C4 |b|^alpha")
        } else if self.v_ratio > 1.0 {
            Some("|v(x)-v(y)| <= C4 |b|^alpha u(y) |x-y|^alpha")
        } else {
            None
        }
    }
}

fn pair_ratio(u: &[f64], v: &[Complex64], i: usize, j: usize, h: f64, alpha: f64) -> f64 {
    let dist = ((i as f64 - j as f64).abs() * h).powf(alpha);
    (v[i] - v[j]).norm() / (u[j] * dist)
}

/// Largest v-ratio over node pairs at separation d, in both orders.
fn v_ratio_at(u: &[f64], v: &[Complex64], d: usize, h: f64, alpha: f64) -> f64 {
    (0..u.len() - d)
        .map(|i| pair_ratio(u, v, i + d, i, h, alpha).max(pair_ratio(u, v, i, i + d, h, alpha)))
        .fold(0.0, f64::max)
}

fn report(pair: &ConePair, c4: f64, alpha: f64, full: bool) -> ConeReport {
    let u: Vec<f64> = pair.u.re();
    let v = pair.v.values();
    let min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
    let modulus_ratio = u
        .iter()
        .zip(v)
        .map(|(&a, b)| if a > 0.0 { b.norm() / a } else { f64::INFINITY })
        .fold(0.0, f64::max);
    let bound = c4 * pair.b.abs().powf(alpha);
    if min_u <= 0.0 {
        return ConeReport {
            min_u,
            modulus_ratio,
            log_u_ratio: f64::INFINITY,
            v_ratio: f64::INFINITY,
            member: false,
        };
    }
    let log_u = pair.u.map(|x| Complex64::new(x.re.ln(), 0.0));
    let log_holder = if full {
        log_u.holder_seminorm_full()
    } else {
        log_u.holder_seminorm()
    };
    let n = u.len() - 1;
    let h = 1.0 / n as f64;
    let separations: Vec<usize> = if full {
        (1..=n).collect()
    } else {
        std::iter::successors(Some(1usize), |d| Some(d * 2)).take_while(|&d| d <= n).collect()
    };
    let per_sep: Vec<f64> = separations
        .par_iter()
        .map(|&d| v_ratio_at(&u, v, d, h, alpha))
        .collect();
    let v_ratio = per_sep.into_iter().fold(0.0, f64::max) / bound;
    let log_u_ratio = log_holder / bound;
    let mut rep = ConeReport {
        min_u,
        modulus_ratio,
        log_u_ratio,
        v_ratio,
        member: false,
    };
    rep.member = rep.violation().is_none();
    rep
}

/// Cone membership on node pairs at dyadic separations.
pub fn cone_check(pair: &ConePair, ledger: &ConstantsLedger) -> ConeReport {
    report(pair, ledger.c4, ledger.alpha, false)
}

/// Cone membership over every node pair, O(N²).
pub fn cone_check_full(pair: &ConePair, ledger: &ConstantsLedger) -> ConeReport {
    report(pair, ledger.c4, ledger.alpha, true)
}

/// Oscillation bound on the log-amplitude g.
const MAX_OSC: f64 = 1.0;

fn random_trig(rng: &mut ChaCha8Rng, modes: usize) -> Vec<(usize, f64, f64)> {
    (1..=modes)
        .map(|k| {
            let a: f64 = rng.gen_range(-1.0..1.0) / k as f64;
            let phase: f64 = rng.gen_range(0.0..2.0 * PI);
            (k, a, phase)
        })
        .collect()
}

fn trig_eval(terms: &[(usize, f64, f64)], y: f64) -> f64 {
    terms.iter().map(|&(k, a, p)| a * (2.0 * PI * k as f64 * y + p).cos()).sum()
}

/// Hölder constant bound of a trigonometric sum: min(L|x−y|, osc) ≤ L^α osc^{1−α}|x−y|^α.
fn trig_holder(terms: &[(usize, f64, f64)], alpha: f64) -> f64 {
    let lip: f64 = terms.iter().map(|&(k, a, _)| 2.0 * PI * k as f64 * a.abs()).sum();
    let osc: f64 = 2.0 * terms.iter().map(|t| t.1.abs()).sum::<f64>();
    lip.powf(alpha) * osc.powf(1.0 - alpha)
}

fn scale_terms(terms: &mut [(usize, f64, f64)], factor: f64) {
    for t in terms.iter_mut() {
        t.1 *= factor;
    }
}

/// Random member of the cone: u = e^g, v = u e^{iθ} with band-limited g, θ.
pub fn sample_cone(b: f64, ledger: &ConstantsLedger, n: usize, seed: u64) -> ConePair {
    assert!(b.abs() >= 1.0, "sample_cone needs |b| >= 1");
    let alpha = ledger.alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = ((b.abs() / (2.0 * PI)).floor() as usize).clamp(1, 64);
    let budget = 0.9 * ledger.c4 * b.abs().powf(alpha);
    // |e^x − 1| ≤ c_M |x| for |x| ≤ M.
    let c_m = MAX_OSC.exp_m1() / MAX_OSC;
    let mut g = random_trig(&mut rng, modes);
    let osc: f64 = 2.0 * g.iter().map(|t| t.1.abs()).sum::<f64>();
    if osc > MAX_OSC {
        scale_terms(&mut g, MAX_OSC / osc);
    }
    let hg = trig_holder(&g, alpha);
    if c_m * hg > 0.5 * budget {
        scale_terms(&mut g, 0.5 * budget / (c_m * hg));
    }
    let mut theta = random_trig(&mut rng, modes);
    let ht = trig_holder(&theta, alpha);
    if ht > 0.5 * budget {
        scale_terms(&mut theta, 0.5 * budget / ht);
    }
    let v = GridFunction::from_fn(n, alpha, |y| {
        Complex64::from_polar(trig_eval(&g, y).exp(), trig_eval(&theta, y))
    });
    // |v| ≤ u must survive rounding of the polar form.
    let u = GridFunction::from_real_fn(n, alpha, |y| trig_eval(&g, y).exp()).zip_with(&v, |a, b| {
        Complex64::new(a.re.max(b.norm()), 0.0)
    });
    ConePair::new(u, v, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;
    use crate::transfer::leading_spectrum;
    use crate::uni::{build_ledger, uni_scan, UNI_FLOOR, UNI_GRID};

    fn ledger() -> ConstantsLedger {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let sp = leading_spectrum(&map, &roof, 0.0, 256).unwrap();
        let w = uni_scan(&map, &roof, &[1], UNI_GRID, UNI_FLOOR).unwrap().witness;
        build_ledger(&map, &roof, &sp, w.as_ref()).unwrap()
    }

    #[test]
    fn constants_are_members() {
        let l = ledger();
        let rep = cone_check(&ConePair::unit(128, 1.0, 50.0), &l);
        assert!(rep.member);
        assert_eq!((rep.log_u_ratio, rep.v_ratio), (0.0, 0.0));
    }

    #[test]
    fn modulus_violation_reports_two() {
        let l = ledger();
        let u = GridFunction::constant(64, 1.0, Complex64::new(1.0, 0.0));
        let v = GridFunction::constant(64, 1.0, Complex64::new(2.0, 0.0));
        let rep = cone_check(&ConePair::new(u, v, 50.0), &l);
        assert!(!rep.member);
        assert_eq!(rep.modulus_ratio, 2.0);
        assert_eq!(rep.violation(), Some("|v| <= u"));
    }

    #[test]
    fn sampled_pairs_are_members() {
        let l = ledger();
        for (b, seed) in [(50.0, 0), (1.0, 3), (100.0, 7), (-40.0, 11)] {
            let pair = sample_cone(b, &l, 512, seed);
            let rep = cone_check_full(&pair, &l);
            assert!(rep.member, "b={b} seed={seed}: {rep:?}");
            assert!(rep.v_ratio <= 0.9 + 1e-12 && rep.log_u_ratio <= 0.9);
        }
    }

    #[test]
    fn dyadic_check_never_exceeds_full() {
        let l = ledger();
        let pair = sample_cone(30.0, &l, 256, 5);
        let a = cone_check(&pair, &l);
        let b = cone_check_full(&pair, &l);
        assert!(a.v_ratio <= b.v_ratio + 1e-15 && a.log_u_ratio <= b.log_u_ratio + 1e-15);
    }

    #[test]
    fn normalized_pair_starts_at_one() {
        let l = ledger();
        let v = GridFunction::from_fn(64, 1.0, |y| Complex64::new(3.0 * y, 1.0));
        let p = ConePair::normalized(&v, 50.0);
        assert_eq!(p.u.sup_norm(), 1.0);
        assert!((p.v.sup_norm() - 1.0).abs() < 1e-15);
        assert!((p.u_mass(&GridFunction::constant(64, 1.0, Complex64::new(1.0, 0.0))) - 1.0).abs() < 1e-15);
        assert!(cone_check(&p, &l).modulus_ratio <= 1.0);
    }
}
