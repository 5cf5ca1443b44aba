use std::f64::consts::PI;

use serde::Serialize;

use super::scan::{extend_witness, UniWitness};
use crate::dynamics::{ExpandingMap, RoofFunction};
use crate::error::{Error, Result};
use crate::transfer::{twist_epsilon, SpectralData};

/// Right-hand side of the first admissibility inequality, ¼(2 − 2cos(π/12))^{1/2}.
pub fn large1_bound() -> f64 {
    0.25 * (2.0 - 2.0 * (PI / 12.0).cos()).sqrt()
}

pub fn eta0() -> f64 {
    0.5 * (7f64.sqrt() - 1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsLedger {
    pub alpha: f64,
    pub c1: f64,
    pub rho0: f64,
    pub rho: f64,
    pub c2: f64,
    /// Lasota–Yorke constant, measured separately.
    pub c3: Option<f64>,
    pub c4: f64,
    pub d: f64,
    pub n0: usize,
    /// Δ = 2π/D.
    pub big_delta: f64,
    /// D′ = max{4π/D, 2}.
    pub d_prime: f64,
    pub delta: f64,
    pub eta0: f64,
    pub eta: f64,
    /// Half-width of the admissible twist strip |σ| < ε.
    pub epsilon: f64,
    pub f0_sup: f64,
    pub f0_inv_sup: f64,
    pub f0_holder: f64,
    /// min over the two witness words of inf |h'|.
    pub p_min: f64,
    /// δ′ = δ/(4δ + 6Δ).
    pub delta1: f64,
    /// δ″ = δ′ · inf f₀ / sup f₀.
    pub delta2: f64,
    /// δ‴ = ½ δ″ exp{−(2δ+2Δ)^α K}.
    pub delta3: f64,
    /// K = 2|f₀⁻¹|∞|f₀|α + 2C₂.
    pub k_log: f64,
    pub formulas: Vec<(String, String)>,
}

impl ConstantsLedger {
    pub fn with_c3(mut self, c3: f64) -> Self {
        self.c3 = Some(c3);
        self
    }

    /// Largest δ satisfying the four cancellation constraints, by bisection.
    pub fn delta_supremum(c1: f64, c4: f64, c2: f64, alpha: f64, d: f64) -> f64 {
        let ok = |delta: f64| {
            let a = c1.powf(alpha) * c4 * delta.powf(alpha);
            a < 1.0 / 6.0 && (2.0 / 3.0) * a.exp() < eta0() && delta < 2.0 * PI / d && 2.0 * c2 * delta < PI / 6.0
        };
        let (mut lo, mut hi) = (0.0, 2.0 * PI / d);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Assembles every derived constant from the map, the density f₀ and a UNI witness.
pub fn build_ledger(
    map: &ExpandingMap,
    roof: &RoofFunction,
    spectral: &SpectralData,
    witness: Option<&UniWitness>,
) -> Result<ConstantsLedger> {
    let w = witness.ok_or(Error::NoUniWitness)?;
    if spectral.sigma != 0.0 {
        return Err(Error::SpectralMismatch {
            expected: 0.0,
            found: spectral.sigma,
        });
    }
    let alpha = map.alpha;
    let c1 = map.c1;
    let rho0 = map.rho0;
    let rho = rho0.powf(alpha);
    let c2 = c1 * c1 / (1.0 - rho);
    let f0 = &spectral.density;
    let f0_sup = f0.max_re();
    let f0_inf = f0.min_re();
    let f0_inv_sup = 1.0 / f0_inf;
    let f0_holder = f0.holder_seminorm();
    let c4 = 8.0 * f0_inv_sup * f0_holder * c1 + 5.0 * c2;
    let d = w.d;
    let big_delta = 2.0 * PI / d;
    let d_prime = (4.0 * PI / d).max(2.0);
    let delta = 0.99 * ConstantsLedger::delta_supremum(c1, c4, c2, alpha, d);
    let p_min = w
        .word1
        .derivative_range(map, 1024)
        .0
        .min(w.word2.derivative_range(map, 1024).0);
    let e0 = eta0();
    let eta = e0.max(1.0 - delta * p_min / 3.0);
    let delta1 = delta / (4.0 * delta + 6.0 * big_delta);
    let delta2 = delta1 * f0_inf / f0_sup;
    let k_log = 2.0 * f0_inv_sup * f0_holder + 2.0 * c2;
    let delta3 = 0.5 * delta2 * (-(2.0 * delta + 2.0 * big_delta).powf(alpha) * k_log).exp();
    let formulas = [
        ("rho", "rho0^alpha"),
        ("c2", "C1^2/(1-rho)"),
        ("c3", "measured Lasota-Yorke ratio, at least 1"),
        ("c4", "8|1/f0|_inf |f0|_alpha C1 + 5 C2"),
        ("big_delta", "2 pi / D"),
        ("d_prime", "max(4 pi / D, 2)"),
        ("delta", "0.99 x bisection supremum of the four cancellation constraints"),
        ("eta0", "(sqrt 7 - 1)/2"),
        ("eta", "smallest eta >= eta0 with 3(1-eta)/(delta P) <= 1"),
        ("epsilon", "0.5 inf R eps_roof clipped to (0,1)"),
        ("delta1", "delta/(4 delta + 6 Delta)"),
        ("delta2", "delta1 inf f0 / sup f0"),
        ("delta3", "delta2/2 exp(-(2 delta + 2 Delta)^alpha K)"),
        ("k_log", "2|1/f0|_inf |f0|_alpha + 2 C2"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    Ok(ConstantsLedger {
        alpha,
        c1,
        rho0,
        rho,
        c2,
        c3: None,
        c4,
        d,
        n0: w.n0,
        big_delta,
        d_prime,
        delta,
        eta0: e0,
        eta,
        epsilon: twist_epsilon(map, roof),
        f0_sup,
        f0_inv_sup,
        f0_holder,
        p_min,
        delta1,
        delta2,
        delta3,
        k_log,
        formulas,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Admissibility {
    pub n0: usize,
    pub large1_lhs: f64,
    pub large1_rhs: f64,
    pub large1: bool,
    pub large2_lhs: f64,
    pub large2: bool,
    pub large3_lhs: f64,
    pub large3: bool,
    pub c4_dominates_c3: bool,
    /// Smallest n ≥ n0 passing all three inequalities.
    pub smallest_admissible: usize,
}

impl Admissibility {
    pub fn passes(&self) -> bool {
        self.large1 && self.large2 && self.large3
    }
}

fn inequalities(l: &ConstantsLedger, c3: f64, n: usize) -> (f64, f64, f64) {
    let rn = l.rho.powi(n as i32);
    let ca = l.c1.powf(l.alpha);
    (
        ca * l.c4 * rn * (4.0 * PI / l.d).powf(l.alpha),
        2.0 * rn * (1.0 + ca * l.c4),
        c3 * rn,
    )
}

fn all_pass(l: &ConstantsLedger, c3: f64, n: usize) -> bool {
    let (a, b, c) = inequalities(l, c3, n);
    a <= large1_bound() && b <= 1.0 && c <= 1.0 / 3.0
}

/// Evaluates the three size conditions on n₀ and the C₄ ≥ 6C₃ prerequisite.
pub fn n0_admissible(ledger: &ConstantsLedger, n0: usize) -> Result<Admissibility> {
    let c3 = ledger.c3.ok_or(Error::LedgerIncomplete("c3"))?;
    let (a, b, c) = inequalities(ledger, c3, n0);
    let mut smallest = n0;
    while !all_pass(ledger, c3, smallest) {
        smallest += 1;
        if smallest > n0 + 100_000 {
            return Err(Error::Precondition("no admissible n0".into()));
        }
    }
    Ok(Admissibility {
        n0,
        large1_lhs: a,
        large1_rhs: large1_bound(),
        large1: a <= large1_bound(),
        large2_lhs: b,
        large2: b <= 1.0,
        large3_lhs: c,
        large3: c <= 1.0 / 3.0,
        c4_dominates_c3: ledger.c4 >= 6.0 * c3,
        smallest_admissible: smallest,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibleWitness {
    pub raw: UniWitness,
    pub extended: UniWitness,
    pub ledger: ConstantsLedger,
    pub admissibility: Admissibility,
}

/// Extends a raw witness until its length reaches the smallest admissible n₀ for its own D.
pub fn admissible_witness(
    map: &ExpandingMap,
    roof: &RoofFunction,
    spectral: &SpectralData,
    raw: &UniWitness,
    c3: f64,
    grid: usize,
) -> Result<AdmissibleWitness> {
    let mut current = raw.clone();
    for _ in 0..200 {
        let ledger = build_ledger(map, roof, spectral, Some(&current))?.with_c3(c3);
        let adm = n0_admissible(&ledger, current.n0)?;
        if adm.passes() {
            return Ok(AdmissibleWitness {
                raw: raw.clone(),
                extended: current,
                ledger,
                admissibility: adm,
            });
        }
        current = extend_witness(map, roof, &current, current.n0 + 1, grid)?;
    }
    Err(Error::Precondition("witness extension did not become admissible".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;
    use crate::transfer::leading_spectrum;
    use crate::uni::{uni_scan, UNI_FLOOR, UNI_GRID};

    fn doubling_ledger() -> ConstantsLedger {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let sp = leading_spectrum(&map, &roof, 0.0, 256).unwrap();
        let w = uni_scan(&map, &roof, &[1], UNI_GRID, UNI_FLOOR).unwrap().witness;
        build_ledger(&map, &roof, &sp, w.as_ref()).unwrap()
    }

    #[test]
    fn doubling_quadratic_constants() {
        let l = doubling_ledger();
        assert_eq!(l.c2, 2.0);
        assert!((l.big_delta - 8.0 * PI).abs() < 1e-9);
        assert!((l.eta0 - 0.822875655532295).abs() < 1e-12);
        assert!((l.c4 - 10.0).abs() < 1e-12);
        assert!((l.d_prime - 16.0 * PI).abs() < 1e-8);
        // C4 δ < 1/6 binds: δ = 0.99/60.
        assert!((l.delta - 0.99 / 60.0).abs() < 1e-9);
        assert!(l.eta >= l.eta0 && l.eta < 1.0);
    }

    #[test]
    fn eq_large3_arithmetic() {
        let mut l = doubling_ledger();
        l.c3 = Some(2.0);
        let a1 = n0_admissible(&l, 1).unwrap();
        assert!(!a1.large3);
        assert!((a1.large3_lhs - 1.0).abs() < 1e-15);
        let a3 = n0_admissible(&l, 3).unwrap();
        assert!(a3.large3 && (a3.large3_lhs - 0.25).abs() < 1e-15);
    }

    #[test]
    fn missing_c3_is_reported() {
        let l = doubling_ledger();
        assert!(matches!(n0_admissible(&l, 4), Err(Error::LedgerIncomplete("c3"))));
    }

    #[test]
    fn admissibility_is_monotone() {
        let l = doubling_ledger().with_c3(1.0);
        let first = n0_admissible(&l, 1).unwrap().smallest_admissible;
        for n in first..first + 6 {
            assert!(n0_admissible(&l, n).unwrap().passes());
        }
        assert!(!n0_admissible(&l, first - 1).unwrap().passes());
    }

    #[test]
    fn no_witness_no_ledger() {
        let map = zoo::doubling_map();
        let roof = zoo::linear_roof();
        let sp = leading_spectrum(&map, &roof, 0.0, 64).unwrap();
        assert!(matches!(build_ledger(&map, &roof, &sp, None), Err(Error::NoUniWitness)));
    }
}
