use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::pair::ConePair;
use crate::dynamics::{BranchWord, ExpandingMap, RoofFunction};
use crate::error::{Error, Result};
use crate::transfer::SpectralData;
use crate::uni::{ConstantsLedger, UniWitness};

/// Half-width of I relative to δ/|b|; keeps the rounded diameter inside [δ/|b|, 2δ/|b|].
const HALF_WIDTH: f64 = 1.0 - 1e-9;

/// One interval I_j in base coordinates, tagged with the winning word (0 → h₁, 1 → h₂).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiInterval {
    pub lo: f64,
    pub hi: f64,
    pub word: usize,
    /// Base point of the sweep step that produced this interval.
    pub y0: f64,
}

impl ChiInterval {
    pub fn diam(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn middle_third(&self) -> (f64, f64) {
        let t = self.diam() / 3.0;
        (self.lo + t, self.hi - t)
    }
}

/// Damping function χ: values in [η, 1], below 1 only on h_m(I_j) for intervals of type h_m.
#[derive(Clone, Debug, Serialize)]
pub struct ChiFunction {
    pub b: f64,
    pub eta: f64,
    pub delta: f64,
    pub big_delta: f64,
    pub intervals: Vec<ChiInterval>,
    /// Gaps J_0, …, J_N between consecutive intervals, including both ends of Y.
    pub gaps: Vec<(f64, f64)>,
    pub words: [Vec<usize>; 2],
    /// sup |χ′| in the original coordinate.
    pub max_slope: f64,
}

#[inline]
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

impl ChiFunction {
    /// χ ≡ 1 (no damping).
    pub fn identity(b: f64, words: [Vec<usize>; 2]) -> Self {
        Self {
            b,
            eta: 1.0,
            delta: 0.0,
            big_delta: 0.0,
            intervals: Vec::new(),
            gaps: vec![(0.0, 1.0)],
            words,
            max_slope: 0.0,
        }
    }

    /// χ(h_m(y)), a function of the base point y.
    pub fn eval_pulled(&self, m: usize, y: f64) -> f64 {
        let idx = self.intervals.partition_point(|i| i.hi < y);
        let Some(iv) = self.intervals.get(idx) else {
            return 1.0;
        };
        if iv.word != m || y < iv.lo {
            return 1.0;
        }
        let third = iv.diam() / 3.0;
        let dip = if y < iv.lo + third {
            smoothstep((y - iv.lo) / third)
        } else if y > iv.hi - third {
            smoothstep((iv.hi - y) / third)
        } else {
            1.0
        };
        1.0 - (1.0 - self.eta) * dip
    }

    /// χ(x) on Y, locating x in the range of h₁ or h₂.
    pub fn eval(&self, map: &ExpandingMap, x: f64) -> Result<f64> {
        for (m, letters) in self.words.iter().enumerate() {
            if letters.is_empty() {
                continue;
            }
            let w = BranchWord::new(map, letters.clone())?;
            let (lo, hi) = w.image();
            if x >= lo && x <= hi {
                let mut y = x;
                for _ in 0..letters.len() {
                    y = map.forward(y)?.0;
                }
                return Ok(self.eval_pulled(m, y));
            }
        }
        Ok(1.0)
    }

    /// Î: middle thirds of every I_j.
    pub fn hat_i(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|i| i.middle_third()).collect()
    }

    /// Ĵ_j: J_j together with the adjacent outer thirds.
    pub fn hat_j(&self) -> Vec<(f64, f64)> {
        let k = self.intervals.len();
        (0..self.gaps.len())
            .map(|j| {
                let lo = if j == 0 { 0.0 } else { self.intervals[j - 1].middle_third().1 };
                let hi = if j == k { 1.0 } else { self.intervals[j].middle_third().0 };
                (lo, hi)
            })
            .collect()
    }

    pub fn structure(&self) -> ChiStructure {
        let ab = self.b.abs();
        let lo = self.delta / ab;
        let hi = 2.0 * self.delta / ab;
        let gap_max = 2.0 * self.big_delta / ab;
        let diam_ok = self
            .intervals
            .iter()
            .all(|i| i.diam() >= lo && i.diam() <= hi);
        let gaps_ok = self.gaps.iter().all(|&(a, b)| b - a > 0.0 && b - a <= gap_max);
        let delta1 = self.delta / (4.0 * self.delta + 6.0 * self.big_delta);
        let hat_i = self.hat_i();
        let hat_j = self.hat_j();
        let min_hat_ratio = hat_i
            .iter()
            .zip(&hat_j)
            .map(|(i, j)| (i.1 - i.0) / (j.1 - j.0))
            .fold(f64::INFINITY, f64::min);
        ChiStructure {
            intervals: self.intervals.len(),
            diam_ok,
            gaps_ok,
            slope_ok: self.max_slope <= ab,
            min_hat_ratio,
            delta1,
            hat_ratio_ok: min_hat_ratio >= delta1,
            max_gap: self.gaps.iter().map(|g| g.1 - g.0).fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiStructure {
    pub intervals: usize,
    pub diam_ok: bool,
    pub gaps_ok: bool,
    pub slope_ok: bool,
    /// min_j diam(Î_j)/diam(Ĵ_j) over j < N.
    pub min_hat_ratio: f64,
    pub delta1: f64,
    pub hat_ratio_ok: bool,
    pub max_gap: f64,
}

impl ChiStructure {
    pub fn all_ok(&self) -> bool {
        self.diam_ok && self.gaps_ok && self.slope_ok && self.hat_ratio_ok
    }
}

/// Everything needed to evaluate A_{s,h,n₀} on the two UNI words.
pub struct CancelContext<'a> {
    pub map: &'a ExpandingMap,
    pub roof: &'a RoofFunction,
    pub spectral: &'a SpectralData,
    pub ledger: &'a ConstantsLedger,
    pub witness: &'a UniWitness,
}

impl CancelContext<'_> {
    pub fn words(&self) -> [&BranchWord; 2] {
        [&self.witness.word1, &self.witness.word2]
    }

    /// (A_{s,h_m,n₀}(f_σ v)(y), A_{σ,h_m,n₀}(f_σ u)(y)).
    pub fn word_terms(&self, m: usize, s: Complex64, pair: &ConePair, y: f64) -> (Complex64, f64) {
        let w = self.words()[m];
        let (x, d) = w.eval(self.map, y);
        let (r, _) = self.roof.birkhoff(self.map, w, y);
        let f = self.spectral.density.eval(x).re;
        let weight = d.abs() * f;
        let a = (-s * r).exp() * weight * pair.v.eval(x);
        let u = (-s.re * r).exp() * weight * pair.u.eval(x).re;
        (a, u)
    }

    /// Case h₁ and case h₂ inequalities at y.
    fn cases(&self, s: Complex64, pair: &ConePair, y: f64) -> (bool, bool) {
        let (a1, u1) = self.word_terms(0, s, pair, y);
        let (a2, u2) = self.word_terms(1, s, pair, y);
        let lhs = (a1 + a2).norm();
        let e0 = self.ledger.eta0;
        (lhs <= e0 * u1 + u2, lhs <= u1 + e0 * u2)
    }
}

struct CaseLattice {
    points: Vec<f64>,
    /// Prefix counts of failures of case h₁ and h₂.
    fail: [Vec<u32>; 2],
}

impl CaseLattice {
    fn build(ctx: &CancelContext, s: Complex64, pair: &ConePair, res: f64) -> Self {
        let count = (1.0 / res).ceil() as usize;
        let n = pair.u.n();
        let mut points: Vec<f64> = (0..=count).map(|i| (i as f64 * res).min(1.0)).collect();
        points.extend((0..=n).map(|k| k as f64 / n as f64));
        points.sort_by(f64::total_cmp);
        points.dedup();
        let flags: Vec<(bool, bool)> = points
            .par_iter()
            .with_min_len(256)
            .map(|&y| ctx.cases(s, pair, y))
            .collect();
        let mut fail = [Vec::with_capacity(points.len() + 1), Vec::with_capacity(points.len() + 1)];
        fail[0].push(0);
        fail[1].push(0);
        for &(c1, c2) in &flags {
            let f1 = fail[0].last().copied().unwrap_or(0) + u32::from(!c1);
            let f2 = fail[1].last().copied().unwrap_or(0) + u32::from(!c2);
            fail[0].push(f1);
            fail[1].push(f2);
        }
        Self { points, fail }
    }

    /// Whether case m holds on every lattice point of [lo, hi].
    fn holds(&self, m: usize, lo: f64, hi: f64) -> bool {
        let i = self.points.partition_point(|&p| p < lo);
        let j = self.points.partition_point(|&p| p <= hi);
        self.fail[m][j] - self.fail[m][i] == 0
    }
}

/// Greedy sweep of base points y₀ producing the interval/type data and χ.
pub fn build_chi(ctx: &CancelContext, s: Complex64, pair: &ConePair) -> Result<ChiFunction> {
    let b = s.im;
    let ab = b.abs();
    let l = ctx.ledger;
    let d = ctx.witness.d;
    if ab <= 4.0 * std::f64::consts::PI / d {
        return Err(Error::Precondition(format!(
            "|b|={ab} not above 4 pi/D={}",
            4.0 * std::f64::consts::PI / d
        )));
    }
    if l.n0 != ctx.witness.n0 {
        return Err(Error::Precondition("ledger and witness disagree on n0".into()));
    }
    let r = HALF_WIDTH * l.delta / ab;
    let reach = l.big_delta / ab;
    let res = l.delta / (8.0 * ab);
    let lattice = CaseLattice::build(ctx, s, pair, res);
    let mut intervals = Vec::new();
    let mut gaps = Vec::new();
    let mut pos = 0.0f64;
    while 1.0 - pos > 2.0 * reach {
        // B_{Δ/|b|}(y₀) lies right of the previous interval's end.
        let y0 = pos + reach + r;
        let first = pos + r + res;
        let last = (y0 + reach - res).min(1.0 - r);
        let mut found = None;
        let mut k = 0usize;
        loop {
            let y1 = first + k as f64 * res;
            if y1 > last {
                break;
            }
            let (lo, hi) = (y1 - r, y1 + r);
            if lattice.holds(0, lo, hi) {
                found = Some((lo, hi, 0));
                break;
            }
            if lattice.holds(1, lo, hi) {
                found = Some((lo, hi, 1));
                break;
            }
            k += 1;
        }
        let (lo, hi, word) = found.ok_or(Error::NoCaseWins { y0 })?;
        gaps.push((pos, lo));
        intervals.push(ChiInterval { lo, hi, word, y0 });
        pos = hi;
    }
    gaps.push((pos, 1.0));
    let words = [
        ctx.witness.word1.letters().to_vec(),
        ctx.witness.word2.letters().to_vec(),
    ];
    let mut chi = ChiFunction {
        b,
        eta: l.eta,
        delta: l.delta,
        big_delta: l.big_delta,
        intervals,
        gaps,
        words,
        max_slope: 0.0,
    };
    let (slope, eta_cap) = slope_profile(ctx, &chi);
    chi.max_slope = slope;
    if slope > ab {
        chi.eta = chi.eta.max(eta_cap);
        if chi.eta >= 1.0 {
            return Err(Error::ChiSlopeExceeded { slope, bound: ab });
        }
        chi.max_slope = slope_profile(ctx, &chi).0;
        if chi.max_slope > ab {
            return Err(Error::ChiSlopeExceeded {
                slope: chi.max_slope,
                bound: ab,
            });
        }
    }
    Ok(chi)
}

/// sup |χ′| and the smallest η that keeps it below |b|.
fn slope_profile(ctx: &CancelContext, chi: &ChiFunction) -> (f64, f64) {
    let ab = chi.b.abs();
    let words = ctx.words();
    let mut worst = 0.0f64;
    let mut eta_cap = 0.0f64;
    for iv in &chi.intervals {
        let third = iv.diam() / 3.0;
        // |h′| on the outer thirds, sampled at 9 points each side.
        let min_deriv = (0..=8)
            .flat_map(|k| {
                let t = k as f64 / 8.0 * third;
                [iv.lo + t, iv.hi - t]
            })
            .map(|y| words[iv.word].eval(ctx.map, y).1.abs())
            .fold(f64::INFINITY, f64::min);
        // Peak slope of the smoothstep is 1.5 per unit of its argument.
        let unit = 1.5 / (third * min_deriv);
        worst = worst.max((1.0 - chi.eta) * unit);
        eta_cap = eta_cap.max(1.0 - ab / unit);
    }
    (worst, eta_cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;
    use crate::cone::sample_cone;
    use crate::grid::GridFunction;
    use crate::transfer::leading_spectrum;
    use crate::uni::{admissible_witness, uni_scan, AdmissibleWitness, UNI_FLOOR};

    struct Setup {
        map: ExpandingMap,
        roof: RoofFunction,
        sp: SpectralData,
        adm: AdmissibleWitness,
    }

    fn setup() -> Setup {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let sp = leading_spectrum(&map, &roof, 0.0, 1024).unwrap();
        let raw = uni_scan(&map, &roof, &[1], 1024, UNI_FLOOR).unwrap().witness.unwrap();
        let adm = admissible_witness(&map, &roof, &sp, &raw, 1.0, 1024).unwrap();
        Setup { map, roof, sp, adm }
    }

    fn ctx(s: &Setup) -> CancelContext<'_> {
        CancelContext {
            map: &s.map,
            roof: &s.roof,
            spectral: &s.sp,
            ledger: &s.adm.ledger,
            witness: &s.adm.extended,
        }
    }

    #[test]
    fn chi_structure_holds_for_sampled_pair() {
        let st = setup();
        let c = ctx(&st);
        let pair = sample_cone(50.0, c.ledger, 1024, 0);
        let chi = build_chi(&c, Complex64::new(0.0, 50.0), &pair).unwrap();
        let s = chi.structure();
        assert!(s.all_ok(), "{s:?}");
        assert!(chi.intervals.iter().all(|i| i.word <= 1));
        for iv in &chi.intervals {
            let (a, b) = iv.middle_third();
            assert!((chi.eval_pulled(iv.word, 0.5 * (a + b)) - chi.eta).abs() < 1e-15);
            assert_eq!(chi.eval_pulled(1 - iv.word, 0.5 * (a + b)), 1.0);
        }
    }

    #[test]
    fn zero_v_takes_first_case_everywhere() {
        let st = setup();
        let c = ctx(&st);
        let u = GridFunction::constant(512, 1.0, Complex64::new(1.0, 0.0));
        let pair = ConePair::new(u, GridFunction::zeros(512, 1.0), 40.0);
        let chi = build_chi(&c, Complex64::new(0.0, 40.0), &pair).unwrap();
        assert!(chi.intervals.iter().all(|i| i.word == 0));
        // Greedy with both cases everywhere: each gap is as short as the lattice allows.
        assert!(chi.gaps[..chi.gaps.len() - 1]
            .iter()
            .all(|g| g.1 - g.0 <= 2.0 * c.ledger.delta / (8.0 * 40.0) + 1e-12));
    }

    #[test]
    fn interval_count_scales_with_b() {
        let st = setup();
        let c = ctx(&st);
        let count = |b: f64| {
            let pair = ConePair::unit(1024, 1.0, b);
            build_chi(&c, Complex64::new(0.0, b), &pair).unwrap().intervals.len() as f64
        };
        let (n1, n2) = (count(60.0), count(240.0));
        // Spacing lies between 2δ/|b| and 2(δ+Δ)/|b|, so the count is linear in |b|.
        let lo = |b: f64| (b / (2.0 * (c.ledger.delta + c.ledger.big_delta)) - 1.0).floor();
        let hi = |b: f64| (b / (2.0 * c.ledger.delta)).ceil();
        assert!(n1 >= lo(60.0) && n1 <= hi(60.0));
        assert!(n2 >= lo(240.0) && n2 <= hi(240.0));
        assert!(n2 > 2.0 * n1);
    }

    #[test]
    fn below_threshold_frequency_is_rejected() {
        let st = setup();
        let c = ctx(&st);
        let pair = ConePair::unit(256, 1.0, 10.0);
        assert!(matches!(
            build_chi(&c, Complex64::new(0.0, 10.0), &pair),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn eval_in_original_coordinates_matches_pullback() {
        let st = setup();
        let c = ctx(&st);
        let pair = ConePair::unit(1024, 1.0, 50.0);
        let chi = build_chi(&c, Complex64::new(0.0, 50.0), &pair).unwrap();
        let iv = chi.intervals[0];
        let y = 0.5 * (iv.lo + iv.hi);
        let w = c.words()[iv.word];
        let x = w.eval(&st.map, y).0;
        assert!((chi.eval(&st.map, x).unwrap() - chi.eval_pulled(iv.word, y)).abs() < 1e-6);
        // Outside both ranges χ is 1.
        assert_eq!(chi.eval(&st.map, 0.5).unwrap(), 1.0);
    }
}
