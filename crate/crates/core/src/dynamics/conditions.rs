use serde::Serialize;

use super::map::ExpandingMap;
use super::roof::RoofFunction;
use super::word::{compose, enumerate_words};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::quadrature::GaussLegendre;

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub condition: String,
    pub word: Vec<usize>,
    pub y: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub uniform_expansion: bool,
    pub log_derivative_holder: bool,
    pub roof_derivative: bool,
    pub exponential_moment_series: bool,
    pub distortion: bool,
    pub diameter_distortion: bool,
    pub birkhoff_derivative: bool,
    pub roof_moment_finite: bool,
    /// Tightest C1 compatible with the declared ρ0.
    pub measured_c1: f64,
    /// max |h'| over single branches.
    pub measured_rho0: f64,
    /// max |(R_n∘h)'| over the checked words.
    pub measured_c2: f64,
    pub declared_c2: f64,
    /// Σ_h e^{ε|R∘h|}|h'| including the truncation tail.
    pub moment_series: f64,
    pub tail_mass: f64,
    /// ∫ e^{εR} dμ.
    pub roof_moment: f64,
    pub witnesses: Vec<Witness>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.uniform_expansion
            && self.log_derivative_holder
            && self.roof_derivative
            && self.exponential_moment_series
            && self.distortion
            && self.diameter_distortion
            && self.birkhoff_derivative
            && self.roof_moment_finite
    }
}

const REL_TOL: f64 = 1e-12;

/// Checks uniform expansion, log-derivative regularity, roof regularity, the exponential moment
/// series, distortion bounds and ∫e^{εR}dμ on a sample grid of `grid + 1` points per branch.
///
/// `density` is the invariant density on the standard grid; `None` computes it.
pub fn verify_conditions(
    map: &ExpandingMap,
    roof: &RoofFunction,
    grid: usize,
    max_word_length: usize,
    density: Option<&GridFunction>,
) -> Result<ConditionReport> {
    if grid < 2 {
        return Err(Error::Precondition("condition grid needs at least 2 intervals".into()));
    }
    roof.validate(map)?;
    let alpha = map.alpha;
    let c1 = map.c1;
    let rho0 = map.rho0;
    let rho = rho0.powf(alpha);
    let declared_c2 = c1 * c1 / (1.0 - rho);
    let ys: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).collect();
    let k = map.active_branches();
    let mut witnesses = Vec::new();

    let mut measured_rho0: f64 = 0.0;
    let mut c1_needed: f64 = 1.0;
    let worst = |cond: &str, word: &[usize], y: f64, value: f64, bound: f64, w: &mut Vec<Witness>| {
        if value > bound * (1.0 + REL_TOL) + 1e-15 {
            w.push(Witness {
                condition: cond.to_string(),
                word: word.to_vec(),
                y,
                value,
                bound,
            });
            false
        } else {
            true
        }
    };

    let mut ok_ii = true;
    let mut ok_iii = true;
    let mut ok_dist = true;
    for m in 0..k {
        let d: Vec<f64> = ys.iter().map(|&y| map.inverse(m, y).1.abs()).collect();
        let dmax = d.iter().cloned().fold(0.0, f64::max);
        measured_rho0 = measured_rho0.max(dmax);

        let logd = GridFunction::from_real_fn(grid, alpha, |y| map.inverse(m, y).1.abs().ln());
        let holder = logd.holder_seminorm_full();
        c1_needed = c1_needed.max(holder);
        ok_ii &= worst("log_derivative_holder", &[m], 0.0, holder, c1, &mut witnesses);

        let (ri, yi) = ys
            .iter()
            .map(|&y| {
                let (x, dx) = map.inverse(m, y);
                ((roof.eval(m, x).1 * dx).abs(), y)
            })
            .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        c1_needed = c1_needed.max(ri);
        ok_iii &= worst("roof_derivative", &[m], yi, ri, c1, &mut witnesses);

        // |h'x − h'y| ≤ 2 C1 |h'y| |x−y|^α over grid pairs.
        let mut worst_ratio: f64 = 0.0;
        let mut at = 0.0;
        for i in 0..=grid {
            for j in 0..=grid {
                if i == j {
                    continue;
                }
                let r = (d[i] - d[j]).abs() / (d[j] * (ys[i] - ys[j]).abs().powf(alpha));
                if r > worst_ratio {
                    worst_ratio = r;
                    at = ys[j];
                }
            }
        }
        ok_dist &= worst("distortion", &[m], at, worst_ratio, 2.0 * c1, &mut witnesses);
    }

    let mut ok_i = true;
    let mut ok_diam = true;
    let mut ok_birk = true;
    let mut measured_c2: f64 = 0.0;
    let enumerated = enumerate_words(map, roof, 1, None)?;
    let tail_mass = enumerated.tail_mass;
    for n in 1..=max_word_length.max(1) {
        if (k as f64).powi(n as i32) > 4096.0 {
            break;
        }
        let words = enumerate_words(map, roof, n, None)?.words;
        let bound_i = c1 * rho0.powi(n as i32);
        for w in &words {
            let (a, b) = w.image();
            let diam = b - a;
            let mut dmax: f64 = 0.0;
            let mut dmax_at = 0.0;
            let mut lo_ratio = f64::INFINITY;
            let mut hi_ratio: f64 = 0.0;
            let mut bmax: f64 = 0.0;
            let mut bmax_at = 0.0;
            for &y in ys.iter().step_by((grid / 64).max(1)) {
                let d = compose(map, w.letters(), y).1.abs();
                if d > dmax {
                    dmax = d;
                    dmax_at = y;
                }
                lo_ratio = lo_ratio.min(d / diam);
                hi_ratio = hi_ratio.max(d / diam);
                let rd = roof.birkhoff(map, w, y).1.abs();
                if rd > bmax {
                    bmax = rd;
                    bmax_at = y;
                }
            }
            c1_needed = c1_needed.max(dmax / rho0.powi(n as i32));
            measured_c2 = measured_c2.max(bmax);
            ok_i &= worst("uniform_expansion", w.letters(), dmax_at, dmax, bound_i, &mut witnesses);
            let e = declared_c2.exp();
            ok_diam &= worst("diameter_distortion", w.letters(), 0.0, hi_ratio, e, &mut witnesses);
            ok_diam &= worst("diameter_distortion", w.letters(), 0.0, 1.0 / lo_ratio, e, &mut witnesses);
            ok_birk &= worst("birkhoff_derivative", w.letters(), bmax_at, bmax, declared_c2, &mut witnesses);
        }
    }

    let head: f64 = (0..k)
        .map(|m| (roof.epsilon * roof.cell_sup(map, m)).exp() * map.branch_derivative_sup(m))
        .sum();
    let moment_series = head + tail_mass;
    let ok_iv = moment_series.is_finite();
    if !ok_iv {
        witnesses.push(Witness {
            condition: "exponential_moment_series".into(),
            word: vec![k],
            y: 0.0,
            value: moment_series,
            bound: f64::MAX,
        });
    }

    let owned;
    let f0 = match density {
        Some(f) => f,
        None => {
            owned = crate::transfer::leading_spectrum(map, roof, 0.0, 1024)?.density;
            &owned
        }
    };
    let gl = GaussLegendre::new(16);
    let mut roof_moment = 0.0;
    for m in 0..k {
        let (lo, hi) = map.cell(m);
        let panels = 8;
        for p in 0..panels {
            let a = lo + (hi - lo) * p as f64 / panels as f64;
            let b = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
            roof_moment += gl.integrate(a, b, |x| (roof.epsilon * roof.eval(m, x).0).exp() * f0.eval(x).re);
        }
    }
    let ok_moment = roof_moment.is_finite() && ok_iv;

    Ok(ConditionReport {
        uniform_expansion: ok_i,
        log_derivative_holder: ok_ii,
        roof_derivative: ok_iii,
        exponential_moment_series: ok_iv,
        distortion: ok_dist,
        diameter_distortion: ok_diam,
        birkhoff_derivative: ok_birk,
        roof_moment_finite: ok_moment,
        measured_c1: c1_needed,
        measured_rho0,
        measured_c2,
        declared_c2,
        moment_series,
        tail_mass,
        roof_moment,
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;

    #[test]
    fn doubling_quadratic_passes_with_tight_constants() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let rep = verify_conditions(&map, &roof, 64, 6, None).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.witnesses);
        assert_eq!(rep.measured_c1, 1.0);
        assert_eq!(rep.measured_rho0, 0.5);
        assert!(rep.witnesses.is_empty());
        assert!(rep.measured_c2 <= 1.0 + 1e-12);
    }

    #[test]
    fn roof_moment_matches_series_oracle() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let rep = verify_conditions(&map, &roof, 16, 2, None).unwrap();
        // ∫_0^1 e^{0.05 y²} dy = Σ 0.05^k / (k! (2k+1)).
        let mut series = 0.0;
        let mut term = 1.0;
        for k in 0..20 {
            series += term / (2 * k + 1) as f64;
            term *= 0.05 / (k + 1) as f64;
        }
        let oracle = 0.2f64.exp() * series;
        assert!((rep.roof_moment - oracle).abs() < 1e-10, "{} vs {oracle}", rep.roof_moment);
        assert!((rep.roof_moment - 1.2421).abs() < 1e-3);
    }

    #[test]
    fn undersized_c1_fails_with_witness() {
        let mut map = zoo::doubling_map();
        map.c1 = 1.0;
        map.rho0 = 0.4;
        let rep = verify_conditions(&map, &zoo::quadratic_roof(), 32, 3, None).unwrap();
        assert!(!rep.uniform_expansion);
        assert!(rep.witnesses.iter().any(|w| w.condition == "uniform_expansion"));
        assert!(rep.measured_c1 > 1.0);
    }

    #[test]
    fn mobius_map_has_nonzero_distortion() {
        let map = zoo::mobius_map();
        let rep = verify_conditions(&map, &zoo::quadratic_roof(), 128, 5, None).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.witnesses);
        assert!(rep.measured_c1 >= 1.0 && rep.measured_c1 < 1.5);
    }
}
