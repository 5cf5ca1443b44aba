use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{ExpandingMap, RoofFunction};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::quadrature::{simpson, GaussLegendre};
use crate::stats::batch_standard_error;
use crate::transfer::TwistedOperator;

use super::correlation::{mu_r_integral, HEIGHT_ORDER, HEIGHT_PANEL};
use super::levels::{ordered_sum, LevelQuadrature};
use super::observable::Observable;
use super::sampling::MuRSamples;

/// Simpson panel length for the u-integrals of v_s and w_s.
pub const TRANSFORM_PANEL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformSign {
    /// v_s = ∫ e^{su} v du.
    Plus,
    /// w_s = ∫ e^{−su} w du.
    Minus,
}

impl TransformSign {
    fn factor(self) -> f64 {
        match self {
            TransformSign::Plus => 1.0,
            TransformSign::Minus => -1.0,
        }
    }
}

/// ∫_0^{R} e^{±su} v(y,u) du for a point y with roof value r.
pub fn transform_at(v: &Observable, s: Complex64, sign: TransformSign, y: f64, r: f64) -> Complex64 {
    let k = s * sign.factor();
    let panels = (r / TRANSFORM_PANEL).ceil() as usize;
    simpson(0.0, r, panels, |u| (k * u).exp() * v.eval(y, u))
}

/// v_s or w_s on a grid of n intervals.
pub fn observable_transform(
    map: &ExpandingMap,
    roof: &RoofFunction,
    v: &Observable,
    s: Complex64,
    sign: TransformSign,
    n: usize,
) -> Result<GridFunction> {
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    out.par_iter_mut().enumerate().for_each(|(k, o)| {
        let y = k as f64 / n as f64;
        *o = transform_at(v, s, sign, y, roof.value_at(map, y));
    });
    let growth = (sign.factor() * s.re).max(0.0);
    for (k, o) in out.iter().enumerate() {
        let r = roof.value_at(map, k as f64 / n as f64);
        let bound = r * v.sup * (growth * r).exp();
        if o.norm() > bound * (1.0 + 1e-9) + 1e-300 {
            return Err(Error::Precondition(format!(
                "|transform| {} exceeds R|v| bound {bound} at node {k}",
                o.norm()
            )));
        }
    }
    Ok(GridFunction::new(out, map.alpha))
}

#[derive(Clone, Debug, Serialize)]
pub struct LaplaceReport {
    pub s: Complex64,
    pub value: Complex64,
    pub j0: Complex64,
    /// C|v|∞|w|∞ with C = ∫ R²/2 · e^{max(0,−Re s)R} dμ / ∫R dμ.
    pub j0_bound: f64,
    pub j0_bound_holds: bool,
    /// |Ĵ_n| for n = 1..=N.
    pub term_norms: Vec<f64>,
    pub last_term: f64,
}

/// Data shared across s values.
pub struct LaplaceSetup<'a> {
    pub map: &'a ExpandingMap,
    pub roof: &'a RoofFunction,
    pub op: &'a TwistedOperator,
    /// Invariant density on the operator grid.
    pub f0: &'a GridFunction,
    /// Level-0 quadrature for Ĵ₀ and the means.
    pub base: &'a LevelQuadrature,
}

fn gl_complex(gl: &GaussLegendre, a: f64, b: f64, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let panels = ((b - a) / HEIGHT_PANEL).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, wt) in gl.on(lo, lo + h) {
            acc += f(x) * wt;
        }
    }
    acc
}

/// ρ̂(s) = Ĵ₀(s) + Σ_{n=1}^N Ĵ_n(s) with Ĵ_n = ∫ P_sⁿ(f₀v_s)·w_s dLeb / ∫R dμ.
pub fn laplace_rho(setup: &LaplaceSetup, v: &Observable, w: &Observable, s: Complex64, n_terms: usize, tol: f64) -> Result<LaplaceReport> {
    if n_terms == 0 {
        return Err(Error::Precondition("laplace_rho needs N >= 1".into()));
    }
    let q = setup.base;
    let norm = ordered_sum(&q.levels[0], |p| p.weight * p.ry);
    let vc = v.shifted(mu_r_integral(q, v));
    let wc = w.shifted(mu_r_integral(q, w));
    let gl = GaussLegendre::new(HEIGHT_ORDER);
    let j0_sum = |p: &super::levels::LevelNode| -> Complex64 {
        let inner = |u: f64| gl_complex(&gl, u, p.ry, |tau| (-s * (tau - u)).exp() * wc.eval(p.y, tau));
        gl_complex(&gl, 0.0, p.ry, |u| inner(u) * vc.eval(p.y, u)) * p.weight
    };
    let re = ordered_sum(&q.levels[0], |p| j0_sum(p).re);
    let im = ordered_sum(&q.levels[0], |p| j0_sum(p).im);
    let j0 = Complex64::new(re, im) / norm;
    let growth = (-s.re).max(0.0);
    let c = ordered_sum(&q.levels[0], |p| p.weight * 0.5 * p.ry * p.ry * (growth * p.ry).exp()) / norm;
    let j0_bound = c * vc.sup * wc.sup;

    let n = setup.op.n();
    let w_s = observable_transform(setup.map, setup.roof, &wc, s, TransformSign::Minus, n)?;
    let f0 = setup.f0;
    let roof = setup.roof;
    let mut g = setup
        .op
        .apply_fn(s, |m, x| f0.eval(x) * transform_at(&vc, s, TransformSign::Plus, x, roof.eval(m, x).0));
    let kernel = setup.op.kernel(s);
    let mut value = j0;
    let mut term_norms = Vec::with_capacity(n_terms);
    for k in 1..=n_terms {
        if k > 1 {
            g = kernel.apply(&g);
        }
        let term = g.integrate_product_on(&w_s, 0.0, 1.0) / norm;
        term_norms.push(term.norm());
        value += term;
    }
    let last_term = *term_norms.last().unwrap();
    if last_term > tol {
        return Err(Error::SeriesNotSettled {
            last_term,
            tolerance: tol,
        });
    }
    Ok(LaplaceReport {
        s,
        value,
        j0,
        j0_bound,
        j0_bound_holds: j0.norm() <= j0_bound,
        term_norms,
        last_term,
    })
}

/// MC estimate of ∫_0^T e^{−st} ρ(t) dt computed per sample along the orbit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DirectLaplace {
    pub s: Complex64,
    pub horizon: f64,
    pub estimate: Complex64,
    pub se: f64,
}

/// Horizon T with e^{−Re s·T} = 1e-8.
pub fn default_horizon(s: Complex64) -> f64 {
    8.0 * std::f64::consts::LN_10 / s.re
}

fn orbit_transform(map: &ExpandingMap, roof: &RoofFunction, w: &Observable, s: Complex64, y0: f64, u0: f64, horizon: f64, gl: &GaussLegendre) -> Result<Complex64> {
    let (mut y, mut u, mut t0) = (y0, u0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let m = map.locate(y).map_err(|_| Error::OrbitHitsBoundary {
            start: y0,
            iterate: 0,
            value: y,
        })?;
        let len = roof.eval(m, y).0 - u;
        let end = (t0 + len).min(horizon);
        let (yy, uu, tt) = (y, u, t0);
        acc += gl_complex(gl, t0, end, |tau| (-s * tau).exp() * w.eval(yy, uu + tau - tt));
        if t0 + len >= horizon {
            return Ok(acc);
        }
        t0 += len;
        y = map.forward(y)?.0;
        u = 0.0;
    }
}

pub fn laplace_direct(
    map: &ExpandingMap,
    roof: &RoofFunction,
    v: &Observable,
    w: &Observable,
    s: Complex64,
    samples: &MuRSamples,
    horizon: f64,
) -> Result<DirectLaplace> {
    if s.re <= 0.0 {
        return Err(Error::Precondition("direct transform needs Re s > 0".into()));
    }
    let gl = GaussLegendre::new(HEIGHT_ORDER);
    // (Σw, Σw·v, Σw·L, Σw·v·L) per batch.
    let per_batch: Vec<(f64, f64, Complex64, Complex64)> = samples
        .batches
        .par_iter()
        .map(|batch| {
            let mut acc = (0.0, 0.0, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for smp in batch {
                let vx = v.eval(smp.point.y, smp.point.u);
                let l = orbit_transform(map, roof, w, s, smp.point.y, smp.point.u, horizon, &gl)?;
                acc.0 += smp.weight;
                acc.1 += smp.weight * vx;
                acc.2 += l * smp.weight;
                acc.3 += l * (smp.weight * vx);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let cov = |b: &(f64, f64, Complex64, Complex64)| b.3 / b.0 - b.2 / b.0 * (b.1 / b.0);
    let mut pooled = (0.0, 0.0, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for b in &per_batch {
        pooled.0 += b.0;
        pooled.1 += b.1;
        pooled.2 += b.2;
        pooled.3 += b.3;
    }
    let used: Vec<Complex64> = per_batch.iter().filter(|b| b.0 > 0.0).map(cov).collect();
    let se_re = batch_standard_error(&used.iter().map(|c| c.re).collect::<Vec<_>>());
    let se_im = batch_standard_error(&used.iter().map(|c| c.im).collect::<Vec<_>>());
    Ok(DirectLaplace {
        s,
        horizon,
        estimate: cov(&pooled),
        se: se_re.hypot(se_im),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;
    use crate::suspension::levels::LevelRule;
    use crate::suspension::observable::{identity_observable, ObservableSpec};

    fn uniform(n: usize) -> GridFunction {
        GridFunction::constant(n, 1.0, Complex64::new(1.0, 0.0))
    }

    #[test]
    fn transform_of_one() {
        let (map, roof) = (zoo::doubling_map(), zoo::quadratic_roof());
        let one = ObservableSpec::Constant { value: 1.0 }.build(1.0, 2.5);
        let g = observable_transform(&map, &roof, &one, Complex64::new(0.0, 0.0), TransformSign::Plus, 64).unwrap();
        for k in 0..=64 {
            let y = k as f64 / 64.0;
            assert!((g.values()[k].re - roof.value_at(&map, y)).abs() < 1e-13);
        }
        let c = zoo::constant_roof();
        let g = observable_transform(&map, &c, &one, Complex64::new(1.0, 0.0), TransformSign::Plus, 8).unwrap();
        let exact = 1f64.exp().powi(2) - 1.0;
        assert!(g.values().iter().all(|x| (x.re - exact).abs() < 1e-6 * exact));
    }

    #[test]
    fn transform_of_zero() {
        let (map, roof) = (zoo::doubling_map(), zoo::quadratic_roof());
        let zero = ObservableSpec::Constant { value: 0.0 }.build(1.0, 2.5);
        let g = observable_transform(&map, &roof, &zero, Complex64::new(0.3, 2.0), TransformSign::Minus, 16).unwrap();
        assert_eq!(g.sup_norm(), 0.0);
    }

    fn constant_roof_closed_form(s: f64) -> f64 {
        // v = w = y, R ≡ 2, Lebesgue: covariances 2^{-n}/12.
        let a = ((2.0 * s).exp() - 1.0) / s;
        let b = (1.0 - (-2.0 * s).exp()) / s;
        let j0 = (2.0 / s - b / s) / 24.0;
        let ratio = 0.5 * (-2.0 * s).exp();
        j0 + a * b / 24.0 * ratio / (1.0 - ratio)
    }

    #[test]
    fn constant_roof_factorizes() {
        let (map, roof) = (zoo::doubling_map(), zoo::constant_roof());
        let f0 = uniform(256);
        let op = TwistedOperator::new(&map, &roof, 256).unwrap();
        let base = LevelQuadrature::new(&map, &roof, &f0, 0, LevelRule::default()).unwrap();
        let setup = LaplaceSetup {
            map: &map,
            roof: &roof,
            op: &op,
            f0: &f0,
            base: &base,
        };
        let v = identity_observable();
        for s in [0.3, 0.5, 1.0] {
            let rep = laplace_rho(&setup, &v, &v, Complex64::new(s, 0.0), 40, 1e-9).unwrap();
            let exact = constant_roof_closed_form(s);
            assert!((rep.value.re - exact).abs() < 1e-6 * exact, "s={s}: {} vs {exact}", rep.value);
            assert!(rep.value.im.abs() < 1e-14);
            assert!(rep.j0_bound_holds);
        }
    }

    #[test]
    fn zero_observable_gives_zero() {
        let (map, roof) = (zoo::doubling_map(), zoo::quadratic_roof());
        let f0 = uniform(128);
        let op = TwistedOperator::new(&map, &roof, 128).unwrap();
        let base = LevelQuadrature::new(&map, &roof, &f0, 0, LevelRule::default()).unwrap();
        let setup = LaplaceSetup {
            map: &map,
            roof: &roof,
            op: &op,
            f0: &f0,
            base: &base,
        };
        let zero = ObservableSpec::Constant { value: 0.0 }.build(1.0, 2.5);
        let rep = laplace_rho(&setup, &zero, &identity_observable(), Complex64::new(0.5, 1.0), 10, 1.0).unwrap();
        assert_eq!(rep.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn unsettled_series_is_reported() {
        let (map, roof) = (zoo::doubling_map(), zoo::quadratic_roof());
        let f0 = uniform(128);
        let op = TwistedOperator::new(&map, &roof, 128).unwrap();
        let base = LevelQuadrature::new(&map, &roof, &f0, 0, LevelRule::default()).unwrap();
        let setup = LaplaceSetup {
            map: &map,
            roof: &roof,
            op: &op,
            f0: &f0,
            base: &base,
        };
        let v = identity_observable();
        let r = laplace_rho(&setup, &v, &v, Complex64::new(0.3, 0.0), 1, 1e-12);
        assert!(matches!(r, Err(Error::SeriesNotSettled { .. })));
    }

    #[test]
    fn direct_transform_matches_closed_form() {
        let (map, roof) = (zoo::doubling_map(), zoo::constant_roof());
        let f0 = uniform(256);
        let samples = crate::suspension::sampling::sample_mu_r(&map, &roof, &f0, 2.0, 20_000, 2);
        let v = identity_observable();
        let s = Complex64::new(1.0, 0.0);
        let d = laplace_direct(&map, &roof, &v, &v, s, &samples, default_horizon(s)).unwrap();
        let exact = constant_roof_closed_form(1.0);
        assert!((d.estimate.re - exact).abs() < 3.0 * d.se + 1e-6, "{d:?} vs {exact}");
    }
}
