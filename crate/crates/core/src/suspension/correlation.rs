use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{ExpandingMap, RoofFunction};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::stats::{batch_standard_error, linear_fit};

use super::flow::flow;
use super::levels::{integrate_panels, ordered_sum, window, LevelQuadrature};
use super::observable::Observable;
use super::sampling::MuRSamples;

/// Longest u-panel for the Gauss–Legendre height quadrature.
pub const HEIGHT_PANEL: f64 = 0.5;
pub const HEIGHT_ORDER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMethod {
    Direct,
    Series,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub estimate: f64,
    pub se: f64,
}

/// ρ̂ ≈ C e^{−ct} fitted on a prefix window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub c_const: f64,
    pub rate: f64,
    pub r_squared: f64,
    pub window_start: f64,
    pub window_end: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationCurve {
    pub method: CurveMethod,
    pub points: Vec<CurvePoint>,
    pub fit: Option<DecayFit>,
}

impl CorrelationCurve {
    pub fn new(method: CurveMethod, points: Vec<CurvePoint>) -> Self {
        Self {
            method,
            points,
            fit: None,
        }
    }

    /// Runs decay_fit and stores the result.
    pub fn with_fit(mut self) -> Result<Self> {
        self.fit = Some(decay_fit(&self)?);
        Ok(self)
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }
}

/// [0, 10R̄] at spacing R̄/8.
pub fn default_t_grid(mean_roof: f64) -> Vec<f64> {
    (0..=80).map(|k| k as f64 * mean_roof / 8.0).collect()
}

fn check_times(ts: &[f64]) -> Result<()> {
    if ts.iter().any(|&t| t < 0.0) || ts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("t-grid must be non-negative and sorted".into()));
    }
    Ok(())
}

#[derive(Clone)]
struct Moments {
    sw: f64,
    swv: f64,
    sww: Vec<f64>,
    swvw: Vec<f64>,
}

impl Moments {
    fn new(k: usize) -> Self {
        Self {
            sw: 0.0,
            swv: 0.0,
            sww: vec![0.0; k],
            swvw: vec![0.0; k],
        }
    }

    fn add(&mut self, other: &Self) {
        self.sw += other.sw;
        self.swv += other.swv;
        for (a, b) in self.sww.iter_mut().zip(&other.sww) {
            *a += b;
        }
        for (a, b) in self.swvw.iter_mut().zip(&other.swvw) {
            *a += b;
        }
    }

    fn covariance(&self, j: usize) -> f64 {
        self.swvw[j] / self.sw - (self.swv / self.sw) * (self.sww[j] / self.sw)
    }
}

/// Weighted MC estimate of ∫ v·w∘F_t dμ^R − ∫v ∫w with batch-means errors.
pub fn correlation_direct(
    map: &ExpandingMap,
    roof: &RoofFunction,
    v: &Observable,
    w: &Observable,
    ts: &[f64],
    samples: &MuRSamples,
) -> Result<CorrelationCurve> {
    check_times(ts)?;
    let k = ts.len();
    let per_batch: Vec<Moments> = samples
        .batches
        .par_iter()
        .map(|batch| {
            let mut acc = Moments::new(k);
            for s in batch {
                let vx = v.eval(s.point.y, s.point.u);
                acc.sw += s.weight;
                acc.swv += s.weight * vx;
                let mut p = s.point;
                let mut prev = 0.0;
                for (j, &t) in ts.iter().enumerate() {
                    p = flow(map, roof, p, t - prev)?.0;
                    prev = t;
                    let wt = w.eval(p.y, p.u);
                    acc.sww[j] += s.weight * wt;
                    acc.swvw[j] += s.weight * vx * wt;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut pooled = Moments::new(k);
    for b in &per_batch {
        pooled.add(b);
    }
    let used: Vec<&Moments> = per_batch.iter().filter(|b| b.sw > 0.0).collect();
    let points = ts
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let est: Vec<f64> = used.iter().map(|b| b.covariance(j)).collect();
            CurvePoint {
                t,
                estimate: pooled.covariance(j),
                se: batch_standard_error(&est),
            }
        })
        .collect();
    Ok(CorrelationCurve::new(CurveMethod::Direct, points))
}

/// ∫ v dμ^R by level-0 quadrature.
pub fn mu_r_integral(q: &LevelQuadrature, v: &Observable) -> f64 {
    let gl = GaussLegendre::new(HEIGHT_ORDER);
    let top = ordered_sum(&q.levels[0], |p| p.weight * integrate_panels(&gl, 0.0, p.ry, HEIGHT_PANEL, |u| v.eval(p.y, u)));
    let norm = ordered_sum(&q.levels[0], |p| p.weight * p.ry);
    top / norm
}

/// Σ_n J_n(t) with both observables centered.
pub fn correlation_series(q: &LevelQuadrature, v: &Observable, w: &Observable, t: f64) -> Result<f64> {
    let needed = super::levels::series_levels(q.roof_inf, q.roof_sup, t);
    if needed > q.n_max() {
        return Err(Error::Precondition(format!(
            "t={t} needs {needed} levels, quadrature has {}",
            q.n_max()
        )));
    }
    let vc = v.shifted(mu_r_integral(q, v));
    let wc = w.shifted(mu_r_integral(q, w));
    Ok(series_centered(q, &vc, &wc, t))
}

fn series_centered(q: &LevelQuadrature, vc: &Observable, wc: &Observable, t: f64) -> f64 {
    let gl = GaussLegendre::new(HEIGHT_ORDER);
    let norm = ordered_sum(&q.levels[0], |p| p.weight * p.ry);
    let total: f64 = q
        .active_levels(t)
        .map(|(_, nodes)| {
            ordered_sum(nodes, |p| match window(p, t) {
                Some((a, b)) => {
                    p.weight * integrate_panels(&gl, a, b, HEIGHT_PANEL, |u| vc.eval(p.y, u) * wc.eval(p.z, u + t - p.rn))
                }
                None => 0.0,
            })
        })
        .sum();
    total / norm
}

/// correlation_series on every t of the grid.
pub fn correlation_series_curve(q: &LevelQuadrature, v: &Observable, w: &Observable, ts: &[f64]) -> Result<CorrelationCurve> {
    check_times(ts)?;
    if let Some(&t) = ts.last() {
        correlation_series(q, v, w, t)?;
    }
    let vc = v.shifted(mu_r_integral(q, v));
    let wc = w.shifted(mu_r_integral(q, w));
    let points = ts
        .iter()
        .map(|&t| CurvePoint {
            t,
            estimate: series_centered(q, &vc, &wc, t),
            se: 0.0,
        })
        .collect();
    Ok(CorrelationCurve::new(CurveMethod::Series, points))
}

/// Least squares of log|ρ̂| on the longest prefix with |ρ̂| > 3·SE.
pub fn decay_fit(curve: &CorrelationCurve) -> Result<DecayFit> {
    let window: Vec<&CurvePoint> = curve
        .points
        .iter()
        .take_while(|p| p.estimate.abs() > 3.0 * p.se && p.estimate != 0.0 && p.estimate.is_finite())
        .collect();
    if window.len() < 5 {
        return Err(Error::WindowTooShort { points: window.len() });
    }
    let xs: Vec<f64> = window.iter().map(|p| p.t).collect();
    let ys: Vec<f64> = window.iter().map(|p| p.estimate.abs().ln()).collect();
    let fit = linear_fit(&xs, &ys);
    Ok(DecayFit {
        c_const: fit.intercept.exp(),
        rate: -fit.slope,
        r_squared: fit.r_squared,
        window_start: xs[0],
        window_end: *xs.last().unwrap(),
        points: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;
    use crate::grid::GridFunction;
    use crate::suspension::levels::LevelRule;
    use crate::suspension::observable::{identity_observable, ObservableSpec};
    use crate::suspension::sampling::sample_mu_r;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand::Rng;

    /// Box–Muller standard normal.
    fn normal(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn uniform() -> GridFunction {
        GridFunction::constant(1024, 1.0, Complex64::new(1.0, 0.0))
    }

    fn synthetic(ts: &[f64], f: impl Fn(f64) -> f64, se: f64, seed: u64) -> CorrelationCurve {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = ts
            .iter()
            .map(|&t| CurvePoint {
                t,
                estimate: f(t) + se * normal(&mut rng),
                se,
            })
            .collect();
        CorrelationCurve::new(CurveMethod::Direct, points)
    }

    #[test]
    fn exact_exponential_fit() {
        let ts: Vec<f64> = (0..40).map(|k| k as f64 * 0.25).collect();
        let c = CorrelationCurve::new(
            CurveMethod::Series,
            ts.iter().map(|&t| CurvePoint { t, estimate: 3.0 * (-0.7 * t).exp(), se: 0.0 }).collect(),
        );
        let fit = decay_fit(&c).unwrap();
        assert!((fit.c_const - 3.0).abs() < 1e-6 && (fit.rate - 0.7).abs() < 1e-6);
    }

    #[test]
    fn noisy_modulated_fit() {
        let ts: Vec<f64> = (0..100).map(|k| k as f64 * 0.25).collect();
        let c = synthetic(&ts, |t| (-0.5 * t).exp() * (1.0 + 0.2 * t.cos()), 1e-4, 17);
        let fit = decay_fit(&c).unwrap();
        assert!((fit.rate - 0.5).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn noise_only_has_no_window() {
        let ts: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let c = synthetic(&ts, |_| 0.0, 1e-3, 3);
        assert!(matches!(decay_fit(&c), Err(Error::WindowTooShort { .. })));
    }

    #[test]
    fn constants_are_uncorrelated() {
        let (map, roof) = (zoo::doubling_map(), zoo::quadratic_roof());
        let one = ObservableSpec::Constant { value: 1.0 }.build(1.0, 2.5);
        let s = sample_mu_r(&map, &roof, &uniform(), 2.0 + 1.0 / 6.0, 3200, 1);
        let ts = [0.0, 1.0, 5.0];
        let c = correlation_direct(&map, &roof, &one, &one, &ts, &s).unwrap();
        assert!(c.points.iter().all(|p| p.estimate.abs() < 1e-12));
        let q = LevelQuadrature::for_horizon(&map, &roof, &uniform(), 5.0, LevelRule::default()).unwrap();
        for &t in &ts {
            assert!(correlation_series(&q, &one, &one, t).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn series_at_zero_is_variance() {
        // Uniform μ and v = y: Var = 1/12 under the roof-weighted measure.
        let (map, roof) = (zoo::doubling_map(), zoo::quadratic_roof());
        let q = LevelQuadrature::for_horizon(&map, &roof, &uniform(), 0.0, LevelRule::default()).unwrap();
        let v = identity_observable();
        let rbar = 2.0 + 1.0 / 6.0;
        let m1 = (1.0 + 1.0 / 8.0) / rbar;
        let m2 = (2.0 / 3.0 + 1.0 / 10.0) / rbar;
        let got = correlation_series(&q, &v, &v, 0.0).unwrap();
        assert!((got - (m2 - m1 * m1)).abs() < 1e-12, "{got}");
    }

    #[test]
    fn constant_roof_series_matches_closed_form() {
        // R ≡ 2, v = w = y on doubling: ρ(t) = 2^{-k}/12·(1−r/2) + 2^{-k-1}/12·r/2 for t = 2k + r.
        let (map, roof) = (zoo::doubling_map(), zoo::constant_roof());
        let q = LevelQuadrature::for_horizon(&map, &roof, &uniform(), 7.0, LevelRule::default()).unwrap();
        let v = identity_observable();
        for t in [0.0, 0.5, 2.0, 3.3, 7.0] {
            let k = (t / 2.0f64).floor();
            let r = t - 2.0 * k;
            let exact = 0.5f64.powf(k) / 12.0 * (1.0 - r / 2.0) + 0.5f64.powf(k + 1.0) / 12.0 * (r / 2.0);
            let got = correlation_series(&q, &v, &v, t).unwrap();
            assert!((got - exact).abs() < 1e-12, "t={t}: {got} vs {exact}");
        }
    }

    #[test]
    fn centering_is_exact_for_series() {
        let (map, roof) = (zoo::doubling_map(), zoo::quadratic_roof());
        let q = LevelQuadrature::for_horizon(&map, &roof, &uniform(), 4.0, LevelRule::default()).unwrap();
        let v = identity_observable();
        let w = ObservableSpec::Cosine { freq: 1.0 }.build(1.0, 2.5);
        for t in [0.0, 1.5, 4.0] {
            let a = correlation_series(&q, &v, &w, t).unwrap();
            let b = correlation_series(&q, &v.shifted(-3.0), &w.shifted(0.7), t).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn direct_matches_series_at_small_times() {
        let (map, roof) = (zoo::doubling_map(), zoo::quadratic_roof());
        let f0 = uniform();
        let q = LevelQuadrature::for_horizon(&map, &roof, &f0, 5.0, LevelRule::default()).unwrap();
        let v = identity_observable();
        let s = sample_mu_r(&map, &roof, &f0, q.mean_roof, 64_000, 5);
        let ts = [1.0, 2.0, 5.0];
        let direct = correlation_direct(&map, &roof, &v, &v, &ts, &s).unwrap();
        for p in &direct.points {
            let series = correlation_series(&q, &v, &v, p.t).unwrap();
            assert!(p.se > 0.0);
            assert!((p.estimate - series).abs() < 3.0 * p.se, "t={}: {} vs {series} (se {})", p.t, p.estimate, p.se);
        }
    }
}
