use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::RoofFunction;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::stats::batch_standard_error;
use crate::suspension::{visit_value, CorrelationCurve, CurveMethod, CurvePoint, LevelQuadrature, BATCHES};

use super::eta::EtaMeasure;
use super::fiber::SkewMap;
use super::measure::{sample_fiber, MuXSamples, SkewSample};
use super::observable::SkewObservable;

/// Point (y, z, u) of X^R.
pub type SkewPoint = (f64, f64, f64);

/// Flow on X^R: (y, z, R(y)) ~ (f(y,z), 0); returns the point and the crossing count.
pub fn skew_flow(f: &SkewMap, roof: &RoofFunction, p: SkewPoint, t: f64) -> Result<(SkewPoint, usize)> {
    if t < 0.0 {
        return Err(Error::Precondition(format!("flow time {t} is negative")));
    }
    let (mut y, mut z, mut u) = (p.0, p.1, p.2 + t);
    let mut visits = 0;
    loop {
        let m = f.base.locate(y)?;
        let r = roof.eval(m, y).0;
        if u < r {
            return Ok(((y, z, u), visits));
        }
        u -= r;
        (y, z) = f.step(y, z)?;
        visits += 1;
    }
}

/// One row of the ρ(2t) = I₁(t) + I₂(t) diagnostic.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SplitRow {
    pub t: f64,
    pub rho_2t: f64,
    pub i1: f64,
    pub i1_se: f64,
    /// |v − ∫v|∞ |w|_α (C diam Z)^α ∫ γ₀^{αψ_t} dμ^R.
    pub envelope: f64,
    pub i2: f64,
    pub i2_se: f64,
    /// Correlation of (v̄, w_t) under the quotient semiflow.
    pub quotient: f64,
    pub quotient_se: f64,
}

impl SplitRow {
    /// |I₁| ≤ envelope, allowing 3 standard errors for the MC estimate.
    pub fn within_envelope(&self) -> bool {
        self.i1.abs() <= self.envelope + 3.0 * self.i1_se
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SkewCorrelation {
    pub curve: CorrelationCurve,
    pub split: Vec<SplitRow>,
}

/// Inputs of the split diagnostic.
pub struct SplitSetup<'a> {
    /// Invariant density of the base map.
    pub f0: &'a GridFunction,
    /// Quadrature for the visit moments.
    pub visits: &'a LevelQuadrature,
    /// Fiber measures ηᵧ on the grid of f₀.
    pub eta: &'a EtaMeasure,
    /// (C, γ₀) from contraction_check.
    pub contraction: (f64, f64),
    /// Depth of the backward paths drawing z ~ ηᵧ.
    pub depth: usize,
}

fn covariance(s: &[f64; 4]) -> f64 {
    // [Σw, Σw a, Σw b, Σw a b]
    s[3] / s[0] - (s[1] / s[0]) * (s[2] / s[0])
}

fn add(acc: &mut [f64; 4], w: f64, a: f64, b: f64) {
    acc[0] += w;
    acc[1] += w * a;
    acc[2] += w * b;
    acc[3] += w * a * b;
}

fn pooled(batches: &[[f64; 4]]) -> (f64, f64) {
    let mut tot = [0.0; 4];
    for b in batches {
        for i in 0..4 {
            tot[i] += b[i];
        }
    }
    let est: Vec<f64> = batches.iter().filter(|b| b[0] > 0.0).map(covariance).collect();
    (covariance(&tot), batch_standard_error(&est))
}

/// Direct MC correlation on X^R plus the I₁/I₂ split at each half-time in `split_times`.
#[allow(clippy::too_many_arguments)]
pub fn flow_correlation(
    f: &SkewMap,
    roof: &RoofFunction,
    v: &SkewObservable,
    w: &SkewObservable,
    ts: &[f64],
    split_times: &[f64],
    samples: &MuXSamples,
    setup: &SplitSetup,
) -> Result<SkewCorrelation> {
    if ts.iter().any(|&t| t < 0.0) || ts.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::Precondition("t-grid must be non-negative and sorted".into()));
    }
    let (c, gamma0) = setup.contraction;
    if !(gamma0 < 1.0) {
        return Err(Error::NotContracting { gamma0 });
    }
    let k = ts.len();
    let s = split_times.len();
    // Per batch: curve moments, then per split time [ρ(2t), I1, I2, quotient] moments.
    type Batch = (Vec<[f64; 4]>, Vec<[[f64; 4]; 4]>);
    let batch_stats: Vec<Batch> = samples
        .batches
        .par_iter()
        .enumerate()
        .map(|(b, batch)| {
            let mut rng = ChaCha8Rng::seed_from_u64(samples.seed ^ 0x5eed_f1be);
            rng.set_stream((BATCHES + b) as u64);
            let mut curve = vec![[0.0; 4]; k];
            let mut split = vec![[[0.0; 4]; 4]; s];
            for smp in batch {
                let &SkewSample { y, z, u, weight } = smp;
                let vx = v.eval(y, z, u);
                let mut p = (y, z, u);
                let mut prev = 0.0;
                for (j, &t) in ts.iter().enumerate() {
                    p = skew_flow(f, roof, p, t - prev)?.0;
                    prev = t;
                    add(&mut curve[j], weight, vx, w.eval(p.0, p.1, p.2));
                }
                let vbar = setup.eta.average(y, |zz| v.eval(y, zz, u));
                for (j, &t) in split_times.iter().enumerate() {
                    let (pt, _) = skew_flow(f, roof, (y, z, u), t)?;
                    let (p2, _) = skew_flow(f, roof, pt, t)?;
                    let z2 = sample_fiber(f, setup.f0, pt.0, setup.depth, &mut rng);
                    let (pr, _) = skew_flow(f, roof, (pt.0, z2, pt.2), t)?;
                    let w_true = w.eval(p2.0, p2.1, p2.2);
                    let w_ref = w.eval(pr.0, pr.1, pr.2);
                    add(&mut split[j][0], weight, vx, w_true);
                    add(&mut split[j][1], weight, vx, w_true - w_ref);
                    add(&mut split[j][2], weight, vx, w_ref);
                    add(&mut split[j][3], weight, vbar, w_ref);
                }
            }
            Ok((curve, split))
        })
        .collect::<Result<_>>()?;
    let points = ts
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let per: Vec<[f64; 4]> = batch_stats.iter().map(|b| b.0[j]).collect();
            let (estimate, se) = pooled(&per);
            CurvePoint { t, estimate, se }
        })
        .collect();
    let mean_v: f64 = {
        let per: Vec<[f64; 4]> = batch_stats.iter().filter_map(|b| b.0.first().copied()).collect();
        let tot = per.iter().fold([0.0; 2], |a, x| [a[0] + x[0], a[1] + x[1]]);
        if tot[0] > 0.0 {
            tot[1] / tot[0]
        } else {
            0.0
        }
    };
    let vc_sup = v.sup + mean_v.abs();
    let amp = vc_sup * w.holder * (c * f.space().diameter()).powf(w.alpha);
    let gamma_alpha = gamma0.powf(w.alpha);
    let split = split_times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let col = |i: usize| -> (f64, f64) {
                let per: Vec<[f64; 4]> = batch_stats.iter().map(|b| b.1[j][i]).collect();
                pooled(&per)
            };
            let (rho_2t, _) = col(0);
            let (i1, i1_se) = col(1);
            let (i2, i2_se) = col(2);
            let (quotient, quotient_se) = col(3);
            let envelope = if w.fiber_independent {
                0.0
            } else {
                amp * visit_value(setup.visits, gamma_alpha, t)
            };
            SplitRow {
                t,
                rho_2t,
                i1,
                i1_se,
                envelope,
                i2,
                i2_se,
                quotient,
                quotient_se,
            }
        })
        .collect();
    Ok(SkewCorrelation {
        curve: CorrelationCurve::new(CurveMethod::Direct, points),
        split,
    })
}
