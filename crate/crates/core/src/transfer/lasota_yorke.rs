use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::operator::TwistedOperator;
use super::spectrum::{NormalizedOperator, SpectralData};
use crate::error::Result;
use crate::grid::GridFunction;

/// Named test function for the Lasota–Yorke measurement.
#[derive(Clone, Debug)]
pub struct SampleFunction {
    pub label: String,
    pub values: GridFunction,
}

/// Constants, e^{iby} for each probed b, and `random` seeded band-limited functions.
pub fn ly_samples(n: usize, alpha: f64, bs: &[f64], random: usize, seed: u64) -> Vec<SampleFunction> {
    let mut out = vec![SampleFunction {
        label: "constant".into(),
        values: GridFunction::constant(n, alpha, Complex64::new(1.0, 0.0)),
    }];
    for &b in bs {
        out.push(SampleFunction {
            label: format!("exp(i*{b}*y)"),
            values: GridFunction::from_fn(n, alpha, |y| Complex64::new(0.0, b * y).exp()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in 0..random {
        let modes: Vec<(f64, f64, f64)> = (1..=8)
            .map(|k| (k as f64, rng.gen_range(-1.0..1.0) / k as f64, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        out.push(SampleFunction {
            label: format!("band-limited-{r}"),
            values: GridFunction::from_fn(n, alpha, |y| {
                modes
                    .iter()
                    .map(|&(k, a, ph)| Complex64::new(0.0, std::f64::consts::TAU * k * y + ph).exp() * a)
                    .sum()
            }),
        });
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct LyMargin {
    pub b: f64,
    pub n: usize,
    pub sample: String,
    /// |L^n v|_α / ((1+|b|^α)|v|_∞ + ρ^n|v|_α).
    pub ratio: f64,
    /// ‖L^n v‖_b / ‖v‖_b.
    pub norm_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LyReport {
    /// Largest ratio over all samples.
    pub measured_c3: f64,
    /// max(measured, 1): the inequality constant is taken above 1.
    pub c3: f64,
    /// Largest ‖L^n v‖_b / ‖v‖_b; must stay below 2 C3.
    pub max_norm_ratio: f64,
    pub norm_bound_holds: bool,
    pub margins: Vec<LyMargin>,
}

/// Measures the Lasota–Yorke constant over s = σ + ib for each listed b and n = 1..=n_max.
pub fn ly_report(
    op: &TwistedOperator,
    spectral: &SpectralData,
    bs: &[f64],
    n_max: usize,
    rho: f64,
    samples: &[SampleFunction],
) -> Result<LyReport> {
    let mut margins = Vec::new();
    for &b in bs {
        let l = NormalizedOperator::new(op, spectral, Complex64::new(spectral.sigma, b))?;
        let scale = 1.0 + b.abs().powf(samples[0].values.alpha());
        for sample in samples {
            let v = &sample.values;
            let (sup, hol, vb) = (v.sup_norm(), v.holder_seminorm(), v.b_norm(b));
            let mut cur = v.clone();
            for n in 1..=n_max {
                cur = l.apply(&cur);
                let denom = scale * sup + rho.powi(n as i32) * hol;
                let h = cur.holder_seminorm();
                let ratio = if denom > 0.0 { h / denom } else { 0.0 };
                margins.push(LyMargin {
                    b,
                    n,
                    sample: sample.label.clone(),
                    ratio,
                    norm_ratio: cur.b_norm(b) / vb,
                });
            }
        }
    }
    let measured_c3 = margins.iter().map(|m| m.ratio).fold(0.0, f64::max);
    let c3 = measured_c3.max(1.0);
    let max_norm_ratio = margins.iter().map(|m| m.norm_ratio).fold(0.0, f64::max);
    Ok(LyReport {
        measured_c3,
        c3,
        max_norm_ratio,
        norm_bound_holds: max_norm_ratio <= 2.0 * c3,
        margins,
    })
}
