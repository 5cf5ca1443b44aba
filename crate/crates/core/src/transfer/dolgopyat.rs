use num_complex::Complex64;
use serde::Serialize;

use super::operator::TwistedOperator;
use super::spectrum::{NormalizedOperator, SpectralData};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::stats::linear_fit;

#[derive(Clone, Debug, Serialize)]
pub struct NormCurvePoint {
    pub b: f64,
    pub sample: usize,
    pub n: usize,
    pub norm_b: f64,
    /// Ratio to the previous point of the curve.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeResult {
    pub b: f64,
    /// Per-step contraction factor, max over samples.
    pub gamma: f64,
    pub per_sample: Vec<f64>,
    /// First n used in the fit (smallest multiple of the step in monotone decay).
    pub fit_start: usize,
    pub skipped_samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DolgopyatReport {
    pub results: Vec<ProbeResult>,
    pub gamma: f64,
    pub contracting: bool,
    pub curve: Vec<NormCurvePoint>,
}

#[derive(Clone, Copy, Debug)]
pub struct ProbeSettings {
    pub sigma: f64,
    /// Norms are recorded at n = step, 2·step, ...
    pub step: usize,
    pub max_n: usize,
    /// Relative level at which a curve counts as grid noise.
    pub floor: f64,
    pub min_points: usize,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            sigma: 0.0,
            step: 1,
            max_n: 240,
            floor: 1e-11,
            min_points: 4,
        }
    }
}

/// Fits the decay rate of ‖L_s^n v‖_b for each b and each sample v = sampler(b, i).
pub fn dolgopyat_probe(
    op: &TwistedOperator,
    spectral: &SpectralData,
    bs: &[f64],
    samples_per_b: usize,
    settings: ProbeSettings,
    sampler: impl Fn(f64, usize) -> GridFunction,
) -> Result<DolgopyatReport> {
    let mut results = Vec::new();
    let mut curve = Vec::new();
    for &b in bs {
        let l = NormalizedOperator::new(op, spectral, Complex64::new(settings.sigma, b))?;
        let mut per_sample = Vec::new();
        let mut starts = Vec::new();
        let mut skipped = 0;
        for i in 0..samples_per_b {
            let v = sampler(b, i);
            let v0 = v.b_norm(b);
            if v0 == 0.0 {
                skipped += 1;
                continue;
            }
            let mut norms = vec![(0usize, v0)];
            let mut cur = v;
            let mut n = 0;
            while n + settings.step <= settings.max_n {
                cur = l.apply_n(&cur, settings.step);
                n += settings.step;
                let nb = cur.b_norm(b);
                let prev = norms.last().unwrap().1;
                curve.push(NormCurvePoint {
                    b,
                    sample: i,
                    n,
                    norm_b: nb,
                    ratio: nb / prev,
                });
                norms.push((n, nb));
                if nb < settings.floor * v0 {
                    break;
                }
            }
            let usable: Vec<(usize, f64)> = norms
                .iter()
                .cloned()
                .filter(|&(_, x)| x >= settings.floor * v0)
                .collect();
            // Start of the monotone tail.
            let mut start = usable.len().saturating_sub(1);
            while start > 0 && usable[start - 1].1 > usable[start].1 {
                start -= 1;
            }
            let window = &usable[start..];
            if window.len() < settings.min_points {
                return Err(Error::InsufficientDecayWindow {
                    b,
                    points: window.len(),
                });
            }
            let xs: Vec<f64> = window.iter().map(|&(n, _)| n as f64).collect();
            let ys: Vec<f64> = window.iter().map(|&(_, x)| x.ln()).collect();
            let fit = linear_fit(&xs, &ys);
            per_sample.push(fit.slope.exp());
            starts.push(window[0].0);
        }
        let gamma = per_sample.iter().cloned().fold(0.0, f64::max);
        results.push(ProbeResult {
            b,
            gamma,
            per_sample,
            fit_start: starts.into_iter().max().unwrap_or(0),
            skipped_samples: skipped,
        });
    }
    let gamma = results.iter().map(|r| r.gamma).fold(0.0, f64::max);
    Ok(DolgopyatReport {
        contracting: gamma < 1.0,
        gamma,
        results,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;
    use crate::transfer::leading_spectrum_with;

    #[test]
    fn zero_samples_are_skipped() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let op = TwistedOperator::new(&map, &roof, 128).unwrap();
        let sp = leading_spectrum_with(&op, &map, &roof, 0.0).unwrap();
        let rep = dolgopyat_probe(&op, &sp, &[40.0], 2, ProbeSettings::default(), |_, _| {
            GridFunction::zeros(128, 1.0)
        })
        .unwrap();
        assert_eq!(rep.results[0].skipped_samples, 2);
        assert!(rep.curve.is_empty());
    }

    #[test]
    fn quadratic_roof_contracts_at_moderate_b() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let op = TwistedOperator::new(&map, &roof, 512).unwrap();
        let sp = leading_spectrum_with(&op, &map, &roof, 0.0).unwrap();
        let rep = dolgopyat_probe(&op, &sp, &[40.0], 1, ProbeSettings::default(), |b, _| {
            GridFunction::from_fn(512, 1.0, |y| Complex64::new(0.0, 0.5 * b * y).exp())
        })
        .unwrap();
        assert!(rep.gamma < 0.95, "{}", rep.gamma);
    }
}
