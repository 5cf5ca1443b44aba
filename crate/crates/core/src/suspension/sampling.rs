use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{ExpandingMap, RoofFunction};
use crate::grid::GridFunction;
use crate::stats::batch_standard_error;

use super::flow::SuspensionPoint;

/// Number of independent RNG streams; also the batch count for standard errors.
pub const BATCHES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedSample {
    pub point: SuspensionPoint,
    /// R(y)/R̄.
    pub weight: f64,
}

/// Samples for μ^R grouped by RNG stream.
#[derive(Clone, Debug, Serialize)]
pub struct MuRSamples {
    pub seed: u64,
    pub mean_roof: f64,
    pub batches: Vec<Vec<WeightedSample>>,
}

impl MuRSamples {
    pub fn len(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &WeightedSample> {
        self.batches.iter().flatten()
    }

    /// Mean weight with its batch-means standard error.
    pub fn mean_weight(&self) -> (f64, f64) {
        let per: Vec<f64> = self
            .batches
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| b.iter().map(|s| s.weight).sum::<f64>() / b.len() as f64)
            .collect();
        let total: f64 = self.iter().map(|s| s.weight).sum();
        let n = self.len();
        if n == 0 {
            return (0.0, 0.0);
        }
        (total / n as f64, batch_standard_error(&per))
    }
}

/// Inverse of the piecewise-quadratic CDF of the interpolated density.
#[derive(Clone, Debug)]
pub struct InverseCdf {
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl InverseCdf {
    pub fn new(density: &GridFunction) -> Self {
        let values = density.re();
        let h = density.step();
        let mut cumulative = Vec::with_capacity(values.len());
        cumulative.push(0.0);
        for k in 0..values.len() - 1 {
            let last = cumulative[k];
            cumulative.push(last + 0.5 * h * (values[k] + values[k + 1]));
        }
        Self { values, cumulative }
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// y with CDF(y) = p·total.
    pub fn quantile(&self, p: f64) -> f64 {
        let target = p.clamp(0.0, 1.0) * self.total();
        let n = self.values.len() - 1;
        let h = 1.0 / n as f64;
        let k = self.cumulative.partition_point(|&c| c <= target).clamp(1, n) - 1;
        let rem = target - self.cumulative[k];
        let (a, b) = (self.values[k], self.values[k + 1]);
        let slope = (b - a) / h;
        // a τ + slope τ²/2 = rem
        let tau = if slope.abs() < 1e-14 * a.abs().max(1e-300) {
            rem / a
        } else {
            let disc = (a * a + 2.0 * slope * rem).max(0.0);
            2.0 * rem / (a + disc.sqrt())
        };
        (k as f64 * h + tau.clamp(0.0, h)).min(1.0)
    }
}

/// (1/|Y|)∫R dμ by the trapezoid rule on the density grid.
pub fn mean_roof_on_grid(map: &ExpandingMap, roof: &RoofFunction, f0: &GridFunction) -> f64 {
    let r = GridFunction::from_real_fn(f0.n(), f0.alpha(), |y| roof.value_at(map, y));
    r.integrate_weighted(f0).re / f0.integrate().re
}

fn batch_sizes(n: usize) -> Vec<usize> {
    (0..BATCHES).map(|b| n / BATCHES + usize::from(b < n % BATCHES)).collect()
}

/// n draws from μ^R: y by inverse CDF of f₀, u uniform on [0,R(y)], weight R(y)/R̄.
pub fn sample_mu_r(map: &ExpandingMap, roof: &RoofFunction, f0: &GridFunction, mean_roof: f64, n: usize, seed: u64) -> MuRSamples {
    let cdf = InverseCdf::new(f0);
    let batches = batch_sizes(n)
        .into_par_iter()
        .enumerate()
        .map(|(b, size)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            (0..size)
                .map(|_| {
                    let y = cdf.quantile(rng.gen::<f64>());
                    let r = roof.value_at(map, y);
                    let u = rng.gen::<f64>() * r;
                    WeightedSample {
                        point: SuspensionPoint::new(y, u),
                        weight: r / mean_roof,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    MuRSamples {
        seed,
        mean_roof,
        batches,
    }
}
