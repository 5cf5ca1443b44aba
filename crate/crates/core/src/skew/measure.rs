use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::RoofFunction;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::suspension::{ordered_sum, InverseCdf, LevelQuadrature, BATCHES};

use super::fiber::{FiberSpace, SkewMap};
use super::observable::SkewObservable;

/// Fiber points used for v_± envelopes.
pub const ENVELOPE_POINTS: usize = 257;

/// ⌈log(tol)/log γ₀⌉ skew steps.
pub fn burn_in(tol: f64, gamma0: f64) -> Result<usize> {
    if !(gamma0 > 0.0 && gamma0 < 1.0) {
        return Err(Error::NotContracting { gamma0 });
    }
    Ok((tol.ln() / gamma0.ln()).ceil().max(1.0) as usize)
}

/// Draws a fiber point from ηᵧ: a random inverse-branch path of the given depth with
/// probabilities |h_m′| f₀∘h_m / f₀, then the fiber map applied forward from the center.
pub fn sample_fiber(f: &SkewMap, f0: &GridFunction, y: f64, depth: usize, rng: &mut impl Rng) -> f64 {
    let branches = f.base.active_branches();
    let mut path = Vec::with_capacity(depth);
    let mut x = y;
    let mut probs = vec![0.0; branches];
    for _ in 0..depth {
        for (m, p) in probs.iter_mut().enumerate() {
            let (xm, d) = f.base.inverse(m, x);
            *p = d.abs() * f0.eval(xm).re;
        }
        let total: f64 = probs.iter().sum();
        let mut r = rng.gen::<f64>() * total;
        let mut choice = branches - 1;
        for (m, &p) in probs.iter().enumerate() {
            if r < p {
                choice = m;
                break;
            }
            r -= p;
        }
        x = f.base.inverse(choice, x).0;
        path.push(x);
    }
    path.iter().rev().fold(f.space().center(), |z, &xk| f.fiber.eval(xk, z))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SkewSample {
    pub y: f64,
    pub z: f64,
    pub u: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MuXSamples {
    pub seed: u64,
    pub depth: usize,
    pub batches: Vec<Vec<SkewSample>>,
}

impl MuXSamples {
    pub fn len(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// n draws from μ_X^R: y ~ μ, z ~ ηᵧ by a depth-`depth` backward path, u uniform on [0,R(y)].
pub fn sample_mu_x(f: &SkewMap, roof: &RoofFunction, f0: &GridFunction, mean_roof: f64, n: usize, seed: u64, depth: usize) -> MuXSamples {
    let cdf = InverseCdf::new(f0);
    let batches = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let size = n / BATCHES + usize::from(b < n % BATCHES);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            (0..size)
                .map(|_| {
                    let y = cdf.quantile(rng.gen::<f64>());
                    let r = roof.value_at(&f.base, y);
                    let u = rng.gen::<f64>() * r;
                    let z = sample_fiber(f, f0, y, depth, &mut rng);
                    SkewSample {
                        y,
                        z,
                        u,
                        weight: r / mean_roof,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    MuXSamples { seed, depth, batches }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MuXBounds {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
    pub gap: f64,
    /// |v|_α (C γ₀ⁿ diam Z)^α.
    pub gap_bound: f64,
    /// Lipschitz padding added on each side of the grid envelope.
    pub padding: f64,
}

/// ∫(v∘fⁿ)_± dμ over fiber envelopes on a 257-point grid with Lipschitz padding.
///
/// Needs a quadrature with at least n levels; `contraction` is (C, γ₀).
pub fn mu_x_integral(f: &SkewMap, q: &LevelQuadrature, v: &SkewObservable, u: f64, n: usize, contraction: (f64, f64)) -> Result<MuXBounds> {
    if n > q.n_max() {
        return Err(Error::Precondition(format!("level {n} beyond quadrature depth {}", q.n_max())));
    }
    let space = f.space();
    let count = match space {
        FiberSpace::Interval => ENVELOPE_POINTS,
        FiberSpace::Circle => ENVELOPE_POINTS - 1,
    };
    let step = 1.0 / (ENVELOPE_POINTS - 1) as f64;
    let pad = if v.fiber_independent {
        0.0
    } else {
        v.holder * (f.fiber.fiber_lipschitz().powi(n as i32) * 0.5 * step).powf(v.alpha)
    };
    let envelope = |y: f64, base_end: f64| -> Result<(f64, f64)> {
        let mut orbit = Vec::with_capacity(n);
        let mut x = y;
        for _ in 0..n {
            orbit.push(x);
            x = f.base.forward(x)?.0;
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..count {
            let z = orbit.iter().fold(j as f64 * step, |z, &xk| f.fiber.eval(xk, z));
            let val = v.eval(base_end, z, u);
            lo = lo.min(val);
            hi = hi.max(val);
        }
        Ok((lo - pad, hi + pad))
    };
    let nodes = &q.levels[n];
    let pairs: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|p| envelope(p.y, p.z).map(|(a, b)| (p.weight * a, p.weight * b)))
        .collect::<Result<_>>()?;
    let mass = ordered_sum(nodes, |p| p.weight);
    let lower = pairs.iter().map(|p| p.0).sum::<f64>() / mass;
    let upper = pairs.iter().map(|p| p.1).sum::<f64>() / mass;
    let (c, gamma0) = contraction;
    Ok(MuXBounds {
        n,
        lower,
        upper,
        value: 0.5 * (lower + upper),
        gap: upper - lower,
        gap_bound: v.holder * (c * gamma0.powi(n as i32) * space.diameter()).powf(v.alpha),
        padding: pad,
    })
}
