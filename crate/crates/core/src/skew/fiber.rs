use serde::{Deserialize, Serialize};

use crate::dynamics::ExpandingMap;
use crate::error::{Error, Result};
use crate::stats::linear_fit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberSpace {
    /// Z = [0, 1].
    Interval,
    /// Z = ℝ/ℤ.
    Circle,
}

impl FiberSpace {
    pub fn distance(&self, a: f64, b: f64) -> f64 {
        match self {
            FiberSpace::Interval => (a - b).abs(),
            FiberSpace::Circle => {
                let d = (a - b).rem_euclid(1.0);
                d.min(1.0 - d)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            FiberSpace::Interval => 1.0,
            FiberSpace::Circle => 0.5,
        }
    }

    pub fn center(&self) -> f64 {
        0.5
    }
}

/// Fiber map G(y, z).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FiberMap {
    /// G(y,z) = z_coef·z + y_coef·y + offset (mod 1 on the circle).
    Affine {
        z_coef: f64,
        y_coef: f64,
        offset: f64,
        space: FiberSpace,
    },
}

impl FiberMap {
    pub fn eval(&self, y: f64, z: f64) -> f64 {
        match *self {
            FiberMap::Affine {
                z_coef,
                y_coef,
                offset,
                space,
            } => {
                let g = z_coef * z + y_coef * y + offset;
                match space {
                    FiberSpace::Interval => g,
                    FiberSpace::Circle => g.rem_euclid(1.0),
                }
            }
        }
    }

    pub fn space(&self) -> FiberSpace {
        match self {
            FiberMap::Affine { space, .. } => *space,
        }
    }

    /// Lipschitz constant of z ↦ G(y, z).
    pub fn fiber_lipschitz(&self) -> f64 {
        match self {
            FiberMap::Affine { z_coef, .. } => z_coef.abs(),
        }
    }

    /// Lipschitz constant of y ↦ G(y, z).
    pub fn base_lipschitz(&self) -> f64 {
        match self {
            FiberMap::Affine { y_coef, .. } => y_coef.abs(),
        }
    }
}

/// f(y, z) = (F y, G(y, z)).
#[derive(Clone, Debug, Serialize)]
pub struct SkewMap {
    pub base: ExpandingMap,
    pub fiber: FiberMap,
}

impl SkewMap {
    pub fn new(base: ExpandingMap, fiber: FiberMap) -> Result<Self> {
        if fiber.space() == FiberSpace::Interval {
            // Corners of Y×Z suffice for affine G.
            for (y, z) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                let g = fiber.eval(y, z);
                if !(-1e-12..=1.0 + 1e-12).contains(&g) {
                    return Err(Error::InvalidSpec(format!("fiber map leaves [0,1]: G({y},{z})={g}")));
                }
            }
        }
        Ok(Self { base, fiber })
    }

    pub fn step(&self, y: f64, z: f64) -> Result<(f64, f64)> {
        let (fy, _) = self.base.forward(y)?;
        Ok((fy, self.fiber.eval(y, z)))
    }

    pub fn space(&self) -> FiberSpace {
        self.fiber.space()
    }
}

/// Orbit (y_k, z_k) for k = 0..=n.
pub fn skew_iterate(f: &SkewMap, start: (f64, f64), n: usize) -> Result<Vec<(f64, f64)>> {
    let mut orbit = Vec::with_capacity(n + 1);
    orbit.push(start);
    let (mut y, mut z) = start;
    for k in 0..n {
        let (ny, nz) = f.step(y, z).map_err(|e| match e {
            Error::OrbitHitsBoundary { value, .. } => Error::OrbitHitsBoundary {
                start: start.0,
                iterate: k,
                value,
            },
            other => other,
        })?;
        y = ny;
        z = nz;
        orbit.push((y, z));
    }
    Ok(orbit)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionReport {
    pub c: f64,
    pub gamma0: f64,
    pub r_squared: f64,
    /// (n, sup over pairs of |fⁿ(y,z) − fⁿ(y,z′)| / |z − z′|).
    pub sup_ratios: Vec<(usize, f64)>,
    /// Fibers collapse after one step (G independent of z).
    pub degenerate: bool,
}

/// Fits sup-ratio ≈ C γ₀ⁿ over the sampled pairs (y, z, z′).
pub fn contraction_check(f: &SkewMap, pairs: &[(f64, f64, f64)], ns: &[usize]) -> Result<ContractionReport> {
    if pairs.is_empty() || ns.len() < 2 {
        return Err(Error::Precondition("contraction_check needs pairs and at least two n".into()));
    }
    let space = f.space();
    let n_max = *ns.iter().max().unwrap_or(&0);
    let mut sup = vec![0.0f64; n_max + 1];
    for &(y, z, z2) in pairs {
        let d0 = space.distance(z, z2);
        if d0 == 0.0 {
            continue;
        }
        let (mut yy, mut a, mut b) = (y, z, z2);
        for s in sup.iter_mut().skip(1) {
            a = f.fiber.eval(yy, a);
            b = f.fiber.eval(yy, b);
            yy = f.base.forward(yy)?.0;
            *s = s.max(space.distance(a, b) / d0);
        }
    }
    let sup_ratios: Vec<(usize, f64)> = ns.iter().map(|&n| (n, sup[n])).collect();
    if sup_ratios.iter().any(|&(n, r)| n >= 1 && r == 0.0) {
        return Ok(ContractionReport {
            c: 0.0,
            gamma0: 0.0,
            r_squared: 1.0,
            sup_ratios,
            degenerate: true,
        });
    }
    let xs: Vec<f64> = sup_ratios.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = sup_ratios.iter().map(|&(_, r)| r.ln()).collect();
    let fit = linear_fit(&xs, &ys);
    let gamma0 = fit.slope.exp();
    if gamma0 >= 1.0 {
        return Err(Error::NotContracting { gamma0 });
    }
    Ok(ContractionReport {
        c: fit.intercept.exp(),
        gamma0,
        r_squared: fit.r_squared,
        sup_ratios,
        degenerate: false,
    })
}

/// Deterministic probe pairs on a lattice avoiding the base partition points.
pub fn default_pairs(count: usize) -> Vec<(f64, f64, f64)> {
    (0..count)
        .map(|k| {
            let t = (k as f64 + 0.5) / count as f64;
            let y = (0.618_033_988_749_894_9 * (k as f64 + 1.0)).fract() * 0.98 + 0.01;
            (y, 0.1 * t, 0.9 - 0.05 * t)
        })
        .collect()
}
