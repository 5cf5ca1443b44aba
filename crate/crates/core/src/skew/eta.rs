use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

use super::fiber::{FiberSpace, SkewMap};
use super::observable::SkewObservable;

/// Fiber grid intervals; the interval fiber carries FIBER_GRID + 1 nodes.
pub const FIBER_GRID: usize = 256;

/// Share of base nodes allowed to miss the tolerance before NotConverged.
pub const FLAG_FRACTION: f64 = 0.01;

/// Discrete fiber measures ν_{n,y} on base nodes y_k = k/N and fiber nodes z_j = j/M.
#[derive(Clone, Debug)]
pub struct EtaMeasure {
    n_base: usize,
    m: usize,
    space: FiberSpace,
    mass: Vec<f64>,
}

impl EtaMeasure {
    fn nodes(space: FiberSpace, m: usize) -> usize {
        match space {
            FiberSpace::Interval => m + 1,
            FiberSpace::Circle => m,
        }
    }

    /// ν_{0,y} = δ₀ at every y.
    pub fn dirac_zero(n_base: usize, m: usize, space: FiberSpace) -> Self {
        let nz = Self::nodes(space, m);
        let mut mass = vec![0.0; (n_base + 1) * nz];
        for k in 0..=n_base {
            mass[k * nz] = 1.0;
        }
        Self { n_base, m, space, mass }
    }

    pub fn fiber_nodes(&self) -> usize {
        Self::nodes(self.space, self.m)
    }

    pub fn fiber_point(&self, j: usize) -> f64 {
        j as f64 / self.m as f64
    }

    fn row(&self, k: usize) -> &[f64] {
        let nz = self.fiber_nodes();
        &self.mass[k * nz..(k + 1) * nz]
    }

    /// ∫ g dν at base node k.
    pub fn average_at_node(&self, k: usize, g: impl Fn(f64) -> f64) -> f64 {
        self.row(k).iter().enumerate().map(|(j, &w)| w * g(self.fiber_point(j))).sum()
    }

    /// ∫ g dν_y with ν_y linearly interpolated between base nodes.
    pub fn average(&self, y: f64, g: impl Fn(f64) -> f64) -> f64 {
        let pos = y.clamp(0.0, 1.0) * self.n_base as f64;
        let k = (pos.floor() as usize).min(self.n_base - 1);
        let t = pos - k as f64;
        let (a, b) = (self.row(k), self.row(k + 1));
        (0..self.fiber_nodes())
            .map(|j| ((1.0 - t) * a[j] + t * b[j]) * g(self.fiber_point(j)))
            .sum()
    }

    /// Total mass at node k.
    pub fn mass_at(&self, k: usize) -> f64 {
        self.row(k).iter().sum()
    }

    fn deposit(&self, row: &mut [f64], z: f64, w: f64) {
        let m = self.m as f64;
        match self.space {
            FiberSpace::Interval => {
                let pos = z.clamp(0.0, 1.0) * m;
                let lo = (pos.floor() as usize).min(self.m - 1);
                let t = pos - lo as f64;
                row[lo] += w * (1.0 - t);
                row[lo + 1] += w * t;
            }
            FiberSpace::Circle => {
                let pos = z.rem_euclid(1.0) * m;
                let lo = (pos.floor() as usize) % self.m;
                let t = pos - pos.floor();
                row[lo] += w * (1.0 - t);
                row[(lo + 1) % self.m] += w * t;
            }
        }
    }

    /// ν_{n+1,y} = Σ_m w_m(y) G(h_m y,·)_* ν_{n,h_m y}, weights w_m = |h_m′| f₀∘h_m / f₀ normalized.
    pub fn step(&self, f: &SkewMap, f0: &GridFunction) -> Self {
        let nz = self.fiber_nodes();
        let n = self.n_base;
        let branches = f.base.active_branches();
        let mut mass = vec![0.0; self.mass.len()];
        mass.par_chunks_mut(nz).enumerate().for_each(|(k, row)| {
            let y = k as f64 / n as f64;
            let pre: Vec<(f64, f64)> = (0..branches)
                .map(|m| {
                    let (x, d) = f.base.inverse(m, y);
                    (x, d.abs() * f0.eval(x).re)
                })
                .collect();
            let total: f64 = pre.iter().map(|p| p.1).sum();
            for &(x, w) in &pre {
                let w = w / total;
                let pos = x.clamp(0.0, 1.0) * n as f64;
                let i = (pos.floor() as usize).min(n - 1);
                let t = pos - i as f64;
                let (a, b) = (self.row(i), self.row(i + 1));
                for j in 0..nz {
                    let m_j = (1.0 - t) * a[j] + t * b[j];
                    if m_j != 0.0 {
                        self.deposit(row, f.fiber.eval(x, self.fiber_point(j)), w * m_j);
                    }
                }
            }
        });
        Self {
            n_base: n,
            m: self.m,
            space: self.space,
            mass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaAverage {
    pub n: usize,
    /// v̄(y_k) = (Lⁿ vₙ)(y_k) at the final n.
    #[serde(skip)]
    pub vbar: GridFunction,
    /// sup_k |Lⁿvₙ − L^{n−1}v_{n−1}| for n = 1..=N.
    pub increments: Vec<f64>,
    /// Base nodes whose last increment exceeds the tolerance.
    pub flagged_nodes: usize,
    pub tolerance: f64,
    /// ‖v̄‖_α = |v̄|∞ + |v̄|_α on the grid.
    pub vbar_norm: f64,
    /// ‖v̄‖_α / ‖v‖_α with the declared norm of v.
    pub norm_ratio: f64,
    #[serde(skip)]
    pub measure: EtaMeasure,
}

impl EtaAverage {
    /// η_y(v) by interpolation in y.
    pub fn at(&self, y: f64) -> f64 {
        self.vbar.eval(y).re
    }
}

/// ηᵧ(v(·,·,u)) ≈ (Lⁿvₙ)(y) with vₙ(y) = v(fⁿ(y,0)), on the grid of f₀.
pub fn eta_average(f: &SkewMap, f0: &GridFunction, v: &SkewObservable, u: f64, n: usize, tol: f64) -> Result<EtaAverage> {
    if n == 0 {
        return Err(Error::Precondition("eta_average needs n >= 1".into()));
    }
    let nb = f0.n();
    let mut nu = EtaMeasure::dirac_zero(nb, FIBER_GRID, f.space());
    let eval = |nu: &EtaMeasure| -> Vec<f64> {
        (0..=nb)
            .into_par_iter()
            .map(|k| {
                let y = k as f64 / nb as f64;
                nu.average_at_node(k, |z| v.eval(y, z, u))
            })
            .collect()
    };
    let mut prev = eval(&nu);
    let mut increments = Vec::with_capacity(n);
    let mut last_node_inc = vec![0.0; nb + 1];
    for _ in 0..n {
        nu = nu.step(f, f0);
        let cur = eval(&nu);
        for (k, d) in last_node_inc.iter_mut().enumerate() {
            *d = (cur[k] - prev[k]).abs();
        }
        increments.push(last_node_inc.iter().copied().fold(0.0, f64::max));
        prev = cur;
    }
    let flagged_nodes = last_node_inc.iter().filter(|&&d| d > tol).count();
    if flagged_nodes as f64 > FLAG_FRACTION * (nb + 1) as f64 {
        return Err(Error::NotConverged {
            increment: *increments.last().unwrap(),
        });
    }
    let vbar = GridFunction::new(prev.iter().map(|&x| Complex64::new(x, 0.0)).collect(), v.alpha);
    let vbar_norm = vbar.sup_norm() + vbar.holder_seminorm();
    let declared = v.sup + v.holder;
    Ok(EtaAverage {
        n,
        vbar,
        increments,
        flagged_nodes,
        tolerance: tol,
        vbar_norm,
        norm_ratio: if declared > 0.0 { vbar_norm / declared } else { 0.0 },
        measure: nu,
    })
}
