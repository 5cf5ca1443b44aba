use rayon::prelude::*;

use crate::dynamics::{birkhoff_letters, enumerate_words, ExpandingMap, RoofFunction};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::quadrature::GaussLegendre;

/// Quadrature node for ∫_Y g dμ written as Σ_{h∈H_n} ∫ g(h z)|h′(z)| f₀(h z) dz.
#[derive(Clone, Copy, Debug)]
pub struct LevelNode {
    pub z: f64,
    pub y: f64,
    pub weight: f64,
    /// R_n(y).
    pub rn: f64,
    /// R(y).
    pub ry: f64,
    /// R(z) = R(Fⁿ y).
    pub rz: f64,
}

/// Upper limit on the words enumerated for one level.
pub const MAX_LEVEL_WORDS: usize = 1 << 20;

/// Base quadrature settings: Gauss–Legendre order and panels per partition cell.
#[derive(Clone, Copy, Debug)]
pub struct LevelRule {
    pub order: usize,
    pub panels: usize,
}

impl Default for LevelRule {
    fn default() -> Self {
        Self { order: 8, panels: 2 }
    }
}

/// Nodes on every level 0..=n_max, built once and reused across times.
#[derive(Clone, Debug)]
pub struct LevelQuadrature {
    pub levels: Vec<Vec<LevelNode>>,
    pub mean_roof: f64,
    pub roof_inf: f64,
    pub roof_sup: f64,
}

fn cell_nodes(map: &ExpandingMap, rule: LevelRule) -> Vec<(usize, f64, f64)> {
    let gl = GaussLegendre::new(rule.order);
    let mut out = Vec::new();
    for m in 0..map.active_branches() {
        let (lo, hi) = map.cell(m);
        let width = (hi - lo) / rule.panels as f64;
        for p in 0..rule.panels {
            let a = lo + p as f64 * width;
            out.extend(gl.on(a, a + width).map(|(z, w)| (m, z, w)));
        }
    }
    out
}

fn level(map: &ExpandingMap, roof: &RoofFunction, f0: &GridFunction, n: usize, base: &[(usize, f64, f64)]) -> Result<Vec<LevelNode>> {
    if n == 0 {
        return Ok(base
            .iter()
            .map(|&(m, z, w)| {
                let r = roof.eval(m, z).0;
                LevelNode {
                    z,
                    y: z,
                    weight: w * f0.eval(z).re,
                    rn: 0.0,
                    ry: r,
                    rz: r,
                }
            })
            .collect());
    }
    let k = map.active_branches();
    if k.checked_pow(n as u32).is_none_or(|c| c > MAX_LEVEL_WORDS) {
        return Err(Error::Precondition(format!("level {n} needs {k}^{n} words")));
    }
    let words = enumerate_words(map, roof, n, None)?.words;
    Ok(words
        .par_iter()
        .flat_map_iter(|word| {
            let letters = word.letters();
            let outer = letters[0];
            base.iter().map(move |&(m, z, w)| {
                let (y, dy) = word.eval(map, z);
                let (rn, _) = birkhoff_letters(map, roof, letters, z);
                LevelNode {
                    z,
                    y,
                    weight: w * dy.abs() * f0.eval(y).re,
                    rn,
                    ry: roof.eval(outer, y).0,
                    rz: roof.eval(m, z).0,
                }
            })
        })
        .collect())
}

impl LevelQuadrature {
    pub fn new(map: &ExpandingMap, roof: &RoofFunction, f0: &GridFunction, n_max: usize, rule: LevelRule) -> Result<Self> {
        let base = cell_nodes(map, rule);
        let levels = (0..=n_max)
            .map(|n| level(map, roof, f0, n, &base))
            .collect::<Result<Vec<_>>>()?;
        let mass: f64 = levels[0].iter().map(|p| p.weight).sum();
        let mean_roof = levels[0].iter().map(|p| p.weight * p.ry).sum::<f64>() / mass;
        Ok(Self {
            levels,
            mean_roof,
            roof_inf: roof.inf(map),
            roof_sup: roof.sup(map),
        })
    }

    /// Levels needed for every time up to t_max.
    pub fn for_horizon(map: &ExpandingMap, roof: &RoofFunction, f0: &GridFunction, t_max: f64, rule: LevelRule) -> Result<Self> {
        Self::new(map, roof, f0, series_levels(roof.inf(map), roof.sup(map), t_max), rule)
    }

    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    /// Levels n whose window R_n < u + t ≤ R_{n+1} can be non-empty.
    pub fn active_levels(&self, t: f64) -> impl Iterator<Item = (usize, &[LevelNode])> {
        let (lo, hi) = (self.roof_inf, self.roof_sup);
        self.levels
            .iter()
            .enumerate()
            .filter(move |(n, _)| *n as f64 * lo <= t + hi && (*n + 1) as f64 * hi >= t)
            .map(|(n, l)| (n, l.as_slice()))
    }
}

/// Nodes per parallel chunk; chunk sums are combined in index order.
pub const NODE_CHUNK: usize = 64;

/// Σ f(node) with a reduction order independent of the worker count.
pub fn ordered_sum<T, F>(nodes: &[LevelNode], f: F) -> T
where
    T: Send + Copy + std::iter::Sum<T>,
    F: Fn(&LevelNode) -> T + Sync,
{
    let parts: Vec<T> = nodes.par_chunks(NODE_CHUNK).map(|c| c.iter().map(&f).sum()).collect();
    parts.into_iter().sum()
}

/// ⌈(t + sup R)/inf R⌉ + 2.
pub fn series_levels(roof_inf: f64, roof_sup: f64, t: f64) -> usize {
    ((t + roof_sup) / roof_inf).ceil() as usize + 2
}

/// u-range of {0 ≤ u < R(y), R_n(y) ≤ u + t < R_{n+1}(y)}.
#[inline]
pub fn window(node: &LevelNode, t: f64) -> Option<(f64, f64)> {
    let a = (node.rn - t).max(0.0);
    let b = node.ry.min(node.rn + node.rz - t);
    (b > a).then_some((a, b))
}

/// Gauss–Legendre on [a,b] split into panels no longer than `max_panel`.
pub fn integrate_panels(gl: &GaussLegendre, a: f64, b: f64, max_panel: f64, f: impl Fn(f64) -> f64) -> f64 {
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            gl.integrate(lo, lo + h, &f)
        })
        .sum()
}
