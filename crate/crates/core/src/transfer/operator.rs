use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{compose, BranchWord, ExpandingMap, RoofFunction};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Output nodes handled per parallel task; fixed so results do not depend on the pool size.
pub(crate) const NODE_CHUNK: usize = 64;

/// Default bound on the truncation tail mass.
pub const DEFAULT_TAIL_BOUND: f64 = 1e-6;

#[derive(Clone, Debug)]
struct BranchTable {
    /// h_m(y_k).
    x: Vec<f64>,
    abs_deriv: Vec<f64>,
    roof: Vec<f64>,
    idx: Vec<usize>,
    frac: Vec<f64>,
}

/// Single-branch data of P_s at the nodes of a uniform grid.
#[derive(Clone, Debug)]
pub struct TwistedOperator {
    n: usize,
    alpha: f64,
    tables: Vec<BranchTable>,
    pub tail_mass: f64,
}

#[inline]
fn locate(n: usize, x: f64) -> (usize, f64) {
    let pos = x.clamp(0.0, 1.0) * n as f64;
    let k = (pos.floor() as usize).min(n - 1);
    (k, pos - k as f64)
}

#[inline]
fn interp(v: &[Complex64], i: usize, t: f64) -> Complex64 {
    v[i] * (1.0 - t) + v[i + 1] * t
}

impl TwistedOperator {
    pub fn new(map: &ExpandingMap, roof: &RoofFunction, n: usize) -> Result<Self> {
        Self::with_tail_bound(map, roof, n, DEFAULT_TAIL_BOUND)
    }

    pub fn with_tail_bound(map: &ExpandingMap, roof: &RoofFunction, n: usize, bound: f64) -> Result<Self> {
        assert!(n >= 2);
        let tail_mass = roof.tail_mass(map);
        if tail_mass > bound {
            return Err(Error::TruncationTailTooLarge {
                tail: tail_mass,
                bound,
            });
        }
        let tables = (0..map.active_branches())
            .map(|m| {
                let mut t = BranchTable {
                    x: Vec::with_capacity(n + 1),
                    abs_deriv: Vec::with_capacity(n + 1),
                    roof: Vec::with_capacity(n + 1),
                    idx: Vec::with_capacity(n + 1),
                    frac: Vec::with_capacity(n + 1),
                };
                for k in 0..=n {
                    let (x, d) = map.inverse(m, k as f64 / n as f64);
                    let (i, f) = locate(n, x);
                    t.x.push(x);
                    t.abs_deriv.push(d.abs());
                    t.roof.push(roof.eval(m, x).0);
                    t.idx.push(i);
                    t.frac.push(f);
                }
                t
            })
            .collect();
        Ok(Self {
            n,
            alpha: map.alpha,
            tables,
            tail_mass,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn branches(&self) -> usize {
        self.tables.len()
    }

    /// Complex weights e^{−sR(h_m y_k)}|h_m'(y_k)| for every branch.
    pub fn kernel(&self, s: Complex64) -> Kernel<'_> {
        let weights = self
            .tables
            .iter()
            .map(|t| {
                t.roof
                    .iter()
                    .zip(&t.abs_deriv)
                    .map(|(&r, &d)| (-s * r).exp() * d)
                    .collect()
            })
            .collect();
        Kernel {
            s,
            weights,
            op: self,
        }
    }

    /// P_s applied to a function given pointwise (evaluated exactly at h_m(y_k)).
    pub fn apply_fn(&self, s: Complex64, f: impl Fn(usize, f64) -> Complex64 + Sync) -> GridFunction {
        let kernel = self.kernel(s);
        let mut out = vec![Complex64::new(0.0, 0.0); self.n + 1];
        out.par_chunks_mut(NODE_CHUNK).enumerate().for_each(|(c, chunk)| {
            for (j, o) in chunk.iter_mut().enumerate() {
                let k = c * NODE_CHUNK + j;
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, t) in self.tables.iter().enumerate() {
                    acc += kernel.weights[m][k] * f(m, t.x[k]);
                }
                *o = acc;
            }
        });
        GridFunction::new(out, self.alpha)
    }

    /// Images h_m(y_k) of the grid nodes.
    pub fn branch_points(&self, m: usize) -> &[f64] {
        &self.tables[m].x
    }
}

/// P_s frozen at one s.
pub struct Kernel<'a> {
    pub s: Complex64,
    weights: Vec<Vec<Complex64>>,
    op: &'a TwistedOperator,
}

impl Kernel<'_> {
    pub fn apply(&self, v: &GridFunction) -> GridFunction {
        let op = self.op;
        assert_eq!(v.n(), op.n, "grid mismatch");
        let vals = v.values();
        let mut out = vec![Complex64::new(0.0, 0.0); op.n + 1];
        out.par_chunks_mut(NODE_CHUNK).enumerate().for_each(|(c, chunk)| {
            for (j, o) in chunk.iter_mut().enumerate() {
                let k = c * NODE_CHUNK + j;
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, t) in op.tables.iter().enumerate() {
                    acc += self.weights[m][k] * interp(vals, t.idx[k], t.frac[k]);
                }
                *o = acc;
            }
        });
        GridFunction::new(out, v.alpha())
    }

    pub fn apply_n(&self, v: &GridFunction, times: usize) -> GridFunction {
        let mut cur = v.clone();
        for _ in 0..times {
            cur = self.apply(&cur);
        }
        cur
    }
}

/// A_{s,h,n}v = e^{−sR_n∘h}|h'| v∘h on the grid of v.
pub fn apply_a(map: &ExpandingMap, roof: &RoofFunction, word: &BranchWord, s: Complex64, v: &GridFunction) -> GridFunction {
    let n = v.n();
    let values = (0..n + 1)
        .into_par_iter()
        .with_min_len(NODE_CHUNK)
        .map(|k| {
            let y = k as f64 / n as f64;
            let (x, d) = word.eval(map, y);
            let (r, _) = roof.birkhoff(map, word, y);
            (-s * r).exp() * d.abs() * v.eval(x)
        })
        .collect();
    GridFunction::new(values, v.alpha())
}

/// P_s v = Σ_m A_{s,h_m} v.
pub fn apply_p(map: &ExpandingMap, roof: &RoofFunction, s: Complex64, v: &GridFunction) -> Result<GridFunction> {
    let op = TwistedOperator::new(map, roof, v.n())?;
    Ok(op.kernel(s).apply(v))
}

/// Σ_{h∈ℋ_n} A_{s,h,n} v by direct summation over words.
pub fn apply_word_sum(map: &ExpandingMap, roof: &RoofFunction, n: usize, s: Complex64, v: &GridFunction) -> GridFunction {
    let k = map.active_branches();
    let grid = v.n();
    let values = (0..grid + 1)
        .into_par_iter()
        .with_min_len(8)
        .map(|node| {
            let y = node as f64 / grid as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut letters = vec![0usize; n];
            let total = k.pow(n as u32);
            for _ in 0..total {
                let (x, d) = compose(map, &letters, y);
                let (r, _) = crate::dynamics::birkhoff_letters(map, roof, &letters, y);
                acc += (-s * r).exp() * d.abs() * v.eval(x);
                for pos in (0..n).rev() {
                    letters[pos] += 1;
                    if letters[pos] < k {
                        break;
                    }
                    letters[pos] = 0;
                }
            }
            acc
        })
        .collect();
    GridFunction::new(values, v.alpha())
}
