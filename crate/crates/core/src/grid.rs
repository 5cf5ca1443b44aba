//! Complex functions sampled on a uniform grid over [0,1].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Values on the N+1 nodes k/N, k = 0..=N, with piecewise-linear interpolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<Complex64>,
    alpha: f64,
}

impl GridFunction {
    pub fn new(values: Vec<Complex64>, alpha: f64) -> Self {
        assert!(values.len() >= 2, "grid needs at least two nodes");
        Self { values, alpha }
    }

    pub fn zeros(n: usize, alpha: f64) -> Self {
        Self::new(vec![ZERO; n + 1], alpha)
    }

    pub fn constant(n: usize, alpha: f64, c: Complex64) -> Self {
        Self::new(vec![c; n + 1], alpha)
    }

    pub fn from_fn(n: usize, alpha: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..=n).map(|k| f(k as f64 / n as f64)).collect();
        Self::new(values, alpha)
    }

    pub fn from_real_fn(n: usize, alpha: f64, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(n, alpha, |y| Complex64::new(f(y), 0.0))
    }

    /// Number of intervals N.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n() as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.n() as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Linear interpolation, clamped to [0,1].
    pub fn eval(&self, x: f64) -> Complex64 {
        let n = self.n();
        let pos = (x.clamp(0.0, 1.0)) * n as f64;
        let k = (pos.floor() as usize).min(n - 1);
        let t = pos - k as f64;
        self.values[k] * (1.0 - t) + self.values[k + 1] * t
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::new(self.values.iter().map(|&v| f(v)).collect(), self.alpha)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.n(), other.n(), "grid mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(values, self.alpha)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn min_re(&self) -> f64 {
        self.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }

    pub fn max_re(&self) -> f64 {
        self.values.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Hölder seminorm over node pairs at dyadic separations 1, 2, 4, ...
    pub fn holder_seminorm(&self) -> f64 {
        holder_dyadic(&self.values, self.alpha)
    }

    /// Hölder seminorm over all node pairs, O(N²).
    pub fn holder_seminorm_full(&self) -> f64 {
        holder_full(&self.values, self.alpha)
    }

    pub fn b_norm(&self, b: f64) -> f64 {
        b_norm_from(self.sup_norm(), self.holder_seminorm(), b, self.alpha)
    }

    pub fn b_norm_full(&self, b: f64) -> f64 {
        b_norm_from(self.sup_norm(), self.holder_seminorm_full(), b, self.alpha)
    }

    /// Trapezoid rule over [0,1].
    pub fn integrate(&self) -> Complex64 {
        trapezoid(&self.values)
    }

    /// Trapezoid rule of the nodewise product with a weight.
    pub fn integrate_weighted(&self, weight: &GridFunction) -> Complex64 {
        assert_eq!(self.n(), weight.n(), "grid mismatch");
        let prod: Vec<Complex64> = self
            .values
            .iter()
            .zip(&weight.values)
            .map(|(&a, &b)| a * b)
            .collect();
        trapezoid(&prod)
    }

    /// Exact integral over [a,b] of the product of two piecewise-linear interpolants.
    pub fn integrate_product_on(&self, weight: &GridFunction, a: f64, b: f64) -> Complex64 {
        assert_eq!(self.n(), weight.n(), "grid mismatch");
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        if b <= a {
            return ZERO;
        }
        let n = self.n() as f64;
        let k0 = ((a * n).floor() as usize).min(self.n() - 1);
        let k1 = ((b * n).ceil() as usize).clamp(k0 + 1, self.n());
        let mut total = ZERO;
        for k in k0..k1 {
            let lo = (k as f64 / n).max(a);
            let hi = ((k + 1) as f64 / n).min(b);
            if hi <= lo {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            // Simpson is exact for the quadratic product on one cell.
            let f = |x: f64| self.eval_in_cell(k, x) * weight.eval_in_cell(k, x);
            total += (f(lo) + f(mid) * 4.0 + f(hi)) * ((hi - lo) / 6.0);
        }
        total
    }

    fn eval_in_cell(&self, k: usize, x: f64) -> Complex64 {
        let t = x * self.n() as f64 - k as f64;
        self.values[k] * (1.0 - t) + self.values[k + 1] * t
    }
}

pub fn b_norm_from(sup: f64, holder: f64, b: f64, alpha: f64) -> f64 {
    sup.max(holder / (1.0 + b.abs().powf(alpha)))
}

pub fn trapezoid(values: &[Complex64]) -> Complex64 {
    let n = values.len() - 1;
    let h = 1.0 / n as f64;
    let inner: Complex64 = values[1..n].iter().sum();
    (inner + (values[0] + values[n]) * 0.5) * h
}

fn holder_dyadic(values: &[Complex64], alpha: f64) -> f64 {
    let n = values.len() - 1;
    let h = 1.0 / n as f64;
    let mut best = 0.0f64;
    let mut d = 1;
    while d <= n {
        let denom = (d as f64 * h).powf(alpha);
        let worst = (0..=n - d)
            .map(|k| (values[k + d] - values[k]).norm())
            .fold(0.0, f64::max);
        best = best.max(worst / denom);
        d *= 2;
    }
    best
}

fn holder_full(values: &[Complex64], alpha: f64) -> f64 {
    use rayon::prelude::*;
    let n = values.len() - 1;
    let h = 1.0 / n as f64;
    let pow: Vec<f64> = (0..=n).map(|d| (d as f64 * h).powf(alpha)).collect();
    let per_row: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let vi = values[i];
            let mut worst = 0.0f64;
            for j in i + 1..=n {
                let r = (values[j] - vi).norm() / pow[j - i];
                if r > worst {
                    worst = r;
                }
            }
            worst
        })
        .collect();
    per_row.into_iter().fold(0.0, f64::max)
}
