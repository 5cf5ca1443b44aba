use serde::{Deserialize, Serialize};

use super::map::ExpandingMap;
use super::word::BranchWord;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoofKind {
    Constant { value: f64 },
    /// Σ coeffs[k] x^k, the same polynomial on every cell.
    Polynomial { coeffs: Vec<f64> },
    /// One polynomial per cell, indexed like the branches.
    PerCell { coeffs: Vec<Vec<f64>> },
    /// base + per_cell·m + slope·x on cell m (unbounded on countable maps).
    CellLinear { base: f64, per_cell: f64, slope: f64 },
}

/// Return time R: Y -> (0,∞), C¹ on each partition cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoofFunction {
    pub kind: RoofKind,
    /// Moment parameter ε for Σ e^{ε|R∘h|}|h'| < ∞.
    pub epsilon: f64,
}

fn poly(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for &c in coeffs.iter().rev() {
        d = d * x + v;
        v = v * x + c;
    }
    (v, d)
}

impl RoofFunction {
    pub fn new(kind: RoofKind, epsilon: f64) -> Self {
        Self { kind, epsilon }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(RoofKind::Constant { value }, 0.1)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::new(RoofKind::Polynomial { coeffs }, 0.1)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// (R(x), R'(x)) for x in cell m.
    #[inline]
    pub fn eval(&self, cell: usize, x: f64) -> (f64, f64) {
        match &self.kind {
            RoofKind::Constant { value } => (*value, 0.0),
            RoofKind::Polynomial { coeffs } => poly(coeffs, x),
            RoofKind::PerCell { coeffs } => poly(&coeffs[cell], x),
            RoofKind::CellLinear {
                base,
                per_cell,
                slope,
            } => (base + per_cell * cell as f64 + slope * x, *slope),
        }
    }

    /// R(y) with the cell chosen by location (ties to the right-hand cell).
    pub fn value_at(&self, map: &ExpandingMap, y: f64) -> f64 {
        self.eval(map.cell_of(y), y).0
    }

    pub fn validate(&self, map: &ExpandingMap) -> Result<()> {
        if let RoofKind::PerCell { coeffs } = &self.kind {
            if coeffs.len() < map.active_branches() {
                return Err(Error::InvalidSpec(format!(
                    "roof has {} cell polynomials for {} branches",
                    coeffs.len(),
                    map.active_branches()
                )));
            }
        }
        let inf = self.inf(map);
        if !(inf > 0.0) {
            return Err(Error::InvalidSpec(format!("inf R = {inf} is not positive")));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidSpec("roof epsilon must be positive".into()));
        }
        Ok(())
    }

    fn cell_samples(&self, map: &ExpandingMap, m: usize, k: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (lo, hi) = map.cell(m);
        (0..=k).map(move |j| {
            let x = lo + (hi - lo) * j as f64 / k as f64;
            self.eval(m, x)
        })
    }

    /// inf R over the enumerated cells (sampled, 257 points per cell).
    pub fn inf(&self, map: &ExpandingMap) -> f64 {
        (0..map.active_branches())
            .flat_map(|m| self.cell_samples(map, m, 256).map(|(r, _)| r))
            .fold(f64::INFINITY, f64::min)
    }

    /// sup R over the enumerated cells (sampled).
    pub fn sup(&self, map: &ExpandingMap) -> f64 {
        (0..map.active_branches())
            .flat_map(|m| self.cell_samples(map, m, 256).map(|(r, _)| r))
            .fold(0.0, f64::max)
    }

    /// sup |R| on cell m (sampled).
    pub fn cell_sup(&self, map: &ExpandingMap, m: usize) -> f64 {
        self.cell_samples(map, m, 256)
            .map(|(r, _)| r.abs())
            .fold(0.0, f64::max)
    }

    /// Σ_{m ≥ M} e^{ε|R∘h_m|}|h_m'| for the branches beyond the truncation.
    pub fn tail_mass(&self, map: &ExpandingMap) -> f64 {
        use super::map::MapKind;
        match &map.kind {
            MapKind::Finite { branches } => (map.active_branches()..branches.len())
                .map(|m| (self.epsilon * self.cell_sup(map, m)).exp() * map.branch_derivative_sup(m))
                .sum(),
            MapKind::Geometric { ratio } => {
                let r = *ratio;
                let mm = map.active_branches() as i32;
                match &self.kind {
                    RoofKind::CellLinear {
                        base,
                        per_cell,
                        slope,
                    } => {
                        let q = (self.epsilon * per_cell).exp() * r;
                        if q >= 1.0 {
                            return f64::INFINITY;
                        }
                        let lead = (self.epsilon * (base + slope.abs())).exp() * (1.0 - r);
                        lead * q.powi(mm) / (1.0 - q)
                    }
                    _ => {
                        // Cells beyond M live in [0, r^M]; Σ_{m≥M} |h_m'| = r^M.
                        let edge = r.powi(mm);
                        let sup = (0..=256)
                            .map(|j| self.eval(mm as usize, edge * j as f64 / 256.0).0.abs())
                            .fold(0.0, f64::max);
                        (self.epsilon * sup).exp() * edge
                    }
                }
            }
        }
    }

    /// R_n(h y) and its derivative in y, by the analytic chain rule.
    pub fn birkhoff(&self, map: &ExpandingMap, word: &BranchWord, y: f64) -> (f64, f64) {
        birkhoff_letters(map, self, word.letters(), y)
    }
}

/// Birkhoff sum along h_{i1}∘…∘h_{in}, innermost letter applied first.
pub fn birkhoff_letters(map: &ExpandingMap, roof: &RoofFunction, letters: &[usize], y: f64) -> (f64, f64) {
    let mut x = y;
    let mut dx = 1.0;
    let mut sum = 0.0;
    let mut dsum = 0.0;
    for &m in letters.iter().rev() {
        let (nx, d) = map.inverse(m, x);
        x = nx;
        dx *= d;
        let (r, dr) = roof.eval(m, x);
        sum += r;
        dsum += dr * dx;
    }
    (sum, dsum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;

    #[test]
    fn polynomial_evaluation_with_derivative() {
        let (v, d) = poly(&[2.0, 0.0, 0.5], 1.0);
        assert_eq!((v, d), (2.5, 1.0));
        let (v, d) = poly(&[1.0, -2.0, 0.0, 3.0], 2.0);
        assert_eq!((v, d), (1.0 - 4.0 + 24.0, -2.0 + 36.0));
    }

    #[test]
    fn quadratic_roof_birkhoff_examples() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let w0 = BranchWord::new(&map, vec![0]).unwrap();
        let w1 = BranchWord::new(&map, vec![1]).unwrap();
        assert_eq!(roof.birkhoff(&map, &w0, 0.0), (2.0, 0.0));
        let (v, d) = roof.birkhoff(&map, &w1, 1.0);
        assert!((v - 2.5).abs() < 1e-15 && (d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_roof_sums_linearly() {
        let map = zoo::ternary_map();
        let roof = RoofFunction::constant(2.0);
        let w = BranchWord::new(&map, vec![2, 0, 1, 1]).unwrap();
        assert_eq!(roof.birkhoff(&map, &w, 0.37), (8.0, 0.0));
    }

    #[test]
    fn geometric_tail_closed_form() {
        let map = zoo::geometric_map(0.5).with_truncation(10);
        let roof = RoofFunction::new(
            RoofKind::CellLinear {
                base: 1.0,
                per_cell: 0.5,
                slope: 0.0,
            },
            0.1,
        );
        let direct: f64 = (10..400)
            .map(|m| (0.1 * (1.0 + 0.5 * m as f64)).exp() * 0.5f64.powi(m) * 0.5)
            .sum();
        assert!((roof.tail_mass(&map) - direct).abs() < 1e-12 * direct.max(1.0));
        assert!(roof.tail_mass(&map) > 0.0);
    }

    #[test]
    fn inf_and_sup_of_quadratic_roof() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        assert_eq!(roof.inf(&map), 2.0);
        assert_eq!(roof.sup(&map), 2.5);
    }
}
