use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance below which a point counts as sitting on a partition endpoint.
pub const BOUNDARY_TOL: f64 = 1e-14;

/// Closed-form inverse branch h: [0,1] -> [c,d].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Branch {
    /// h(y) = lo + (hi - lo) y when increasing, hi - (hi - lo) y otherwise.
    Affine { lo: f64, hi: f64, increasing: bool },
    /// h(y) = (a y + b) / (c y + d).
    Mobius { a: f64, b: f64, c: f64, d: f64 },
}

impl Branch {
    pub fn inverse(&self, y: f64) -> (f64, f64) {
        match *self {
            Branch::Affine { lo, hi, increasing } => {
                if increasing {
                    (lo + (hi - lo) * y, hi - lo)
                } else {
                    (hi - (hi - lo) * y, lo - hi)
                }
            }
            Branch::Mobius { a, b, c, d } => {
                let den = c * y + d;
                ((a * y + b) / den, (a * d - b * c) / (den * den))
            }
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        match *self {
            Branch::Affine { lo, hi, increasing } => {
                let t = (x - lo) / (hi - lo);
                if increasing {
                    t
                } else {
                    1.0 - t
                }
            }
            Branch::Mobius { a, b, c, d } => (d * x - b) / (a - c * x),
        }
    }

    /// Image interval h([0,1]) as (lo, hi).
    pub fn cell(&self) -> (f64, f64) {
        let (x0, _) = self.inverse(0.0);
        let (x1, _) = self.inverse(1.0);
        (x0.min(x1), x0.max(x1))
    }

    /// Lipschitz constant of log|h'| on [0,1].
    pub fn log_derivative_lipschitz(&self) -> f64 {
        match *self {
            Branch::Affine { .. } => 0.0,
            Branch::Mobius { c, d, .. } => {
                let m = d.abs().min((c + d).abs());
                2.0 * c.abs() / m
            }
        }
    }

    /// Sign of h'.
    pub fn increasing(&self) -> bool {
        self.inverse(0.5).1 > 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MapKind {
    Finite { branches: Vec<Branch> },
    /// Cells [r^{m+1}, r^m], m >= 0, each mapped affinely and increasingly onto [0,1].
    Geometric { ratio: f64 },
}

/// Full-branch expanding map of Y = [0,1] given through its inverse branches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandingMap {
    pub name: String,
    pub kind: MapKind,
    pub alpha: f64,
    pub c1: f64,
    pub rho0: f64,
    /// Number of branches kept for countable families.
    pub truncation: usize,
}

impl ExpandingMap {
    pub fn new(name: &str, kind: MapKind, alpha: f64, c1: f64, rho0: f64) -> Result<Self> {
        let map = Self {
            name: name.to_string(),
            kind,
            alpha,
            c1,
            rho0,
            truncation: 64,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn with_truncation(mut self, m: usize) -> Self {
        self.truncation = m.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidSpec(format!("alpha={} not in (0,1]", self.alpha)));
        }
        if self.c1 < 1.0 {
            return Err(Error::InvalidSpec(format!("C1={} below 1", self.c1)));
        }
        if !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            return Err(Error::InvalidSpec(format!("rho0={} not in (0,1)", self.rho0)));
        }
        match &self.kind {
            MapKind::Finite { branches } => {
                if branches.is_empty() {
                    return Err(Error::InvalidSpec("map has no branches".into()));
                }
                let mut cells: Vec<(f64, f64)> = branches.iter().map(|b| b.cell()).collect();
                cells.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut covered = 0.0;
                for (lo, hi) in cells {
                    if (lo - covered).abs() > 1e-12 || hi <= lo {
                        return Err(Error::InvalidSpec("branch cells do not tile [0,1]".into()));
                    }
                    covered = hi;
                }
                if (covered - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidSpec("branch cells do not reach 1".into()));
                }
            }
            MapKind::Geometric { ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidSpec(format!("ratio={ratio} not in (0,1)")));
                }
            }
        }
        Ok(())
    }

    /// Total branch count, `None` for countable families.
    pub fn branch_count(&self) -> Option<usize> {
        match &self.kind {
            MapKind::Finite { branches } => Some(branches.len()),
            MapKind::Geometric { .. } => None,
        }
    }

    /// Branches actually enumerated: all of them, or the first `truncation`.
    pub fn active_branches(&self) -> usize {
        self.branch_count()
            .map_or(self.truncation, |n| n.min(self.truncation))
    }

    pub fn branch(&self, m: usize) -> Branch {
        match &self.kind {
            MapKind::Finite { branches } => branches[m].clone(),
            MapKind::Geometric { ratio } => {
                let hi = ratio.powi(m as i32);
                Branch::Affine {
                    lo: hi * ratio,
                    hi,
                    increasing: true,
                }
            }
        }
    }

    /// h_m(y) and h_m'(y).
    #[inline]
    pub fn inverse(&self, m: usize, y: f64) -> (f64, f64) {
        match &self.kind {
            MapKind::Finite { branches } => branches[m].inverse(y),
            MapKind::Geometric { ratio } => {
                let hi = ratio.powi(m as i32);
                let lo = hi * ratio;
                (lo + (hi - lo) * y, hi - lo)
            }
        }
    }

    pub fn cell(&self, m: usize) -> (f64, f64) {
        self.branch(m).cell()
    }

    /// Partition endpoints strictly inside (0,1), for the enumerated branches.
    pub fn interior_endpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = (0..self.active_branches())
            .flat_map(|m| {
                let (lo, hi) = self.cell(m);
                [lo, hi]
            })
            .filter(|&x| x > BOUNDARY_TOL && x < 1.0 - BOUNDARY_TOL)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < BOUNDARY_TOL);
        pts
    }

    /// Cell index containing y; ties go to the cell starting at y.
    pub fn cell_of(&self, y: f64) -> usize {
        match &self.kind {
            MapKind::Finite { branches } => {
                let mut best = 0;
                for (m, b) in branches.iter().enumerate() {
                    let (lo, hi) = b.cell();
                    if y >= lo && (y < hi || (hi >= 1.0 && y <= hi)) {
                        return m;
                    }
                    if (y - lo).abs() < (y - self.cell(best).0).abs() {
                        best = m;
                    }
                }
                best
            }
            MapKind::Geometric { ratio } => {
                if y <= 0.0 {
                    return self.truncation.saturating_sub(1);
                }
                let mut m = (y.ln() / ratio.ln()).floor().max(0.0) as usize;
                while m > 0 && y >= ratio.powi(m as i32) {
                    m -= 1;
                }
                while y < ratio.powi(m as i32 + 1) {
                    m += 1;
                }
                m
            }
        }
    }

    /// Cell index of y, rejecting points on interior partition endpoints.
    pub fn locate(&self, y: f64) -> Result<usize> {
        let m = self.cell_of(y);
        let (lo, hi) = self.cell(m);
        let on_lo = lo > BOUNDARY_TOL && (y - lo).abs() < BOUNDARY_TOL;
        let on_hi = hi < 1.0 - BOUNDARY_TOL && (y - hi).abs() < BOUNDARY_TOL;
        if on_lo || on_hi || (matches!(self.kind, MapKind::Geometric { .. }) && y <= 0.0) {
            return Err(Error::OrbitHitsBoundary {
                start: y,
                iterate: 0,
                value: y,
            });
        }
        Ok(m)
    }

    /// F(y) together with the cell that was used.
    pub fn forward(&self, y: f64) -> Result<(f64, usize)> {
        let m = self.locate(y)?;
        let image = match &self.kind {
            MapKind::Finite { branches } => branches[m].forward(y),
            MapKind::Geometric { .. } => self.branch(m).forward(y),
        };
        Ok((image.clamp(0.0, 1.0), m))
    }

    /// Orbit y, F y, ..., F^n y.
    pub fn eval_forward(&self, y: f64, n: usize) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Precondition(format!("y={y} outside [0,1]")));
        }
        let mut orbit = Vec::with_capacity(n + 1);
        orbit.push(y);
        let mut x = y;
        for j in 0..n {
            x = match self.forward(x) {
                Ok((next, _)) => next,
                Err(_) => {
                    return Err(Error::OrbitHitsBoundary {
                        start: y,
                        iterate: j,
                        value: x,
                    })
                }
            };
            orbit.push(x);
        }
        Ok(orbit)
    }

    /// sup |h_m'| over [0,1] from endpoint and midpoint samples plus the closed form extremes.
    pub fn branch_derivative_sup(&self, m: usize) -> f64 {
        match self.branch(m) {
            Branch::Affine { lo, hi, .. } => hi - lo,
            b @ Branch::Mobius { .. } => {
                // |h'| is monotone on [0,1] for a Möbius branch with no pole there.
                b.inverse(0.0).1.abs().max(b.inverse(1.0).1.abs())
            }
        }
    }

    pub fn branch_derivative_inf(&self, m: usize) -> f64 {
        match self.branch(m) {
            Branch::Affine { lo, hi, .. } => hi - lo,
            b @ Branch::Mobius { .. } => b.inverse(0.0).1.abs().min(b.inverse(1.0).1.abs()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;

    #[test]
    fn doubling_forward_orbits() {
        let map = zoo::doubling_map();
        assert_eq!(map.eval_forward(0.0, 3).unwrap(), vec![0.0; 4]);
        let orbit = map.eval_forward(0.3, 2).unwrap();
        assert!((orbit[1] - 0.6).abs() < 1e-15);
        assert!((orbit[2] - 0.2).abs() < 1e-14);
        assert!(matches!(
            map.eval_forward(0.5, 1),
            Err(Error::OrbitHitsBoundary { .. })
        ));
    }

    #[test]
    fn forward_inverts_each_branch() {
        for map in [zoo::doubling_map(), zoo::ternary_map(), zoo::mobius_map()] {
            for m in 0..map.active_branches() {
                for k in 1..20 {
                    let y = k as f64 / 20.0;
                    let (x, _) = map.inverse(m, y);
                    let (back, cell) = map.forward(x).unwrap();
                    assert_eq!(cell, m);
                    assert!((back - y).abs() < 1e-13, "{} branch {m}", map.name);
                }
            }
        }
    }

    #[test]
    fn geometric_cells_locate() {
        let map = zoo::geometric_map(0.5).with_truncation(10);
        assert_eq!(map.cell_of(0.75), 0);
        assert_eq!(map.cell_of(0.3), 1);
        assert_eq!(map.cell_of(0.2), 2);
        let (x, d) = map.inverse(3, 0.5);
        assert!((x - 0.09375).abs() < 1e-15 && (d - 0.0625).abs() < 1e-15);
        assert!(map.locate(0.5).is_err());
    }

    #[test]
    fn cells_must_tile() {
        let bad = MapKind::Finite {
            branches: vec![Branch::Affine {
                lo: 0.0,
                hi: 0.5,
                increasing: true,
            }],
        };
        assert!(ExpandingMap::new("bad", bad, 1.0, 1.0, 0.5).is_err());
    }
}
