use serde::Serialize;

use crate::dynamics::{ExpandingMap, RoofFunction};
use crate::error::{Error, Result};

/// (y, u) with 0 ≤ u < R(y).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuspensionPoint {
    pub y: f64,
    pub u: f64,
}

impl SuspensionPoint {
    pub fn new(y: f64, u: f64) -> Self {
        Self { y, u }
    }

    /// Applies (y, R(y)) ~ (F y, 0) until u < R(y); returns the number of identifications.
    pub fn normalize(self, map: &ExpandingMap, roof: &RoofFunction) -> Result<(Self, usize)> {
        let (mut y, mut u) = (self.y, self.u);
        let mut visits = 0;
        loop {
            let m = map.locate(y).map_err(|_| Error::OrbitHitsBoundary {
                start: self.y,
                iterate: visits,
                value: y,
            })?;
            let r = roof.eval(m, y).0;
            if u < r {
                return Ok((Self { y, u }, visits));
            }
            u -= r;
            y = map.forward(y)?.0;
            visits += 1;
        }
    }
}

/// F_t(y,u) and the number of roof crossings ψ_t.
pub fn flow(map: &ExpandingMap, roof: &RoofFunction, point: SuspensionPoint, t: f64) -> Result<(SuspensionPoint, usize)> {
    if t < 0.0 {
        return Err(Error::Precondition(format!("flow time {t} is negative")));
    }
    SuspensionPoint::new(point.y, point.u + t).normalize(map, roof)
}
