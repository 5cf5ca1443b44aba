use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::linear_fit;

use super::levels::{ordered_sum, window, LevelQuadrature};

#[derive(Clone, Debug, Serialize)]
pub struct VisitCurve {
    pub gamma: f64,
    /// (t, ∫γ^{ψ_t} dμ^R).
    pub points: Vec<(f64, f64)>,
    /// Fitted decay rate δ̂ of the log-linear fit.
    pub delta: f64,
    pub c_const: f64,
    pub r_squared: f64,
}

impl VisitCurve {
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.points.iter().find(|p| p.0 == t).map(|p| p.1)
    }
}

/// ∫γ^{ψ_t} dμ^R = Σ_n γⁿ μ^R{ψ_t = n} by level quadrature.
pub fn visit_value(q: &LevelQuadrature, gamma: f64, t: f64) -> f64 {
    let norm = ordered_sum(&q.levels[0], |p| p.weight * p.ry);
    let total: f64 = q
        .active_levels(t)
        .map(|(n, nodes)| gamma.powi(n as i32) * ordered_sum(nodes, |p| p.weight * window(p, t).map_or(0.0, |(a, b)| b - a)))
        .sum();
    total / norm
}

/// Visit moments on a t-grid and the fitted exponential rate.
pub fn visit_moment(q: &LevelQuadrature, gamma: f64, ts: &[f64]) -> Result<VisitCurve> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Precondition(format!("gamma={gamma} outside (0,1)")));
    }
    if let Some(&t) = ts.iter().max_by(|a, b| a.total_cmp(b)) {
        let needed = super::levels::series_levels(q.roof_inf, q.roof_sup, t);
        if needed > q.n_max() {
            return Err(Error::Precondition(format!("t={t} needs {needed} levels")));
        }
    }
    let points: Vec<(f64, f64)> = ts.iter().map(|&t| (t, visit_value(q, gamma, t))).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(t, v)| (t, v.ln())).unzip();
    let fit = linear_fit(&xs, &ys);
    Ok(VisitCurve {
        gamma,
        points,
        delta: -fit.slope,
        c_const: fit.intercept.exp(),
        r_squared: fit.r_squared,
    })
}
