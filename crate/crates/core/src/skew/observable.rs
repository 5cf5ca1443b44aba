use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::suspension::{Observable, ObservableSpec};

type Eval = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Observable v(y, z, u) on the skew suspension with declared data for the seminorm
/// sup |v(y,z,u) − v(y′,z′,u)| / (|y−y′| + |z−z′|)^α.
#[derive(Clone)]
pub struct SkewObservable {
    pub name: String,
    eval: Eval,
    pub sup: f64,
    pub holder: f64,
    pub alpha: f64,
    /// True when v does not depend on z.
    pub fiber_independent: bool,
}

impl fmt::Debug for SkewObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkewObservable")
            .field("name", &self.name)
            .field("sup", &self.sup)
            .field("holder", &self.holder)
            .finish()
    }
}

impl SkewObservable {
    pub fn new(
        name: &str,
        sup: f64,
        holder: f64,
        alpha: f64,
        fiber_independent: bool,
        eval: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            eval: Arc::new(eval),
            sup,
            holder,
            alpha,
            fiber_independent,
        }
    }

    /// Lifts a base observable v(y,u) to X^R.
    pub fn from_base(v: &Observable) -> Self {
        let inner = v.clone();
        Self::new(&v.name, v.sup, v.holder, v.alpha, true, move |y, _, u| inner.eval(y, u))
    }

    #[inline]
    pub fn eval(&self, y: f64, z: f64, u: f64) -> f64 {
        (self.eval)(y, z, u)
    }

    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        Self {
            name: format!("{}-centered", self.name),
            eval: Arc::new(move |y, z, u| inner(y, z, u) - c),
            sup: self.sup + c.abs(),
            holder: self.holder,
            alpha: self.alpha,
            fiber_independent: self.fiber_independent,
        }
    }

    /// Largest Hölder ratio over sampled pairs ((y,z),(y′,z′),u).
    pub fn measured_holder(&self, pairs: &[((f64, f64), (f64, f64), f64)]) -> f64 {
        pairs
            .iter()
            .filter_map(|&((y, z), (y2, z2), u)| {
                let d = (y - y2).abs() + (z - z2).abs();
                (d > 0.0).then(|| (self.eval(y, z, u) - self.eval(y2, z2, u)).abs() / d.powf(self.alpha))
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SkewObservableSpec {
    /// A base observable, constant along fibers.
    Base { base: ObservableSpec },
    /// scale·z.
    Fiber { scale: f64 },
    /// z·cos(2π·freq·y).
    Product { freq: f64 },
}

impl SkewObservableSpec {
    pub fn build(&self, alpha: f64, roof_sup: f64) -> SkewObservable {
        match self.clone() {
            SkewObservableSpec::Base { base } => SkewObservable::from_base(&base.build(alpha, roof_sup)),
            SkewObservableSpec::Fiber { scale } => {
                let holder = scale.abs() * 2f64.powf(1.0 - alpha);
                SkewObservable::new("fiber", scale.abs(), holder, alpha, false, move |_, z, _| scale * z)
            }
            SkewObservableSpec::Product { freq } => {
                let lip = 1f64.max(2.0 * PI * freq.abs());
                let holder = lip.powf(alpha) * 2f64.powf(1.0 - alpha);
                SkewObservable::new("product", 1.0, holder, alpha, false, move |y, z, _| z * (2.0 * PI * freq * y).cos())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_seminorms_cover_samples() {
        let pairs: Vec<_> = (0..40)
            .map(|k| {
                let a = k as f64 / 40.0;
                ((a, 1.0 - a), ((a * 1.3) % 1.0, (a * 0.7 + 0.1) % 1.0), 0.3)
            })
            .collect();
        for spec in [
            SkewObservableSpec::Fiber { scale: 2.0 },
            SkewObservableSpec::Product { freq: 1.0 },
            SkewObservableSpec::Base {
                base: ObservableSpec::Cosine { freq: 2.0 },
            },
        ] {
            let v = spec.build(1.0, 2.5);
            assert!(v.measured_holder(&pairs) <= v.holder + 1e-12, "{spec:?}");
        }
    }

    #[test]
    fn base_lift_ignores_fiber() {
        let v = SkewObservableSpec::Base {
            base: ObservableSpec::Polynomial { coeffs: vec![0.0, 1.0] },
        }
        .build(1.0, 2.5);
        assert!(v.fiber_independent);
        assert_eq!(v.eval(0.25, 0.9, 1.0), 0.25);
    }
}
