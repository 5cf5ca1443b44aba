use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

type Eval = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Real observable v(y, u) on the suspension with declared sup and Hölder data in y.
#[derive(Clone)]
pub struct Observable {
    pub name: String,
    eval: Eval,
    /// Declared |v|∞.
    pub sup: f64,
    /// Declared sup_u |v(·,u)|_α.
    pub holder: f64,
    pub alpha: f64,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("sup", &self.sup)
            .field("holder", &self.holder)
            .finish()
    }
}

impl Observable {
    pub fn new(name: &str, sup: f64, holder: f64, alpha: f64, eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.to_string(),
            eval: Arc::new(eval),
            sup,
            holder,
            alpha,
        }
    }

    #[inline]
    pub fn eval(&self, y: f64, u: f64) -> f64 {
        (self.eval)(y, u)
    }

    /// v − c.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        Self {
            name: format!("{}-centered", self.name),
            eval: Arc::new(move |y, u| inner(y, u) - c),
            sup: self.sup + c.abs(),
            holder: self.holder,
            alpha: self.alpha,
        }
    }

    /// ‖v‖_α = |v|∞ + |v|_α.
    pub fn norm(&self) -> f64 {
        self.sup + self.holder
    }

    /// Largest observed Hölder ratio over the sampled pairs (y, y′, u).
    pub fn measured_holder(&self, pairs: &[(f64, f64, f64)]) -> f64 {
        pairs
            .iter()
            .filter(|(a, b, _)| a != b)
            .map(|&(a, b, u)| (self.eval(a, u) - self.eval(b, u)).abs() / (a - b).abs().powf(self.alpha))
            .fold(0.0, f64::max)
    }
}

/// Config-level description of an observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObservableSpec {
    Constant { value: f64 },
    /// Σ c_k y^k.
    Polynomial { coeffs: Vec<f64> },
    /// cos(2π·freq·y).
    Cosine { freq: f64 },
    /// scale·u.
    Height { scale: f64 },
}

impl ObservableSpec {
    /// Builds the evaluator; `roof_sup` bounds u for the height observable.
    pub fn build(&self, alpha: f64, roof_sup: f64) -> Observable {
        match self.clone() {
            ObservableSpec::Constant { value } => Observable::new("constant", value.abs(), 0.0, alpha, move |_, _| value),
            ObservableSpec::Polynomial { coeffs } => {
                let sup: f64 = coeffs.iter().map(|c| c.abs()).sum();
                let lip: f64 = coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c.abs()).sum();
                let holder = lip.powf(alpha) * (2.0 * sup).powf(1.0 - alpha);
                Observable::new("polynomial", sup, holder, alpha, move |y, _| {
                    coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
                })
            }
            ObservableSpec::Cosine { freq } => {
                let lip = 2.0 * PI * freq.abs();
                Observable::new("cosine", 1.0, lip.powf(alpha) * 2f64.powf(1.0 - alpha), alpha, move |y, _| {
                    (2.0 * PI * freq * y).cos()
                })
            }
            ObservableSpec::Height { scale } => {
                Observable::new("height", scale.abs() * roof_sup, 0.0, alpha, move |_, u| scale * u)
            }
        }
    }
}

/// v(y,u) = y.
pub fn identity_observable() -> Observable {
    ObservableSpec::Polynomial { coeffs: vec![0.0, 1.0] }.build(1.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_spec_evaluates_and_declares_bounds() {
        let v = ObservableSpec::Polynomial {
            coeffs: vec![1.0, -2.0, 3.0],
        }
        .build(1.0, 2.5);
        assert_eq!(v.eval(2.0, 0.0), 1.0 - 4.0 + 12.0);
        assert_eq!(v.sup, 6.0);
        assert_eq!(v.holder, 8.0);
    }

    #[test]
    fn declared_holder_dominates_samples() {
        let pairs: Vec<(f64, f64, f64)> = (0..50).map(|k| (k as f64 / 50.0, (k as f64 + 0.3) / 51.0, 0.5)).collect();
        for spec in [
            ObservableSpec::Cosine { freq: 3.0 },
            ObservableSpec::Polynomial { coeffs: vec![0.0, 1.0, -1.0] },
            ObservableSpec::Height { scale: 2.0 },
        ] {
            let v = spec.build(1.0, 2.5);
            assert!(v.measured_holder(&pairs) <= v.holder + 1e-12);
        }
    }

    #[test]
    fn shifting_subtracts() {
        let v = identity_observable().shifted(0.5);
        assert_eq!(v.eval(0.75, 1.0), 0.25);
    }
}
