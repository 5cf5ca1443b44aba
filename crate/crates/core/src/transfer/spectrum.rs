use num_complex::Complex64;
use serde::Serialize;

use super::operator::{Kernel, TwistedOperator};
use crate::dynamics::{ExpandingMap, RoofFunction};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

const MAX_ITERATIONS: usize = 20_000;
const EIGEN_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-9;

/// s = σ + ib.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwistParameter {
    pub sigma: f64,
    pub b: f64,
}

impl TwistParameter {
    pub fn new(sigma: f64, b: f64) -> Self {
        Self { sigma, b }
    }

    pub fn s(&self) -> Complex64 {
        Complex64::new(self.sigma, self.b)
    }

    pub fn within(&self, epsilon: f64) -> bool {
        self.sigma.abs() < epsilon
    }
}

/// Default half-width of the twist strip: 0.5 · inf R · ε, clipped to (0,1).
pub fn twist_epsilon(map: &ExpandingMap, roof: &RoofFunction) -> f64 {
    (0.5 * roof.inf(map) * roof.epsilon).clamp(1e-6, 1.0 - 1e-6)
}

/// Leading eigendata of the real operator P_σ.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralData {
    pub sigma: f64,
    pub lambda: f64,
    /// Positive eigenfunction with ∫ f dLeb = 1.
    pub density: GridFunction,
    pub residual: f64,
    pub iterations: usize,
    /// ½ ≤ λ ≤ 2 and ½ f₀ ≤ f_σ ≤ 2 f₀.
    pub sanity_band: bool,
}

fn power_iteration(kernel: &Kernel, n: usize, alpha: f64, sigma: f64) -> Result<SpectralData> {
    let mut f = GridFunction::constant(n, alpha, Complex64::new(1.0, 0.0));
    let mut lambda = 0.0f64;
    let mut increment = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let pf = kernel.apply(&f);
        let mass = pf.integrate().re;
        let next = pf.scale(Complex64::new(1.0 / mass, 0.0));
        increment = (mass - lambda).abs();
        lambda = mass;
        let change = next.sub(&f).sup_norm();
        f = next;
        if increment < EIGEN_TOL && change < RESIDUAL_TOL {
            let residual = kernel.apply(&f).sub(&f.scale(Complex64::new(lambda, 0.0))).sup_norm();
            if residual < RESIDUAL_TOL {
                return Ok(SpectralData {
                    sigma,
                    lambda,
                    density: f.map(|v| Complex64::new(v.re, 0.0)),
                    residual,
                    iterations: it,
                    sanity_band: true,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        increment,
    })
}

/// Power iteration for P_σ on a grid of N intervals.
pub fn leading_spectrum(map: &ExpandingMap, roof: &RoofFunction, sigma: f64, n: usize) -> Result<SpectralData> {
    let op = TwistedOperator::new(map, roof, n)?;
    leading_spectrum_with(&op, map, roof, sigma)
}

pub fn leading_spectrum_with(
    op: &TwistedOperator,
    map: &ExpandingMap,
    roof: &RoofFunction,
    sigma: f64,
) -> Result<SpectralData> {
    let eps = twist_epsilon(map, roof);
    if sigma.abs() >= eps {
        return Err(Error::Precondition(format!("|sigma|={} not below epsilon={eps}", sigma.abs())));
    }
    let n = op.n();
    let mut data = power_iteration(&op.kernel(Complex64::new(sigma, 0.0)), n, map.alpha, sigma)?;
    if data.density.min_re() <= 0.0 {
        return Err(Error::Precondition("eigenfunction not positive".into()));
    }
    let band_lambda = (0.5..=2.0).contains(&data.lambda);
    let band_f = if sigma == 0.0 {
        true
    } else {
        let f0 = power_iteration(&op.kernel(Complex64::new(0.0, 0.0)), n, map.alpha, 0.0)?.density;
        data.density
            .values()
            .iter()
            .zip(f0.values())
            .all(|(f, g)| f.re >= 0.5 * g.re && f.re <= 2.0 * g.re)
    };
    data.sanity_band = band_lambda && band_f;
    if !data.sanity_band {
        return Err(Error::Precondition(format!(
            "leading eigendata at sigma={sigma} left the band (lambda={})",
            data.lambda
        )));
    }
    Ok(data)
}

/// ∫ v dμ with dμ = f₀ dLeb, trapezoid rule.
pub fn mu_integral(v: &GridFunction, f0: &GridFunction) -> Complex64 {
    v.integrate_weighted(f0)
}

/// L_s v = (λ_σ f_σ)^{-1} P_s(f_σ v) at one s.
pub struct NormalizedOperator<'a> {
    kernel: Kernel<'a>,
    density: &'a GridFunction,
    inv_norm: Vec<f64>,
}

impl<'a> NormalizedOperator<'a> {
    pub fn new(op: &'a TwistedOperator, spectral: &'a SpectralData, s: Complex64) -> Result<Self> {
        if (spectral.sigma - s.re).abs() > 1e-12 {
            return Err(Error::SpectralMismatch {
                expected: s.re,
                found: spectral.sigma,
            });
        }
        let inv_norm = spectral
            .density
            .values()
            .iter()
            .map(|f| 1.0 / (spectral.lambda * f.re))
            .collect();
        Ok(Self {
            kernel: op.kernel(s),
            density: &spectral.density,
            inv_norm,
        })
    }

    pub fn s(&self) -> Complex64 {
        self.kernel.s
    }

    pub fn apply(&self, v: &GridFunction) -> GridFunction {
        let fv = v.mul(self.density);
        let mut out = self.kernel.apply(&fv);
        for (o, w) in out.values_mut().iter_mut().zip(&self.inv_norm) {
            *o *= *w;
        }
        out
    }

    pub fn apply_n(&self, v: &GridFunction, times: usize) -> GridFunction {
        let mut cur = v.clone();
        for _ in 0..times {
            cur = self.apply(&cur);
        }
        cur
    }

    /// (λ^n f_σ(y))^{-1} at node k raised to one step; used by callers combining word terms.
    pub fn node_normalizer(&self, k: usize) -> f64 {
        self.inv_norm[k]
    }
}

/// One application of L_s.
pub fn apply_l(op: &TwistedOperator, spectral: &SpectralData, s: Complex64, v: &GridFunction) -> Result<GridFunction> {
    Ok(NormalizedOperator::new(op, spectral, s)?.apply(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;

    #[test]
    fn doubling_density_is_lebesgue() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let sp = leading_spectrum(&map, &roof, 0.0, 256).unwrap();
        assert!((sp.lambda - 1.0).abs() < 1e-12);
        assert!(sp.density.values().iter().all(|v| (v.re - 1.0).abs() < 1e-12));
    }

    #[test]
    fn twisted_eigenvalue_moves_with_sigma() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let up = leading_spectrum(&map, &roof, 0.05, 256).unwrap();
        let down = leading_spectrum(&map, &roof, -0.05, 256).unwrap();
        assert!(up.lambda < 1.0 && down.lambda > 1.0);
        // e^{-σ sup R} ≤ λ_σ ≤ e^{-σ inf R} for σ > 0.
        assert!(up.lambda <= (-0.05f64 * 2.0).exp() && up.lambda >= (-0.05f64 * 2.5).exp());
        // Fine-grid oracle.
        let fine = leading_spectrum(&map, &roof, 0.05, 2048).unwrap();
        assert!((fine.lambda - up.lambda).abs() < 1e-6);
    }

    #[test]
    fn normalized_operator_fixes_constants() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let op = TwistedOperator::new(&map, &roof, 512).unwrap();
        for sigma in [-0.05, 0.0, 0.05] {
            let sp = leading_spectrum_with(&op, &map, &roof, sigma).unwrap();
            let one = GridFunction::constant(512, 1.0, Complex64::new(1.0, 0.0));
            let l1 = apply_l(&op, &sp, Complex64::new(sigma, 0.0), &one).unwrap();
            assert!(l1.sub(&one).sup_norm() < 1e-8);
        }
        let sp = leading_spectrum_with(&op, &map, &roof, 0.0).unwrap();
        assert!(matches!(
            apply_l(&op, &sp, Complex64::new(0.05, 1.0), &GridFunction::zeros(512, 1.0)),
            Err(Error::SpectralMismatch { .. })
        ));
        let z = apply_l(&op, &sp, Complex64::new(0.0, 30.0), &GridFunction::zeros(512, 1.0)).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
    }

    #[test]
    fn mobius_density_and_integrals() {
        let map = zoo::mobius_map();
        let roof = zoo::quadratic_roof();
        let sp = leading_spectrum(&map, &roof, 0.0, 1024).unwrap();
        // Interpolation error is second order for non-affine branches.
        let fine = leading_spectrum(&map, &roof, 0.0, 2048).unwrap();
        assert!((sp.lambda - 1.0).abs() < 1e-6);
        assert!((fine.lambda - 1.0).abs() < 0.3 * (sp.lambda - 1.0).abs());
        let one = GridFunction::constant(1024, 1.0, Complex64::new(1.0, 0.0));
        assert!((mu_integral(&one, &sp.density).re - 1.0).abs() < 1e-10);
        assert!(sp.density.max_re() > sp.density.min_re() * 1.01);
    }

    #[test]
    fn mean_roof_of_doubling_quadratic() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let sp = leading_spectrum(&map, &roof, 0.0, 1024).unwrap();
        let r = GridFunction::from_real_fn(1024, 1.0, |y| roof.value_at(&map, y));
        let rbar = mu_integral(&r, &sp.density).re;
        assert!((rbar - 13.0 / 6.0).abs() < 1e-6);
        let id = GridFunction::from_real_fn(1024, 1.0, |y| y);
        assert!((mu_integral(&id, &sp.density).re - 0.5).abs() < 1e-14);
    }
}
