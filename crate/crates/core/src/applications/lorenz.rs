use serde::Serialize;

use crate::error::{Error, Result};

/// Eigenvalues of the Lorenz field linearized at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquilibriumSpectrum {
    pub lambda_ss: f64,
    pub lambda_s: f64,
    pub lambda_u: f64,
    pub divergence: f64,
    pub lorenz_like_ordering: bool,
    pub strong_dissipativity: bool,
}

/// λ_s = −β and λ_u, λ_ss the roots of x² + (σ+1)x − σ(ρ−1).
pub fn lorenz_spectrum(sigma: f64, rho: f64, beta: f64) -> Result<EquilibriumSpectrum> {
    if sigma <= 0.0 || rho <= 0.0 || beta < 0.0 {
        return Err(Error::Precondition(format!(
            "Lorenz parameters must be positive (sigma={sigma}, rho={rho}, beta={beta})"
        )));
    }
    let p = sigma + 1.0;
    let q = -sigma * (rho - 1.0);
    let disc = p * p - 4.0 * q;
    if disc < 0.0 {
        return Err(Error::Precondition("complex eigenvalues at the origin".into()));
    }
    let root = disc.sqrt();
    // Stable evaluation of the two roots of x² + p x + q.
    let lambda_ss = -0.5 * (p + root);
    let lambda_u = if lambda_ss != 0.0 { q / lambda_ss } else { 0.0 };
    let lambda_s = -beta;
    let divergence = -(sigma + 1.0 + beta);
    let lorenz_like_ordering =
        lambda_ss < lambda_s && lambda_s < 0.0 && 0.0 < -lambda_s && -lambda_s < lambda_u;
    let strong_dissipativity = divergence < 0.0 && lambda_u + lambda_ss < lambda_s;
    Ok(EquilibriumSpectrum {
        lambda_ss,
        lambda_s,
        lambda_u,
        divergence,
        lorenz_like_ordering,
        strong_dissipativity,
    })
}
