use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::chi::{build_chi, CancelContext, ChiFunction};
use super::pair::{cone_check, ConePair, ConeReport};
use crate::dynamics::{ExpandingMap, RoofFunction};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::transfer::{NormalizedOperator, SpectralData, TwistedOperator};
use crate::uni::{n0_admissible, ConstantsLedger};

/// Grid tolerance for the pointwise cancellation inequality.
pub const CANCEL_TOL: f64 = 1e-8;

/// L_σ^{n₀}(χu) = L_σ^{n₀}u minus the damped share of the two UNI word terms.
pub fn damped_iterate(
    ctx: &CancelContext,
    op: &TwistedOperator,
    sigma: f64,
    pair: &ConePair,
    chi: &ChiFunction,
) -> Result<GridFunction> {
    let n0 = ctx.witness.n0;
    let l = NormalizedOperator::new(op, ctx.spectral, Complex64::new(sigma, 0.0))?;
    let mut out = l.apply_n(&pair.u, n0);
    if chi.intervals.is_empty() {
        return Ok(out);
    }
    let lam_n = ctx.spectral.lambda.powi(n0 as i32);
    let s = Complex64::new(sigma, pair.b);
    let n = out.n();
    for k in 0..=n {
        let y = k as f64 / n as f64;
        let mut c = 0.0;
        for m in 0..2 {
            let damp = 1.0 - chi.eval_pulled(m, y);
            if damp > 0.0 {
                c += damp * ctx.word_terms(m, s, pair, y).1;
            }
        }
        if c > 0.0 {
            out.values_mut()[k] -= Complex64::new(c / (lam_n * ctx.spectral.density.values()[k].re), 0.0);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CancellationReport {
    /// min over nodes of L_σ^{n₀}(χu) − |L_s^{n₀}v|.
    pub margin: f64,
    pub argmin: f64,
    pub min_rhs: f64,
    pub holds: bool,
}

fn compare(lhs: &GridFunction, rhs: &GridFunction) -> CancellationReport {
    let mut margin = f64::INFINITY;
    let mut at = 0;
    for (k, (a, b)) in lhs.values().iter().zip(rhs.values()).enumerate() {
        let m = b.re - a.norm();
        if m < margin {
            margin = m;
            at = k;
        }
    }
    CancellationReport {
        margin,
        argmin: at as f64 / lhs.n() as f64,
        min_rhs: rhs.min_re(),
        holds: margin >= -CANCEL_TOL,
    }
}

/// Pointwise check of |L_s^{n₀}v| ≤ L_σ^{n₀}(χu) on the grid.
pub fn cancellation_check(
    ctx: &CancelContext,
    op: &TwistedOperator,
    s: Complex64,
    pair: &ConePair,
    chi: &ChiFunction,
) -> Result<CancellationReport> {
    let ls = NormalizedOperator::new(op, ctx.spectral, s)?;
    let lhs = ls.apply_n(&pair.v, ctx.witness.n0);
    let rhs = damped_iterate(ctx, op, s.re, pair, chi)?;
    Ok(compare(&lhs, &rhs))
}

#[derive(Clone, Debug, Serialize)]
pub struct FedReport {
    pub hat_i: f64,
    pub hat_j: f64,
    pub ratio: f64,
    pub delta3: f64,
    pub holds: bool,
}

/// Compares ∫_Î w dμ with ∫_Ĵ w dμ for a positive log-Hölder w.
pub fn fed_ratio(
    w: &GridFunction,
    chi: &ChiFunction,
    k: f64,
    ledger: &ConstantsLedger,
    density: &GridFunction,
) -> Result<FedReport> {
    if w.min_re() <= 0.0 {
        return Err(Error::Precondition("fed_ratio needs w > 0".into()));
    }
    let alpha = ledger.alpha;
    let seminorm = w.map(|x| Complex64::new(x.re.ln(), 0.0)).holder_seminorm();
    let bound = k * chi.b.abs().powf(alpha);
    if seminorm > bound {
        return Err(Error::RegularityViolated { seminorm, bound });
    }
    let integral = |parts: Vec<(f64, f64)>| -> f64 {
        parts
            .into_iter()
            .map(|(a, b)| w.integrate_product_on(density, a, b).re)
            .sum()
    };
    let hat_i = integral(chi.hat_i());
    let hat_j = integral(chi.hat_j());
    let delta3 = 0.5 * ledger.delta2 * (-(2.0 * ledger.delta + 2.0 * ledger.big_delta).powf(alpha) * k).exp();
    let ratio = hat_i / hat_j;
    Ok(FedReport {
        hat_i,
        hat_j,
        ratio,
        delta3,
        holds: ratio >= delta3,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeStep {
    pub m: usize,
    /// ∫u_{m+1}² dμ / ∫u_m² dμ.
    pub r_m: f64,
    /// ∫|v_{m+1}|² dμ / ∫|v_m|² dμ.
    pub v_ratio: f64,
    pub cone: ConeReport,
    pub cancellation: Option<CancellationReport>,
    pub fed: Option<FedReport>,
    pub intervals: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeIteration {
    pub b: f64,
    pub sigma: f64,
    pub n0: usize,
    pub damped: bool,
    pub steps: Vec<ConeStep>,
    /// max_m r_m.
    pub beta_hat: f64,
    pub final_pair: ConePair,
}

/// Pieces shared by the damped and undamped iterations.
pub struct IterationSetup<'a> {
    pub map: &'a ExpandingMap,
    pub roof: &'a RoofFunction,
    pub op: &'a TwistedOperator,
    pub spectral: &'a SpectralData,
    pub ledger: &'a ConstantsLedger,
}

fn iterate(
    setup: &IterationSetup,
    damp: Option<&CancelContext>,
    s: Complex64,
    pair: &ConePair,
    steps: usize,
) -> Result<ConeIteration> {
    let n0 = damp.map_or(setup.ledger.n0, |c| c.witness.n0);
    let ls = NormalizedOperator::new(setup.op, setup.spectral, s)?;
    let lsig = NormalizedOperator::new(setup.op, setup.spectral, Complex64::new(s.re, 0.0))?;
    let f = &setup.spectral.density;
    let mut cur = pair.clone();
    let mut out = Vec::with_capacity(steps);
    for m in 0..steps {
        let (u_next, chi, cancel) = match damp {
            Some(ctx) => {
                let chi = build_chi(ctx, s, &cur)?;
                let u_next = damped_iterate(ctx, setup.op, s.re, &cur, &chi)?;
                (u_next, Some(chi), None)
            }
            None => (lsig.apply_n(&cur.u, n0), None, None::<CancellationReport>),
        };
        let v_next = ls.apply_n(&cur.v, n0);
        let cancel = cancel.or_else(|| chi.as_ref().map(|_| compare(&v_next, &u_next)));
        let fed = match &chi {
            Some(c) => {
                let w = lsig.apply_n(&cur.u.map(|x| x * x), n0);
                Some(fed_ratio(&w, c, setup.ledger.k_log, setup.ledger, f)?)
            }
            None => None,
        };
        let next = ConePair::new(u_next, v_next, cur.b);
        let cone = cone_check(&next, setup.ledger);
        if damp.is_some() {
            if let Some(cond) = cone.violation() {
                return Err(Error::ConeEscape {
                    step: m + 1,
                    condition: cond.to_string(),
                });
            }
        }
        let r_m = next.u_mass(f) / cur.u_mass(f);
        let v0 = cur.v_mass(f);
        let v_ratio = if v0 > 0.0 { next.v_mass(f) / v0 } else { 0.0 };
        out.push(ConeStep {
            m,
            r_m,
            v_ratio,
            cone,
            cancellation: cancel,
            fed,
            intervals: chi.as_ref().map_or(0, |c| c.intervals.len()),
        });
        cur = next;
    }
    let beta_hat = out.iter().map(|s| s.r_m).fold(0.0, f64::max);
    Ok(ConeIteration {
        b: s.im,
        sigma: s.re,
        n0,
        damped: damp.is_some(),
        steps: out,
        beta_hat,
        final_pair: cur,
    })
}

/// u_{m+1} = L_σ^{n₀}(χ_m u_m), v_{m+1} = L_s^{n₀}v_m with cone membership asserted at each step.
pub fn cone_iterate(
    setup: &IterationSetup,
    ctx: &CancelContext,
    s: Complex64,
    pair: &ConePair,
    steps: usize,
) -> Result<ConeIteration> {
    let ab = s.im.abs();
    let threshold = (4.0 * PI / ctx.witness.d).max(1.0);
    if ab < threshold {
        return Err(Error::Precondition(format!("|b|={ab} below max(4 pi/D, 1)={threshold}")));
    }
    let adm = n0_admissible(ctx.ledger, ctx.witness.n0)?;
    if !adm.passes() {
        return Err(Error::Precondition(format!(
            "n0={} not admissible (smallest {})",
            ctx.witness.n0, adm.smallest_admissible
        )));
    }
    iterate(setup, Some(ctx), s, pair, steps)
}

/// Same recursion with χ ≡ 1 and no membership assertion; the control for models without UNI.
pub fn undamped_iterate(setup: &IterationSetup, s: Complex64, pair: &ConePair, steps: usize) -> Result<ConeIteration> {
    iterate(setup, None, s, pair, steps)
}

/// Smallest power of two with at least one node in every middle third of width δ/(3|b|).
pub fn cone_grid(delta: f64, b: f64) -> usize {
    let need = (3.0 * b.abs() / delta).ceil() as usize;
    need.next_power_of_two().max(1024)
}
