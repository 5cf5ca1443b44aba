use std::str::FromStr;

use decaylab::applications::{lorenz_spectrum, Model};
use decaylab::cone::{
    build_chi, cancellation_check, cone_grid, cone_iterate, sample_cone, CancelContext, ConePair, IterationSetup,
};
use decaylab::skew::{
    burn_in, contraction_check, default_pairs, eta_average, flow_correlation, mu_x_integral, sample_mu_x,
    SkewObservableSpec, SplitSetup,
};
use decaylab::suspension::{
    correlation_direct, correlation_series_curve, default_horizon, laplace_direct, laplace_rho, mean_roof_on_grid,
    sample_mu_r, visit_moment, CorrelationCurve, LaplaceSetup, LevelQuadrature, LevelRule, ObservableSpec,
};
use decaylab::transfer::{
    apply_l, dolgopyat_probe, leading_spectrum_with, ly_report, ly_samples, LyReport, NormalizedOperator,
    ProbeSettings, SpectralData, TwistedOperator,
};
use decaylab::uni::{admissible_witness, build_ledger, n0_admissible, uni_scan, AdmissibleWitness, UniScan};
use decaylab::{Complex64, Error, GridFunction};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{num, Outcome, Table};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Check,
    Uni,
    Spectrum,
    Dolgopyat,
    Cone,
    Correlate,
    Laplace,
    Skew,
    Lorenz,
}

impl Subcommand {
    pub const ALL: [Subcommand; 9] = [
        Subcommand::Check,
        Subcommand::Uni,
        Subcommand::Spectrum,
        Subcommand::Dolgopyat,
        Subcommand::Cone,
        Subcommand::Correlate,
        Subcommand::Laplace,
        Subcommand::Skew,
        Subcommand::Lorenz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Check => "check",
            Subcommand::Uni => "uni",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Dolgopyat => "dolgopyat",
            Subcommand::Cone => "cone",
            Subcommand::Correlate => "correlate",
            Subcommand::Laplace => "laplace",
            Subcommand::Skew => "skew",
            Subcommand::Lorenz => "lorenz",
        }
    }
}

impl FromStr for Subcommand {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown subcommand '{s}'")))
    }
}

/// Runs one pipeline. Core errors become a failed outcome; config errors are returned.
pub fn run(sub: Subcommand, cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let res = match sub {
        Subcommand::Check => check(cfg, &model),
        Subcommand::Uni => uni(cfg, &model),
        Subcommand::Spectrum => spectrum(cfg, &model),
        Subcommand::Dolgopyat => dolgopyat(cfg, &model),
        Subcommand::Cone => cone(cfg, &model),
        Subcommand::Correlate => correlate(cfg, &model),
        Subcommand::Laplace => laplace(cfg, &model),
        Subcommand::Skew => skew(cfg, &model),
        Subcommand::Lorenz => lorenz(cfg),
    };
    match res {
        Err(e @ CliError::Config(_)) => Err(e),
        Err(e) => Ok(Outcome::from_error(sub.name(), &e)),
        ok => ok,
    }
}

fn spectral(model: &Model, n: usize) -> Result<(TwistedOperator, SpectralData), CliError> {
    let op = TwistedOperator::new(&model.map, &model.roof, n)?;
    let sp = leading_spectrum_with(&op, &model.map, &model.roof, 0.0)?;
    Ok((op, sp))
}

fn check(cfg: &RunConfig, model: &Model) -> Result<Outcome, CliError> {
    let mut map = model.map.clone();
    if let Some(c1) = cfg.check.c1 {
        map.c1 = c1;
    }
    if let Some(r) = cfg.check.rho0 {
        map.rho0 = r;
    }
    let rep = decaylab::dynamics::verify_conditions(&map, &model.roof, cfg.check.grid, cfg.check.max_word_length, None)?;
    let mut out = Outcome::new("check", &rep)?;
    for (ok, name) in [
        (rep.uniform_expansion, "uniform_expansion"),
        (rep.log_derivative_holder, "log_derivative_holder"),
        (rep.roof_derivative, "roof_derivative"),
        (rep.exponential_moment_series, "exponential_moment_series"),
        (rep.distortion, "distortion"),
        (rep.diameter_distortion, "diameter_distortion"),
        (rep.birkhoff_derivative, "birkhoff_derivative"),
        (rep.roof_moment_finite, "roof_moment_finite"),
    ] {
        out.check(ok, name);
    }
    let mut t = Table::new("witnesses", vec!["condition", "word", "y", "value", "bound"]);
    for w in &rep.witnesses {
        let word: Vec<String> = w.word.iter().map(|m| m.to_string()).collect();
        t.push(vec![w.condition.clone(), word.join(" "), num(w.y), num(w.value), num(w.bound)]);
    }
    out.tables.push(t);
    Ok(out)
}

/// C₃ over s = σ + ib for the configured b values, with e^{iby} and seeded band-limited samples.
pub fn measure_c3(cfg: &RunConfig, op: &TwistedOperator, sp: &SpectralData, rho: f64) -> Result<LyReport, CliError> {
    let samples = ly_samples(op.n(), cfg.alpha, &cfg.uni.ly_bs, 4, cfg.seed);
    Ok(ly_report(op, sp, &cfg.uni.ly_bs, cfg.uni.ly_n, rho, &samples)?)
}

fn scan(cfg: &RunConfig, model: &Model) -> Result<UniScan, CliError> {
    let ns: Vec<usize> = (1..=cfg.uni.n_max).collect();
    Ok(uni_scan(&model.map, &model.roof, &ns, cfg.uni.grid, cfg.uni.floor)?)
}

#[derive(Serialize)]
struct UniReport {
    scan: UniScan,
    c3: Option<LyReport>,
    ledger: Option<decaylab::uni::ConstantsLedger>,
    admissibility: Option<decaylab::uni::Admissibility>,
    /// (n₀, passes) for n₀ ≥ smallest admissible.
    monotone: Vec<(usize, bool)>,
    admissible: Option<AdmissibleWitness>,
}

fn uni(cfg: &RunConfig, model: &Model) -> Result<Outcome, CliError> {
    let scan = scan(cfg, model)?;
    let Some(w) = scan.witness.clone() else {
        let mut out = Outcome::new(
            "uni",
            UniReport {
                scan,
                c3: None,
                ledger: None,
                admissibility: None,
                monotone: Vec::new(),
                admissible: None,
            },
        )?;
        out.check(false, "no UNI witness");
        return Ok(out);
    };
    let (op, sp) = spectral(model, cfg.grid)?;
    let raw_ledger = build_ledger(&model.map, &model.roof, &sp, Some(&w))?;
    let ly = measure_c3(cfg, &op, &sp, raw_ledger.rho)?;
    let ledger = raw_ledger.with_c3(ly.c3);
    let adm = n0_admissible(&ledger, w.n0)?;
    let start = adm.smallest_admissible;
    let monotone = (start..=start + cfg.uni.monotone_span)
        .map(|n| Ok((n, n0_admissible(&ledger, n)?.passes())))
        .collect::<Result<Vec<_>, Error>>()?;
    let extended = admissible_witness(&model.map, &model.roof, &sp, &w, ly.c3, cfg.uni.grid)?;
    let mut out = Outcome::new(
        "uni",
        UniReport {
            scan,
            c3: Some(ly.clone()),
            ledger: Some(ledger),
            admissibility: Some(adm),
            monotone: monotone.clone(),
            admissible: Some(extended),
        },
    )?;
    out.check(monotone.iter().all(|m| m.1), "admissibility not monotone in n0");
    out.check(ly.norm_bound_holds, "Lasota-Yorke norm bound");
    Ok(out)
}

fn spectrum(cfg: &RunConfig, model: &Model) -> Result<Outcome, CliError> {
    let op = TwistedOperator::new(&model.map, &model.roof, cfg.grid)?;
    let one = GridFunction::constant(cfg.grid, cfg.alpha, Complex64::new(1.0, 0.0));
    let p0_one = op.kernel(Complex64::new(0.0, 0.0)).apply(&one).sub(&one).sup_norm();
    let mut t = Table::new("sweep", vec!["sigma", "lambda", "residual", "iterations", "l_one_error"]);
    let mut rows = Vec::new();
    for &sigma in &cfg.spectrum.sigmas {
        let sp = leading_spectrum_with(&op, &model.map, &model.roof, sigma)?;
        let l1 = apply_l(&op, &sp, Complex64::new(sigma, 0.0), &one)?.sub(&one).sup_norm();
        t.push(vec![num(sigma), num(sp.lambda), num(sp.residual), sp.iterations.to_string(), num(l1)]);
        rows.push(json!({
            "sigma": sigma,
            "lambda": sp.lambda,
            "residual": sp.residual,
            "iterations": sp.iterations,
            "l_one_error": l1,
            "sanity_band": sp.sanity_band,
        }));
    }
    let mut out = Outcome::new("spectrum", json!({ "grid": cfg.grid, "p0_one_error": p0_one, "sweep": rows }))?;
    out.tables.push(t);
    Ok(out)
}

/// Probe functions: a plane wave e^{iby/2}, then seeded band-limited samples.
pub fn probe_sample(n: usize, alpha: f64, seed: u64, b: f64, i: usize) -> GridFunction {
    if i == 0 {
        GridFunction::from_fn(n, alpha, |y| Complex64::new(0.0, 0.5 * b * y).exp())
    } else {
        let mut s = ly_samples(n, alpha, &[], i, seed ^ b.to_bits());
        s.pop().expect("one random sample").values
    }
}

fn dolgopyat(cfg: &RunConfig, model: &Model) -> Result<Outcome, CliError> {
    let d = &cfg.dolgopyat;
    let (op, sp) = spectral(model, cfg.grid)?;
    let settings = ProbeSettings {
        sigma: 0.0,
        step: d.step,
        max_n: d.max_n,
        floor: d.floor,
        ..ProbeSettings::default()
    };
    let n = cfg.grid;
    let rep = dolgopyat_probe(&op, &sp, &d.bs, d.samples, settings, |b, i| {
        probe_sample(n, cfg.alpha, cfg.seed, b, i)
    })?;
    let mut t = Table::new("curve", vec!["b", "sample", "n", "norm_b", "ratio"]);
    for p in &rep.curve {
        t.push(vec![num(p.b), p.sample.to_string(), p.n.to_string(), num(p.norm_b), num(p.ratio)]);
    }
    let mut out = Outcome::new(
        "dolgopyat",
        json!({ "grid": n, "gamma": rep.gamma, "contracting": rep.contracting, "results": rep.results }),
    )?;
    out.check(rep.contracting, format!("fitted gamma {} not below 1", rep.gamma));
    out.tables.push(t);
    Ok(out)
}

#[derive(Serialize)]
struct PairResult {
    seed: u64,
    margin: f64,
    chi_ok: bool,
    slope_ok: bool,
    diam_ok: bool,
    intervals: usize,
    beta_hat: f64,
    max_r: f64,
    escape: Option<String>,
    r: Vec<f64>,
}

#[derive(Serialize)]
struct ConeResult {
    b: f64,
    grid: usize,
    n0: usize,
    pairs: Vec<PairResult>,
    escapes: usize,
    min_margin: f64,
    beta_hat: f64,
    /// β̂ of the first pair on a grid twice as fine.
    beta_hat_fine: Option<f64>,
}

#[derive(Serialize)]
struct ControlStep {
    m: usize,
    u_ratio: f64,
    v_ratio: f64,
}

pub(crate) fn witness_for_grid(
    cfg: &RunConfig,
    model: &Model,
    scan: &UniScan,
    n: usize,
    c3: f64,
) -> Result<Option<(TwistedOperator, SpectralData, AdmissibleWitness)>, CliError> {
    let Some(w) = &scan.witness else { return Ok(None) };
    let (op, sp) = spectral(model, n)?;
    let adm = admissible_witness(&model.map, &model.roof, &sp, w, c3, cfg.uni.grid)?;
    Ok(Some((op, sp, adm)))
}

fn cone_run(
    cfg: &RunConfig,
    model: &Model,
    st: &(TwistedOperator, SpectralData, AdmissibleWitness),
    b: f64,
    seeds: &[u64],
) -> Result<Vec<PairResult>, CliError> {
    let (op, sp, adm) = st;
    let ctx = CancelContext {
        map: &model.map,
        roof: &model.roof,
        spectral: sp,
        ledger: &adm.ledger,
        witness: &adm.extended,
    };
    let setup = IterationSetup {
        map: &model.map,
        roof: &model.roof,
        op,
        spectral: sp,
        ledger: &adm.ledger,
    };
    let s = Complex64::new(cfg.cone.sigma, b);
    seeds
        .par_iter()
        .map(|&seed| {
            let pair = sample_cone(b, &adm.ledger, op.n(), seed);
            let chi = build_chi(&ctx, s, &pair)?;
            let structure = chi.structure();
            let cancel = cancellation_check(&ctx, op, s, &pair, &chi)?;
            let (steps, escape) = match cone_iterate(&setup, &ctx, s, &pair, cfg.cone.steps) {
                Ok(it) => (it.steps, None),
                Err(e @ Error::ConeEscape { .. }) => (Vec::new(), Some(e.to_string())),
                Err(e) => return Err(e.into()),
            };
            let r: Vec<f64> = steps.iter().map(|s| s.r_m).collect();
            Ok(PairResult {
                seed,
                margin: cancel.margin,
                chi_ok: structure.all_ok(),
                slope_ok: structure.slope_ok,
                diam_ok: structure.diam_ok,
                intervals: structure.intervals,
                beta_hat: r.iter().copied().fold(0.0, f64::max),
                max_r: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                escape,
                r,
            })
        })
        .collect()
}

fn cone(cfg: &RunConfig, model: &Model) -> Result<Outcome, CliError> {
    let scan = scan(cfg, model)?;
    if scan.witness.is_none() {
        return cone_control(cfg, model, scan);
    }
    let (op, sp) = spectral(model, cfg.grid)?;
    let c3 = measure_c3(cfg, &op, &sp, model.map.rho0.powf(model.map.alpha))?.c3;
    let base = witness_for_grid(cfg, model, &scan, cfg.grid, c3)?.expect("witness present");
    let seeds: Vec<u64> = (0..cfg.cone.pairs as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
    let mut results = Vec::new();
    let mut table = Table::new("steps", vec!["b", "grid", "pair", "m", "r_m"]);
    for &b in &cfg.cone.bs {
        let n = cone_grid(base.2.ledger.delta, b).max(cfg.grid);
        let st = witness_for_grid(cfg, model, &scan, n, c3)?.expect("witness present");
        let pairs = cone_run(cfg, model, &st, b, &seeds)?;
        let beta_hat_fine = if cfg.cone.refine {
            let fine = witness_for_grid(cfg, model, &scan, 2 * n, c3)?.expect("witness present");
            Some(cone_run(cfg, model, &fine, b, &seeds[..1])?[0].beta_hat)
        } else {
            None
        };
        for p in &pairs {
            for (m, r) in p.r.iter().enumerate() {
                table.push(vec![num(b), n.to_string(), p.seed.to_string(), m.to_string(), num(*r)]);
            }
        }
        results.push(ConeResult {
            b,
            grid: n,
            n0: st.2.extended.n0,
            escapes: pairs.iter().filter(|p| p.escape.is_some()).count(),
            min_margin: pairs.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min),
            beta_hat: pairs.iter().map(|p| p.beta_hat).fold(0.0, f64::max),
            beta_hat_fine,
            pairs,
        });
    }
    let mut out = Outcome::new("cone", json!({ "control": false, "results": results }))?;
    for r in &results {
        out.check(r.escapes == 0, format!("b={}: {} cone escapes", r.b, r.escapes));
        out.check(r.min_margin >= -1e-8, format!("b={}: cancellation margin {}", r.b, r.min_margin));
        out.check(r.pairs.iter().all(|p| p.chi_ok), format!("b={}: chi structure", r.b));
        out.check(r.beta_hat < 1.0, format!("b={}: beta_hat {}", r.b, r.beta_hat));
        if let Some(f) = r.beta_hat_fine {
            let first = r.pairs[0].beta_hat;
            out.check((f - first).abs() <= 0.1 * first, format!("b={}: beta_hat moved from {first} to {f}", r.b));
        }
    }
    out.tables.push(table);
    Ok(out)
}

/// Undamped L² ratios for models without a UNI witness; reported, not asserted.
fn cone_control(cfg: &RunConfig, model: &Model, scan: UniScan) -> Result<Outcome, CliError> {
    let (op, sp) = spectral(model, cfg.grid)?;
    let mut table = Table::new("steps", vec!["b", "m", "u_ratio", "v_ratio"]);
    let mut results = Vec::new();
    for &b in &cfg.cone.bs {
        let s = Complex64::new(cfg.cone.sigma, b);
        let ls = NormalizedOperator::new(&op, &sp, s)?;
        let lsig = NormalizedOperator::new(&op, &sp, Complex64::new(s.re, 0.0))?;
        let mut pair = ConePair::normalized(&probe_sample(cfg.grid, cfg.alpha, cfg.seed, b, 0), b);
        let mut steps = Vec::new();
        for m in 0..cfg.cone.steps {
            let next = ConePair::new(lsig.apply(&pair.u), ls.apply(&pair.v), b);
            let f = &sp.density;
            let step = ControlStep {
                m,
                u_ratio: next.u_mass(f) / pair.u_mass(f),
                v_ratio: next.v_mass(f) / pair.v_mass(f),
            };
            table.push(vec![num(b), m.to_string(), num(step.u_ratio), num(step.v_ratio)]);
            steps.push(step);
            pair = next;
        }
        results.push(json!({ "b": b, "steps": steps }));
    }
    let mut out = Outcome::new("cone", json!({ "control": true, "best_d": scan.best_d, "results": results }))?;
    out.tables.push(table);
    Ok(out)
}

fn curve_rows(table: &mut Table, curve: &CorrelationCurve) {
    let method = match curve.method {
        decaylab::suspension::CurveMethod::Direct => "direct",
        decaylab::suspension::CurveMethod::Series => "series",
    };
    for p in &curve.points {
        table.push(vec![num(p.t), num(p.estimate), num(p.se), method.to_string()]);
    }
}

fn fitted(curve: CorrelationCurve) -> (CorrelationCurve, Option<String>) {
    match curve.clone().with_fit() {
        Ok(c) => (c, None),
        Err(e) => (curve, Some(e.to_string())),
    }
}

#[derive(Serialize)]
struct Agreement {
    t: f64,
    direct: f64,
    se: f64,
    series: f64,
    within: bool,
}

fn correlate(cfg: &RunConfig, model: &Model) -> Result<Outcome, CliError> {
    let (map, roof) = (&model.map, &model.roof);
    let (_, sp) = spectral(model, cfg.grid)?;
    let f0 = &sp.density;
    let mean_roof = mean_roof_on_grid(map, roof, f0);
    let ts = RunConfig::t_grid(&cfg.correlate.t_grid, mean_roof);
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let sup = roof.sup(map);
    let v = cfg.correlate.v.build(cfg.alpha, sup);
    let w = cfg.correlate.w.build(cfg.alpha, sup);
    let samples = sample_mu_r(map, roof, f0, mean_roof, cfg.samples, cfg.seed);
    let direct = correlation_direct(map, roof, &v, &w, &ts, &samples)?;
    let q = LevelQuadrature::for_horizon(map, roof, f0, t_max, LevelRule::default())?;
    let series = correlation_series_curve(&q, &v, &w, &ts)?;
    let (direct, direct_fit_error) = fitted(direct);
    let (series, series_fit_error) = fitted(series);
    let agreement: Vec<Agreement> = direct
        .points
        .iter()
        .zip(&series.points)
        .map(|(d, s)| Agreement {
            t: d.t,
            direct: d.estimate,
            se: d.se,
            series: s.estimate,
            within: (d.estimate - s.estimate).abs() <= 3.0 * d.se,
        })
        .collect();
    let visits = visit_moment(&q, cfg.correlate.visit_gamma, &ts)?;
    let mut t = Table::new("curve", vec!["t", "estimate", "se", "method"]);
    curve_rows(&mut t, &direct);
    curve_rows(&mut t, &series);
    let mut tv = Table::new("visits", vec!["t", "moment"]);
    for &(tt, m) in &visits.points {
        tv.push(vec![num(tt), num(m)]);
    }
    let outside = agreement.iter().filter(|a| !a.within).count();
    let fit = direct.fit;
    let mut out = Outcome::new(
        "correlate",
        json!({
            "samples": samples.len(),
            "mean_roof": mean_roof,
            "series_levels": q.n_max(),
            "direct": direct,
            "series": series,
            "direct_fit_error": direct_fit_error,
            "series_fit_error": series_fit_error,
            "agreement": agreement,
            "outside_3se": outside,
            "visits": visits,
        }),
    )?;
    out.check(outside == 0, format!("{outside} t-grid points outside 3 SE"));
    match fit {
        Some(f) => {
            out.check(f.c_const > 0.0, "decay fit constant not positive");
            out.check(f.r_squared >= 0.9, format!("decay fit R^2 {}", f.r_squared));
        }
        None => out.check(false, "decay fit failed on the direct curve"),
    }
    out.tables.push(t);
    out.tables.push(tv);
    Ok(out)
}

#[derive(Serialize)]
struct LaplaceRow {
    s: f64,
    series: f64,
    series_im: f64,
    direct: f64,
    direct_im: f64,
    se: f64,
    horizon: f64,
    terms: usize,
    last_term: f64,
    j0_bound_holds: bool,
    within: bool,
}

/// Quadrature share of the Laplace comparison tolerance.
pub const LAPLACE_QUADRATURE_TOL: f64 = 1e-6;

fn laplace(cfg: &RunConfig, model: &Model) -> Result<Outcome, CliError> {
    let (map, roof) = (&model.map, &model.roof);
    let (op, sp) = spectral(model, cfg.grid)?;
    let f0 = &sp.density;
    let mean_roof = mean_roof_on_grid(map, roof, f0);
    let sup = roof.sup(map);
    let v = cfg.correlate.v.build(cfg.alpha, sup);
    let w = cfg.correlate.w.build(cfg.alpha, sup);
    let base = LevelQuadrature::new(map, roof, f0, 0, LevelRule::default())?;
    let setup = LaplaceSetup {
        map,
        roof,
        op: &op,
        f0,
        base: &base,
    };
    let samples = sample_mu_r(map, roof, f0, mean_roof, cfg.samples, cfg.seed);
    let mut rows = Vec::new();
    let mut t = Table::new("transform", vec!["s", "series", "direct", "se", "within"]);
    for &s in &cfg.laplace.s {
        let sc = Complex64::new(s, 0.0);
        let rep = laplace_rho(&setup, &v, &w, sc, cfg.laplace.terms, cfg.laplace.tol)?;
        let horizon = default_horizon(sc);
        let d = laplace_direct(map, roof, &v, &w, sc, &samples, horizon)?;
        let within = (rep.value - d.estimate).norm() <= LAPLACE_QUADRATURE_TOL + 3.0 * d.se;
        t.push(vec![num(s), num(rep.value.re), num(d.estimate.re), num(d.se), within.to_string()]);
        rows.push(LaplaceRow {
            s,
            series: rep.value.re,
            series_im: rep.value.im,
            direct: d.estimate.re,
            direct_im: d.estimate.im,
            se: d.se,
            horizon,
            terms: rep.term_norms.len(),
            last_term: rep.last_term,
            j0_bound_holds: rep.j0_bound_holds,
            within,
        });
    }
    let mut out = Outcome::new("laplace", json!({ "samples": samples.len(), "rows": rows }))?;
    for r in &rows {
        out.check(r.within, format!("s={}: series {} vs direct {} (se {})", r.s, r.series, r.direct, r.se));
        out.check(r.j0_bound_holds, format!("s={}: J0 bound", r.s));
    }
    out.tables.push(t);
    Ok(out)
}

fn skew(cfg: &RunConfig, model: &Model) -> Result<Outcome, CliError> {
    let sk = &cfg.skew;
    let f = model.skew()?;
    let roof = &model.roof;
    let (_, sp) = spectral(model, cfg.grid)?;
    let f0 = &sp.density;
    let mean_roof = mean_roof_on_grid(&f.base, roof, f0);
    let ns: Vec<usize> = (1..=10).collect();
    let contraction = contraction_check(&f, &default_pairs(sk.contraction_pairs), &ns)?;
    if contraction.degenerate {
        return Err(CliError::Core(Error::Precondition("fiber map collapses fibers in one step".into())));
    }
    let gamma0 = contraction.gamma0;
    let sup = roof.sup(&f.base);
    let v = sk.v.build(cfg.alpha, sup);
    let w = sk.w.build(cfg.alpha, sup);
    let one = SkewObservableSpec::Base {
        base: ObservableSpec::Constant { value: 1.0 },
    }
    .build(cfg.alpha, sup);
    let eta_one = eta_average(&f, f0, &one, 0.0, sk.eta_steps, sk.eta_tol)?;
    let eta_one_err = eta_one.vbar.values().iter().map(|x| (x.re - 1.0).abs()).fold(0.0, f64::max);
    let eta_v = eta_average(&f, f0, &v, 0.0, sk.eta_steps, sk.eta_tol)?;
    let ts = RunConfig::t_grid(&sk.t_grid, mean_roof);
    let split_max = sk.split_times.iter().copied().fold(0.0, f64::max);
    let horizon = ts.iter().copied().fold(split_max, f64::max);
    let mut q = LevelQuadrature::for_horizon(&f.base, roof, f0, horizon, LevelRule::default())?;
    if q.n_max() < sk.mu_x_levels {
        q = LevelQuadrature::new(&f.base, roof, f0, sk.mu_x_levels, LevelRule::default())?;
    }
    let bounds = mu_x_integral(&f, &q, &v, 0.0, sk.mu_x_levels, (contraction.c, gamma0))?;
    let vbar_mu = eta_v.vbar.integrate_weighted(f0).re;
    // v̄ is tabulated on the grid of f₀, so the y-interpolation error enters at the grid scale.
    let disint_tol = 0.5 * bounds.gap + eta_v.vbar_norm / (cfg.grid as f64).powf(cfg.alpha);
    let disint_ok = (bounds.value - vbar_mu).abs() <= disint_tol;
    let depth = burn_in(sk.path_tol, gamma0)?;
    let samples = sample_mu_x(&f, roof, f0, mean_roof, cfg.samples, cfg.seed, depth);
    let setup = SplitSetup {
        f0,
        visits: &q,
        eta: &eta_v.measure,
        contraction: (contraction.c, gamma0),
        depth,
    };
    let corr = flow_correlation(&f, roof, &v, &w, &ts, &sk.split_times, &samples, &setup)?;
    let mut tc = Table::new("curve", vec!["t", "estimate", "se", "method"]);
    curve_rows(&mut tc, &corr.curve);
    let mut tsplit = Table::new(
        "split",
        vec!["t", "rho_2t", "i1", "i1_se", "envelope", "i2", "i2_se", "quotient", "quotient_se"],
    );
    for r in &corr.split {
        tsplit.push(vec![
            num(r.t),
            num(r.rho_2t),
            num(r.i1),
            num(r.i1_se),
            num(r.envelope),
            num(r.i2),
            num(r.i2_se),
            num(r.quotient),
            num(r.quotient_se),
        ]);
    }
    let mut out = Outcome::new(
        "skew",
        json!({
            "contraction": contraction,
            "eta_one_error": eta_one_err,
            "eta": eta_v,
            "mu_x": bounds,
            "vbar_integral": vbar_mu,
            "disintegration_tolerance": disint_tol,
            "disintegration_holds": disint_ok,
            "depth": depth,
            "samples": samples.len(),
            "correlation": corr,
        }),
    )?;
    out.check(eta_one_err <= 1e-10, format!("eta_y(1) off by {eta_one_err}"));
    out.check(disint_ok, format!("disintegration: {} vs {}", bounds.value, vbar_mu));
    for r in &corr.split {
        out.check(r.within_envelope(), format!("t={}: |I1|={} above envelope {}", r.t, r.i1.abs(), r.envelope));
    }
    out.tables.push(tc);
    out.tables.push(tsplit);
    Ok(out)
}

fn lorenz(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let l = &cfg.lorenz;
    let spec = lorenz_spectrum(l.sigma, l.rho, l.beta)?;
    let mut out = Outcome::new("lorenz", json!({ "parameters": l, "spectrum": spec }))?;
    out.check(spec.lorenz_like_ordering, "Lorenz-like ordering");
    out.check(spec.strong_dissipativity, "strong dissipativity");
    Ok(out)
}
