use std::path::Path;

use decaylab::applications::{lookup, Model};
use decaylab::dynamics::{ExpandingMap, RoofFunction};
use decaylab::skew::{FiberMap, SkewObservableSpec};
use decaylab::suspension::ObservableSpec;
use decaylab::uni::{UNI_FLOOR, UNI_GRID};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// t-grid selection for the correlation pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TGrid {
    /// 81 points on [0, 10·∫R dμ].
    Default,
    Linear { t_max: f64, points: usize },
    List { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    /// Replaces the declared C₁ of the map.
    pub c1: Option<f64>,
    pub rho0: Option<f64>,
    pub grid: usize,
    pub max_word_length: usize,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            c1: None,
            rho0: None,
            grid: 256,
            max_word_length: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniSection {
    pub n_max: usize,
    pub grid: usize,
    pub floor: f64,
    /// b values for the C₃ measurement.
    pub ly_bs: Vec<f64>,
    pub ly_n: usize,
    /// Extra n₀ values checked for monotone admissibility.
    pub monotone_span: usize,
}

impl Default for UniSection {
    fn default() -> Self {
        Self {
            n_max: 1,
            grid: UNI_GRID,
            floor: UNI_FLOOR,
            ly_bs: vec![1.0, 10.0, 100.0],
            ly_n: 8,
            monotone_span: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub sigmas: Vec<f64>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            sigmas: vec![-0.05, 0.0, 0.05],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DolgopyatSection {
    pub bs: Vec<f64>,
    pub samples: usize,
    pub step: usize,
    pub max_n: usize,
    pub floor: f64,
}

impl Default for DolgopyatSection {
    fn default() -> Self {
        Self {
            bs: vec![40.0, 100.0],
            samples: 2,
            step: 1,
            max_n: 240,
            floor: 1e-11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeSection {
    pub bs: Vec<f64>,
    pub pairs: usize,
    pub steps: usize,
    pub sigma: f64,
    /// Repeat the first pair on a grid twice as fine and compare β̂.
    pub refine: bool,
}

impl Default for ConeSection {
    fn default() -> Self {
        Self {
            bs: vec![50.0, 100.0],
            pairs: 20,
            steps: 20,
            sigma: 0.0,
            refine: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelateSection {
    pub v: ObservableSpec,
    pub w: ObservableSpec,
    pub t_grid: TGrid,
    /// γ of the visit moment.
    pub visit_gamma: f64,
}

impl Default for CorrelateSection {
    fn default() -> Self {
        let y = ObservableSpec::Polynomial { coeffs: vec![0.0, 1.0] };
        Self {
            v: y.clone(),
            w: y,
            t_grid: TGrid::Default,
            visit_gamma: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaplaceSection {
    pub s: Vec<f64>,
    pub terms: usize,
    pub tol: f64,
}

impl Default for LaplaceSection {
    fn default() -> Self {
        Self {
            s: vec![0.3, 0.5, 1.0],
            terms: 200,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkewSection {
    pub v: SkewObservableSpec,
    pub w: SkewObservableSpec,
    pub t_grid: TGrid,
    pub split_times: Vec<f64>,
    pub eta_steps: usize,
    pub eta_tol: f64,
    /// Fiber contraction target for the backward paths.
    pub path_tol: f64,
    pub mu_x_levels: usize,
    pub contraction_pairs: usize,
}

impl Default for SkewSection {
    fn default() -> Self {
        Self {
            v: SkewObservableSpec::Product { freq: 1.0 },
            w: SkewObservableSpec::Fiber { scale: 1.0 },
            t_grid: TGrid::Linear { t_max: 8.0, points: 17 },
            split_times: vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
            eta_steps: 40,
            eta_tol: 1e-9,
            path_tol: 1e-10,
            mu_x_levels: 8,
            contraction_pairs: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzSection {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for LorenzSection {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Zoo entry; `map`, `roof` and `fiber` replace its parts when present.
    pub model: String,
    pub map: Option<ExpandingMap>,
    pub roof: Option<RoofFunction>,
    pub fiber: Option<FiberMap>,
    pub seed: u64,
    /// Rayon workers; not echoed, outputs do not depend on it.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    /// Grid intervals N.
    pub grid: usize,
    /// Branch truncation M for countable maps.
    pub truncation: Option<usize>,
    pub samples: usize,
    pub alpha: f64,
    pub check: CheckSection,
    pub uni: UniSection,
    pub spectrum: SpectrumSection,
    pub dolgopyat: DolgopyatSection,
    pub cone: ConeSection,
    pub correlate: CorrelateSection,
    pub laplace: LaplaceSection,
    pub skew: SkewSection,
    pub lorenz: LorenzSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "doubling-quadratic".into(),
            map: None,
            roof: None,
            fiber: None,
            seed: 0,
            workers: None,
            grid: 1024,
            truncation: None,
            samples: 200_000,
            alpha: 1.0,
            check: CheckSection::default(),
            uni: UniSection::default(),
            spectrum: SpectrumSection::default(),
            dolgopyat: DolgopyatSection::default(),
            cone: ConeSection::default(),
            correlate: CorrelateSection::default(),
            laplace: LaplaceSection::default(),
            skew: SkewSection::default(),
            lorenz: LorenzSection::default(),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {x}")))
    }
}

fn nonzero(name: &str, n: usize) -> Result<(), CliError> {
    if n > 0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        nonzero("grid", self.grid)?;
        nonzero("samples", self.samples)?;
        positive("alpha", self.alpha)?;
        if self.alpha > 1.0 {
            return Err(CliError::Config(format!("alpha must lie in (0,1], got {}", self.alpha)));
        }
        if let Some(w) = self.workers {
            nonzero("workers", w)?;
        }
        if let Some(m) = self.truncation {
            nonzero("truncation", m)?;
        }
        if let Some(c1) = self.check.c1 {
            positive("check.c1", c1)?;
        }
        if let Some(r) = self.check.rho0 {
            positive("check.rho0", r)?;
        }
        nonzero("check.grid", self.check.grid)?;
        nonzero("check.max_word_length", self.check.max_word_length)?;
        nonzero("uni.n_max", self.uni.n_max)?;
        nonzero("uni.grid", self.uni.grid)?;
        positive("uni.floor", self.uni.floor)?;
        nonzero("uni.ly_n", self.uni.ly_n)?;
        nonzero("dolgopyat.samples", self.dolgopyat.samples)?;
        nonzero("dolgopyat.step", self.dolgopyat.step)?;
        nonzero("dolgopyat.max_n", self.dolgopyat.max_n)?;
        positive("dolgopyat.floor", self.dolgopyat.floor)?;
        nonzero("cone.pairs", self.cone.pairs)?;
        for &b in self.dolgopyat.bs.iter().chain(&self.cone.bs) {
            positive("b", b)?;
        }
        for &s in &self.laplace.s {
            positive("laplace.s", s)?;
        }
        nonzero("laplace.terms", self.laplace.terms)?;
        positive("laplace.tol", self.laplace.tol)?;
        positive("correlate.visit_gamma", self.correlate.visit_gamma)?;
        for &t in &self.skew.split_times {
            positive("skew.split_times", t)?;
        }
        nonzero("skew.eta_steps", self.skew.eta_steps)?;
        positive("skew.eta_tol", self.skew.eta_tol)?;
        positive("skew.path_tol", self.skew.path_tol)?;
        nonzero("skew.contraction_pairs", self.skew.contraction_pairs)?;
        for grid in [&self.correlate.t_grid, &self.skew.t_grid] {
            match grid {
                TGrid::Default => {}
                TGrid::Linear { t_max, points } => {
                    positive("t_max", *t_max)?;
                    if *points < 2 {
                        return Err(CliError::Config("t-grid needs at least 2 points".into()));
                    }
                }
                TGrid::List { values } => {
                    if values.is_empty() || values.iter().any(|&t| t < 0.0) || values.windows(2).any(|p| p[1] < p[0]) {
                        return Err(CliError::Config("t-grid list must be non-empty, non-negative and sorted".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Zoo model with the inline overrides applied.
    pub fn model(&self) -> Result<Model, CliError> {
        let mut model = lookup(&self.model).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(map) = &self.map {
            map.validate().map_err(|e| CliError::Config(e.to_string()))?;
            model.map = map.clone();
        }
        if let Some(roof) = &self.roof {
            model.roof = roof.clone();
        }
        if let Some(fiber) = &self.fiber {
            model.fiber = Some(fiber.clone());
        }
        if let Some(m) = self.truncation {
            model.map = model.map.with_truncation(m);
        }
        model.roof.validate(&model.map).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(model)
    }

    pub fn t_grid(grid: &TGrid, mean_roof: f64) -> Vec<f64> {
        match grid {
            TGrid::Default => decaylab::suspension::default_t_grid(mean_roof),
            TGrid::Linear { t_max, points } => {
                (0..*points).map(|k| t_max * k as f64 / (*points - 1) as f64).collect()
            }
            TGrid::List { values } => values.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::from_toml(
            "model = \"doubling-linear\"\nseed = 9\n[cone]\nbs = [60.0]\n[correlate.t_grid]\nkind = \"linear\"\nt_max = 4.0\npoints = 5\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.cone.bs, vec![60.0]);
        assert_eq!(RunConfig::t_grid(&cfg.correlate.t_grid, 2.0), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in ["grid = 0", "alpha = -1.0", "[laplace]\ns = [0.0]", "unknown = 1", "model = \"nope\""] {
            let res = RunConfig::from_toml(text).and_then(|c| c.model().map(|_| c));
            assert!(matches!(res, Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn inline_roof_replaces_zoo_roof() {
        let cfg = RunConfig::from_toml("[roof]\nepsilon = 0.1\n[roof.kind]\nkind = \"constant\"\nvalue = 3.0\n").unwrap();
        let m = cfg.model().unwrap();
        assert_eq!(m.roof.value_at(&m.map, 0.3), 3.0);
    }
}
