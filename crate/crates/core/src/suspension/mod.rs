//! Suspension semiflow over an expanding map and its correlation pipelines.

mod correlation;
mod flow;
mod laplace;
mod levels;
mod observable;
mod sampling;
mod visits;

pub use correlation::{
    correlation_direct, correlation_series, correlation_series_curve, decay_fit, default_t_grid, mu_r_integral,
    CorrelationCurve, CurveMethod, CurvePoint, DecayFit, HEIGHT_ORDER, HEIGHT_PANEL,
};
pub use flow::{flow, SuspensionPoint};
pub use laplace::{
    default_horizon, laplace_direct, laplace_rho, observable_transform, transform_at, DirectLaplace, LaplaceReport,
    LaplaceSetup, TransformSign, TRANSFORM_PANEL,
};
pub use levels::{integrate_panels, ordered_sum, series_levels, window, LevelNode, LevelQuadrature, LevelRule, NODE_CHUNK};
pub use observable::{identity_observable, Observable, ObservableSpec};
pub use sampling::{mean_roof_on_grid, sample_mu_r, InverseCdf, MuRSamples, WeightedSample, BATCHES};
pub use visits::{visit_moment, visit_value, VisitCurve};
