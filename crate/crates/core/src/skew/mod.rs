//! Hyperbolic skew products over the expanding base.

mod correlation;
mod eta;
mod fiber;
mod measure;
mod observable;

pub use correlation::{flow_correlation, skew_flow, SkewCorrelation, SkewPoint, SplitRow, SplitSetup};
pub use eta::{eta_average, EtaAverage, EtaMeasure, FIBER_GRID, FLAG_FRACTION};
pub use fiber::{contraction_check, default_pairs, skew_iterate, ContractionReport, FiberMap, FiberSpace, SkewMap};
pub use measure::{burn_in, mu_x_integral, sample_fiber, sample_mu_x, MuXBounds, MuXSamples, SkewSample, ENVELOPE_POINTS};
pub use observable::{SkewObservable, SkewObservableSpec};
