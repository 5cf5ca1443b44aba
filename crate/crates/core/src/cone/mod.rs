//! The cone of (u, v) pairs, the damping function χ and the damped iteration.

mod chi;
mod iterate;
mod pair;

pub use chi::{build_chi, CancelContext, ChiFunction, ChiInterval, ChiStructure};
pub use iterate::{
    cancellation_check, cone_grid, cone_iterate, damped_iterate, fed_ratio, undamped_iterate, CancellationReport,
    ConeIteration, ConeStep, FedReport, IterationSetup, CANCEL_TOL,
};
pub use pair::{cone_check, cone_check_full, sample_cone, ConePair, ConeReport};
