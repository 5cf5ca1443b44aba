//! Lorenz equilibrium diagnostics and the model zoo.

mod lorenz;
pub mod zoo;

pub use lorenz::{lorenz_spectrum, EquilibriumSpectrum};
pub use zoo::{lookup, model_zoo, Model, MODEL_NAMES};
