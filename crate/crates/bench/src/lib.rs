//! Shared fixtures for the operator benchmarks.

use decaylab::applications::zoo;
use decaylab::transfer::{leading_spectrum_with, SpectralData, TwistedOperator};

pub struct Fixture {
    pub model: zoo::Model,
    pub op: TwistedOperator,
    pub spectral: SpectralData,
}

/// Doubling map with the quadratic roof on a grid of `n` intervals.
pub fn doubling_fixture(n: usize) -> Fixture {
    let model = zoo::lookup("doubling-quadratic").expect("zoo model");
    let op = TwistedOperator::new(&model.map, &model.roof, n).expect("operator");
    let spectral = leading_spectrum_with(&op, &model.map, &model.roof, 0.0).expect("spectrum");
    Fixture { model, op, spectral }
}
