//! Twisted transfer operators on a uniform grid.

mod dolgopyat;
mod lasota_yorke;
mod operator;
mod spectrum;

pub use dolgopyat::{dolgopyat_probe, DolgopyatReport, NormCurvePoint, ProbeResult, ProbeSettings};
pub use lasota_yorke::{ly_report, ly_samples, LyMargin, LyReport, SampleFunction};
pub use operator::{apply_a, apply_p, apply_word_sum, Kernel, TwistedOperator, DEFAULT_TAIL_BOUND};
pub use spectrum::{
    apply_l, leading_spectrum, leading_spectrum_with, mu_integral, twist_epsilon, NormalizedOperator, SpectralData,
    TwistParameter,
};
