//! Expanding maps, inverse-branch words and roof functions.

mod conditions;
mod map;
mod roof;
mod word;

pub use conditions::{verify_conditions, ConditionReport, Witness};
pub use map::{Branch, ExpandingMap, MapKind, BOUNDARY_TOL};
pub use roof::{birkhoff_letters, RoofFunction, RoofKind};
pub use word::{compose, enumerate_words, BranchWord, WordEnumeration};
