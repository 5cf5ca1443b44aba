//! Named model systems.

use serde::Serialize;

use crate::dynamics::{Branch, ExpandingMap, MapKind, RoofFunction, RoofKind};
use crate::error::{Error, Result};
use crate::skew::{FiberMap, FiberSpace, SkewMap};

#[derive(Clone, Debug, Serialize)]
pub struct Model {
    pub name: String,
    pub map: ExpandingMap,
    pub roof: RoofFunction,
    pub fiber: Option<FiberMap>,
}

impl Model {
    pub fn skew(&self) -> Result<SkewMap> {
        let fiber = self
            .fiber
            .clone()
            .unwrap_or_else(linear_fiber);
        SkewMap::new(self.map.clone(), fiber)
    }
}

pub const MODEL_NAMES: [&str; 6] = [
    "doubling-quadratic",
    "doubling-linear",
    "doubling-constant",
    "ternary-quadratic",
    "mobius-quadratic",
    "geometric-quadratic",
];

fn affine(lo: f64, hi: f64) -> Branch {
    Branch::Affine {
        lo,
        hi,
        increasing: true,
    }
}

/// y ↦ 2y mod 1.
pub fn doubling_map() -> ExpandingMap {
    let kind = MapKind::Finite {
        branches: vec![affine(0.0, 0.5), affine(0.5, 1.0)],
    };
    ExpandingMap::new("doubling", kind, 1.0, 1.0, 0.5).expect("valid doubling map")
}

/// y ↦ 3y mod 1.
pub fn ternary_map() -> ExpandingMap {
    let kind = MapKind::Finite {
        branches: vec![
            affine(0.0, 1.0 / 3.0),
            affine(1.0 / 3.0, 2.0 / 3.0),
            affine(2.0 / 3.0, 1.0),
        ],
    };
    ExpandingMap::new("ternary", kind, 1.0, 1.0, 1.0 / 3.0).expect("valid ternary map")
}

/// Two Möbius branches y/(3−y) and (2y+1)/(y+2), with |h'| ∈ [1/3, 3/4].
pub fn mobius_map() -> ExpandingMap {
    let kind = MapKind::Finite {
        branches: vec![
            Branch::Mobius {
                a: 1.0,
                b: 0.0,
                c: -1.0,
                d: 3.0,
            },
            Branch::Mobius {
                a: 2.0,
                b: 1.0,
                c: 1.0,
                d: 2.0,
            },
        ],
    };
    ExpandingMap::new("mobius", kind, 1.0, 1.0, 0.75).expect("valid Möbius map")
}

/// Countable family of affine branches onto the cells [r^{m+1}, r^m].
pub fn geometric_map(ratio: f64) -> ExpandingMap {
    ExpandingMap::new("geometric", MapKind::Geometric { ratio }, 1.0, 1.0, 1.0 - ratio)
        .expect("valid geometric map")
        .with_truncation(24)
}

/// R(y) = 2 + y²/2.
pub fn quadratic_roof() -> RoofFunction {
    RoofFunction::new(
        RoofKind::Polynomial {
            coeffs: vec![2.0, 0.0, 0.5],
        },
        0.1,
    )
}

/// R(y) = 2 + y.
pub fn linear_roof() -> RoofFunction {
    RoofFunction::new(
        RoofKind::Polynomial {
            coeffs: vec![2.0, 1.0],
        },
        0.1,
    )
}

/// R ≡ 2.
pub fn constant_roof() -> RoofFunction {
    RoofFunction::new(RoofKind::Constant { value: 2.0 }, 0.1)
}

/// G(y,z) = z/2 + y/4 on Z = [0,1].
pub fn linear_fiber() -> FiberMap {
    FiberMap::Affine {
        z_coef: 0.5,
        y_coef: 0.25,
        offset: 0.0,
        space: FiberSpace::Interval,
    }
}

pub fn model_zoo() -> Vec<Model> {
    MODEL_NAMES
        .iter()
        .map(|name| lookup(name).expect("zoo names resolve"))
        .collect()
}

pub fn lookup(name: &str) -> Result<Model> {
    let (map, roof) = match name {
        "doubling-quadratic" => (doubling_map(), quadratic_roof()),
        "doubling-linear" => (doubling_map(), linear_roof()),
        "doubling-constant" => (doubling_map(), constant_roof()),
        "ternary-quadratic" => (ternary_map(), quadratic_roof()),
        "mobius-quadratic" => (mobius_map(), quadratic_roof()),
        "geometric-quadratic" => (geometric_map(0.5), quadratic_roof()),
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    Ok(Model {
        name: name.to_string(),
        map,
        roof,
        fiber: Some(linear_fiber()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        assert_eq!(model_zoo().len(), MODEL_NAMES.len());
        assert!(matches!(lookup("lorenz-geometric"), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn zoo_roofs_are_positive() {
        for model in model_zoo() {
            model.roof.validate(&model.map).unwrap();
        }
    }
}
