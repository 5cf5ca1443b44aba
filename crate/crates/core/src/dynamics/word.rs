use serde::Serialize;

use super::map::ExpandingMap;
use super::roof::RoofFunction;
use crate::error::{Error, Result};

/// Inverse branch h = h_{i1}∘…∘h_{in} of F^n.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchWord {
    letters: Vec<usize>,
    image: (f64, f64),
}

impl BranchWord {
    pub fn new(map: &ExpandingMap, letters: Vec<usize>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::Precondition("word must have length at least 1".into()));
        }
        let limit = map.active_branches();
        if let Some(&bad) = letters.iter().find(|&&m| m >= limit) {
            return Err(Error::InvalidSpec(format!("letter {bad} beyond {limit} branches")));
        }
        let a = compose(map, &letters, 0.0).0;
        let b = compose(map, &letters, 1.0).0;
        Ok(Self {
            letters,
            image: (a.min(b), a.max(b)),
        })
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Image interval h([0,1]).
    pub fn image(&self) -> (f64, f64) {
        self.image
    }

    /// (h(y), h'(y)).
    pub fn eval(&self, map: &ExpandingMap, y: f64) -> (f64, f64) {
        compose(map, &self.letters, y)
    }

    /// The word g∘self: `outer` letters are applied last.
    pub fn prepend(&self, map: &ExpandingMap, outer: &[usize]) -> Result<Self> {
        let mut letters = outer.to_vec();
        letters.extend_from_slice(&self.letters);
        Self::new(map, letters)
    }

    /// The word self∘g: `inner` letters are applied first.
    pub fn append(&self, map: &ExpandingMap, inner: &[usize]) -> Result<Self> {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(inner);
        Self::new(map, letters)
    }

    /// min and max of |h'| sampled on `k+1` points of [0,1].
    pub fn derivative_range(&self, map: &ExpandingMap, k: usize) -> (f64, f64) {
        (0..=k)
            .map(|j| self.eval(map, j as f64 / k as f64).1.abs())
            .fold((f64::INFINITY, 0.0), |(lo, hi), d| (lo.min(d), hi.max(d)))
    }
}

/// h_{i1}∘…∘h_{in}(y) and its derivative.
#[inline]
pub fn compose(map: &ExpandingMap, letters: &[usize], y: f64) -> (f64, f64) {
    let mut x = y;
    let mut d = 1.0;
    for &m in letters.iter().rev() {
        let (nx, dx) = map.inverse(m, x);
        x = nx;
        d *= dx;
    }
    (x, d)
}

#[derive(Clone, Debug)]
pub struct WordEnumeration {
    pub words: Vec<BranchWord>,
    /// Σ over omitted single branches of e^{ε|R∘h|}|h'|.
    pub tail_mass: f64,
}

/// All words of length n over the enumerated branches, lexicographic.
pub fn enumerate_words(
    map: &ExpandingMap,
    roof: &RoofFunction,
    n: usize,
    max_tail: Option<f64>,
) -> Result<WordEnumeration> {
    if n == 0 {
        return Err(Error::Precondition("word length must be at least 1".into()));
    }
    let k = map.active_branches();
    let tail_mass = roof.tail_mass(map);
    if let Some(bound) = max_tail {
        if tail_mass > bound {
            return Err(Error::TruncationTailTooLarge {
                tail: tail_mass,
                bound,
            });
        }
    }
    let total = k.checked_pow(n as u32).ok_or_else(|| {
        Error::Precondition(format!("{k}^{n} words overflow"))
    })?;
    let mut words = Vec::with_capacity(total);
    let mut letters = vec![0usize; n];
    for _ in 0..total {
        words.push(BranchWord::new(map, letters.clone())?);
        for pos in (0..n).rev() {
            letters[pos] += 1;
            if letters[pos] < k {
                break;
            }
            letters[pos] = 0;
        }
    }
    Ok(WordEnumeration { words, tail_mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::zoo;
    use proptest::prelude::*;

    #[test]
    fn single_and_double_doubling_words() {
        let map = zoo::doubling_map();
        let w = BranchWord::new(&map, vec![0]).unwrap();
        assert_eq!(w.eval(&map, 0.4), (0.2, 0.5));
        let w = BranchWord::new(&map, vec![1, 0]).unwrap();
        assert_eq!(w.eval(&map, 0.0), (0.5, 0.25));
        assert_eq!(w.image(), (0.5, 0.75));
    }

    #[test]
    fn enumeration_order_and_counts() {
        let map = zoo::doubling_map();
        let roof = zoo::quadratic_roof();
        let e = enumerate_words(&map, &roof, 1, None).unwrap();
        let letters: Vec<_> = e.words.iter().map(|w| w.letters().to_vec()).collect();
        assert_eq!(letters, vec![vec![0], vec![1]]);
        assert_eq!(e.tail_mass, 0.0);
        let e = enumerate_words(&map, &roof, 2, None).unwrap();
        let letters: Vec<_> = e.words.iter().map(|w| w.letters().to_vec()).collect();
        assert_eq!(letters, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn countable_truncation_reports_tail() {
        let map = zoo::geometric_map(0.5).with_truncation(10);
        let roof = zoo::quadratic_roof();
        let e = enumerate_words(&map, &roof, 1, None).unwrap();
        assert_eq!(e.words.len(), 10);
        // Cells past 10 sit in [0, 2^-10] where R ≤ 2 + 2^-21.
        let bound = (0.1 * (2.0 + 0.5 * 2f64.powi(-20))).exp() * 2f64.powi(-10);
        assert!(e.tail_mass > 0.0 && (e.tail_mass - bound).abs() < 1e-12);
        assert!(matches!(
            enumerate_words(&map, &roof, 1, Some(1e-6)),
            Err(Error::TruncationTailTooLarge { .. })
        ));
    }

    proptest! {
        #[test]
        fn concatenation_is_composition(a in proptest::collection::vec(0usize..3, 1..6),
                                        b in proptest::collection::vec(0usize..3, 1..6),
                                        y in 0.0f64..1.0) {
            let map = zoo::ternary_map();
            let wa = BranchWord::new(&map, a.clone()).unwrap();
            let wb = BranchWord::new(&map, b.clone()).unwrap();
            let wab = wa.append(&map, &b).unwrap();
            let (inner, d_inner) = wb.eval(&map, y);
            let (outer, d_outer) = wa.eval(&map, inner);
            let (x, d) = wab.eval(&map, y);
            prop_assert!((x - outer).abs() < 1e-12);
            prop_assert!((d - d_outer * d_inner).abs() < 1e-12);
            prop_assert!(x >= wab.image().0 - 1e-15 && x <= wab.image().1 + 1e-15);
        }

        #[test]
        fn word_then_forward_returns_start(letters in proptest::collection::vec(0usize..2, 1..8),
                                           y in 0.001f64..0.999) {
            let map = zoo::mobius_map();
            let w = BranchWord::new(&map, letters.clone()).unwrap();
            let (x, _) = w.eval(&map, y);
            if let Ok(orbit) = map.eval_forward(x, letters.len()) {
                prop_assert!((orbit[letters.len()] - y).abs() < 1e-9);
            }
        }
    }
}
