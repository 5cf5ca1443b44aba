use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{enumerate_words, BranchWord, ExpandingMap, RoofFunction};
use crate::error::{Error, Result};

/// Default number of grid intervals for inf |ψ'|.
pub const UNI_GRID: usize = 4096;
/// Best grid infimum below which no witness is reported.
pub const UNI_FLOOR: f64 = 1e-8;

/// (ψ(y), ψ'(y)) for ψ = R_n∘h1 − R_n∘h2.
pub fn psi(map: &ExpandingMap, roof: &RoofFunction, w1: &BranchWord, w2: &BranchWord, y: f64) -> Result<(f64, f64)> {
    if w1.len() != w2.len() {
        return Err(Error::WordLengthMismatch {
            left: w1.len(),
            right: w2.len(),
        });
    }
    let (a, da) = roof.birkhoff(map, w1, y);
    let (b, db) = roof.birkhoff(map, w2, y);
    Ok((a - b, da - db))
}

#[derive(Clone, Debug, Serialize)]
pub struct UniWitness {
    pub n0: usize,
    pub word1: BranchWord,
    pub word2: BranchWord,
    /// Grid infimum of |ψ'| minus the slope-change safety margin.
    pub d: f64,
    pub grid_inf: f64,
    pub margin: f64,
    pub argmin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniScan {
    pub witness: Option<UniWitness>,
    /// Best D found, also when below the floor.
    pub best_d: f64,
    pub pairs_scanned: usize,
}

fn derivative_table(map: &ExpandingMap, roof: &RoofFunction, word: &BranchWord, grid: usize) -> Vec<f64> {
    (0..=grid)
        .map(|k| roof.birkhoff(map, word, k as f64 / grid as f64).1)
        .collect()
}

/// Grid infimum of |d1 − d2|, the safety margin and the argmin node.
fn pair_infimum(d1: &[f64], d2: &[f64]) -> (f64, f64, usize) {
    let mut inf = f64::INFINITY;
    let mut at = 0;
    let mut margin: f64 = 0.0;
    let mut prev = d1[0] - d2[0];
    for k in 0..d1.len() {
        let p = d1[k] - d2[k];
        if p.abs() < inf {
            inf = p.abs();
            at = k;
        }
        margin = margin.max((p - prev).abs());
        prev = p;
    }
    (inf, margin, at)
}

/// Witness data for a given pair.
pub fn evaluate_pair(
    map: &ExpandingMap,
    roof: &RoofFunction,
    w1: &BranchWord,
    w2: &BranchWord,
    grid: usize,
) -> Result<UniWitness> {
    if w1.len() != w2.len() {
        return Err(Error::WordLengthMismatch {
            left: w1.len(),
            right: w2.len(),
        });
    }
    let d1 = derivative_table(map, roof, w1, grid);
    let d2 = derivative_table(map, roof, w2, grid);
    let (inf, margin, at) = pair_infimum(&d1, &d2);
    Ok(UniWitness {
        n0: w1.len(),
        word1: w1.clone(),
        word2: w2.clone(),
        d: (inf - margin).max(0.0),
        grid_inf: inf,
        margin,
        argmin: at as f64 / grid as f64,
    })
}

/// Exhaustive search over pairs of equal-length words with n in `n_range`.
pub fn uni_scan(
    map: &ExpandingMap,
    roof: &RoofFunction,
    n_range: &[usize],
    grid: usize,
    floor: f64,
) -> Result<UniScan> {
    if n_range.is_empty() {
        return Err(Error::Precondition("empty n range".into()));
    }
    let mut ns = n_range.to_vec();
    ns.sort_unstable();
    let mut best: Option<UniWitness> = None;
    let mut pairs_scanned = 0;
    for &n in &ns {
        let words = enumerate_words(map, roof, n, None)?.words;
        let tables: Vec<Vec<f64>> = words
            .par_iter()
            .map(|w| derivative_table(map, roof, w, grid))
            .collect();
        let count = words.len();
        // Per-row best in lexicographic order, reduced sequentially.
        let rows: Vec<Option<(f64, f64, usize, usize, usize)>> = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut row: Option<(f64, f64, usize, usize, usize)> = None;
                for j in i + 1..count {
                    let (inf, margin, at) = pair_infimum(&tables[i], &tables[j]);
                    let d = (inf - margin).max(0.0);
                    if row.is_none_or(|r| d > r.0) {
                        row = Some((d, inf, at, i, j));
                    }
                }
                row
            })
            .collect();
        pairs_scanned += count * (count - 1) / 2;
        for (d, inf, at, i, j) in rows.into_iter().flatten() {
            let better = match &best {
                None => true,
                Some(b) => d > b.d * (1.0 + 1e-12) + 1e-300,
            };
            if better {
                let (d1, d2) = (&tables[i], &tables[j]);
                let margin = pair_infimum(d1, d2).1;
                best = Some(UniWitness {
                    n0: n,
                    word1: words[i].clone(),
                    word2: words[j].clone(),
                    d,
                    grid_inf: inf,
                    margin,
                    argmin: at as f64 / grid as f64,
                });
            }
        }
    }
    let best_d = best.as_ref().map_or(0.0, |b| b.d);
    Ok(UniScan {
        witness: best.filter(|b| b.d >= floor),
        best_d,
        pairs_scanned,
    })
}

/// Pair (h1∘g, h2∘g); its grid infimum is at least D·inf|g'|.
pub fn pushforward(
    map: &ExpandingMap,
    roof: &RoofFunction,
    witness: &UniWitness,
    inner: &[usize],
    grid: usize,
) -> Result<UniWitness> {
    let w1 = witness.word1.append(map, inner)?;
    let w2 = witness.word2.append(map, inner)?;
    evaluate_pair(map, roof, &w1, &w2, grid)
}

/// Grows a witness by prepending one letter to each word, greedily maximizing D, to length `target`.
pub fn extend_witness(
    map: &ExpandingMap,
    roof: &RoofFunction,
    witness: &UniWitness,
    target: usize,
    grid: usize,
) -> Result<UniWitness> {
    let k = map.active_branches();
    let mut cur = witness.clone();
    while cur.n0 < target {
        let candidates: Vec<(usize, usize)> = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).collect();
        let evaluated: Vec<UniWitness> = candidates
            .par_iter()
            .map(|&(a, b)| {
                let w1 = cur.word1.prepend(map, &[a])?;
                let w2 = cur.word2.prepend(map, &[b])?;
                evaluate_pair(map, roof, &w1, &w2, grid)
            })
            .collect::<Result<_>>()?;
        let mut best = evaluated[0].clone();
        for w in evaluated.into_iter().skip(1) {
            if w.d > best.d * (1.0 + 1e-12) {
                best = w;
            }
        }
        cur = best;
    }
    Ok(cur)
}
