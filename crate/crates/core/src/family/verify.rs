//! Exhaustive ordered-pair verification of the covering property.
//!
//! Each unordered pair `{i, j}` is scanned once: a coordinate difference
//! `d = v_c - w_c` covers `d` for the ordered pair `(i, j)` and `-d` for
//! `(j, i)`. Hits are tracked with generation stamps so no mask is cleared
//! between pairs, and a pair stops scanning once both directions are
//! complete.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CoverSet, CoveringFamily};
use crate::error::{Error, Result};
use crate::zp::PrimeModulus;

/// Rows below which the verifier stays on the calling thread.
const PARALLEL_ROWS: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFailure {
    pub row_a: usize,
    pub row_b: usize,
    /// Smallest element of `S` that the ordered pair `(row_a, row_b)` misses.
    pub missing: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverageReport {
    pub is_covering: bool,
    /// Ordered pairs up to and including the first failure in row order
    /// (all `N (N - 1)` of them on success).
    pub checked_pairs: u64,
    pub first_failure: Option<PairFailure>,
    /// Wall time; left out of serialized output so artifacts stay byte-stable.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl PartialEq for CoverageReport {
    fn eq(&self, other: &Self) -> bool {
        self.is_covering == other.is_covering
            && self.checked_pairs == other.checked_pairs
            && self.first_failure == other.first_failure
    }
}

impl fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.first_failure {
            None => write!(f, "covering ({} ordered pairs checked)", self.checked_pairs),
            Some(PairFailure { row_a, row_b, missing }) => write!(
                f,
                "not covering: pair ({row_a}, {row_b}) misses {missing} ({} ordered pairs checked)",
                self.checked_pairs
            ),
        }
    }
}

/// `{ v_i - w_i mod p }` for the ordered pair `(v, w)`.
pub fn pair_cover_set(v: &[u32], w: &[u32], p: PrimeModulus) -> Result<CoverSet> {
    if v.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: v.len(),
            right: w.len(),
        });
    }
    let mut s = CoverSet::empty(p);
    for (&a, &b) in v.iter().zip(w) {
        s.insert(p.sub(a % p.get(), b % p.get()));
    }
    Ok(s)
}

struct Scratch {
    fwd: Vec<u32>,
    bwd: Vec<u32>,
    generation: u32,
}

impl Scratch {
    fn new(p: usize) -> Self {
        Scratch {
            fwd: vec![0; p],
            bwd: vec![0; p],
            generation: 0,
        }
    }

    fn next_generation(&mut self) -> u32 {
        if self.generation == u32::MAX {
            self.fwd.fill(0);
            self.bwd.fill(0);
            self.generation = 0;
        }
        self.generation += 1;
        self.generation
    }
}

struct Checker<'a> {
    family: &'a CoveringFamily,
    in_s: Vec<bool>,
    s_len: usize,
}

impl Checker<'_> {
    /// Returns `(forward_ok, backward_ok)` for the unordered pair `{i, j}`.
    #[inline]
    fn check_pair(&self, scratch: &mut Scratch, i: usize, j: usize) -> (bool, bool) {
        let p = self.family.modulus();
        let g = scratch.next_generation();
        let mut fwd_need = self.s_len;
        let mut bwd_need = self.s_len;
        for (&a, &b) in self.family.row(i).iter().zip(self.family.row(j)) {
            let d = p.sub(a, b) as usize;
            if self.in_s[d] && scratch.fwd[d] != g {
                scratch.fwd[d] = g;
                fwd_need -= 1;
            }
            let nd = p.neg(d as u32) as usize;
            if self.in_s[nd] && scratch.bwd[nd] != g {
                scratch.bwd[nd] = g;
                bwd_need -= 1;
            }
            if fwd_need == 0 && bwd_need == 0 {
                break;
            }
        }
        (fwd_need == 0, bwd_need == 0)
    }

    /// Row-order-first failing ordered pair among those involving `i` and a
    /// later row `j > i`.
    fn row_first_failure(&self, scratch: &mut Scratch, i: usize, bound: &AtomicUsize) -> Option<(usize, usize)> {
        let n = self.family.len();
        let mut backward: Option<(usize, usize)> = None;
        for j in i + 1..n {
            let (fwd, bwd) = self.check_pair(scratch, i, j);
            if !fwd {
                bound.fetch_min(i, Ordering::Relaxed);
                return Some((i, j));
            }
            if !bwd && backward.is_none() {
                backward = Some((j, i));
                bound.fetch_min(j, Ordering::Relaxed);
            }
        }
        backward
    }
}

/// Verifies that every ordered pair of distinct vectors is `S`-covering.
///
/// Rows are checked in parallel for large families; the reported failure is
/// always the first in row order, independent of scheduling.
pub fn is_covering(family: &CoveringFamily, s: &CoverSet) -> Result<CoverageReport> {
    let p = family.modulus();
    if s.modulus() != p {
        return Err(Error::ModulusMismatch {
            left: p.get(),
            right: s.modulus().get(),
        });
    }
    let start = Instant::now();
    let n = family.len();
    let total_pairs = n as u64 * (n as u64 - 1);
    let mut in_s = vec![false; p.get() as usize];
    for x in s.iter() {
        in_s[x as usize] = true;
    }
    let checker = Checker {
        family,
        in_s,
        s_len: s.len(),
    };

    let failure = if s.is_empty() || n < 2 {
        None
    } else {
        let bound = AtomicUsize::new(usize::MAX);
        let scan = |scratch: &mut Scratch, i: usize| {
            if i > bound.load(Ordering::Relaxed) {
                None
            } else {
                checker.row_first_failure(scratch, i, &bound)
            }
        };
        if n >= PARALLEL_ROWS && rayon::current_num_threads() > 1 {
            (0..n)
                .into_par_iter()
                .map_init(|| Scratch::new(p.get() as usize), scan)
                .filter_map(|x| x)
                .min()
        } else {
            let mut scratch = Scratch::new(p.get() as usize);
            (0..n).filter_map(|i| scan(&mut scratch, i)).min()
        }
    };

    let report = match failure {
        None => CoverageReport {
            is_covering: true,
            checked_pairs: total_pairs,
            first_failure: None,
            elapsed: start.elapsed(),
        },
        Some((a, b)) => {
            let covered = pair_cover_set(family.row(a), family.row(b), p)?;
            let missing = s
                .difference(&covered)
                .iter()
                .next()
                .expect("a failing pair misses some element");
            let rank = a as u64 * (n as u64 - 1) + if b < a { b } else { b - 1 } as u64;
            CoverageReport {
                is_covering: false,
                checked_pairs: rank + 1,
                first_failure: Some(PairFailure {
                    row_a: a,
                    row_b: b,
                    missing,
                }),
                elapsed: start.elapsed(),
            }
        }
    };
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deficit {
    pub row_a: usize,
    pub row_b: usize,
    pub missing: CoverSet,
}

/// Every ordered pair whose cover set misses part of `S`, in row order.
pub fn cover_deficit(family: &CoveringFamily, s: &CoverSet) -> Result<Vec<Deficit>> {
    let p = family.modulus();
    if s.modulus() != p {
        return Err(Error::ModulusMismatch {
            left: p.get(),
            right: s.modulus().get(),
        });
    }
    let n = family.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let covered = pair_cover_set(family.row(a), family.row(b), p)?;
            let missing = s.difference(&covered);
            if !missing.is_empty() {
                out.push(Deficit {
                    row_a: a,
                    row_b: b,
                    missing,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32) -> PrimeModulus {
        PrimeModulus::new(n).unwrap()
    }

    fn set(m: u32, xs: &[u32]) -> CoverSet {
        CoverSet::from_elements(p(m), xs.iter().copied()).unwrap()
    }

    #[test]
    fn pair_cover_examples() {
        assert_eq!(pair_cover_set(&[1, 2], &[1, 2], p(3)).unwrap(), set(3, &[0]));
        assert_eq!(pair_cover_set(&[0, 0], &[0, 1], p(3)).unwrap(), set(3, &[0, 2]));
        assert_eq!(pair_cover_set(&[1, 2], &[2, 1], p(3)).unwrap(), set(3, &[1, 2]));
        assert!(pair_cover_set(&[1], &[1, 2], p(3)).is_err());
    }

    #[test]
    fn singleton_is_vacuous() {
        let f = CoveringFamily::from_rows(p(5), &[[3u32, 4]]).unwrap();
        let r = is_covering(&f, &CoverSet::full(p(5))).unwrap();
        assert!(r.is_covering);
        assert_eq!(r.checked_pairs, 0);
    }

    #[test]
    fn non_example_reports_first_pair() {
        let f = CoveringFamily::from_rows(p(3), &[[0u32, 1], [0, 2]]).unwrap();
        let r = is_covering(&f, &CoverSet::full(p(3))).unwrap();
        assert!(!r.is_covering);
        assert_eq!(
            r.first_failure,
            Some(PairFailure {
                row_a: 0,
                row_b: 1,
                missing: 1
            })
        );
        assert_eq!(r.checked_pairs, 1);

        let d = cover_deficit(&f, &CoverSet::full(p(3))).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].missing, set(3, &[1]));
        assert_eq!(d[1].missing, set(3, &[2]));
    }

    #[test]
    fn backward_only_failure() {
        // (0) vs (1) over Z_7 with S = {1}: only the ordered pair (0, 1) fails.
        let f = CoveringFamily::from_rows(p(7), &[[0u32], [1]]).unwrap();
        let s = set(7, &[1]);
        let d = cover_deficit(&f, &s).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].row_a, d[0].row_b), (0, 1));
        assert_eq!(d[0].missing, s);

        let g = CoveringFamily::from_rows(p(7), &[[1u32], [0]]).unwrap();
        let r = is_covering(&g, &s).unwrap();
        assert_eq!(
            r.first_failure,
            Some(PairFailure {
                row_a: 1,
                row_b: 0,
                missing: 1
            })
        );
        assert_eq!(r.checked_pairs, 2);
    }

    #[test]
    fn covering_family_has_empty_deficit() {
        let f = CoveringFamily::from_rows(p(3), &[[1u32, 2], [2, 1]]).unwrap();
        let s = CoverSet::nonzero(p(3));
        assert!(is_covering(&f, &s).unwrap().is_covering);
        assert!(cover_deficit(&f, &s).unwrap().is_empty());
    }

    #[test]
    fn modulus_mismatch() {
        let f = CoveringFamily::from_rows(p(3), &[[1u32]]).unwrap();
        assert!(is_covering(&f, &CoverSet::full(p(5))).is_err());
    }

    #[test]
    fn parallel_path_is_deterministic() {
        // All 343 vectors of Z_7^3: above the parallel threshold, many failures.
        let m = p(7);
        let rows: Vec<[u32; 3]> = (0..343u32).map(|i| [i % 7, (i / 7) % 7, i / 49]).collect();
        let f = CoveringFamily::from_rows(m, &rows).unwrap();
        for s in [CoverSet::full(m), set(7, &[3]), set(7, &[0, 6])] {
            let first = is_covering(&f, &s).unwrap();
            for _ in 0..3 {
                assert_eq!(is_covering(&f, &s).unwrap(), first);
            }
            assert!(!first.is_covering);
            let brute = cover_deficit(&f, &s).unwrap();
            let ff = first.first_failure.unwrap();
            assert_eq!((ff.row_a, ff.row_b), (brute[0].row_a, brute[0].row_b));
            assert_eq!(ff.missing, brute[0].missing.iter().next().unwrap());
        }
    }
}
