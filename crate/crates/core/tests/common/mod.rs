//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's verifier; families are only read row by row.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zpcover::{CoverSet, CoveringFamily, PrimeModulus};

pub fn modulus(p: u32) -> PrimeModulus {
    PrimeModulus::new(p).unwrap()
}

/// Differences `v_i - w_i mod p` realized by the ordered pair `(v, w)`.
pub fn realized(v: &[u32], w: &[u32], p: u32) -> BTreeSet<u32> {
    v.iter().zip(w).map(|(&a, &b)| (a + p - b) % p).collect()
}

/// Lexicographically first ordered pair `(a, b)`, `a != b`, that fails to
/// realize all of `s`, with the elements it misses.
pub fn naive_first_failure(rows: &[Vec<u32>], s: &[u32], p: u32) -> Option<(usize, usize, Vec<u32>)> {
    for a in 0..rows.len() {
        for b in (0..rows.len()).filter(|&b| b != a) {
            let got = realized(&rows[a], &rows[b], p);
            let missing: Vec<u32> = s.iter().copied().filter(|x| !got.contains(x)).collect();
            if !missing.is_empty() {
                return Some((a, b, missing));
            }
        }
    }
    None
}

pub fn naive_covers(rows: &[Vec<u32>], s: &[u32], p: u32) -> bool {
    naive_first_failure(rows, s, p).is_none()
}

/// Only the pairs `(i, j)` with `i < j`.
pub fn naive_covers_unordered(rows: &[Vec<u32>], s: &[u32], p: u32) -> bool {
    (0..rows.len()).all(|i| {
        (i + 1..rows.len()).all(|j| {
            let got = realized(&rows[i], &rows[j], p);
            s.iter().all(|x| got.contains(x))
        })
    })
}

pub fn rows_of(f: &CoveringFamily) -> Vec<Vec<u32>> {
    f.rows().map(<[u32]>::to_vec).collect()
}

pub fn family_covers(f: &CoveringFamily, s: &[u32]) -> bool {
    naive_covers(&rows_of(f), s, f.modulus().get())
}

pub fn all_of(p: u32) -> Vec<u32> {
    (0..p).collect()
}

/// `p * ceil(log_p n)` by repeated multiplication, with `n = 1` giving `p`.
pub fn trivial_length(p: u64, n: u64) -> u64 {
    let (mut digits, mut reach) = (1, p);
    while reach < n {
        reach *= p;
        digits += 1;
    }
    p * digits
}

/// `N` distinct random rows over `Z_p` (`N <= p^ell` is the caller's job).
pub fn random_rows(rng: &mut ChaCha8Rng, p: u32, n: usize, ell: usize) -> Vec<Vec<u32>> {
    let mut seen = BTreeSet::new();
    let mut rows = Vec::with_capacity(n);
    while rows.len() < n {
        let row: Vec<u32> = (0..ell).map(|_| rng.gen_range(0..p)).collect();
        if seen.insert(row.clone()) {
            rows.push(row);
        }
    }
    rows
}

pub fn random_subset(rng: &mut ChaCha8Rng, p: u32, max_len: usize) -> Vec<u32> {
    let len = rng.gen_range(0..=max_len.min(p as usize));
    let mut s: BTreeSet<u32> = BTreeSet::new();
    while s.len() < len {
        s.insert(rng.gen_range(0..p));
    }
    s.into_iter().collect()
}

pub fn cover_set(p: u32, s: &[u32]) -> CoverSet {
    CoverSet::from_elements(modulus(p), s.iter().copied()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact `E[max over cliques of the number of 1s]` over all `2^(r p)`
/// realizations.
pub fn brute_prophet(p: u32, r: u32) -> f64 {
    let n = (p * r) as usize;
    let q = 1.0 / p as f64;
    let mut total = 0.0;
    for mask in 0u64..1 << n {
        let ones = mask.count_ones() as i32;
        let prob = q.powi(ones) * (1.0 - q).powi(n as i32 - ones);
        let best = (0..r)
            .map(|j| (mask >> (j * p) & ((1u64 << p) - 1)).count_ones())
            .max()
            .unwrap();
        total += prob * best as f64;
    }
    total
}

/// Optimal online value by expectimax over every arrival outcome: at each
/// 1 the gambler may take it if it stays inside one clique.
pub fn brute_gambler(p: u32, r: u32) -> f64 {
    fn go(idx: u32, locked: Option<u32>, p: u32, r: u32) -> f64 {
        if idx == p * r {
            return 0.0;
        }
        let q = 1.0 / p as f64;
        let clique = idx / p;
        let skip = go(idx + 1, locked, p, r);
        let take = match locked {
            None => Some(1.0 + go(idx + 1, Some(clique), p, r)),
            Some(c) if c == clique => Some(1.0 + go(idx + 1, locked, p, r)),
            Some(_) => None,
        };
        let on_one = take.map_or(skip, |t| t.max(skip));
        q * on_one + (1.0 - q) * skip
    }
    go(0, None, p, r)
}

/// Binomial(p, 1/p) CDF from explicit binomial coefficients.
pub fn binomial_cdf_direct(p: u32) -> Vec<f64> {
    let q = 1.0 / p as f64;
    let mut cdf = Vec::new();
    let mut acc = 0.0;
    for t in 0..=p {
        let mut c = 1.0;
        for i in 0..t {
            c = c * (p - i) as f64 / (i + 1) as f64;
        }
        acc += c * q.powi(t as i32) * (1.0 - q).powi((p - t) as i32);
        cdf.push(acc);
    }
    cdf
}

/// Largest subset of `w` in which every ordered pair realizes all of `s`,
/// by plain enumeration of all subsets.
pub fn brute_max_covering_subset(w: &[Vec<u32>], s: &[u32], p: u32) -> usize {
    let n = w.len();
    assert!(n <= 20);
    let ok: Vec<Vec<bool>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let got = realized(&w[a], &w[b], p);
                    s.iter().all(|x| got.contains(x))
                })
                .collect()
        })
        .collect();
    let mut best = 0;
    for mask in 0u32..1 << n {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let good = members
            .iter()
            .all(|&a| members.iter().all(|&b| a == b || ok[a][b]));
        if good {
            best = size;
        }
    }
    best
}

/// `(α_1 v^1, ..., α_z v^z)` for every choice of rows.
pub fn concatenations(rows: &[Vec<u32>], alphas: &[u32], p: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &a in alphas {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                rows.iter().map(move |r| {
                    let mut x = prefix.clone();
                    x.extend(r.iter().map(|&v| v * a % p));
                    x
                })
            })
            .collect();
    }
    out
}
