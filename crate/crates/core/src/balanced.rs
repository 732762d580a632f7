//! Balanced words and the coverage-doubling iteration built on them.
//!
//! A balanced word of length `ell` (a multiple of `p - 1`) contains every
//! nonzero element of `Z_p` exactly `ell / (p - 1)` times and no zeros. The
//! set of all of them is closed under scalar multiplication, which is what
//! the step boost needs. Starting from a `{1}`-covering base family, each
//! iteration partitions the balanced words into covering parts (stars
//! around permutations) and walks through the parts to double the covered
//! set: `S_z = {α^0, ..., α^(2^z - 1)}` for a primitive root `α`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{append_zeros, CoverSet, CoveringFamily, MemoryBudget};
use crate::zp::{ceil_log2, primitive_root, PrimeModulus};

/// Largest word length for which every permutation may be enumerated.
pub const EXHAUSTIVE_MAX_ELL: usize = 8;

/// Rearranges `a` into the next lexicographic permutation; false at the last.
pub(crate) fn next_permutation<T: Ord>(a: &mut [T]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        a.reverse();
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// `n! / prod(counts_i!)`, or `None` on overflow.
fn multinomial(counts: &[usize]) -> Option<u128> {
    let mut total = 0u128;
    let mut acc = 1u128;
    for &c in counts {
        for i in 1..=c as u128 {
            total += 1;
            // acc * total / i stays integral: it is a running binomial product.
            acc = acc.checked_mul(total)? / i;
        }
    }
    Some(acc)
}

fn balanced_multiplicity(p: PrimeModulus, ell: usize) -> Result<usize> {
    if !p.is_odd() {
        return Err(Error::invalid("balanced words need an odd prime"));
    }
    let q = p.get() as usize - 1;
    if ell == 0 || ell % q != 0 {
        return Err(Error::invalid(format!(
            "balanced length must be a positive multiple of p-1 = {q}, got {ell}"
        )));
    }
    Ok(ell / q)
}

/// Number of balanced words of length `ell`, `ell! / ((ell/(p-1))!)^(p-1)`.
pub fn balanced_count(p: PrimeModulus, ell: usize) -> Result<u128> {
    let mult = balanced_multiplicity(p, ell)?;
    multinomial(&vec![mult; p.get() as usize - 1]).ok_or(Error::Budget {
        requested: u128::MAX,
        limit: 0,
    })
}

/// All balanced words of one length, in lexicographic order, with an index.
#[derive(Clone, Debug)]
pub struct BalancedFamily {
    family: CoveringFamily,
    index: HashMap<Vec<u32>, usize>,
}

impl BalancedFamily {
    pub fn family(&self) -> &CoveringFamily {
        &self.family
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.family.modulus()
    }

    pub fn ell(&self) -> usize {
        self.family.ell()
    }

    pub fn len(&self) -> usize {
        self.family.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn word(&self, i: usize) -> &[u32] {
        self.family.row(i)
    }

    pub fn position(&self, word: &[u32]) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Index of `a * word(i)`; always present by scalar closure.
    pub fn scaled_index(&self, i: usize, a: u32) -> usize {
        let p = self.modulus();
        let scaled: Vec<u32> = self.word(i).iter().map(|&x| p.mul(a, x)).collect();
        self.position(&scaled)
            .expect("balanced words are closed under nonzero scaling")
    }
}

pub fn enumerate_balanced(p: PrimeModulus, ell: usize, budget: &MemoryBudget) -> Result<BalancedFamily> {
    let mult = balanced_multiplicity(p, ell)?;
    let size = balanced_count(p, ell)?;
    budget.check(size, ell as u128)?;
    let mut word: Vec<u32> = (1..p.get()).flat_map(|a| std::iter::repeat_n(a, mult)).collect();
    let mut data = Vec::with_capacity(size as usize * ell);
    loop {
        data.extend_from_slice(&word);
        if !next_permutation(&mut word) {
            break;
        }
    }
    let family = CoveringFamily::from_flat(p, ell, data)?;
    let index = family.rows().enumerate().map(|(i, w)| (w.to_vec(), i)).collect();
    Ok(BalancedFamily { family, index })
}

/// The base family: balanced words whose `t`-th block of length
/// `2 ell0 / (p - 1)` holds only `2t + 1` and `2t + 2`, equally often.
///
/// Any two distinct members differ inside some block, where they realize
/// both `+1` and `-1`; the family is `{1}`-covering.
pub fn base_family_a0(p: PrimeModulus, ell0: usize, budget: &MemoryBudget) -> Result<CoveringFamily> {
    let mult = balanced_multiplicity(p, ell0)?;
    let blocks = (p.get() as usize - 1) / 2;
    let per_block = multinomial(&[mult, mult]).unwrap_or(u128::MAX);
    let size = per_block
        .checked_pow(blocks as u32)
        .ok_or(Error::Budget {
            requested: u128::MAX,
            limit: budget.bytes,
        })?;
    budget.check(size, ell0 as u128)?;

    let block_words: Vec<Vec<Vec<u32>>> = (0..blocks as u32)
        .map(|t| {
            let (lo, hi) = (2 * t + 1, 2 * t + 2);
            let mut w: Vec<u32> = std::iter::repeat_n(lo, mult).chain(std::iter::repeat_n(hi, mult)).collect();
            let mut all = vec![w.clone()];
            while next_permutation(&mut w) {
                all.push(w.clone());
            }
            all
        })
        .collect();

    let mut data = Vec::with_capacity(size as usize * ell0);
    let mut idx = vec![0usize; blocks];
    'outer: loop {
        for (t, &i) in idx.iter().enumerate() {
            data.extend_from_slice(&block_words[t][i]);
        }
        let mut slot = blocks;
        loop {
            if slot == 0 {
                break 'outer;
            }
            slot -= 1;
            idx[slot] += 1;
            if idx[slot] < block_words[slot].len() {
                break;
            }
            idx[slot] = 0;
        }
    }
    let one = CoverSet::from_elements(p, [1])?;
    Ok(CoveringFamily::from_flat(p, ell0, data)?.with_claimed_cover(Some(one)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    /// Every permutation of `[ell]` in lexicographic order (`ell <= 8`).
    #[default]
    Exhaustive,
    /// Random permutations; a draw that assigns nothing is replaced by a
    /// permutation aimed at the first unassigned word, so every draw makes
    /// progress.
    Sampled,
}

/// A partition of the balanced words into stars: part `c` is the set of
/// words `b` with `centers[c](b) ∈ A` that were still unassigned when
/// `centers[c]` was drawn.
#[derive(Clone, Debug)]
pub struct StarPartition<'a> {
    pub base: &'a BalancedFamily,
    pub parts: Vec<Vec<usize>>,
    /// `centers[c][i]` is the source position of output coordinate `i`.
    pub centers: Vec<Vec<usize>>,
    pub part_of: Vec<usize>,
    pub cover: CoverSet,
    pub min_part_size: usize,
    /// `|A| / (10 ell log2 p)`, reported for comparison only.
    pub paper_part_bound: f64,
    /// Degree of every permutation vertex, `|A|`.
    pub left_degree: usize,
    /// Degree of every word vertex, `ell! |A| / |B|`.
    pub right_degree: f64,
    pub permutations_examined: u64,
}

impl StarPartition<'_> {
    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }
}

/// The word `b` with `b[center[i]] = a[i]`.
fn preimage(center: &[usize], a: &[u32], out: &mut [u32]) {
    for (i, &src) in center.iter().enumerate() {
        out[src] = a[i];
    }
}

/// A permutation `π` with `b[π[i]] = a[i]`; `a` and `b` share a multiset.
fn aligning_permutation(b: &[u32], a: &[u32]) -> Vec<usize> {
    let mut used = vec![false; b.len()];
    a.iter()
        .map(|&x| {
            let pos = (0..b.len())
                .find(|&j| !used[j] && b[j] == x)
                .expect("balanced words share one multiset");
            used[pos] = true;
            pos
        })
        .collect()
}

fn factorial_f64(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

pub fn star_partition<'a>(
    base: &'a BalancedFamily,
    source: &CoveringFamily,
    cover: &CoverSet,
    mode: PartitionMode,
    seed: u64,
) -> Result<StarPartition<'a>> {
    let p = base.modulus();
    let ell = base.ell();
    if source.modulus() != p || source.ell() != ell {
        return Err(Error::invalid("source family must live in the same balanced space"));
    }
    let mut source_idx = Vec::with_capacity(source.len());
    for (r, w) in source.rows().enumerate() {
        match base.position(w) {
            Some(i) => source_idx.push(i),
            None => return Err(Error::invalid(format!("source row {r} is not a balanced word"))),
        }
    }
    let report = source.check_cover(cover)?;
    if !report.is_covering {
        return Err(Error::verification("star_partition source is S-covering", report));
    }
    if mode == PartitionMode::Exhaustive && ell > EXHAUSTIVE_MAX_ELL {
        return Err(Error::invalid(format!(
            "exhaustive partition refused for ell = {ell} > {EXHAUSTIVE_MAX_ELL}"
        )));
    }

    let n = base.len();
    let mut part_of = vec![usize::MAX; n];
    let mut assigned = 0usize;
    let mut parts: Vec<Vec<usize>> = Vec::new();
    let mut centers: Vec<Vec<usize>> = Vec::new();
    let mut scratch = vec![0u32; ell];
    let mut examined = 0u64;

    let mut take_star = |center: &[usize], part_of: &mut Vec<usize>, assigned: &mut usize| -> bool {
        let id = parts.len();
        let mut members = Vec::new();
        for r in 0..source.len() {
            preimage(center, source.row(r), &mut scratch);
            let b = base.position(&scratch).expect("permuted balanced words stay balanced");
            if part_of[b] == usize::MAX {
                part_of[b] = id;
                members.push(b);
            }
        }
        if members.is_empty() {
            return false;
        }
        *assigned += members.len();
        members.sort_unstable();
        parts.push(members);
        centers.push(center.to_vec());
        true
    };

    match mode {
        PartitionMode::Exhaustive => {
            let mut perm: Vec<usize> = (0..ell).collect();
            loop {
                examined += 1;
                take_star(&perm, &mut part_of, &mut assigned);
                if assigned == n || !next_permutation(&mut perm) {
                    break;
                }
            }
        }
        PartitionMode::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..ell).collect();
            let limit = 2 * n as u64 + 16;
            let mut first_unassigned = 0usize;
            while assigned < n {
                if examined >= limit {
                    return Err(Error::invalid("sampled partition exceeded its draw limit"));
                }
                examined += 1;
                perm.shuffle(&mut rng);
                if !take_star(&perm, &mut part_of, &mut assigned) {
                    while part_of[first_unassigned] != usize::MAX {
                        first_unassigned += 1;
                    }
                    let target = source.row(rng.gen_range(0..source.len()));
                    let aimed = aligning_permutation(base.word(first_unassigned), target);
                    take_star(&aimed, &mut part_of, &mut assigned);
                }
            }
        }
    }
    if assigned != n {
        return Err(Error::invalid("permutations exhausted before every word was assigned"));
    }

    for (c, members) in parts.iter().enumerate() {
        let part = base.family().subfamily(members)?;
        let report = part.check_cover(cover)?;
        if !report.is_covering {
            return Err(Error::verification(format!("star part {c} is S-covering"), report));
        }
    }

    let min_part_size = parts.iter().map(Vec::len).min().unwrap_or(0);
    let a = source.len();
    Ok(StarPartition {
        base,
        parts,
        centers,
        part_of,
        cover: cover.clone(),
        min_part_size,
        paper_part_bound: a as f64 / (10.0 * ell as f64 * (p.get() as f64).log2()),
        left_degree: a,
        right_degree: factorial_f64(ell) * a as f64 / n as f64,
        permutations_examined: examined,
    })
}

/// Walk-based coverage boost.
///
/// Walks `(w_1, ..., w_m)` start from the lexicographically first balanced
/// word `w_0` and require `w_i` to lie in the part of `a^{-1} w_{i-1}`.
/// Walks are counted per final word by dynamic programming; the most common
/// final word `v*` (ties to the smallest) is fixed and the prefixes of the
/// walks ending there form the output, of length `(m - 1) ell`. The output
/// is verified `(aS ∪ S)`-covering.
pub fn step_boost(
    partition: &StarPartition<'_>,
    m: usize,
    a: u32,
    budget: &MemoryBudget,
) -> Result<CoveringFamily> {
    let base = partition.base;
    let p = base.modulus();
    if m < 2 {
        return Err(Error::invalid("step_boost needs m >= 2"));
    }
    if a % p.get() == 0 {
        return Err(Error::invalid("step_boost needs a nonzero multiplier"));
    }
    if partition.parts.is_empty() {
        return Err(Error::invalid("step_boost needs a nonempty partition"));
    }
    let a = a % p.get();
    let a_inv = p.inv(a)?;
    let n = base.len();
    let k = partition.parts.len();
    let part_of = &partition.part_of;
    let next_part: Vec<usize> = (0..n).map(|b| part_of[base.scaled_index(b, a_inv)]).collect();

    let start_part = next_part[0];
    let mut counts: Vec<u128> = (0..n).map(|b| u128::from(part_of[b] == start_part)).collect();
    for _ in 2..=m {
        let mut totals = vec![0u128; k];
        for b in 0..n {
            totals[next_part[b]] = totals[next_part[b]].saturating_add(counts[b]);
        }
        counts = (0..n).map(|b| totals[part_of[b]]).collect();
    }
    let (v_star, &size) = counts
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(&x.0)))
        .expect("nonempty base");
    let out_ell = (m - 1) * base.ell();
    budget.check(size, out_ell as u128)?;

    // reach[i][b]: a walk with w_{i+1} = b can still end at v*.
    let steps = m - 1;
    let mut reach = vec![vec![false; n]; steps];
    reach[steps - 1] = (0..n).map(|b| next_part[b] == part_of[v_star]).collect();
    for i in (0..steps - 1).rev() {
        let mut part_live = vec![false; k];
        for b in 0..n {
            if reach[i + 1][b] {
                part_live[part_of[b]] = true;
            }
        }
        reach[i] = (0..n).map(|b| part_live[next_part[b]]).collect();
    }

    let mut data = Vec::with_capacity(size as usize * out_ell);
    let mut path: Vec<usize> = Vec::with_capacity(steps);
    // Iterative DFS over (depth, candidate cursor).
    let mut cursors: Vec<usize> = vec![0];
    let mut part_at = vec![start_part];
    while let Some(cursor) = cursors.last_mut() {
        let depth = path.len();
        let members = &partition.parts[part_at[depth]];
        let next = members[*cursor..].iter().position(|&b| reach[depth][b]);
        match next {
            None => {
                cursors.pop();
                part_at.pop();
                path.pop();
            }
            Some(offset) => {
                let b = members[*cursor + offset];
                *cursor += offset + 1;
                if depth + 1 == steps {
                    for &w in &path {
                        data.extend_from_slice(base.word(w));
                    }
                    data.extend_from_slice(base.word(b));
                } else {
                    path.push(b);
                    part_at.push(next_part[b]);
                    cursors.push(0);
                }
            }
        }
    }

    let cover = partition.cover.union(&partition.cover.scaled(a));
    let out = CoveringFamily::from_flat(p, out_ell, data)?.with_claimed_cover(Some(cover.clone()));
    debug_assert_eq!(out.len() as u128, size);
    let report = out.check_cover(&cover)?;
    if !report.is_covering {
        return Err(Error::verification("step_boost output is (aS ∪ S)-covering", report));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub ell0: usize,
    pub m: usize,
    pub z_max: u32,
    pub mode: PartitionMode,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub z: u32,
    pub a: u32,
    #[serde(rename = "K")]
    pub k: usize,
    pub min_part_size: usize,
    pub paper_part_bound: f64,
    /// `min_part_size^m / |B|`, the walk-counting lower bound on `size`.
    pub size_lower_bound: f64,
    pub size: usize,
    pub length: usize,
    pub cover: Vec<u32>,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub p: u32,
    pub alpha: u32,
    pub ell0: usize,
    pub m: usize,
    pub steps: Vec<TraceStep>,
    /// A zero coordinate was appended to reach `Z_p`-covering.
    pub padded: bool,
    pub final_size: usize,
    pub final_length: usize,
}

/// Runs `z_max` rounds of partition + step boost from the base family.
///
/// Round `z` uses multiplier `α^(2^(z-1))`, so after round `z` the family
/// covers `S_z = {α^0, ..., α^(2^z - 1)}`. Once that contains every nonzero
/// element, a zero coordinate is appended and the result is `Z_p`-covering.
pub fn aa_iterate(
    p: PrimeModulus,
    cfg: &IterationConfig,
    budget: &MemoryBudget,
) -> Result<(CoveringFamily, IterationTrace)> {
    balanced_multiplicity(p, cfg.ell0)?;
    let max_z = ceil_log2(p.get() as u64 - 1);
    if cfg.z_max > max_z {
        return Err(Error::invalid(format!(
            "z_max = {} exceeds ceil(log2(p-1)) = {max_z}",
            cfg.z_max
        )));
    }
    if cfg.z_max > 0 && cfg.m < 2 {
        return Err(Error::invalid("iteration needs m >= 2"));
    }
    let alpha = primitive_root(p)?;

    let mut current = base_family_a0(p, cfg.ell0, budget)?;
    let mut cover = CoverSet::from_elements(p, [1])?;
    let report = current.check_cover(&cover)?;
    if !report.is_covering {
        return Err(Error::verification("base family is {1}-covering", report));
    }

    let mut steps = Vec::with_capacity(cfg.z_max as usize);
    for z in 1..=cfg.z_max {
        let base = enumerate_balanced(p, current.ell(), budget)?;
        let partition = star_partition(&base, &current, &cover, cfg.mode, cfg.seed.wrapping_add(z as u64))?;
        let a = p.pow(alpha, 1u64 << (z - 1));
        let next = step_boost(&partition, cfg.m, a, budget).map_err(|e| match e {
            Error::Verification { report, .. } => Error::Verification {
                stage: format!("iteration step {z}"),
                report,
            },
            other => other,
        })?;
        cover = cover.union(&cover.scaled(a));
        let expected = CoverSet::from_elements(p, (0..1u64 << z).map(|e| p.pow(alpha, e)))?;
        debug_assert_eq!(cover, expected);
        steps.push(TraceStep {
            z,
            a,
            k: partition.num_parts(),
            min_part_size: partition.min_part_size,
            paper_part_bound: partition.paper_part_bound,
            size_lower_bound: (partition.min_part_size as f64).powi(cfg.m as i32) / base.len() as f64,
            size: next.len(),
            length: next.ell(),
            cover: cover.to_vec(),
            verified: true,
        });
        current = next;
    }

    let padded = CoverSet::nonzero(p).is_subset(&cover);
    if padded {
        current = append_zeros(&current, 1)?;
        let report = current.check_cover(&CoverSet::full(p))?;
        if !report.is_covering {
            return Err(Error::verification("zero-padded family is Z_p-covering", report));
        }
    }
    let trace = IterationTrace {
        p: p.get(),
        alpha,
        ell0: cfg.ell0,
        m: cfg.m,
        steps,
        padded,
        final_size: current.len(),
        final_length: current.ell(),
    };
    Ok((current, trace))
}
