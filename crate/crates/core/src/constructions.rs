//! Explicit constructions: base-`p` families, the two boosting operations,
//! the binary bit lift from `Z_k` to `Z_p`, scaling sets, and the
//! three-stage pipeline that chains them into a `Z_p`-covering family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::balanced::{self, IterationConfig, PartitionMode};
use crate::error::{Error, Result};
use crate::family::{CoverSet, CoverageReport, CoveringFamily, MemoryBudget};
use crate::zp::{self, ceil_log2, PrimeModulus};

/// Number of base-`p` digits used for `n` indices (at least one).
pub fn base_p_digits(p: u32, n: u64) -> u32 {
    let mut digits = 1;
    let mut reach = p as u128;
    while reach < n as u128 {
        reach *= p as u128;
        digits += 1;
    }
    digits
}

/// The base-`p` family: index `i` written in base `p`, repeated `p` times
/// with block `b` scaled by `b mod p` (so the last block is all zeros).
///
/// Length is `p * ceil(log_p n)`; the result is `Z_p`-covering.
pub fn base_p_family(p: PrimeModulus, n: u64) -> Result<CoveringFamily> {
    base_p_family_within(p, n, &MemoryBudget::default())
}

pub fn base_p_family_within(p: PrimeModulus, n: u64, budget: &MemoryBudget) -> Result<CoveringFamily> {
    if n == 0 {
        return Err(Error::invalid("base_p_family needs N >= 1"));
    }
    let pv = p.get();
    let digits = base_p_digits(pv, n) as usize;
    let ell = pv as usize * digits;
    budget.check(n as u128, ell as u128)?;
    let mut data = Vec::with_capacity(n as usize * ell);
    let mut repr = vec![0u32; digits];
    for i in 0..n {
        let mut x = i;
        for d in repr.iter_mut().rev() {
            *d = (x % pv as u64) as u32;
            x /= pv as u64;
        }
        for b in 1..=pv {
            data.extend(repr.iter().map(|&d| p.mul(b, d)));
        }
    }
    Ok(CoveringFamily::from_flat(p, ell, data)?.with_claimed_cover(Some(CoverSet::full(p))))
}

/// All `z`-fold concatenations of members of `family`: size `N^z`, length `z * ell`.
pub fn concat_boost(family: &CoveringFamily, z: u32, budget: &MemoryBudget) -> Result<CoveringFamily> {
    if z == 0 {
        return Err(Error::invalid("concat_boost needs z >= 1"));
    }
    let n = family.len();
    let size = (n as u128)
        .checked_pow(z)
        .ok_or_else(|| Error::Budget {
            requested: u128::MAX,
            limit: budget.bytes,
        })?;
    let ell = family.ell() * z as usize;
    budget.check(size, ell as u128)?;
    let mut data = Vec::with_capacity(size as usize * ell);
    let mut idx = vec![0usize; z as usize];
    loop {
        for &i in &idx {
            data.extend_from_slice(family.row(i));
        }
        // Odometer increment, last slot fastest.
        let mut slot = z as usize;
        loop {
            if slot == 0 {
                return Ok(CoveringFamily::from_flat(family.modulus(), ell, data)?
                    .with_claimed_cover(family.claimed_cover().cloned()));
            }
            slot -= 1;
            idx[slot] += 1;
            if idx[slot] < n {
                break;
            }
            idx[slot] = 0;
        }
    }
}

/// `(v, s v)` for every `v`: covers `S ∪ sS` when `family` covers `S`.
pub fn scale_boost(family: &CoveringFamily, s: u32) -> Result<CoveringFamily> {
    let p = family.modulus();
    if s % p.get() == 0 {
        return Err(Error::invalid("scale_boost needs a nonzero multiplier"));
    }
    let s = s % p.get();
    let ell = family.ell() * 2;
    let mut data = Vec::with_capacity(family.len() * ell);
    for row in family.rows() {
        data.extend_from_slice(row);
        data.extend(row.iter().map(|&x| p.mul(s, x)));
    }
    let cover = family.claimed_cover().map(|c| c.union(&c.scaled(s)));
    Ok(CoveringFamily::from_flat(p, ell, data)?.with_claimed_cover(cover))
}

/// How many copies the bit lift emits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftCopies {
    /// `ceil(log2 k)` modified plus `ceil(log2 k)` unchanged copies.
    #[default]
    Full,
    /// `ceil(log2 k)` modified copies plus one unchanged copy.
    Minimal,
}

/// Lifts a `Z_k`-covering family over modulus `k` to a `[0, k-1]`-covering
/// family over `Z_p`.
///
/// Copy `j` of each vector adds `k` to every entry whose bit `j` is 0; the
/// remaining copies are left unchanged. Entries stay in `[0, 2k-1]`, which
/// requires `2k - 1 <= p - 1`.
pub fn bit_lift(source: &CoveringFamily, p: PrimeModulus, copies: LiftCopies) -> Result<CoveringFamily> {
    let k = source.modulus().get();
    if k < 2 || 2 * k > p.get() {
        return Err(Error::invalid(format!(
            "bit_lift needs 2 <= k <= (p-1)/2, got k={k}, p={p}"
        )));
    }
    let zk = CoverSet::full(source.modulus());
    let report = source.check_cover(&zk)?;
    if !report.is_covering {
        return Err(Error::verification("bit_lift source is Z_k-covering", report));
    }
    let bits = ceil_log2(k as u64) as usize;
    let unchanged = match copies {
        LiftCopies::Full => bits,
        LiftCopies::Minimal => 1,
    };
    let ell1 = source.ell();
    let ell = ell1 * (bits + unchanged);
    let mut data = Vec::with_capacity(source.len() * ell);
    for row in source.rows() {
        for j in 0..bits {
            data.extend(row.iter().map(|&u| if u >> j & 1 == 0 { u + k } else { u }));
        }
        for _ in 0..unchanged {
            data.extend_from_slice(row);
        }
    }
    Ok(CoveringFamily::from_flat(p, ell, data)?.with_claimed_cover(Some(CoverSet::range(p, 0, k))))
}

/// `S ⊆ Z_p` with `[0, k-1] · S = Z_p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingSet {
    pub p: PrimeModulus,
    pub k: u32,
    pub elements: Vec<u32>,
    /// True when the randomized search gave up and greedy set cover was used.
    pub from_greedy: bool,
    /// Randomized attempts consumed.
    pub attempts: u32,
}

impl ScalingSet {
    /// Brute-force check over all `k * |S|` products.
    pub fn covers_field(&self) -> bool {
        scaling_products(self.p, self.k, &self.elements).len() == self.p.get() as usize
    }

    pub fn size_bound(&self) -> u64 {
        zp::scaling_set_bound(self.p.get(), self.k)
    }
}

fn scaling_products(p: PrimeModulus, k: u32, elements: &[u32]) -> CoverSet {
    let mut hit = CoverSet::empty(p);
    for &j in elements {
        for i in 0..k {
            hit.insert(p.mul(i, j));
        }
    }
    hit
}

pub const DEFAULT_SCALING_ATTEMPTS: u32 = 64;

pub fn find_scaling_set(p: PrimeModulus, k: u32, seed: u64) -> Result<ScalingSet> {
    find_scaling_set_with(p, k, seed, DEFAULT_SCALING_ATTEMPTS)
}

/// Samples `ceil(p ln p / (k - 1))` elements with replacement and keeps the
/// first sample that covers `Z_p`; after `max_attempts` failures falls back
/// to greedy set cover (ties to the smallest element).
pub fn find_scaling_set_with(p: PrimeModulus, k: u32, seed: u64, max_attempts: u32) -> Result<ScalingSet> {
    if k < 2 || k > p.get() {
        return Err(Error::invalid(format!("scaling set needs 2 <= k <= p, got k={k}, p={p}")));
    }
    let draws = zp::scaling_set_bound(p.get(), k) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=max_attempts {
        let mut elements = Vec::with_capacity(draws);
        for _ in 0..draws {
            let x = rng.gen_range(0..p.get());
            if !elements.contains(&x) {
                elements.push(x);
            }
        }
        let candidate = ScalingSet {
            p,
            k,
            elements,
            from_greedy: false,
            attempts: attempt,
        };
        if candidate.covers_field() {
            return Ok(candidate);
        }
    }

    let mut uncovered = CoverSet::full(p);
    let mut elements = Vec::new();
    while !uncovered.is_empty() {
        let best = (0..p.get())
            .max_by_key(|&j| {
                let gain = scaling_products(p, k, &[j]).intersection(&uncovered).len();
                (gain, std::cmp::Reverse(j))
            })
            .expect("Z_p is nonempty");
        for i in 0..k {
            uncovered.remove(p.mul(i, best));
        }
        elements.push(best);
    }
    Ok(ScalingSet {
        p,
        k,
        elements,
        from_greedy: true,
        attempts: max_attempts,
    })
}

/// `w = (s_1 v, ..., s_|S| v)`; turns a `[0, k-1]`-covering family into a
/// `Z_p`-covering one of the same size.
pub fn scale_cover_boost(family: &CoveringFamily, set: &ScalingSet) -> Result<CoveringFamily> {
    let p = family.modulus();
    if set.p != p {
        return Err(Error::ModulusMismatch {
            left: p.get(),
            right: set.p.get(),
        });
    }
    if set.elements.iter().all(|&s| s == 0) {
        return Err(Error::invalid("scaling set has no nonzero element"));
    }
    let pre = CoverSet::range(p, 0, set.k);
    let report = family.check_cover(&pre)?;
    if !report.is_covering {
        return Err(Error::verification("scale_cover_boost input is [0,k-1]-covering", report));
    }
    let ell = family.ell() * set.elements.len();
    let mut data = Vec::with_capacity(family.len() * ell);
    for row in family.rows() {
        for &s in &set.elements {
            data.extend(row.iter().map(|&x| p.mul(s, x)));
        }
    }
    let cover = if set.covers_field() {
        Some(CoverSet::full(p))
    } else {
        None
    };
    Ok(CoveringFamily::from_flat(p, ell, data)?.with_claimed_cover(cover))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    /// `base_p_family` over `Z_k`.
    #[default]
    BaseP,
    /// The balanced-word iteration over `Z_k`, zero-padded and concatenated
    /// up to the target size.
    AlonAlweiss,
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub base: BaseKind,
    pub seed: u64,
    /// Overrides the selected `k`.
    pub k: Option<u32>,
    pub lift_copies: LiftCopies,
    pub budget: MemoryBudget,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            base: BaseKind::BaseP,
            seed: 0,
            k: None,
            lift_copies: LiftCopies::Full,
            budget: MemoryBudget::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub size: usize,
    pub length: usize,
    pub cover: String,
    pub report: CoverageReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub p: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub k: u32,
    pub ell1: usize,
    pub ell2: usize,
    pub ell3: usize,
    pub ell_star: f64,
    pub base: BaseKind,
    pub seed: u64,
    /// The first stage is a desk-scale stand-in over `Z_k` rather than a
    /// family meeting the asymptotic size guarantee.
    pub desk_scale_base: bool,
    pub scaling_set: Vec<u32>,
    pub scaling_set_from_greedy: bool,
    pub stage_reports: Vec<StageReport>,
}

/// The `k` the pipeline uses: the override, or the largest feasible prime
/// for `log2 N` capped at `(p - 1) / 2` so the bit lift stays in range.
pub fn pipeline_k(p: PrimeModulus, n: u64, k_override: Option<u32>) -> Result<u32> {
    let cap = (p.get() as u64 - 1) / 2;
    let k = match k_override {
        Some(k) => {
            if !zp::is_prime(k as u64) {
                return Err(Error::NotPrime(k as u64));
            }
            k as u64
        }
        None => {
            let log2_n = (n as f64).log2();
            let k = if log2_n >= 1.0 {
                zp::largest_feasible_k(log2_n, cap)
            } else {
                2
            };
            k.min(cap)
        }
    };
    if k < 2 || k > cap {
        return Err(Error::invalid(format!(
            "no usable k for p={p}: need a prime 2 <= k <= (p-1)/2, got {k}"
        )));
    }
    Ok(k as u32)
}

fn verified_stage(family: &CoveringFamily, stage: &str, cover: &CoverSet) -> Result<StageReport> {
    let report = family.check_cover(cover)?;
    if !report.is_covering {
        return Err(Error::verification(stage, report));
    }
    Ok(StageReport {
        stage: stage.to_string(),
        size: family.len(),
        length: family.ell(),
        cover: cover.to_spec(),
        report,
    })
}

fn first_stage(kmod: PrimeModulus, n: u64, opts: &PipelineOptions) -> Result<CoveringFamily> {
    match opts.base {
        BaseKind::BaseP => base_p_family_within(kmod, n, &opts.budget),
        BaseKind::AlonAlweiss => {
            if !kmod.is_odd() {
                return Err(Error::invalid("the balanced-word base needs an odd k"));
            }
            let z_max = ceil_log2(kmod.get() as u64 - 1);
            let cfg = IterationConfig {
                ell0: kmod.get() as usize - 1,
                m: 2,
                z_max,
                mode: PartitionMode::Exhaustive,
                seed: opts.seed,
            };
            let (block, _) = balanced::aa_iterate(kmod, &cfg, &opts.budget)?;
            if block.len() < 2 && n > 1 {
                return Err(Error::invalid("balanced-word base produced a single vector"));
            }
            let mut reps = 1u32;
            while (block.len() as u128).pow(reps) < n as u128 {
                reps += 1;
            }
            Ok(concat_boost(&block, reps, &opts.budget)?.truncated(n as usize))
        }
    }
}

/// Builds a `Z_p`-covering family of size `n`: a `Z_k`-covering base, then
/// the bit lift, then scaling by a scaling set. Each stage is verified
/// against its claimed cover before the next one runs.
pub fn build_upperbound_family(
    p: PrimeModulus,
    n: u64,
    opts: &PipelineOptions,
) -> Result<(CoveringFamily, PipelineStats)> {
    if n == 0 {
        return Err(Error::invalid("pipeline needs N >= 1"));
    }
    let k = pipeline_k(p, n, opts.k)?;
    let kmod = PrimeModulus::new(k)?;
    let mut stages = Vec::with_capacity(3);

    let f1 = first_stage(kmod, n, opts)?;
    stages.push(verified_stage(&f1, "F1 Z_k-covering over Z_k", &CoverSet::full(kmod))?);

    let f2 = bit_lift(&f1, p, opts.lift_copies)?;
    stages.push(verified_stage(&f2, "F2 [0,k-1]-covering over Z_p", &CoverSet::range(p, 0, k))?);

    let set = find_scaling_set(p, k, opts.seed)?;
    let f3 = scale_cover_boost(&f2, &set)?;
    stages.push(verified_stage(&f3, "F3 Z_p-covering", &CoverSet::full(p))?);

    let pf = p.get() as f64;
    let log2_n = (n as f64).log2();
    let stats = PipelineStats {
        p: p.get(),
        n,
        k,
        ell1: f1.ell(),
        ell2: f2.ell(),
        ell3: f3.ell(),
        ell_star: pf * pf.log2() * log2_n / (k as f64).sqrt(),
        base: opts.base,
        seed: opts.seed,
        desk_scale_base: true,
        scaling_set: set.elements.clone(),
        scaling_set_from_greedy: set.from_greedy,
        stage_reports: stages,
    };
    Ok((f3, stats))
}
