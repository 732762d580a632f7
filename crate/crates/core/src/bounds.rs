//! Closed-form bounds on the shortest `Z_p`-covering family of a given size,
//! and the witness showing that concatenation with scalings can only boost
//! the size polynomially when the analysis sees nothing but `|S| = k`.

use serde::{Deserialize, Serialize};

use crate::constructions::base_p_digits;
use crate::error::{Error, Result};
use crate::family::{pair_cover_set, CoverSet, CoveringFamily, MemoryBudget};
use crate::zp::{select_parameters, PrimeModulus};

/// Largest concatenation set searched exhaustively by [`max_covering_subset`].
pub const EXHAUSTIVE_MAX_W: usize = 24;

/// `max(p, log2 N / log2(2 + 12/(p - 6)))` for `p >= 7`, otherwise `p`.
pub fn aam_lower_bound(p: PrimeModulus, log2_n: f64) -> f64 {
    let pf = p.get() as f64;
    if p.get() < 7 {
        return pf;
    }
    let base = 2.0 + 12.0 / (pf - 6.0);
    pf.max(log2_n / base.log2())
}

/// `p * ceil(log_p N)`, with `N = 1` giving `p`.
pub fn aam_upper_trivial(p: PrimeModulus, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    Ok(p.get() as u64 * base_p_digits(p.get(), n) as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub p: u32,
    pub log2n: f64,
    pub lower: f64,
    pub upper_trivial: f64,
    /// Pipeline length bound; absent when `log2 N < 4`.
    pub upper_pipeline: Option<f64>,
    pub consistent: bool,
}

fn assemble(p: PrimeModulus, log2n: f64, upper_trivial: f64) -> BoundReport {
    let lower = aam_lower_bound(p, log2n);
    let upper_pipeline = select_parameters(p, log2n).ok().map(|s| s.ell3_bound as f64);
    let consistent = lower <= upper_trivial && upper_pipeline.is_none_or(|u| lower <= u);
    BoundReport {
        p: p.get(),
        log2n,
        lower,
        upper_trivial,
        upper_pipeline,
        consistent,
    }
}

/// Bounds for an exact size `N`.
pub fn bound_report(p: PrimeModulus, n: u64) -> Result<BoundReport> {
    let upper = aam_upper_trivial(p, n)? as f64;
    Ok(assemble(p, (n as f64).log2(), upper))
}

/// Bounds for `N = 2^log2n`, which may be far beyond `u64`.
pub fn bound_report_log2(p: PrimeModulus, log2n: f64) -> Result<BoundReport> {
    if !(log2n >= 0.0) || !log2n.is_finite() {
        return Err(Error::invalid(format!("log2 N must be finite and non-negative, got {log2n}")));
    }
    if log2n < 63.0 {
        let n = log2n.exp2().round() as u64;
        if (n as f64).log2() == log2n {
            return bound_report(p, n);
        }
    }
    let digits = (log2n / (p.get() as f64).log2()).ceil().max(1.0);
    Ok(assemble(p, log2n, p.get() as f64 * digits))
}

/// `4 k z / k'`: how far an agnostic concatenation can boost the exponent.
pub fn agnostic_boost_bound(k: u64, z: u64, kprime: u64) -> Result<f64> {
    if k == 0 || z == 0 || kprime == 0 {
        return Err(Error::invalid("k, z and k' must be positive"));
    }
    // An earlier form of the argument fixes k' = p - 1, giving 4 z k / (p - 1).
    Ok(4.0 * k as f64 * z as f64 / kprime as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgnosticWitness {
    pub k: u32,
    pub z: usize,
    #[serde(rename = "k_prime")]
    pub kprime: usize,
    pub alphas: Vec<u32>,
    /// `slot_sets[j] = { alphas[j] * (v_i - w_i) }` over distinct rows `v, w`.
    pub slot_sets: Vec<Vec<u32>>,
    pub h: u32,
    /// Slots whose set contains `h`.
    pub t_h: Vec<usize>,
    /// `|T_h|`: any `S'`-covering subset has at most `|V|^|T_h|` members.
    pub certified_exponent: usize,
    pub bound: f64,
    pub within_bound: bool,
}

fn check_agnostic_inputs(family: &CoveringFamily, k: u32, alphas: &[u32], sprime: &CoverSet) -> Result<()> {
    let p = family.modulus();
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if sprime.modulus() != p {
        return Err(Error::ModulusMismatch {
            left: p.get(),
            right: sprime.modulus().get(),
        });
    }
    if sprime.is_empty() || sprime.contains(0) {
        return Err(Error::invalid("S' must be nonempty and exclude 0"));
    }
    if alphas.is_empty() || alphas.iter().any(|&a| a % p.get() == 0) {
        return Err(Error::invalid("need at least one slot, all scalars nonzero"));
    }
    let limit = 2 * k;
    for (row, v) in family.rows().enumerate() {
        if let Some(col) = v.iter().position(|&x| x >= limit) {
            return Err(Error::EntryOutOfRange {
                row,
                col,
                value: v[col] as u64,
                modulus: limit,
            });
        }
    }
    Ok(())
}

/// Coordinatewise differences `v_i - w_i` over distinct rows.
fn difference_set(family: &CoveringFamily) -> CoverSet {
    let p = family.modulus();
    let mut d = CoverSet::empty(p);
    for a in 0..family.len() {
        for b in 0..family.len() {
            if a != b {
                for (&x, &y) in family.row(a).iter().zip(family.row(b)) {
                    d.insert(p.sub(x, y));
                }
            }
        }
    }
    d
}

pub fn agnostic_witness(
    family: &CoveringFamily,
    k: u32,
    alphas: &[u32],
    sprime: &CoverSet,
) -> Result<AgnosticWitness> {
    check_agnostic_inputs(family, k, alphas, sprime)?;
    let diffs = difference_set(family);
    let slot_sets: Vec<CoverSet> = alphas.iter().map(|&a| diffs.scaled(a)).collect();
    let (h, t_h) = sprime
        .iter()
        .map(|h| {
            let slots: Vec<usize> = (0..slot_sets.len()).filter(|&j| slot_sets[j].contains(h)).collect();
            (h, slots)
        })
        .min_by_key(|(h, slots)| (slots.len(), *h))
        .expect("S' is nonempty");
    let bound = agnostic_boost_bound(k as u64, alphas.len() as u64, sprime.len() as u64)?;
    let certified_exponent = t_h.len();
    Ok(AgnosticWitness {
        k,
        z: alphas.len(),
        kprime: sprime.len(),
        alphas: alphas.to_vec(),
        slot_sets: slot_sets.iter().map(CoverSet::to_vec).collect(),
        h,
        t_h,
        certified_exponent,
        bound,
        within_bound: certified_exponent as f64 <= bound,
    })
}

/// The concatenation set `W = { (α_1 v^1, ..., α_z v^z) : v^j ∈ V }`.
pub fn concatenation_set(family: &CoveringFamily, alphas: &[u32]) -> Result<CoveringFamily> {
    let p = family.modulus();
    let n = family.len();
    let z = alphas.len();
    if z == 0 {
        return Err(Error::invalid("need at least one slot"));
    }
    let total = (n as u128).checked_pow(z as u32).unwrap_or(u128::MAX);
    MemoryBudget::default().check(total, (family.ell() * z) as u128)?;
    let mut data = Vec::new();
    let mut idx = vec![0usize; z];
    for _ in 0..total {
        for (j, &i) in idx.iter().enumerate() {
            data.extend(family.row(i).iter().map(|&x| p.mul(alphas[j], x)));
        }
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    // Nonzero scalars keep distinct choices distinct.
    CoveringFamily::from_flat(p, family.ell() * z, data)
}

/// Size of the largest `S'`-covering subset of the concatenation set, by
/// exhaustive clique search; refused beyond [`EXHAUSTIVE_MAX_W`] members.
pub fn max_covering_subset(family: &CoveringFamily, alphas: &[u32], sprime: &CoverSet) -> Result<usize> {
    let w = concatenation_set(family, alphas)?;
    let n = w.len();
    if n > EXHAUSTIVE_MAX_W {
        return Err(Error::invalid(format!(
            "exhaustive search refused for |W| = {n} > {EXHAUSTIVE_MAX_W}"
        )));
    }
    let p = w.modulus();
    let mut adj = vec![0u32; n];
    for a in 0..n {
        for b in a + 1..n {
            let both = sprime.is_subset(&pair_cover_set(w.row(a), w.row(b), p)?)
                && sprime.is_subset(&pair_cover_set(w.row(b), w.row(a), p)?);
            if both {
                adj[a] |= 1 << b;
                adj[b] |= 1 << a;
            }
        }
    }
    fn grow(adj: &[u32], candidates: u32, size: usize, best: &mut usize) {
        if candidates == 0 {
            *best = (*best).max(size);
            return;
        }
        if size + candidates.count_ones() as usize <= *best {
            return;
        }
        let v = candidates.trailing_zeros() as usize;
        grow(adj, candidates & adj[v], size + 1, best);
        grow(adj, candidates & !(1 << v), size, best);
    }
    let mut best = 0;
    grow(&adj, if n == 32 { u32::MAX } else { (1u32 << n) - 1 }, 0, &mut best);
    Ok(best)
}
