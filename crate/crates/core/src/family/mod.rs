//! `(ell, p)`-families: sets of distinct length-`ell` vectors over `Z_p`.

mod cover_set;
pub mod io;
mod verify;

use std::collections::HashMap;

pub use cover_set::CoverSet;
pub use verify::{cover_deficit, is_covering, pair_cover_set, CoverageReport, Deficit, PairFailure};

use crate::error::{Error, Result};
use crate::zp::PrimeModulus;

/// Upper bound on the bytes a single materialized family may occupy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryBudget {
    pub bytes: u64,
}

impl MemoryBudget {
    pub const DEFAULT_BYTES: u64 = 1 << 30;

    pub fn new(bytes: u64) -> Self {
        MemoryBudget { bytes }
    }

    /// Rejects a family of `rows` vectors of length `ell`.
    pub fn check(&self, rows: u128, ell: u128) -> Result<()> {
        let requested = rows
            .saturating_mul(ell)
            .saturating_mul(std::mem::size_of::<u32>() as u128);
        if requested > self.bytes as u128 {
            Err(Error::Budget {
                requested,
                limit: self.bytes,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for MemoryBudget {
    fn default() -> Self {
        MemoryBudget::new(Self::DEFAULT_BYTES)
    }
}

/// An ordered set of `N >= 1` distinct vectors of length `ell >= 1` with
/// entries in `[0, p-1]`, stored row-major.
///
/// `claimed_cover` is what the producing construction promises; it is not
/// trusted by anything downstream and is re-verified where it matters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringFamily {
    p: PrimeModulus,
    ell: usize,
    data: Vec<u32>,
    claimed_cover: Option<CoverSet>,
}

impl CoveringFamily {
    pub fn from_rows<R: AsRef<[u32]>>(p: PrimeModulus, rows: &[R]) -> Result<Self> {
        let ell = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(ell * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != ell {
                return Err(Error::LengthMismatch {
                    left: ell,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(p, ell, data)
    }

    pub fn from_flat(p: PrimeModulus, ell: usize, data: Vec<u32>) -> Result<Self> {
        if ell == 0 || data.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if data.len() % ell != 0 {
            return Err(Error::LengthMismatch {
                left: ell,
                right: data.len() % ell,
            });
        }
        if let Some(pos) = data.iter().position(|&x| x >= p.get()) {
            return Err(Error::EntryOutOfRange {
                row: pos / ell,
                col: pos % ell,
                value: data[pos] as u64,
                modulus: p.get(),
            });
        }
        let mut seen: HashMap<&[u32], usize> = HashMap::with_capacity(data.len() / ell);
        for (i, row) in data.chunks_exact(ell).enumerate() {
            if let Some(&first) = seen.get(row) {
                return Err(Error::DuplicateRow { first, second: i });
            }
            seen.insert(row, i);
        }
        Ok(CoveringFamily {
            p,
            ell,
            data,
            claimed_cover: None,
        })
    }

    /// Builder-style setter for the promised cover set.
    pub fn with_claimed_cover(mut self, s: Option<CoverSet>) -> Self {
        if let Some(s) = &s {
            assert_eq!(s.modulus(), self.p, "claimed cover over a different modulus");
        }
        self.claimed_cover = s;
        self
    }

    #[inline]
    pub fn modulus(&self) -> PrimeModulus {
        self.p
    }

    #[inline]
    pub fn ell(&self) -> usize {
        self.ell
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.ell
    }

    /// Always false: a family holds at least one vector.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.ell..(i + 1) * self.ell]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.data.chunks_exact(self.ell)
    }

    pub fn as_flat(&self) -> &[u32] {
        &self.data
    }

    pub fn claimed_cover(&self) -> Option<&CoverSet> {
        self.claimed_cover.as_ref()
    }

    /// Verifies the family against `s`.
    pub fn check_cover(&self, s: &CoverSet) -> Result<CoverageReport> {
        is_covering(self, s)
    }

    /// Verifies the family against its own claimed cover, if it has one.
    pub fn check_claim(&self) -> Result<Option<CoverageReport>> {
        self.claimed_cover.as_ref().map(|s| is_covering(self, s)).transpose()
    }

    /// The first `n` vectors.
    pub fn truncated(&self, n: usize) -> CoveringFamily {
        let n = n.clamp(1, self.len());
        CoveringFamily {
            p: self.p,
            ell: self.ell,
            data: self.data[..n * self.ell].to_vec(),
            claimed_cover: self.claimed_cover.clone(),
        }
    }

    /// Restriction to the listed rows, in the given order.
    pub fn subfamily(&self, rows: &[usize]) -> Result<CoveringFamily> {
        let mut data = Vec::with_capacity(rows.len() * self.ell);
        for &r in rows {
            if r >= self.len() {
                return Err(Error::invalid(format!("row {r} out of range")));
            }
            data.extend_from_slice(self.row(r));
        }
        Ok(CoveringFamily::from_flat(self.p, self.ell, data)?.with_claimed_cover(self.claimed_cover.clone()))
    }
}

/// Pads every vector with `extra` trailing zeros.
///
/// The new coordinates realize difference 0 for every pair, so a
/// `(Z_p \ {0})`-covering family becomes `Z_p`-covering.
pub fn append_zeros(family: &CoveringFamily, extra: usize) -> Result<CoveringFamily> {
    if extra == 0 {
        return Err(Error::invalid("append_zeros needs extra >= 1"));
    }
    let ell = family.ell + extra;
    let mut data = Vec::with_capacity(family.len() * ell);
    for row in family.rows() {
        data.extend_from_slice(row);
        data.extend(std::iter::repeat_n(0, extra));
    }
    let cover = family.claimed_cover.as_ref().map(|s| {
        let mut s = s.clone();
        s.insert(0);
        s
    });
    Ok(CoveringFamily {
        p: family.p,
        ell,
        data,
        claimed_cover: cover,
    })
}

/// All `|a| * |b|` concatenations `(u, v)`, `a`-major.
pub fn concat_families(a: &CoveringFamily, b: &CoveringFamily) -> Result<CoveringFamily> {
    concat_families_within(a, b, &MemoryBudget::default())
}

pub fn concat_families_within(
    a: &CoveringFamily,
    b: &CoveringFamily,
    budget: &MemoryBudget,
) -> Result<CoveringFamily> {
    if a.p != b.p {
        return Err(Error::ModulusMismatch {
            left: a.p.get(),
            right: b.p.get(),
        });
    }
    let ell = a.ell + b.ell;
    budget.check(a.len() as u128 * b.len() as u128, ell as u128)?;
    let mut data = Vec::with_capacity(a.len() * b.len() * ell);
    for u in a.rows() {
        for v in b.rows() {
            data.extend_from_slice(u);
            data.extend_from_slice(v);
        }
    }
    let cover = match (&a.claimed_cover, &b.claimed_cover) {
        (Some(x), Some(y)) => Some(x.intersection(y)),
        _ => None,
    };
    Ok(CoveringFamily {
        p: a.p,
        ell,
        data,
        claimed_cover: cover,
    })
}
