use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zp::PrimeModulus;

/// A subset of `Z_p` stored as a `p`-bit mask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CoverSet {
    p: PrimeModulus,
    words: Vec<u64>,
}

impl CoverSet {
    pub fn empty(p: PrimeModulus) -> Self {
        CoverSet {
            p,
            words: vec![0; (p.get() as usize).div_ceil(64)],
        }
    }

    /// All of `Z_p`.
    pub fn full(p: PrimeModulus) -> Self {
        Self::range(p, 0, p.get())
    }

    /// `Z_p` without 0.
    pub fn nonzero(p: PrimeModulus) -> Self {
        Self::range(p, 1, p.get())
    }

    /// `{lo, ..., hi - 1}`; `hi` is clamped to `p`.
    pub fn range(p: PrimeModulus, lo: u32, hi: u32) -> Self {
        let mut s = Self::empty(p);
        for x in lo..hi.min(p.get()) {
            s.insert(x);
        }
        s
    }

    pub fn from_elements(p: PrimeModulus, elements: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut s = Self::empty(p);
        for x in elements {
            if x >= p.get() {
                return Err(Error::invalid(format!("element {x} is not in Z_{p}")));
            }
            s.insert(x);
        }
        Ok(s)
    }

    #[inline]
    pub fn modulus(&self) -> PrimeModulus {
        self.p
    }

    #[inline]
    pub fn insert(&mut self, x: u32) {
        debug_assert!(x < self.p.get());
        self.words[(x / 64) as usize] |= 1 << (x % 64);
    }

    #[inline]
    pub fn remove(&mut self, x: u32) {
        if x < self.p.get() {
            self.words[(x / 64) as usize] &= !(1 << (x % 64));
        }
    }

    #[inline]
    pub fn contains(&self, x: u32) -> bool {
        x < self.p.get() && self.words[(x / 64) as usize] >> (x % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.p.get()).filter(move |&x| self.contains(x))
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    pub fn is_subset(&self, other: &CoverSet) -> bool {
        self.p == other.p && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &CoverSet) -> CoverSet {
        assert_eq!(self.p, other.p, "union across moduli");
        CoverSet {
            p: self.p,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn intersection(&self, other: &CoverSet) -> CoverSet {
        assert_eq!(self.p, other.p, "intersection across moduli");
        CoverSet {
            p: self.p,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    /// Elements of `self` missing from `other`.
    pub fn difference(&self, other: &CoverSet) -> CoverSet {
        assert_eq!(self.p, other.p, "difference across moduli");
        CoverSet {
            p: self.p,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
        }
    }

    /// `sS = { s * x mod p : x in S }`.
    pub fn scaled(&self, s: u32) -> CoverSet {
        let mut out = CoverSet::empty(self.p);
        for x in self.iter() {
            out.insert(self.p.mul(s, x));
        }
        out
    }

    pub fn negated(&self) -> CoverSet {
        let mut out = CoverSet::empty(self.p);
        for x in self.iter() {
            out.insert(self.p.neg(x));
        }
        out
    }

    pub fn is_negation_closed(&self) -> bool {
        self.negated() == *self
    }

    /// Parses `Zp`, `Zp*`, or a comma-separated element list (possibly empty).
    pub fn parse_spec(p: PrimeModulus, spec: &str) -> Result<CoverSet> {
        match spec.trim() {
            "Zp" => Ok(Self::full(p)),
            "Zp*" => Ok(Self::nonzero(p)),
            "" => Ok(Self::empty(p)),
            list => {
                let elements = list
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<u32>()
                            .map_err(|_| Error::invalid(format!("bad cover-set element `{t}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::from_elements(p, elements)
            }
        }
    }

    /// Inverse of [`CoverSet::parse_spec`], preferring the named forms.
    pub fn to_spec(&self) -> String {
        if *self == Self::full(self.p) {
            "Zp".to_string()
        } else if *self == Self::nonzero(self.p) {
            "Zp*".to_string()
        } else {
            let parts: Vec<String> = self.iter().map(|x| x.to_string()).collect();
            parts.join(",")
        }
    }
}

impl fmt::Debug for CoverSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoverSet(p={}, ", self.p)?;
        f.debug_set().entries(self.iter()).finish()?;
        write!(f, ")")
    }
}

impl fmt::Display for CoverSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|x| x.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[derive(Serialize, Deserialize)]
struct CoverSetRepr {
    p: PrimeModulus,
    members: Vec<u32>,
}

impl Serialize for CoverSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CoverSetRepr {
            p: self.p,
            members: self.to_vec(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CoverSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = CoverSetRepr::deserialize(deserializer)?;
        CoverSet::from_elements(repr.p, repr.members).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32) -> PrimeModulus {
        PrimeModulus::new(n).unwrap()
    }

    #[test]
    fn basic_membership() {
        let s = CoverSet::from_elements(p(7), [1, 6]).unwrap();
        assert!(s.contains(1) && s.contains(6) && !s.contains(0));
        assert_eq!(s.len(), 2);
        assert_eq!(s.scaled(2).to_vec(), vec![2, 5]);
        assert!(s.is_negation_closed());
        assert!(CoverSet::from_elements(p(7), [7]).is_err());
    }

    #[test]
    fn wide_moduli() {
        let q = p(131);
        let s = CoverSet::full(q);
        assert_eq!(s.len(), 131);
        assert!(s.contains(130) && !s.contains(131));
        assert_eq!(CoverSet::nonzero(q).len(), 130);
    }

    #[test]
    fn spec_strings() {
        let q = p(5);
        assert_eq!(CoverSet::parse_spec(q, "Zp").unwrap(), CoverSet::full(q));
        assert_eq!(CoverSet::parse_spec(q, "Zp*").unwrap(), CoverSet::nonzero(q));
        let s = CoverSet::parse_spec(q, "1, 2").unwrap();
        assert_eq!(s.to_vec(), vec![1, 2]);
        assert_eq!(s.to_spec(), "1,2");
        assert_eq!(CoverSet::full(q).to_spec(), "Zp");
        assert_eq!(CoverSet::parse_spec(q, "").unwrap(), CoverSet::empty(q));
        assert!(CoverSet::parse_spec(q, "1,x").is_err());
        assert!(CoverSet::parse_spec(q, "5").is_err());
    }
}
