//! Arithmetic over prime fields and the parameter arithmetic of the
//! three-stage upper-bound pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A prime modulus.
///
/// Families over `Z_2` appear as sources for the bit lift, so 2 is admitted
/// here; operations that need an odd prime check for it themselves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PrimeModulus(u32);

impl PrimeModulus {
    pub fn new(p: u32) -> Result<Self> {
        if is_prime(p as u64) {
            Ok(PrimeModulus(p))
        } else {
            Err(Error::NotPrime(p as u64))
        }
    }

    /// Like [`PrimeModulus::new`] but also rejects 2.
    pub fn odd(p: u32) -> Result<Self> {
        let m = Self::new(p)?;
        if p == 2 {
            return Err(Error::invalid("an odd prime is required"));
        }
        Ok(m)
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_odd(self) -> bool {
        self.0 != 2
    }

    #[inline]
    pub fn reduce(self, x: u64) -> u32 {
        (x % self.0 as u64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        (s % self.0 as u64) as u32
    }

    /// `a - b mod p` for `a, b` already reduced.
    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.0 as u64) as u32
    }

    pub fn pow(self, base: u32, exp: u64) -> u32 {
        pow_mod(base as u64, exp, self.0 as u64) as u32
    }

    pub fn inv(self, a: u32) -> Result<u32> {
        mod_inverse(a, self)
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<u32> for PrimeModulus {
    type Error = Error;

    fn try_from(p: u32) -> Result<Self> {
        PrimeModulus::new(p)
    }
}

impl From<PrimeModulus> for u32 {
    fn from(p: PrimeModulus) -> u32 {
        p.0
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n == w {
            return true;
        }
        if n % w == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Largest prime `<= n`, if any.
pub fn prev_prime(n: u64) -> Option<u64> {
    (2..=n).rev().find(|&k| is_prime(k))
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Smallest generator of the multiplicative group of `Z_p`.
pub fn primitive_root(p: PrimeModulus) -> Result<u32> {
    if !p.is_odd() {
        return Err(Error::invalid("primitive_root needs an odd prime"));
    }
    let order = (p.get() - 1) as u64;
    let factors = distinct_prime_factors(order);
    (2..p.get())
        .find(|&g| factors.iter().all(|&q| p.pow(g, order / q) != 1))
        .ok_or_else(|| Error::invalid(format!("no primitive root found modulo {p}")))
}

pub fn mod_inverse(a: u32, p: PrimeModulus) -> Result<u32> {
    let a = a % p.get();
    if a == 0 {
        return Err(Error::NoInverse {
            value: 0,
            modulus: p.get(),
        });
    }
    // Extended Euclid on signed 64-bit values.
    let (mut r0, mut r1) = (p.get() as i64, a as i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    Ok(t0.rem_euclid(p.get() as i64) as u32)
}

/// `log2` of `k^(5 log2 log2 k)`, with the exponent taken as 0 at `k = 2`.
fn log2_size_constraint(k: u64) -> f64 {
    if k <= 2 {
        return 0.0;
    }
    let l = (k as f64).log2();
    5.0 * l.log2() * l
}

/// Whether prime `k` satisfies `k^(5 log2 log2 k) <= log2_n`.
pub fn k_is_feasible(k: u64, log2_n: f64) -> bool {
    if log2_n <= 0.0 {
        return false;
    }
    log2_size_constraint(k) <= log2_n.log2()
}

/// Largest prime `k <= cap` with `k^(5 log2 log2 k) <= log2_n`.
///
/// The constraint is increasing in `k`, so the scan stops at the first
/// infeasible prime. Falls back to 2, which is always feasible for
/// `log2_n >= 1`.
pub fn largest_feasible_k(log2_n: f64, cap: u64) -> u64 {
    let mut best = 2;
    for k in 3..=cap {
        if !is_prime(k) {
            continue;
        }
        if k_is_feasible(k, log2_n) {
            best = k;
        } else {
            break;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSelection {
    pub p: u32,
    pub log2_n: f64,
    pub k: u32,
    pub ell1: u64,
    pub ell2: u64,
    pub size_s_bound: u64,
    pub ell3_bound: u64,
    pub ell_star: f64,
}

pub fn ceil_log2(k: u64) -> u32 {
    assert!(k >= 1);
    64 - (k - 1).leading_zeros()
}

/// Parameters of the upper-bound pipeline for target size `2^log2_n`.
pub fn select_parameters(p: PrimeModulus, log2_n: f64) -> Result<ParameterSelection> {
    if !(log2_n >= 4.0) || !log2_n.is_finite() {
        return Err(Error::invalid(format!(
            "select_parameters needs log2 N >= 4, got {log2_n}"
        )));
    }
    let pf = p.get() as f64;
    let k = largest_feasible_k(log2_n, p.get() as u64);
    let ell1 = (2.0 * log2_n).ceil() as u64;
    let ell2 = 2 * ell1 * ceil_log2(k) as u64;
    let size_s_bound = scaling_set_bound(p.get(), k as u32);
    Ok(ParameterSelection {
        p: p.get(),
        log2_n,
        k: k as u32,
        ell1,
        ell2,
        size_s_bound,
        ell3_bound: size_s_bound * ell2,
        ell_star: pf * pf.log2() * log2_n / (k as f64).sqrt(),
    })
}

/// `ceil(p ln p / (k - 1))`, the sample count for a scaling set.
pub fn scaling_set_bound(p: u32, k: u32) -> u64 {
    assert!(k >= 2);
    let pf = p as f64;
    (pf * pf.ln() / (k - 1) as f64).ceil() as u64
}
