//! The clique prophet instance: `r` disjoint cliques of `p` elements, each
//! element worth 1 with probability `1/p` and 0 otherwise, feasible sets
//! being subsets of a single clique. Elements arrive clique by clique.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `r * p` handled by the exact computations.
pub const EXACT_BUDGET: u64 = 1 << 26;

const MC_CHUNKS: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProphetInstance {
    pub p: u32,
    pub r: u64,
}

impl ProphetInstance {
    pub fn new(p: u32, r: u64) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid(format!("clique size must be at least 2, got {p}")));
        }
        if r == 0 {
            return Err(Error::invalid("need at least one clique"));
        }
        Ok(ProphetInstance { p, r })
    }

    fn check_exact_budget(&self) -> Result<()> {
        let work = self.r.saturating_mul(self.p as u64);
        if work > EXACT_BUDGET {
            return Err(Error::invalid(format!(
                "r * p = {work} exceeds the exact budget {EXACT_BUDGET}; use Monte Carlo only"
            )));
        }
        Ok(())
    }
}

/// CDF of Binomial(p, 1/p) at `0..=p`.
fn binomial_cdf(p: u32) -> Vec<f64> {
    let n = p as f64;
    let q = 1.0 / n;
    let mut pmf = (1.0 - q).powi(p as i32);
    let mut acc = 0.0;
    let mut cdf = Vec::with_capacity(p as usize + 1);
    for t in 0..=p {
        acc += pmf;
        cdf.push(acc.min(1.0));
        // pmf(t+1) = pmf(t) * (p - t) / (t + 1) * q / (1 - q)
        pmf *= (n - t as f64) / (t as f64 + 1.0) / (n - 1.0);
    }
    cdf
}

fn powr(x: f64, r: u64) -> f64 {
    match i32::try_from(r) {
        Ok(e) => x.powi(e),
        Err(_) => x.powf(r as f64),
    }
}

/// `E[max of r i.i.d. Binomial(p, 1/p)] = sum_{t=1..p} (1 - F(t-1)^r)`.
pub fn prophet_expected_reward(inst: &ProphetInstance) -> f64 {
    let cdf = binomial_cdf(inst.p);
    (1..=inst.p as usize).map(|t| 1.0 - powr(cdf[t - 1], inst.r)).sum()
}

/// Optimal-gambler values, indexed by elements still to arrive.
///
/// `values[n]` is the expected reward of an unlocked gambler with `n`
/// elements left; accepting a 1 at 0-indexed position `t` of a clique is
/// worth `1 + (p - 1 - t) / p`, since every later 1 of that clique can be
/// collected and no other clique stays feasible.
#[derive(Clone, Debug)]
pub struct GamblerPolicy {
    pub p: u32,
    pub r: u64,
    values: Vec<f64>,
}

impl GamblerPolicy {
    pub fn solve(inst: &ProphetInstance) -> Result<Self> {
        inst.check_exact_budget()?;
        let p = inst.p as usize;
        let total = inst.r as usize * p;
        let q = 1.0 / inst.p as f64;
        let mut values = vec![0.0f64; total + 1];
        for n in 1..=total {
            let t = p - 1 - (n - 1) % p;
            let cont = values[n - 1];
            let accept = 1.0 + (p - 1 - t) as f64 * q;
            values[n] = q * accept.max(cont) + (1.0 - q) * cont;
        }
        Ok(GamblerPolicy {
            p: inst.p,
            r: inst.r,
            values,
        })
    }

    pub fn value(&self) -> f64 {
        *self.values.last().expect("values has r * p + 1 entries")
    }

    /// Whether to lock in on a 1 seen at global arrival index `idx`.
    pub fn accepts(&self, idx: usize) -> bool {
        let p = self.p as usize;
        let left_after = self.values.len() - 2 - idx;
        let t = idx % p;
        1.0 + (p - 1 - t) as f64 / p as f64 >= self.values[left_after]
    }
}

pub fn gambler_optimal_value(inst: &ProphetInstance) -> Result<f64> {
    Ok(GamblerPolicy::solve(inst)?.value())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Half-width of the 95% normal-approximation interval.
    pub half_width: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    fn from_moments(sum: f64, sum_sq: f64, samples: u64, seed: u64) -> Self {
        let n = samples as f64;
        let mean = sum / n;
        let var = if samples > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            estimate: mean,
            half_width: 1.96 * (var / n).sqrt(),
            samples,
            seed,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.estimate - x).abs() <= self.half_width
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimates {
    pub prophet: McEstimate,
    pub gambler: McEstimate,
}

/// Seeded Monte Carlo estimates of both values.
///
/// Samples are split into a fixed number of chunks, each with its own
/// derived seed, and merged in chunk order; the result does not depend on
/// the thread count.
pub fn simulate_mc(inst: &ProphetInstance, samples: u64, seed: u64) -> Result<McEstimates> {
    if samples == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one sample"));
    }
    let policy = GamblerPolicy::solve(inst)?;
    let p = inst.p as usize;
    let r = inst.r as usize;
    let chunk_moments: Vec<[f64; 4]> = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let n = samples / MC_CHUNKS + u64::from(c < samples % MC_CHUNKS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut m = [0.0f64; 4];
            for _ in 0..n {
                let mut best = 0u32;
                let mut gained = 0u32;
                let mut locked: Option<usize> = None;
                for j in 0..r {
                    let mut ones = 0u32;
                    for i in 0..p {
                        if rng.gen_range(0..p) != 0 {
                            continue;
                        }
                        ones += 1;
                        match locked {
                            Some(c) if c == j => gained += 1,
                            Some(_) => {}
                            None if policy.accepts(j * p + i) => {
                                locked = Some(j);
                                gained = 1;
                            }
                            None => {}
                        }
                    }
                    best = best.max(ones);
                }
                let (x, y) = (best as f64, gained as f64);
                m[0] += x;
                m[1] += x * x;
                m[2] += y;
                m[3] += y * y;
            }
            m
        })
        .collect();
    let total = chunk_moments.iter().fold([0.0f64; 4], |mut acc, m| {
        for (a, b) in acc.iter_mut().zip(m) {
            *a += b;
        }
        acc
    });
    Ok(McEstimates {
        prophet: McEstimate::from_moments(total[0], total[1], samples, seed),
        gambler: McEstimate::from_moments(total[2], total[3], samples, seed),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperBounds {
    /// `(1 - 1/e) p`, stated for `r = p^p`.
    pub prophet_lb: Option<f64>,
    pub gambler_ub: f64,
    /// `(1 - 1/e) p / 2`, stated for `r = p^p`.
    pub ratio_lb: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    pub p: u32,
    pub r: u64,
    pub prophet_exact: f64,
    pub gambler_exact: f64,
    pub prophet_mc: Option<McEstimate>,
    pub gambler_mc: Option<McEstimate>,
    pub ratio: f64,
    pub paper_bounds: PaperBounds,
    /// Gambler at most prophet and at most 2, and the ratio bound when stated.
    pub passed: bool,
}

/// `Some(p^p)` if it fits in `u64`.
fn self_power(p: u32) -> Option<u64> {
    (p as u64).checked_pow(p)
}

pub fn gap_report(p: u32, r: u64, mc: Option<(u64, u64)>) -> Result<ValueReport> {
    let inst = ProphetInstance::new(p, r)?;
    let prophet_exact = prophet_expected_reward(&inst);
    let gambler_exact = gambler_optimal_value(&inst)?;
    let (prophet_mc, gambler_mc) = match mc {
        Some((samples, seed)) => {
            let est = simulate_mc(&inst, samples, seed)?;
            (Some(est.prophet), Some(est.gambler))
        }
        None => (None, None),
    };
    let stated = self_power(p) == Some(r);
    let c = 1.0 - (-1.0f64).exp();
    let paper_bounds = PaperBounds {
        prophet_lb: stated.then_some(c * p as f64),
        gambler_ub: 2.0,
        ratio_lb: stated.then_some(c * p as f64 / 2.0),
    };
    let ratio = prophet_exact / gambler_exact;
    const EPS: f64 = 1e-12;
    let passed = gambler_exact <= prophet_exact + EPS
        && gambler_exact <= paper_bounds.gambler_ub + EPS
        && paper_bounds.prophet_lb.is_none_or(|lb| prophet_exact >= lb)
        && paper_bounds.ratio_lb.is_none_or(|lb| ratio >= lb);
    Ok(ValueReport {
        p,
        r,
        prophet_exact,
        gambler_exact,
        prophet_mc,
        gambler_mc,
        ratio,
        paper_bounds,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(p: u32, r: u64) -> ProphetInstance {
        ProphetInstance::new(p, r).unwrap()
    }

    #[test]
    fn single_clique_prophet_is_one() {
        for p in 2..12 {
            assert!((prophet_expected_reward(&inst(p, 1)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn p3_r27_against_direct_cdf() {
        let f = [8.0 / 27.0, 20.0 / 27.0, 26.0 / 27.0];
        let oracle = 3.0 - f.iter().map(|x: &f64| x.powi(27)).sum::<f64>();
        let v = prophet_expected_reward(&inst(3, 27));
        assert!((v - oracle).abs() < 1e-12);
        assert!((v - 2.639).abs() < 1e-3);
    }

    #[test]
    fn gambler_small_cases() {
        assert!((gambler_optimal_value(&inst(2, 1)).unwrap() - 1.0).abs() < 1e-15);
        let mut last = 0.0;
        for r in 1..40 {
            let v = gambler_optimal_value(&inst(3, r)).unwrap();
            assert!(v >= last - 1e-15 && v <= 2.0);
            last = v;
        }
    }

    #[test]
    fn degenerate_instances_refused() {
        assert!(ProphetInstance::new(1, 3).is_err());
        assert!(ProphetInstance::new(3, 0).is_err());
        assert!(gambler_optimal_value(&inst(2, 1 << 40)).is_err());
        assert!(simulate_mc(&inst(3, 2), 0, 1).is_err());
    }

    #[test]
    fn gap_reports() {
        let rep = gap_report(3, 27, None).unwrap();
        assert!(rep.passed);
        assert!(rep.ratio >= 0.948);
        let two = gap_report(2, 4, None).unwrap();
        assert!(two.paper_bounds.ratio_lb.is_some() && two.passed);
        let one = gap_report(5, 1, None).unwrap();
        assert!((one.ratio - 1.0 / one.gambler_exact).abs() < 1e-12);
        assert!(one.paper_bounds.ratio_lb.is_none());
    }

    #[test]
    fn mc_is_deterministic_and_close() {
        let i = inst(3, 27);
        let a = simulate_mc(&i, 20_000, 5).unwrap();
        assert_eq!(a, simulate_mc(&i, 20_000, 5).unwrap());
        assert!((a.prophet.estimate - prophet_expected_reward(&i)).abs() < 4.0 * a.prophet.half_width);
        assert!((a.gambler.estimate - gambler_optimal_value(&i).unwrap()).abs() < 4.0 * a.gambler.half_width);
    }
}
