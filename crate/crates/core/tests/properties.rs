mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use zpcover::balanced::{base_family_a0, enumerate_balanced, star_partition, step_boost, PartitionMode};
use zpcover::constructions::{bit_lift, concat_boost, scale_boost, LiftCopies};
use zpcover::family::io::{parse_zpcf, to_zpcf_string};
use zpcover::{CoverSet, CoveringFamily, MemoryBudget};

const PRIMES: [u32; 6] = [2, 3, 5, 7, 11, 13];

/// `(p, rows, s)` with `1 <= N, ell <= 30`, `p <= 13`.
fn family_case(max_s: usize) -> impl Strategy<Value = (u32, Vec<Vec<u32>>, Vec<u32>)> {
    (prop::sample::select(PRIMES.to_vec()), 1usize..=30, 1usize..=30, any::<u64>()).prop_map(
        move |(p, n, ell, seed)| {
            let mut r = rng(seed);
            let cap = (p as f64).powi(ell as i32).min(1e9) as usize;
            let rows = random_rows(&mut r, p, n.min(cap), ell);
            let s = random_subset(&mut r, p, max_s);
            (p, rows, s)
        },
    )
}

fn build(p: u32, rows: &[Vec<u32>]) -> CoveringFamily {
    CoveringFamily::from_rows(modulus(p), rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn verifier_matches_naive_oracle((p, rows, s) in family_case(3)) {
        let f = build(p, &rows);
        let report = f.check_cover(&cover_set(p, &s)).unwrap();
        let oracle = naive_first_failure(&rows, &s, p);
        prop_assert_eq!(report.is_covering, oracle.is_none());
        match (report.first_failure, oracle) {
            (None, None) => {}
            (Some(got), Some((a, b, missing))) => {
                prop_assert_eq!((got.row_a, got.row_b), (a, b));
                prop_assert_eq!(got.missing, missing[0]);
                let n = rows.len() as u64;
                let rank = a as u64 * (n - 1) + if b < a { b } else { b - 1 } as u64;
                prop_assert_eq!(report.checked_pairs, rank + 1);
            }
            (got, want) => prop_assert!(false, "verifier {:?} vs oracle {:?}", got, want),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn unordered_check_suffices_for_symmetric_sets((p, rows, half) in family_case(2)) {
        let s: Vec<u32> = half
            .iter()
            .flat_map(|&x| [x, (p - x) % p])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let cs = cover_set(p, &s);
        prop_assert!(cs.is_negation_closed());
        let f = build(p, &rows);
        prop_assert_eq!(f.check_cover(&cs).unwrap().is_covering, naive_covers_unordered(&rows, &s, p));
    }

    #[test]
    fn union_and_monotonicity((p, rows, s1) in family_case(3), seed in any::<u64>()) {
        let f = build(p, &rows);
        let mut r = rng(seed);
        let s2 = random_subset(&mut r, p, 3);
        let a = cover_set(p, &s1);
        let b = cover_set(p, &s2);
        let covers = |s: &CoverSet| f.check_cover(s).unwrap().is_covering;
        prop_assert_eq!(covers(&a.union(&b)), covers(&a) && covers(&b));
        if covers(&a) {
            prop_assert!(covers(&a.intersection(&b)));
            let keep: Vec<usize> = (0..f.len()).filter(|i| i % 2 == 0).collect();
            prop_assert!(f.subfamily(&keep).unwrap().check_cover(&a).unwrap().is_covering);
        }
        prop_assert!(covers(&CoverSet::empty(modulus(p))));
    }

    #[test]
    fn zpcf_round_trip((p, rows, s) in family_case(4), claimed in any::<bool>()) {
        let f = build(p, &rows).with_claimed_cover(claimed.then(|| cover_set(p, &s)));
        let text = to_zpcf_string(&f);
        let back = parse_zpcf(&text).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(to_zpcf_string(&back), text);
    }

    #[test]
    fn boosts_keep_their_promises(
        p in prop::sample::select(vec![5u32, 7, 11]),
        n in 2usize..6,
        seed in any::<u64>(),
        mult in 1u32..11,
    ) {
        let mut r = rng(seed);
        let rows = random_rows(&mut r, p, n, 4);
        let s = random_subset(&mut r, p, 2);
        let f = build(p, &rows).with_claimed_cover(Some(cover_set(p, &s)));
        prop_assume!(naive_covers(&rows, &s, p));
        let g = concat_boost(&f, 2, &MemoryBudget::default()).unwrap();
        prop_assert!(family_covers(&g, &s));
        let m = mult % p;
        prop_assume!(m != 0);
        let h = scale_boost(&f, m).unwrap();
        let both: Vec<u32> = h.claimed_cover().unwrap().to_vec();
        let expected: BTreeSet<u32> = s.iter().flat_map(|&x| [x, x * m % p]).collect();
        prop_assert_eq!(both.iter().copied().collect::<BTreeSet<_>>(), expected);
        prop_assert!(family_covers(&h, &both));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn bit_lift_covers_low_range(k in prop::sample::select(vec![2u32, 3, 5]), extra in 0u32..3, n in 2usize..12, seed in any::<u64>()) {
        let p = [5u32, 7, 11, 13].into_iter().find(|&p| p >= 2 * k + extra).unwrap();
        let mut r = rng(seed);
        // Subfamilies of a Z_k-covering family stay Z_k-covering.
        let base = zpcover::constructions::base_p_family(modulus(k), n as u64).unwrap();
        let keep: Vec<usize> = (0..base.len()).filter(|_| r.gen_bool(0.7)).collect();
        prop_assume!(!keep.is_empty());
        let src = base.subfamily(&keep).unwrap();
        for copies in [LiftCopies::Full, LiftCopies::Minimal] {
            let lifted = bit_lift(&src, modulus(p), copies).unwrap();
            let low: Vec<u32> = (0..k).collect();
            prop_assert!(family_covers(&lifted, &low));
        }
    }
}

#[test]
fn balanced_words_are_closed_under_scaling() {
    for (p, ell) in [(3u32, 2usize), (3, 4), (3, 6), (5, 4), (5, 8), (7, 6), (7, 12)] {
        let b = enumerate_balanced(modulus(p), ell, &MemoryBudget::default()).unwrap();
        let words: BTreeSet<Vec<u32>> = rows_of(b.family()).into_iter().collect();
        assert_eq!(words.len(), b.len());
        for w in &words {
            for a in 1..p {
                let scaled: Vec<u32> = w.iter().map(|&x| x * a % p).collect();
                assert!(words.contains(&scaled), "p={p} ell={ell}: {a}·{w:?}");
            }
        }
        if (p as f64).powi(ell as i32) <= 1e6 {
            let mut count = 0usize;
            let total = (p as usize).pow(ell as u32);
            for mut x in 0..total {
                let mut tally = vec![0usize; p as usize];
                for _ in 0..ell {
                    tally[x % p as usize] += 1;
                    x /= p as usize;
                }
                if tally[0] == 0 && tally[1..].iter().all(|&c| c == ell / (p as usize - 1)) {
                    count += 1;
                }
            }
            assert_eq!(count, b.len(), "p={p} ell={ell}");
        }
    }
}

#[test]
fn step_boost_outputs_cover_the_doubled_set() {
    let budget = MemoryBudget::default();
    for (p, ell, a) in [(5u32, 4usize, 2u32), (5, 4, 3), (7, 6, 3), (7, 6, 5)] {
        let q = modulus(p);
        let base = enumerate_balanced(q, ell, &budget).unwrap();
        let a0 = base_family_a0(q, ell, &budget).unwrap();
        let one = cover_set(p, &[1]);
        for mode in [PartitionMode::Exhaustive, PartitionMode::Sampled] {
            let part = star_partition(&base, &a0, &one, mode, 11).unwrap();
            for members in &part.parts {
                let rows: Vec<Vec<u32>> = members.iter().map(|&i| base.word(i).to_vec()).collect();
                assert!(naive_covers(&rows, &[1], p));
            }
            for m in [2, 3] {
                let out = step_boost(&part, m, a, &budget).unwrap();
                assert!(family_covers(&out, &[1, a]), "p={p} a={a} m={m}");
                assert_eq!(out.ell(), (m - 1) * ell);
            }
        }
    }
}
