//! Property tests for the structural invariants.

use proptest::prelude::*;

use kloosterman::cyclotomic::{CharArg, CyclotomicValue};
use kloosterman::padic::{big, mod_inverse, p_pow};
use kloosterman::sum::{moduli_assignments, representative_count, representative_space};
use kloosterman::weyl::make_admissible;

fn composition_strategy() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..=3, 2..=4).prop_filter("desk scale", |b| b.iter().sum::<u32>() <= 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_set_size_is_length(blocks in composition_strategy()) {
        let w = make_admissible(&blocks).unwrap();
        let pairwise: u64 = (0..blocks.len())
            .flat_map(|a| ((a + 1)..blocks.len()).map(move |b| (a, b)))
            .map(|(a, b)| blocks[a] as u64 * blocks[b] as u64)
            .sum();
        prop_assert_eq!(w.length(), pairwise);
        prop_assert_eq!(w.gamma_order().len() as u64, w.length());
        prop_assert_eq!(w.reduced_expression().iter().filter(|&&s| s == 1).count(), 1);
    }

    #[test]
    fn signed_matrix_abs_is_permutation(blocks in composition_strategy()) {
        let w = make_admissible(&blocks).unwrap();
        let s: kloosterman::Matrix = w.signed_matrix(2);
        let n = w.dimension() as usize;
        for r in 1..=n {
            for c in 1..=n {
                let expected = u32::from(w.permutation(c as u32) as usize == r);
                let entry = s.get(r, c);
                prop_assert_eq!(
                    (entry.numer() * entry.numer()).to_string(),
                    (expected * expected).to_string()
                );
            }
        }
    }

    #[test]
    fn accumulation_is_commutative(
        args in prop::collection::vec((0u32..=3, 0u64..81), 1..20)
    ) {
        let p = 3u64;
        let mut forward = CyclotomicValue::zero(p, 4);
        let mut backward = CyclotomicValue::zero(p, 4);
        for &(k, t) in &args {
            forward.accumulate(CharArg::new(p, k, t % p.pow(k))).unwrap();
        }
        for &(k, t) in args.iter().rev() {
            backward.accumulate(CharArg::new(p, k, t % p.pow(k))).unwrap();
        }
        prop_assert_eq!(forward.sparse_coeffs(), backward.sparse_coeffs());
        prop_assert!(forward.eq_exact(&backward).unwrap());
    }

    #[test]
    fn full_character_sum_vanishes(k in 1u32..=4) {
        let p = 2u64;
        let mut v = CyclotomicValue::zero(p, k);
        for t in 0..p.pow(k) {
            v.accumulate(CharArg::new(p, k, t)).unwrap();
        }
        prop_assert!(v.is_zero_exact());
    }

    #[test]
    fn mod_inverse_is_involutive(c in 1i64..200, m in 1u32..=5) {
        let p = 3u64;
        if c % p as i64 != 0 {
            let cb = big(c);
            let d = mod_inverse(&cb, p, m).unwrap();
            let dd = mod_inverse(&d, p, m).unwrap();
            let modulus = p_pow::<num::BigInt>(p, m);
            prop_assert_eq!(dd, num::Integer::mod_floor(&cb, &modulus));
        }
    }

    #[test]
    fn representative_counts_match_formula(
        blocks in composition_strategy(),
        r_seed in prop::collection::vec(0u32..=2, 1..=5)
    ) {
        let w = make_admissible(&blocks).unwrap();
        let n = w.dimension() as usize - 1;
        let r: Vec<u32> = (0..n).map(|i| r_seed[i % r_seed.len()]).collect();
        let total: u32 = r.iter().sum();
        if total <= 4 {
            let p = 2u64;
            for m in moduli_assignments(&w, &r).unwrap() {
                let count = representative_count(&w, &m, p);
                let streamed = representative_space(&w, &m, p).count() as u128;
                prop_assert_eq!(count, streamed);
                let kappa = m.kappa();
                prop_assert_eq!(
                    count * (p as u128).pow(kappa),
                    (p as u128).pow(total) * ((p - 1) as u128).pow(kappa)
                );
            }
        }
    }
}
