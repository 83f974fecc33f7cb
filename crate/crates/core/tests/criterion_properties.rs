use std::collections::HashMap;

use ies_core::criterion::{criterion_l, lower_bound_exact, lower_bound_weak, MembershipMatrix};
use ies_core::oa::verify_weak_strength;
use ies_core::sampler::ScoreVector;
use num_rational::Ratio;
use proptest::prelude::*;

/// Σ over unordered row pairs of (number of equal coordinates)².
fn l_oracle(cells: &[u32], p: usize) -> u64 {
    let rows: Vec<&[u32]> = cells.chunks(p).collect();
    let mut total = 0u64;
    for i in 0..rows.len() {
        for k in 0..i {
            let d = rows[i].iter().zip(rows[k]).filter(|(a, b)| a == b).count() as u64;
            total += d * d;
        }
    }
    total
}

/// Weak strength 1⁻ and 2⁻ by counting every projection with a hash map.
fn weakly_orthogonal(cells: &[u32], p: usize, q: u32) -> bool {
    let rows: Vec<&[u32]> = cells.chunks(p).collect();
    let balanced = |keys: Vec<Vec<u32>>, universe: usize| {
        let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
        for k in keys {
            *counts.entry(k).or_default() += 1;
        }
        let max = counts.values().copied().max().unwrap_or(0);
        let min = if counts.len() < universe { 0 } else { counts.values().copied().min().unwrap_or(0) };
        max - min <= 1
    };
    let q = q as usize;
    for j in 0..p {
        if !balanced(rows.iter().map(|r| vec![r[j]]).collect(), q) {
            return false;
        }
        for k in j + 1..p {
            if !balanced(rows.iter().map(|r| vec![r[j], r[k]]).collect(), q * q) {
                return false;
            }
        }
    }
    true
}

fn small_matrix() -> impl Strategy<Value = (Vec<u32>, usize, u32)> {
    (1usize..=12, 1usize..=4, 2u32..=3)
        .prop_flat_map(|(n, p, q)| (prop::collection::vec(0..q, n * p), Just(p), Just(q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn bound_holds_with_equality_iff_weak_strength((cells, p, q) in small_matrix()) {
        let m = MembershipMatrix::from_levels(cells.clone(), p, q).unwrap();
        let c = criterion_l(&m);
        prop_assert_eq!(c.l, l_oracle(&cells, p));
        let l = Ratio::from_integer(c.l as i64);
        prop_assert!(l >= c.lower_bound_weak);
        let oracle = weakly_orthogonal(&cells, p, q);
        let lib = verify_weak_strength(&cells, p, q, 1).unwrap() && verify_weak_strength(&cells, p, q, 2).unwrap();
        prop_assert_eq!(lib, oracle);
        prop_assert_eq!(c.attains_bound(), oracle);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn invariant_under_row_permutation_and_level_relabelling(
        (cells, p, q) in small_matrix(),
        shuffle_seed in any::<u64>(),
        col in 0usize..4,
        shift in 1u32..3,
    ) {
        let n = cells.len() / p;
        let base = criterion_l(&MembershipMatrix::from_levels(cells.clone(), p, q).unwrap()).l;

        let mut order: Vec<usize> = (0..n).collect();
        let mut s = shuffle_seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted: Vec<u32> = order.iter().flat_map(|&i| cells[i * p..(i + 1) * p].to_vec()).collect();
        prop_assert_eq!(criterion_l(&MembershipMatrix::from_levels(permuted, p, q).unwrap()).l, base);

        let col = col % p;
        let relabelled: Vec<u32> = cells
            .iter()
            .enumerate()
            .map(|(k, &v)| if k % p == col { (v + shift) % q } else { v })
            .collect();
        prop_assert_eq!(criterion_l(&MembershipMatrix::from_levels(relabelled, p, q).unwrap()).l, base);
    }

    #[test]
    fn adding_a_row_adds_its_squared_coincidences((cells, p, q) in small_matrix()) {
        let n = cells.len() / p;
        prop_assume!(n >= 2);
        let m = MembershipMatrix::from_levels(cells.clone(), p, q).unwrap();
        let mut scores = ScoreVector::new(n);
        for i in 0..n - 1 {
            scores.add_point(&m, i);
        }
        let head = criterion_l(&MembershipMatrix::from_levels(cells[..(n - 1) * p].to_vec(), p, q).unwrap()).l;
        let full = criterion_l(&m).l;
        prop_assert_eq!(full, head + scores.l[n - 1]);
    }

    #[test]
    fn bounds_coincide_when_q_squared_divides_n(k in 1usize..6, p in 1usize..6, q in 2u32..6) {
        let n = k * (q * q) as usize;
        prop_assert_eq!(lower_bound_exact(n, p, q).unwrap(), lower_bound_weak(n, p, q));
    }
}
