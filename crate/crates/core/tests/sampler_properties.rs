use ies_core::bench::{gen_predictors, Case, SimScenario};
use ies_core::criterion::{criterion_l, MembershipMatrix};
use ies_core::data::{scale_to_unit, Dataset};
use ies_core::sampler::{audit_scores, ies_select, ies_select_cells, random_select, AuditOutcome};
use ies_core::SeededRng;
use proptest::prelude::*;

fn case1(n_total: usize, seed: u64) -> Dataset {
    let s = SimScenario {
        seed,
        ..SimScenario::new(Case::Normal, n_total)
    };
    let x = gen_predictors(&s, &mut SeededRng::new(seed, 0)).unwrap();
    let names = (1..=s.p).map(|j| format!("x{j}")).collect();
    Dataset::new(x, vec![0.0; n_total], names, "y").unwrap()
}

#[test]
fn greedy_lowers_the_criterion_against_random_subsamples() {
    let data = case1(2000, 3);
    let view = scale_to_unit(&data);
    let cells = MembershipMatrix::from_view(&view, 16).unwrap();
    let mut wins = 0;
    for seed in 0..100 {
        let ies = ies_select_cells(&cells, 250, &mut SeededRng::new(seed, 1), false).unwrap();
        let rnd = random_select(2000, 250, &mut SeededRng::new(seed, 2)).unwrap();
        let l_ies = criterion_l(&cells.select_rows(&ies.indices)).l;
        let l_rnd = criterion_l(&cells.select_rows(&rnd.indices)).l;
        if l_ies <= l_rnd {
            wins += 1;
        }
    }
    assert!(wins >= 95, "greedy won only {wins}/100");
}

#[test]
fn replay_gives_identical_indices() {
    let data = case1(1500, 9);
    let view = scale_to_unit(&data);
    let a = ies_select(&view, 200, 16, &mut SeededRng::new(77, 0), false).unwrap();
    let b = ies_select(&view, 200, 16, &mut SeededRng::new(77, 0), false).unwrap();
    assert_eq!(a.indices, b.indices);
    let c = ies_select(&view, 200, 16, &mut SeededRng::new(78, 0), false).unwrap();
    assert_ne!(a.indices, c.indices);
}

fn cells() -> impl Strategy<Value = (Vec<u32>, usize, u32)> {
    (5usize..60, 1usize..5, 2u32..6).prop_flat_map(|(n, p, q)| (prop::collection::vec(0..q, n * p), Just(p), Just(q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_pick_is_a_current_minimiser((levels, p, q) in cells(), take in 1usize..60, seed in any::<u64>()) {
        let m = MembershipMatrix::from_levels(levels, p, q).unwrap();
        let n = take.min(m.n_rows());
        let s = ies_select_cells(&m, n, &mut SeededRng::new(seed, 0), true).unwrap();
        prop_assert_eq!(s.len(), n);
        prop_assert_eq!(s.distinct(), n);
        prop_assert_eq!(audit_scores(&s, &m).unwrap(), AuditOutcome::Pass);
        // the running minima add up to the criterion of the selection
        let trail: u64 = s.audit.as_ref().unwrap().min_scores.iter().sum();
        prop_assert_eq!(trail, criterion_l(&m.select_rows(&s.indices)).l);
    }
}
