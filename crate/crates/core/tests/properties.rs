use hashtag_core::code::{generate_code, CodeSpec, DataBlock, LinearCode};
use hashtag_core::costmodel::{choose_strategy, CostModel, Q};
use hashtag_core::locality::{distance_bound, singleton_bound, split, verify_distance, LocalCode, LocalitySpec};
use hashtag_core::repair::{bounds, execute, plan_local, plan_msr, plan_parity, RepairPlan};
use hashtag_core::{FieldElem, FieldSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splits() -> Vec<LocalCode> {
    let base = CodeSpec::builtin_ht_9_6_9();
    [(2, 2), (3, 2), (2, 3), (3, 3)]
        .iter()
        .map(|&(l, d)| split(&base, LocalitySpec::new(l, d)).unwrap())
        .collect()
}

fn run(plan: &RepairPlan, cw: &[Vec<FieldElem>]) -> Vec<FieldElem> {
    execute(plan, |n, rows| Ok(rows.iter().map(|&j| cw[n - 1][j - 1]).collect())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_plan_repairs_exactly(seed in any::<u64>(), which in 0usize..4) {
        let lc = &splits()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cw = lc.encode(&DataBlock::random(lc.field(), 6, 9, &mut rng)).unwrap().columns;
        for node in 1..=lc.n_prime() {
            let plans = if node <= 6 {
                vec![plan_local(lc, node).unwrap(), plan_msr(lc, node).unwrap()]
            } else {
                vec![plan_parity(lc, node).unwrap()]
            };
            for p in plans {
                prop_assert!(!p.helpers().contains(&node));
                prop_assert_eq!(p.recovery().rows(), p.bandwidth_subpackets());
                prop_assert_eq!(&run(&p, &cw), &cw[node - 1]);
            }
        }
    }

    #[test]
    fn general_bound_decreases_with_helpers(m in 1i128..1_000_000, k in 1usize..12, extra in 1usize..8) {
        let n = k + extra;
        let vals: Vec<Q> = (k..n)
            .map(|d| bounds(Q::from_integer(m), n, k, d, 1, 2).unwrap().general)
            .collect();
        prop_assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*vals.last().unwrap(), bounds(Q::from_integer(m), n, k, n - 1, 1, 2).unwrap().msr);
    }

    #[test]
    fn local_sums_equal_base_parity(seed in any::<u64>()) {
        let base = CodeSpec::builtin_ht_9_6_9();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = DataBlock::random(base.field(), 6, 9, &mut rng);
        let bcw = base.encode(&data).unwrap();
        for lc in splits() {
            let cw = lc.encode(&data).unwrap();
            let (l, delta) = (lc.locality().l, lc.locality().delta);
            for source in 1..delta {
                for row in 0..9 {
                    let s = (1..=l).fold(FieldElem::ZERO, |a, g| a + cw.node(lc.local_node(source, g))[row]);
                    prop_assert_eq!(s, bcw.node(6 + source)[row]);
                }
            }
        }
    }
}

#[test]
fn split_codes_keep_full_rank() {
    for lc in splits() {
        assert_eq!(lc.generator_matrix().rank(), 54);
    }
}

#[test]
fn distance_never_exceeds_bounds() {
    let mds = generate_code(9, 6, 9, &FieldSpec::gf32(), 7, 5_000).unwrap();
    for base in [CodeSpec::builtin_ht_9_6_9(), mds] {
        for (l, delta) in [(2, 2), (3, 2), (2, 3), (3, 3)] {
            let lc = split(&base, LocalitySpec::new(l, delta)).unwrap();
            let d = verify_distance(&lc).unwrap().d_min as i64;
            let bound = distance_bound(lc.n_prime(), 6, lc.group_size(), delta);
            assert!(d <= bound && bound <= singleton_bound(lc.n_prime(), 6), "({l},{delta}): {d} vs {bound}");
        }
    }
}

#[test]
fn zero_seek_winner_meets_local_min() {
    let m = Q::from_integer(54);
    let cm = CostModel::new(Q::from_integer(0), Q::from_integer(1), 1).unwrap();
    for l in [2, 3] {
        let lc = split(&CodeSpec::builtin_ht_9_6_9(), LocalitySpec::new(l, 2)).unwrap();
        let want = bounds(m, 9, 6, 8, l, 2).unwrap().local_min;
        for node in 1..=6 {
            let c = choose_strategy(&lc, node, &cm).unwrap();
            assert_eq!(Q::from_integer(c.best().bandwidth_subpackets as i128), want, "l={l} node {node}");
        }
    }
}

#[test]
fn msr_plans_use_every_survivor_on_base_code() {
    let spec = CodeSpec::builtin_ht_9_6_9();
    for node in 1..=6 {
        assert_eq!(plan_msr(&spec, node).unwrap().helper_count(), 8);
    }
}

#[test]
fn zero_stripe_repairs_to_zero() {
    for lc in splits() {
        let cw = lc.encode(&DataBlock::zeros(6, 9)).unwrap().columns;
        for node in 1..=6 {
            assert!(run(&plan_local(&lc, node).unwrap(), &cw).iter().all(|v| v.is_zero()));
        }
    }
}
