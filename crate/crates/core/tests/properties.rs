use proptest::prelude::*;

use cereduce::algebra::{
    algebra_closure, commutant, conditional_expectation, random_generators, random_structured_algebra, wedderburn,
    Block, StarAlgebra,
};
use cereduce::io::{model_to_json, parse_model};
use cereduce::linalg::{devec, vec_col};
use cereduce::model::random_ce;
use cereduce::random::{random_density, random_hermitian, random_kraus_family, seeded_rng};
use cereduce::reduction::{equivalence_check, reduce_ce};
use cereduce::superop::{compose, Superoperator};
use cereduce::trajectories::{enumerate_distribution, ENUMERATION_CAP};
use cereduce::{hs_inner, orthonormalize};

const TOL: f64 = 1e-9;

fn blocks_strategy() -> impl Strategy<Value = Vec<Block>> {
    prop::collection::vec((1usize..=3, 1usize..=3), 1..=3)
        .prop_map(|v| v.into_iter().map(|(d_s, d_f)| Block { d_s, d_f }).collect::<Vec<_>>())
        .prop_filter("ambient dimension at most 9", |bs| {
            bs.iter().map(|b| b.d_s * b.d_f).sum::<usize>() <= 9
        })
}

fn generated_algebra(blocks: &[Block], seed: u64) -> StarAlgebra {
    let mut rng = seeded_rng(seed);
    let (span, _) = random_structured_algebra(blocks, &mut rng);
    let gens = random_generators(&span, 2, &mut rng);
    let start = orthonormalize(&gens, TOL).unwrap();
    algebra_closure(&start, TOL).unwrap()
}

fn sorted(mut v: Vec<Block>) -> Vec<Block> {
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn vec_round_trip(n in 1usize..5, m in 1usize..5, seed in any::<u64>()) {
        let a = cereduce::random::gaussian_matrix(n, m, &mut seeded_rng(seed));
        let v: Vec<_> = vec_col(&a).iter().cloned().collect();
        prop_assert_eq!(devec(&v, n, m), a);
    }

    #[test]
    fn dual_map_is_hs_adjoint(n in 1usize..5, k in 1usize..4, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let map = Superoperator::from_kraus(random_kraus_family(n, k, &mut rng)).unwrap();
        let x = random_hermitian(n, &mut rng);
        let y = random_hermitian(n, &mut rng);
        let lhs = hs_inner(&y, &map.apply(&x).unwrap()).unwrap();
        let rhs = hs_inner(&map.apply_dual(&y).unwrap(), &x).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn kraus_families_are_channels_and_compose(n in 1usize..5, k in 1usize..4, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let a = Superoperator::from_kraus(random_kraus_family(n, k, &mut rng)).unwrap();
        let b = Superoperator::from_kraus(random_kraus_family(n, k, &mut rng)).unwrap();
        for rep in [a.channel_checks(TOL), b.channel_checks(TOL)] {
            prop_assert!(rep.cp && rep.tp);
        }
        let ba = compose(&b, &a).unwrap();
        prop_assert!(ba.channel_checks(TOL).cp && ba.channel_checks(TOL).tp);
        let rho = random_density(n, &mut rng);
        let seq = b.apply(&a.apply(&rho).unwrap()).unwrap();
        let once = ba.apply(&rho).unwrap();
        prop_assert!(cereduce::linalg::frob(&(seq.matrix() - once.matrix())) <= 1e-12);
    }

    #[test]
    fn instrument_steps_keep_trace_and_positivity(
        n in 2usize..4, outcomes in 2usize..4, seed in any::<u64>()
    ) {
        let mut rng = seeded_rng(seed);
        let ce = random_ce(n, outcomes, 2, 0, &mut rng);
        let rho = random_density(n, &mut rng);
        let mut total = 0.0;
        for m in ce.instrument().maps() {
            let out = m.apply(&rho).unwrap();
            prop_assert!(out.min_eigenvalue() >= -1e-12);
            total += out.trace().re;
        }
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn enumerated_distributions_are_normalized(
        n in 2usize..4, outcomes in 2usize..4, steps in 1usize..4, seed in any::<u64>()
    ) {
        let mut rng = seeded_rng(seed);
        let ce = random_ce(n, outcomes, 1, 1, &mut rng);
        let rho = random_density(n, &mut rng);
        let table = enumerate_distribution(&ce, &rho, steps, ENUMERATION_CAP).unwrap();
        prop_assert_eq!(table.len(), outcomes.pow(steps as u32));
        prop_assert!((table.total_probability() - 1.0).abs() <= 1e-12);
        prop_assert!(table.entries.iter().all(|e| e.p >= -1e-15));
    }

    #[test]
    fn model_json_round_trip_is_bit_exact(n in 1usize..4, outcomes in 1usize..4, seed in any::<u64>()) {
        let ce = random_ce(n, outcomes, 2, 1, &mut seeded_rng(seed));
        let text = model_to_json(&ce).unwrap();
        let back = parse_model(&text).unwrap().model;
        for (a, b) in ce.instrument().maps().iter().zip(back.instrument().maps()) {
            prop_assert_eq!(a.matrix(), b.matrix());
        }
        prop_assert_eq!(model_to_json(&back).unwrap(), text);
    }

    #[test]
    fn double_commutant_recovers_algebra(blocks in blocks_strategy(), seed in any::<u64>()) {
        let alg = generated_algebra(&blocks, seed);
        let expected: usize = blocks.iter().map(|b| b.d_s * b.d_s).sum::<usize>();
        // repeated blocks of equal shape may merge into one larger centre element; the
        // algebra dimension is fixed anyway.
        prop_assert_eq!(alg.dim(), expected);
        let back = commutant(&commutant(&alg, TOL), TOL);
        prop_assert!(back.span_distance(&alg).unwrap() <= 1e-8);
    }

    #[test]
    fn wedderburn_blocks_match_and_do_not_depend_on_seed(blocks in blocks_strategy(), seed in any::<u64>()) {
        let alg = generated_algebra(&blocks, seed);
        let reference = wedderburn(&alg, TOL, 0).unwrap();
        prop_assert_eq!(sorted(reference.block_multiset()), sorted(blocks.clone()));
        prop_assert!(reference.structure_residual(alg.basis()) <= 1e-8);
        for s in 1..5 {
            let dec = wedderburn(&alg, TOL, s).unwrap();
            prop_assert_eq!(sorted(dec.block_multiset()), sorted(reference.block_multiset()));
        }
    }

    #[test]
    fn conditional_expectation_properties(blocks in blocks_strategy(), seed in any::<u64>()) {
        let alg = generated_algebra(&blocks, seed);
        let f = conditional_expectation(&wedderburn(&alg, TOL, seed).unwrap()).unwrap();
        let rep = f.check(&alg, TOL);
        prop_assert!(rep.max_residual() <= 1e-8, "{:?}", rep);
        prop_assert!(rep.rj_identity <= 1e-10);
        prop_assert!(rep.e.cp && rep.e.tp && rep.e.unital);
        prop_assert!(rep.r.cp && rep.r.tp && rep.j.cp && rep.j.tp);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reduction_is_equivalent(n in 2usize..4, outcomes in 2usize..4, extra in 0usize..3, seed in any::<u64>()) {
        let ce = random_ce(n, outcomes, 1, extra, &mut seeded_rng(seed));
        let red = reduce_ce(&ce, TOL, seed).unwrap();
        prop_assert!(red.reduced_dim() <= n * n);
        let rep = equivalence_check(&ce, &red, 3, 5, 1e-8, seed).unwrap();
        prop_assert!(rep.pass, "max deviation {:e}", rep.max_dev);
        let (min_choi, norm) = red.structure_check();
        prop_assert!(min_choi >= -1e-9 && norm <= 1e-9);
    }
}
