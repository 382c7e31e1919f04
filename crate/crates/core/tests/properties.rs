use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbr_core::{
    brute_force_tbr, build_model, conflicting_quartets, dmp_lower_bound, extract_forest, generate_pair, kernelize,
    parse_newick, random_tbr_walk, random_tree, solve_exact, tbr_distance, validate_forest, write_newick, BoundBudget,
    LowerBoundCell, PhyloTree, Ruleset, SolveBudget, SolveOptions,
};

fn pair(t: usize, k: usize, seed: u64) -> (PhyloTree, PhyloTree) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_tree(t, rng.gen_range(0.0..=100.0), &mut rng).unwrap();
    let b = random_tbr_walk(&a, k, &mut rng);
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn newick_round_trip(t in 2usize..50, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(t, rng.gen_range(0.0..=100.0), &mut rng).unwrap();
        let text = write_newick(&tree);
        let back = parse_newick(&text).unwrap();
        prop_assert_eq!(write_newick(&back), text);
        prop_assert!(conflicting_quartets(&tree, &back).unwrap().is_empty());
    }

    #[test]
    fn parser_never_panics(text in "[(),;:ab0-9. ]{0,40}") {
        let _ = parse_newick(&text);
    }

    #[test]
    fn parser_never_panics_on_any_text(text in any::<String>()) {
        let _ = parse_newick(&text);
    }

    #[test]
    fn cut_sets_give_partitions(t in 3usize..20, k in 0usize..4, seed: u64, mask: u64) {
        let (a, _) = pair(t, k, seed);
        let cut: Vec<usize> = (0..a.num_edges()).filter(|e| mask >> (e % 64) & 1 == 1).collect();
        let f = extract_forest(&a, &cut).unwrap();
        prop_assert!(f.size() <= cut.len() + 1);
        let covered: usize = f.components().iter().map(|c| c.len()).sum();
        prop_assert_eq!(covered, t);
        // a forest cut from one tree is always an agreement forest of that tree with itself
        prop_assert!(validate_forest(&a, &a, &f).unwrap().is_valid());
    }

    #[test]
    fn oracle_is_symmetric_and_bounded_by_moves(t in 4usize..8, k in 0usize..4, seed: u64) {
        let (a, b) = pair(t, k, seed);
        let ab = brute_force_tbr(&a, &b).unwrap();
        let ba = brute_force_tbr(&b, &a).unwrap();
        prop_assert_eq!(ab.d_tbr, ba.d_tbr);
        prop_assert!(ab.d_tbr <= k);
        prop_assert!(validate_forest(&a, &b, &ab.forest).unwrap().is_valid());
        prop_assert_eq!(ab.forest.size(), ab.d_tbr + 1);
    }

    #[test]
    fn kernel_sizes_are_monotone(t in 4usize..30, k in 0usize..6, seed: u64) {
        let (a, b) = pair(t, k, seed);
        let s = kernelize(&a, &b, Ruleset::SubtreeOnly).unwrap().num_taxa();
        let sc = kernelize(&a, &b, Ruleset::SubtreeChain).unwrap().num_taxa();
        let scn = kernelize(&a, &b, Ruleset::AllSeven).unwrap();
        prop_assert!(scn.num_taxa() <= sc && sc <= s && s <= t);
        prop_assert_eq!(scn.parameter_reduction, scn.trace.iter().map(|r| r.parameter_delta).sum::<usize>());
    }

    #[test]
    fn solver_is_deterministic(t in 4usize..14, k in 1usize..5, seed: u64) {
        let (a, b) = pair(t, k, seed);
        let m = build_model(&a, &b, true).unwrap();
        let x = solve_exact(&m, &LowerBoundCell::default(), None, &SolveBudget::unlimited()).unwrap();
        let y = solve_exact(&m, &LowerBoundCell::default(), None, &SolveBudget::unlimited()).unwrap();
        prop_assert_eq!(&x, &y);
        prop_assert!(m.is_feasible(&x.cut_set));
        prop_assert!(validate_forest(&a, &b, &x.forest).unwrap().is_valid());
    }

    #[test]
    fn bounds_bracket_the_distance(t in 4usize..9, k in 0usize..4, seed: u64) {
        let (a, b) = pair(t, k, seed);
        let d = brute_force_tbr(&a, &b).unwrap().d_tbr;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let lower = dmp_lower_bound(&a, &b, &BoundBudget::samples(300), &mut rng).unwrap().value;
        prop_assert!(lower <= d);
        let (_, upper) = tbr_core::greedy_upper_bound(&build_model(&a, &b, false).unwrap());
        prop_assert!(upper >= d);
        let r = tbr_distance(&a, &b, &SolveOptions::default()).unwrap();
        prop_assert_eq!(r.distance, d);
        prop_assert!(r.bounds_used.0 <= d && d <= r.bounds_used.1);
    }

    #[test]
    fn budget_expiry_still_gives_a_forest(t in 10usize..24, seed: u64) {
        let (a, b) = pair(t, 6, seed);
        let o = SolveOptions { budget: SolveBudget::nodes(1), ruleset: None, use_clusters: false, ..Default::default() };
        let r = tbr_distance(&a, &b, &o).unwrap();
        prop_assert!(r.bounds_used.0 <= r.distance);
        prop_assert_eq!(r.forest.size(), r.distance + 1);
        prop_assert!(validate_forest(&a, &b, &r.forest).unwrap().is_valid());
    }

    #[test]
    fn generated_pairs_are_reproducible(t in 4usize..40, s in 0u32..=100, k in 0usize..6, seed: u64) {
        let (a, b, m) = generate_pair(t, s, k, seed).unwrap();
        let (c, d, n) = generate_pair(t, s, k, seed).unwrap();
        prop_assert_eq!(m, n);
        prop_assert_eq!(write_newick(&a), write_newick(&c));
        prop_assert_eq!(write_newick(&b), write_newick(&d));
    }
}
