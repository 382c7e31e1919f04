use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbr_core::{brute_force_tbr, kernelize, parse_newick, random_tbr_walk, random_tree, PhyloTree, Ruleset};

fn random_pair(rng: &mut ChaCha8Rng, max_taxa: usize) -> (PhyloTree, PhyloTree) {
    let t = rng.gen_range(4..=max_taxa);
    let skew = rng.gen_range(10.0..=90.0);
    let a = random_tree(t, skew, rng).unwrap();
    let b = if rng.gen_bool(0.5) {
        let k = rng.gen_range(1..=4);
        random_tbr_walk(&a, k, rng)
    } else {
        random_tree(t, skew, rng).unwrap()
    };
    (a, b)
}

#[test]
fn kernelization_preserves_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut fired = [0usize; 8];
    for _ in 0..200 {
        let (a, b) = random_pair(&mut rng, 8);
        let d = brute_force_tbr(&a, &b).unwrap().d_tbr;
        let mut sizes = Vec::new();
        for rs in [Ruleset::SubtreeOnly, Ruleset::SubtreeChain, Ruleset::AllSeven] {
            let k = kernelize(&a, &b, rs).unwrap();
            for s in &k.trace {
                fired[s.rule_id as usize] += 1;
            }
            let (x, y) = &k.reduced;
            let dr = if k.is_trivial() { 0 } else { brute_force_tbr(x, y).unwrap().d_tbr };
            assert_eq!(d, dr + k.parameter_reduction, "{rs} on {a} / {b}");
            sizes.push(k.num_taxa());
        }
        assert!(sizes[2] <= sizes[1] && sizes[1] <= sizes[0]);
    }
    eprintln!("rule applications: {:?}", &fired[1..]);
}

const RARE_RULE_INSTANCES: &[(u8, &str, &str)] = &[
    (4, "(t1,((t2,t3),t4),((t5,t7),t6));", "(t1,t2,(t3,(((t4,t7),t5),t6)));"),
    (4, "(t1,(((((t10,t6),(t3,t5)),(t2,t7)),t4),t8),t9);", "(t1,((((((t10,t3),t6),(t2,t7)),t4),t8),t9),t5);"),
    (5, "(t1,(t2,t8),(((t3,(t4,t7)),t6),t5));", "(t1,(((((t2,t8),t5),t3),t6),t7),t4);"),
    (5, "(t1,(((t2,(t6,t8)),(t3,t7)),t5),t4);", "(t1,((t2,t6),((t3,(t7,t8)),t5)),t4);"),
    (6, "(t1,(((t10,t2),(t3,t5)),(((t4,t8),t7),t9)),t6);", "(t1,(((((((t10,t2),t9),t3),t5),t4),t8),t7),t6);"),
    (6, "(t1,((t10,t5),(t4,t9)),(((t2,t8),t6),(t3,t7)));", "(t1,((t10,(((t2,(t6,t7)),t8),t5)),(t4,t9)),t3);"),
    (7, "(t1,t2,((t3,t4),((t5,t8),(t6,t7))));", "(t1,(t2,((t3,t4),t8)),((t5,t6),t7));"),
    (7, "(t1,(((t2,t6),((t3,t7),t8)),t4),t5);", "(t1,((t2,(t7,t8)),t6),((t3,t4),t5));"),
];

#[test]
fn rare_rules_preserve_distance() {
    for &(rule, a, b) in RARE_RULE_INSTANCES {
        let (a, b) = (parse_newick(a).unwrap(), parse_newick(b).unwrap());
        let k = kernelize(&a, &b, Ruleset::AllSeven).unwrap();
        assert!(k.trace.iter().any(|s| s.rule_id == rule), "rule {rule} did not fire");
        for (i, s) in k.trace.iter().enumerate() {
            if s.rule_id == 4 || s.rule_id == 5 {
                assert_eq!(k.trace.get(i + 1).map(|n| n.rule_id), Some(1), "rule {} not followed by rule 1", s.rule_id);
            }
        }
        let d = brute_force_tbr(&a, &b).unwrap().d_tbr;
        let (x, y) = &k.reduced;
        let dr = if k.is_trivial() { 0 } else { brute_force_tbr(x, y).unwrap().d_tbr };
        assert_eq!(d, dr + k.parameter_reduction, "rule {rule}");
    }
}
