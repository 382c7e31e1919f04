use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbr_core::tbr::random_tree_with_labels;
use tbr_core::{
    brute_force_tbr, find_common_cluster, random_tbr_walk, random_tree, tbr_distance, validate_forest, Attachment,
    PhyloTree, ProofStatus, Ruleset, SolveOptions,
};

fn all_options() -> Vec<SolveOptions> {
    let mut out = Vec::new();
    for ruleset in [None, Some(Ruleset::AllSeven)] {
        for preserve_chains in [false, true] {
            for use_clusters in [false, true] {
                out.push(SolveOptions { ruleset, preserve_chains, use_clusters, ..Default::default() });
            }
        }
    }
    out
}

#[test]
fn random_pairs_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..120 {
        let t = rng.gen_range(5..=8);
        let k = rng.gen_range(1..=4);
        let a = random_tree(t, rng.gen_range(10.0..=90.0), &mut rng).unwrap();
        let b = random_tbr_walk(&a, k, &mut rng);
        let d = brute_force_tbr(&a, &b).unwrap().d_tbr;
        for o in all_options() {
            let r = tbr_distance(&a, &b, &o).unwrap();
            assert_eq!(r.distance, d, "{o:?} on {a} / {b}");
            assert_eq!(r.proof_status, ProofStatus::Optimal);
        }
    }
}

fn side(prefix: &str, n: usize, rng: &mut ChaCha8Rng) -> PhyloTree {
    let labels: Vec<String> = (1..=n).map(|i| format!("{prefix}{i}")).collect();
    random_tree_with_labels(&labels, 50.0, rng).unwrap()
}

/// Two random pairs joined by an edge, so the two halves form a common cluster.
fn clustered_pair(rng: &mut ChaCha8Rng, total: usize) -> (PhyloTree, PhyloTree) {
    let ny = rng.gen_range(2..=total - 2);
    let (y, z) = (side("a", ny, rng), side("b", total - ny, rng));
    let (y2, z2) = (random_tbr_walk(&y, rng.gen_range(0..=3), rng), random_tbr_walk(&z, rng.gen_range(0..=3), rng));
    let attach = |t: &PhyloTree, rng: &mut ChaCha8Rng| Attachment::Edge(rng.gen_range(0..t.num_edges()));
    let (ay, az) = (attach(&y, rng), attach(&z, rng));
    let (ay2, az2) = (attach(&y2, rng), attach(&z2, rng));
    (PhyloTree::reconnect(&y, ay, &z, az).unwrap(), PhyloTree::reconnect(&y2, ay2, &z2, az2).unwrap())
}

#[test]
fn clustered_pairs_match_direct_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..80 {
        let total = rng.gen_range(6..=12);
        let (a, b) = clustered_pair(&mut rng, total);
        assert!(find_common_cluster(&a, &b).unwrap().is_some());
        let plain = SolveOptions { ruleset: None, use_clusters: false, ..Default::default() };
        let split = SolveOptions { ruleset: None, use_clusters: true, ..Default::default() };
        let d = tbr_distance(&a, &b, &plain).unwrap().distance;
        let r = tbr_distance(&a, &b, &split).unwrap();
        assert_eq!(r.distance, d, "pair {i}: {a} / {b}");
        assert_eq!(r.forest.size(), d + 1);
        assert!(validate_forest(&a, &b, &r.forest).unwrap().is_valid());
        if total <= 9 {
            assert_eq!(brute_force_tbr(&a, &b).unwrap().d_tbr, d);
        }
    }
}
