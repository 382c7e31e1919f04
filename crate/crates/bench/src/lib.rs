//! Fixed inputs shared by the benchmarks.

use tbr_core::{generate_pair, PhyloTree};

/// Seeded pairs with `t` taxa and `k` random TBR moves.
pub fn pairs(t: usize, k: usize, count: usize) -> Vec<(PhyloTree, PhyloTree)> {
    (0..count as u64)
        .map(|seed| {
            let (a, b, _) = generate_pair(t, 50, k, seed).expect("valid grid parameters");
            (a, b)
        })
        .collect()
}

/// `Cat(x,1..n,y)` and `Cat(y,1..n,x)`.
pub fn caterpillars(n: usize) -> (PhyloTree, PhyloTree) {
    let inner: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let mk = |a: &str, b: &str| {
        let labels: Vec<&str> = std::iter::once(a).chain(inner.iter().map(String::as_str)).chain([b]).collect();
        PhyloTree::caterpillar(&labels).expect("distinct labels")
    };
    (mk("x", "y"), mk("y", "x"))
}
