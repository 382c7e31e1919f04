//! Divide and conquer at a common cluster.
//!
//! For a cluster `Y` of both trees with complement `Z`, each side is solved
//! with a placeholder leaf standing in for the other side: once with the
//! placeholder's pendant edge cut and once freely. With `F` the forced and
//! `f` the free optimum (cut counts), `f` is `F` or `F - 1`, and
//! `d = F_Y + F_Z - 1`, less one more when both sides have `f < F`. In that
//! case the placeholder blocks of the free forests are glued together.

use std::collections::BTreeSet;

use crate::bitset::BitSet;
use crate::bounds::BoundBudget;
use crate::cell::LowerBoundCell;
use crate::error::{SolveError, TreeError};
use crate::forest::{forest_to_cut_set, AgreementForest};
use crate::model::build_model;
use crate::pipeline::{direct_solve, sample_bound, solve_warm, split_seed};
use crate::solver::{ProofStatus, SolveBudget, SolveResult};
use crate::tree::{PhyloTree, Taxon};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterSplit {
    /// The smaller side.
    pub cluster: BTreeSet<Taxon>,
    pub complement: BTreeSet<Taxon>,
    /// Canonical index of the separating edge in each tree.
    pub split_edge_t: usize,
    pub split_edge_t_prime: usize,
}

/// A common cluster with the most balanced split, or `None`.
///
/// Among equally balanced splits the one whose smaller side has the
/// lexicographically smallest taxon list wins; for an even split the side
/// without the smallest taxon counts as the cluster.
pub fn find_common_cluster(t: &PhyloTree, t_prime: &PhyloTree) -> Result<Option<ClusterSplit>, TreeError> {
    if !t.same_taxa(t_prime) {
        return Err(TreeError::TaxaMismatch);
    }
    let n = t.num_taxa();
    if n < 4 {
        return Ok(None);
    }
    // lower sides never hold the smallest taxon, so masks compare directly
    let other: std::collections::HashMap<BitSet, usize> =
        t_prime.split_masks().into_iter().enumerate().map(|(i, (_, m))| (m, i)).collect();
    let mut best: Option<(usize, Vec<usize>, usize, usize, BitSet)> = None;
    for (i, (_, mask)) in t.split_masks().into_iter().enumerate() {
        let size = mask.len();
        if size < 2 || n - size < 2 {
            continue;
        }
        let Some(&j) = other.get(&mask) else { continue };
        let side = if size <= n - size { mask } else { mask.complement(n) };
        let ranks: Vec<usize> = side.iter().collect();
        let key = size.min(n - size);
        let better = match &best {
            None => true,
            Some((k, r, ..)) => key > *k || (key == *k && ranks < *r),
        };
        if better {
            best = Some((key, ranks, i, j, side));
        }
    }
    let taxa: Vec<&str> = t.taxa().collect();
    Ok(best.map(|(_, _, i, j, side)| {
        let (mut cluster, mut complement) = (BTreeSet::new(), BTreeSet::new());
        for (r, x) in taxa.iter().enumerate() {
            if side.contains(r) { &mut cluster } else { &mut complement }.insert(x.to_string());
        }
        ClusterSplit { cluster, complement, split_edge_t: i, split_edge_t_prime: j }
    }))
}

fn fresh_label(tree: &PhyloTree, base: &str) -> Taxon {
    let mut label = base.to_string();
    while tree.contains(&label) {
        label.push('_');
    }
    label
}

/// The pair restricted to `side` plus a placeholder for the rest.
fn augmented(
    t: &PhyloTree,
    u: &PhyloTree,
    side: &BTreeSet<Taxon>,
    rest: &BTreeSet<Taxon>,
    base: &str,
) -> Result<(PhyloTree, PhyloTree, Taxon), TreeError> {
    let stand_in = rest.iter().next().expect("both sides have two taxa");
    let keep: Vec<&str> = side.iter().map(String::as_str).chain([stand_in.as_str()]).collect();
    let rho = fresh_label(t, base);
    let a = t.restrict(&keep)?.renamed(stand_in, &rho)?;
    let b = u.restrict(&keep)?.renamed(stand_in, &rho)?;
    Ok((a, b, rho))
}

struct Side {
    rho: Taxon,
    free: SolveResult,
    forced: SolveResult,
}

impl Side {
    fn attachable(&self) -> bool {
        self.free.distance < self.forced.distance
    }
}

fn solve_side(
    t: &PhyloTree,
    u: &PhyloTree,
    rho: Taxon,
    preserve_chains: bool,
    budget: &SolveBudget,
    bound: &BoundBudget,
    seed: u64,
) -> Result<Side, SolveError> {
    let free = cluster_solve(t, u, preserve_chains, budget, bound, split_seed(seed, 0))?;
    // a free lower bound is also one for the forced problem
    let mut model = build_model(t, u, false)?;
    model.fix_one(model.pendant_edge(&rho)?)?;
    let forced = solve_warm(&model, &LowerBoundCell::new(free.bounds_used.0), budget)?;
    Ok(Side { rho, free, forced })
}

/// Solves the pair, splitting recursively at common clusters. No
/// kernelization happens here.
pub(crate) fn cluster_solve(
    t: &PhyloTree,
    u: &PhyloTree,
    preserve_chains: bool,
    budget: &SolveBudget,
    bound: &BoundBudget,
    seed: u64,
) -> Result<SolveResult, SolveError> {
    let Some(split) = find_common_cluster(t, u)? else {
        let cell = LowerBoundCell::default();
        sample_bound(t, u, bound, seed, &cell);
        return direct_solve(t, u, preserve_chains, budget, &cell);
    };
    let (ty, uy, rho1) = augmented(t, u, &split.cluster, &split.complement, "_rho1")?;
    let (tz, uz, rho2) = augmented(t, u, &split.complement, &split.cluster, "_rho2")?;
    let y = solve_side(&ty, &uy, rho1, preserve_chains, budget, bound, split_seed(seed, 1))?;
    let z = solve_side(&tz, &uz, rho2, preserve_chains, budget, bound, split_seed(seed, 2))?;
    let forest = combine(&y, &z);
    let distance = forest.size() - 1;
    let subs = [&y.free, &y.forced, &z.free, &z.forced];
    let exact = subs.iter().all(|r| r.proof_status == ProofStatus::Optimal);
    let lower = if exact {
        distance
    } else {
        (y.forced.bounds_used.0 + z.forced.bounds_used.0).saturating_sub(2).min(distance)
    };
    Ok(SolveResult {
        distance,
        cut_set: forest_to_cut_set(t, &forest)?,
        forest,
        nodes_explored: subs.iter().map(|r| r.nodes_explored).sum(),
        bounds_used: (lower, distance),
        proof_status: if lower == distance { ProofStatus::Optimal } else { ProofStatus::UpperBoundOnly },
    })
}

fn combine(y: &Side, z: &Side) -> AgreementForest {
    if y.attachable() && z.attachable() {
        let mut glued = BTreeSet::new();
        let mut blocks = Vec::new();
        for (side, rho) in [(&y.free.forest, &y.rho), (&z.free.forest, &z.rho)] {
            for b in side.components() {
                if b.contains(rho) {
                    glued.extend(b.iter().filter(|x| *x != rho).cloned());
                } else {
                    blocks.push(b.clone());
                }
            }
        }
        blocks.push(glued);
        AgreementForest::new(blocks)
    } else {
        let mut blocks = Vec::new();
        for (side, rho) in [(&y.forced.forest, &y.rho), (&z.forced.forest, &z.rho)] {
            blocks.extend(side.components().iter().filter(|b| !b.contains(rho)).cloned());
        }
        AgreementForest::new(blocks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::validate_forest;
    use crate::newick::parse_newick;
    use crate::oracle::brute_force_tbr;

    fn set(s: &[&str]) -> BTreeSet<Taxon> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn two_caterpillar_conflicts() {
        let t = parse_newick("((((x,1),2),(3,y)),(((u,4),5),(6,v)));").unwrap();
        let t2 = parse_newick("((((y,1),2),(3,x)),(((v,4),5),(6,u)));").unwrap();
        let s = find_common_cluster(&t, &t2).unwrap().unwrap();
        assert_eq!(s.cluster, set(&["4", "5", "6", "u", "v"]));
        assert_eq!(s.complement, set(&["1", "2", "3", "x", "y"]));
        let r = cluster_solve(&t, &t2, false, &SolveBudget::unlimited(), &BoundBudget::samples(100), 3).unwrap();
        assert_eq!(r.distance, 4);
        assert!(validate_forest(&t, &t2, &r.forest).unwrap().is_valid());
        assert_eq!(r.cut_set.len(), 4);
        assert_eq!(brute_force_tbr(&t, &t2).unwrap().d_tbr, 4);
    }

    #[test]
    fn none_without_common_cluster() {
        let t = parse_newick("((a,b),(c,d));").unwrap();
        let u = parse_newick("((a,c),(b,d));").unwrap();
        assert_eq!(find_common_cluster(&t, &u).unwrap(), None);
        let small = parse_newick("(a,b,c);").unwrap();
        assert_eq!(find_common_cluster(&small, &small).unwrap(), None);
    }

    #[test]
    fn balanced_choice() {
        let t = parse_newick("(((a,b),c),((d,e),f));").unwrap();
        let s = find_common_cluster(&t, &t).unwrap().unwrap();
        // {a,b,c} and {d,e,f} split evenly; the side without `a` is taken
        assert_eq!(s.cluster, set(&["d", "e", "f"]));
        let q = parse_newick("((a,b),(c,d));").unwrap();
        assert_eq!(find_common_cluster(&q, &q).unwrap().unwrap().cluster, set(&["c", "d"]));
    }

    #[test]
    fn placeholder_avoids_taken_labels() {
        let t = parse_newick("((_rho1,b),(c,d),(e,f));").unwrap();
        assert_eq!(fresh_label(&t, "_rho1"), "_rho1_");
        assert_eq!(fresh_label(&t, "_rho2"), "_rho2");
    }
}
