//! The full solve: kernelize, optionally split at common clusters, then
//! solve the hitting-set model with a sampled parsimony lower bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::{dmp_lower_bound_shared, greedy_upper_bound, BoundBudget};
use crate::cell::LowerBoundCell;
use crate::cluster::cluster_solve;
use crate::error::{SolveError, TreeError};
use crate::kernel::{kernelize, KernelResult, Ruleset};
use crate::model::{build_model, HittingSetModel};
use crate::solver::{solve_exact, SolveBudget, SolveResult};
use crate::tree::PhyloTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// `None` skips kernelization.
    pub ruleset: Option<Ruleset>,
    pub preserve_chains: bool,
    pub use_clusters: bool,
    pub budget: SolveBudget,
    /// Samples for the parsimony lower bound; zero disables it.
    pub bound: BoundBudget,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            ruleset: Some(Ruleset::AllSeven),
            preserve_chains: true,
            use_clusters: true,
            budget: SolveBudget::unlimited(),
            bound: BoundBudget::samples(1000),
            seed: 0,
        }
    }
}

/// Everything [`tbr_distance_report`] learned about an instance.
#[derive(Clone, Debug)]
pub struct DistanceReport {
    /// Distance and bounds for the original pair; forest and cut set refer
    /// to the reduced pair.
    pub result: SolveResult,
    pub kernel: Option<KernelResult>,
    /// Parsimony lower bound on the reduced pair.
    pub dmp_lower: usize,
}

/// Derives an independent stream seed.
pub(crate) fn split_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn sample_bound(t: &PhyloTree, u: &PhyloTree, bound: &BoundBudget, seed: u64, cell: &LowerBoundCell) -> usize {
    if bound.samples == 0 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dmp_lower_bound_shared(t, u, bound, &mut rng, cell, None).map_or(0, |r| r.value)
}

/// Solves `model` warm-started by the greedy hitting set.
pub(crate) fn solve_warm(model: &HittingSetModel, cell: &LowerBoundCell, budget: &SolveBudget) -> Result<SolveResult, SolveError> {
    let (hint, _) = greedy_upper_bound(model);
    solve_exact(model, cell, Some(&hint), budget)
}

/// One model for the whole pair, no decomposition.
pub(crate) fn direct_solve(
    t: &PhyloTree,
    u: &PhyloTree,
    preserve_chains: bool,
    budget: &SolveBudget,
    cell: &LowerBoundCell,
) -> Result<SolveResult, SolveError> {
    let model = build_model(t, u, preserve_chains)?;
    solve_warm(&model, cell, budget)
}

/// TBR distance of the pair.
pub fn tbr_distance(t: &PhyloTree, t_prime: &PhyloTree, options: &SolveOptions) -> Result<SolveResult, SolveError> {
    Ok(tbr_distance_report(t, t_prime, options)?.result)
}

/// Common-cluster decomposition after kernelization; the same as
/// [`tbr_distance`] with clusters switched on.
pub fn solve_with_clusters(t: &PhyloTree, t_prime: &PhyloTree, options: &SolveOptions) -> Result<SolveResult, SolveError> {
    tbr_distance(t, t_prime, &SolveOptions { use_clusters: true, ..*options })
}

pub fn tbr_distance_report(t: &PhyloTree, t_prime: &PhyloTree, options: &SolveOptions) -> Result<DistanceReport, SolveError> {
    if !t.same_taxa(t_prime) {
        return Err(TreeError::TaxaMismatch.into());
    }
    let kernel = match options.ruleset {
        Some(r) => Some(kernelize(t, t_prime, r)?),
        None => None,
    };
    let (rt, ru) = match &kernel {
        Some(k) => (&k.reduced.0, &k.reduced.1),
        None => (t, t_prime),
    };
    let shift = kernel.as_ref().map_or(0, |k| k.parameter_reduction);
    let cell = LowerBoundCell::default();
    let dmp_lower = sample_bound(rt, ru, &options.bound, options.seed, &cell);
    let mut result = if options.use_clusters {
        let mut r = cluster_solve(rt, ru, options.preserve_chains, &options.budget, &options.bound, options.seed)?;
        // the outer bound is not shared with the sub-solves, only applied here
        r.bounds_used.0 = r.bounds_used.0.max(dmp_lower).min(r.distance);
        if r.bounds_used.0 == r.distance {
            r.proof_status = crate::solver::ProofStatus::Optimal;
        }
        r
    } else {
        direct_solve(rt, ru, options.preserve_chains, &options.budget, &cell)?
    };
    result.distance += shift;
    result.bounds_used = (result.bounds_used.0 + shift, result.bounds_used.1 + shift);
    Ok(DistanceReport { result, kernel, dmp_lower })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;

    fn cat(n: usize, flip: bool) -> PhyloTree {
        let mut l: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let (a, b) = if flip { ("y", "x") } else { ("x", "y") };
        l.insert(0, a.into());
        l.push(b.into());
        PhyloTree::caterpillar(&l).unwrap()
    }

    #[test]
    fn caterpillars_under_every_option() {
        for n in [3, 6] {
            for ruleset in [None, Some(Ruleset::SubtreeChain), Some(Ruleset::AllSeven)] {
                for preserve_chains in [false, true] {
                    for use_clusters in [false, true] {
                        let o = SolveOptions { ruleset, preserve_chains, use_clusters, ..Default::default() };
                        let r = tbr_distance(&cat(n, false), &cat(n, true), &o).unwrap();
                        assert_eq!(r.distance, 2, "n={n} {o:?}");
                        assert_eq!(r.proof_status, crate::solver::ProofStatus::Optimal);
                    }
                }
            }
        }
    }

    #[test]
    fn identical_trees() {
        let t = parse_newick("((a,b),(c,d),((e,f),g));").unwrap();
        let r = tbr_distance(&t, &t, &SolveOptions::default()).unwrap();
        assert_eq!((r.distance, r.bounds_used), (0, (0, 0)));
    }

    #[test]
    fn mismatch() {
        let t = parse_newick("((a,b),(c,d));").unwrap();
        let u = parse_newick("((a,b),(c,e));").unwrap();
        assert!(tbr_distance(&t, &u, &SolveOptions::default()).is_err());
    }

    #[test]
    fn seeds_differ_per_stream() {
        assert_ne!(split_seed(1, 0), split_seed(1, 1));
        assert_ne!(split_seed(1, 0), split_seed(2, 0));
        assert_eq!(split_seed(7, 3), split_seed(7, 3));
    }
}
