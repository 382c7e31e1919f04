//! Exhaustive reference computations for small instances.

use std::collections::{HashSet, VecDeque};

use crate::error::{SolveError, TreeError};
use crate::forest::{extract_forest, validate_forest, AgreementForest};
use crate::tree::PhyloTree;

/// Largest instance accepted by [`brute_force_tbr`].
pub const ORACLE_TAXA_LIMIT: usize = 10;

/// Largest instance accepted by [`tbr_distance_by_search`].
pub const SEARCH_TAXA_LIMIT: usize = 7;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub d_tbr: usize,
    /// A maximum agreement forest.
    pub forest: AgreementForest,
}

/// TBR distance by trying every set of edges of `t`, by increasing size, and
/// stopping at the first whose removal leaves an agreement forest.
pub fn brute_force_tbr(t: &PhyloTree, t_prime: &PhyloTree) -> Result<OracleResult, SolveError> {
    if !t.same_taxa(t_prime) {
        return Err(TreeError::TaxaMismatch.into());
    }
    let n = t.num_taxa();
    if n > ORACLE_TAXA_LIMIT {
        return Err(SolveError::TooLarge { taxa: n, limit: ORACLE_TAXA_LIMIT });
    }
    let m = t.num_edges();
    for k in 0..=m {
        let mut cut: Vec<usize> = (0..k).collect();
        loop {
            let f = extract_forest(t, &cut)?;
            if validate_forest(t, t_prime, &f)?.is_valid() {
                return Ok(OracleResult { d_tbr: f.size() - 1, forest: f });
            }
            // next k-subset in lexicographic order
            let Some(i) = (0..k).rev().find(|&i| cut[i] < m - k + i) else { break };
            cut[i] += 1;
            for j in i + 1..k {
                cut[j] = cut[j - 1] + 1;
            }
        }
    }
    let f = AgreementForest::singletons(t.taxa());
    Ok(OracleResult { d_tbr: f.size().saturating_sub(1), forest: f })
}

fn tbr_neighbors(tree: &PhyloTree) -> Vec<PhyloTree> {
    use crate::tbr::Attachment;
    let attachments = |c: &PhyloTree| -> Vec<Attachment> {
        if c.num_edges() == 0 {
            vec![Attachment::Isolated]
        } else {
            (0..c.num_edges()).map(Attachment::Edge).collect()
        }
    };
    let mut out = Vec::new();
    for cut in 0..tree.num_edges() {
        let (a, b) = tree.bisect(cut).expect("edge in range");
        for x in attachments(&a) {
            for y in attachments(&b) {
                out.push(PhyloTree::reconnect(&a, x, &b, y).expect("valid attachments"));
            }
        }
    }
    out
}

/// TBR distance by breadth-first search over single TBR moves. Independent
/// of agreement forests; only practical for very small trees.
pub fn tbr_distance_by_search(t: &PhyloTree, t_prime: &PhyloTree) -> Result<usize, SolveError> {
    if !t.same_taxa(t_prime) {
        return Err(TreeError::TaxaMismatch.into());
    }
    let n = t.num_taxa();
    if n > SEARCH_TAXA_LIMIT {
        return Err(SolveError::TooLarge { taxa: n, limit: SEARCH_TAXA_LIMIT });
    }
    let target = t_prime.to_string();
    let mut seen = HashSet::from([t.to_string()]);
    let mut queue = VecDeque::from([(t.clone(), 0)]);
    while let Some((cur, d)) = queue.pop_front() {
        if cur.to_string() == target {
            return Ok(d);
        }
        for next in tbr_neighbors(&cur) {
            if seen.insert(next.to_string()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    unreachable!("TBR moves connect all trees on the same taxa")
}
