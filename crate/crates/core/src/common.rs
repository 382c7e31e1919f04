//! Structures shared by two trees: common pendant subtrees and common chains.
//!
//! Taxa are handled by rank (position in ascending label order) so that
//! both trees of a pair index them identically.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::bitset::BitSet;
use crate::error::TreeError;
use crate::tree::{PhyloTree, Taxon};

/// An ordered sequence of taxa whose parents form a walk in a tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainDescriptor {
    pub taxa: Vec<Taxon>,
    /// Parent vertex of each taxon in the first tree of the pair.
    pub parent_walk: Vec<usize>,
    pub pendant_in_t: bool,
    pub pendant_in_t_prime: bool,
}

impl ChainDescriptor {
    pub fn len(&self) -> usize {
        self.taxa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxa.is_empty()
    }
}

/// Rank-indexed view of one tree.
pub(crate) struct TreeView<'a> {
    pub tree: &'a PhyloTree,
    pub parent: Vec<usize>,
    rank_of: Vec<usize>,
}

impl<'a> TreeView<'a> {
    pub fn new(tree: &'a PhyloTree) -> Self {
        let leaves = tree.leaf_vertices();
        let mut rank_of = vec![usize::MAX; tree.num_vertices()];
        for (i, &v) in leaves.iter().enumerate() {
            rank_of[v] = i;
        }
        let parent = leaves.iter().map(|&v| tree.neighbors(v).first().copied().unwrap_or(usize::MAX)).collect();
        TreeView { tree, parent, rank_of }
    }

    fn adjacent(&self, u: usize, v: usize) -> bool {
        self.tree.neighbors(u).contains(&v)
    }

    pub fn is_cherry(&self, a: usize, b: usize) -> bool {
        a != b && self.parent[a] == self.parent[b]
    }

    /// The other leaf hanging from the parent of `a`, if any.
    pub fn sibling(&self, a: usize) -> Option<usize> {
        let p = self.parent[a];
        self.tree
            .neighbors(p)
            .iter()
            .map(|&w| self.rank_of[w])
            .find(|&r| r != usize::MAX && r != a)
    }

    /// Taxa whose parent equals or neighbours the parent of `a`.
    pub fn chain_neighbors(&self, a: usize) -> Vec<usize> {
        let p = self.parent[a];
        let mut out = Vec::new();
        let mut visit = |v: usize| {
            for &w in self.tree.neighbors(v) {
                let r = self.rank_of[w];
                if r != usize::MAX && r != a {
                    out.push(r);
                }
            }
        };
        visit(p);
        for &q in self.tree.neighbors(p) {
            if self.rank_of[q] == usize::MAX {
                visit(q);
            }
        }
        out
    }

    /// Whether `seq` is a chain: consecutive parents are equal or adjacent,
    /// equality only at the two ends, and the parent walk never revisits a vertex.
    pub fn is_chain(&self, seq: &[usize]) -> bool {
        let n = seq.len();
        if n < 2 {
            return false;
        }
        let mut walk: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            let p = self.parent[seq[i]];
            if p == usize::MAX {
                return false;
            }
            if i > 0 {
                let q = self.parent[seq[i - 1]];
                if p == q {
                    if i != 1 && i != n - 1 {
                        return false;
                    }
                    continue;
                }
                if !self.adjacent(p, q) {
                    return false;
                }
            }
            if walk.contains(&p) {
                return false;
            }
            walk.push(p);
        }
        true
    }

    pub fn is_pendant_chain(&self, seq: &[usize]) -> bool {
        let n = seq.len();
        self.parent[seq[0]] == self.parent[seq[1]] || self.parent[seq[n - 2]] == self.parent[seq[n - 1]]
    }
}

/// Rank-indexed view of a pair of trees on the same taxa.
pub(crate) struct PairView<'a> {
    pub taxa: Vec<&'a str>,
    pub t: [TreeView<'a>; 2],
}

impl<'a> PairView<'a> {
    pub fn new(a: &'a PhyloTree, b: &'a PhyloTree) -> Result<Self, TreeError> {
        if !a.same_taxa(b) {
            return Err(TreeError::TaxaMismatch);
        }
        Ok(PairView { taxa: a.taxa().collect(), t: [TreeView::new(a), TreeView::new(b)] })
    }

    pub fn n(&self) -> usize {
        self.taxa.len()
    }

    pub fn is_common_chain(&self, seq: &[usize]) -> bool {
        self.t[0].is_chain(seq) && self.t[1].is_chain(seq)
    }

    pub fn labels(&self, seq: &[usize]) -> Vec<Taxon> {
        seq.iter().map(|&i| self.taxa[i].to_string()).collect()
    }

    /// All common 2-chains and 3-chains as ordered sequences (both directions).
    pub fn short_common_chains(&self) -> (Vec<[usize; 2]>, Vec<[usize; 3]>) {
        let mut twos = Vec::new();
        let mut threes = Vec::new();
        for a in 0..self.n() {
            for b in self.t[0].chain_neighbors(a) {
                if !self.is_common_chain(&[a, b]) {
                    continue;
                }
                twos.push([a, b]);
                for c in self.t[0].chain_neighbors(b) {
                    if c != a && self.is_common_chain(&[a, b, c]) {
                        threes.push([a, b, c]);
                    }
                }
            }
        }
        twos.sort_unstable();
        twos.dedup();
        threes.sort_unstable();
        threes.dedup();
        (twos, threes)
    }

    fn extend_right(&self, seq: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *seq.last().expect("nonempty");
        let mut extended = false;
        for c in self.t[0].chain_neighbors(last) {
            if seq.contains(&c) {
                continue;
            }
            seq.push(c);
            if self.is_common_chain(seq) {
                extended = true;
                self.extend_right(seq, out);
            }
            seq.pop();
        }
        if !extended {
            out.push(seq.clone());
        }
    }

    /// Maximal common chains of length at least `min_len`, one per taxon
    /// set, each in its lexicographically smallest valid orientation.
    pub fn maximal_common_chains(&self, min_len: usize) -> Vec<Vec<usize>> {
        let mut found: HashSet<Vec<usize>> = HashSet::new();
        for a in 0..self.n() {
            for b in self.t[0].chain_neighbors(a) {
                if !self.is_common_chain(&[a, b]) {
                    continue;
                }
                let mut rights = Vec::new();
                self.extend_right(&mut vec![a, b], &mut rights);
                for r in rights {
                    let mut rev: Vec<usize> = r.into_iter().rev().collect();
                    let mut fulls = Vec::new();
                    self.extend_right(&mut rev, &mut fulls);
                    for f in fulls {
                        if f.len() >= min_len {
                            found.insert(normalize_direction(f));
                        }
                    }
                }
            }
        }
        let mut by_set: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for seq in found {
            let mut key = seq.clone();
            key.sort_unstable();
            by_set
                .entry(key)
                .and_modify(|best| {
                    if seq < *best {
                        *best = seq.clone();
                    }
                })
                .or_insert(seq);
        }
        by_set.into_values().collect()
    }

    pub fn descriptor(&self, seq: &[usize]) -> ChainDescriptor {
        ChainDescriptor {
            taxa: self.labels(seq),
            parent_walk: seq.iter().map(|&i| self.t[0].parent[i]).collect(),
            pendant_in_t: self.t[0].is_pendant_chain(seq),
            pendant_in_t_prime: self.t[1].is_pendant_chain(seq),
        }
    }

    /// Maximal common pendant subtrees with at least two taxa, ordered by
    /// their sorted taxon lists.
    pub fn maximal_common_pendant_sets(&self) -> Vec<BitSet> {
        let n = self.n();
        if n < 3 {
            return Vec::new();
        }
        let sides = |tree: &PhyloTree| -> Vec<BitSet> {
            tree.split_masks()
                .into_iter()
                .flat_map(|(_, m)| {
                    let c = m.complement(n);
                    [m, c]
                })
                .collect()
        };
        let other: HashSet<BitSet> = sides(self.t[1].tree).into_iter().collect();
        let mut common: Vec<BitSet> = Vec::new();
        for s in sides(self.t[0].tree) {
            let size = s.len();
            if size < 2 || size == n || !other.contains(&s) {
                continue;
            }
            let outside = (0..n).find(|&i| !s.contains(i)).expect("proper subset");
            let keep: Vec<&str> = s.iter().chain([outside]).map(|i| self.taxa[i]).collect();
            let a = self.t[0].tree.restrict(&keep).expect("taxa of the tree");
            let b = self.t[1].tree.restrict(&keep).expect("taxa of the tree");
            if a == b {
                common.push(s);
            }
        }
        let mut maximal: Vec<BitSet> = common
            .iter()
            .filter(|s| !common.iter().any(|o| o != *s && s.is_subset(o)))
            .cloned()
            .collect();
        maximal.sort_by_key(|s| s.iter().collect::<Vec<_>>());
        maximal.dedup();
        maximal
    }
}

fn normalize_direction(seq: Vec<usize>) -> Vec<usize> {
    let rev: Vec<usize> = seq.iter().rev().copied().collect();
    if rev < seq {
        rev
    } else {
        seq
    }
}

/// Maximal taxon sets with at least two taxa that form the same pendant
/// subtree in both trees.
pub fn find_common_pendant_subtrees(t: &PhyloTree, t_prime: &PhyloTree) -> Result<Vec<BTreeSet<Taxon>>, TreeError> {
    let pv = PairView::new(t, t_prime)?;
    Ok(pv
        .maximal_common_pendant_sets()
        .into_iter()
        .map(|s| s.iter().map(|i| pv.taxa[i].to_string()).collect())
        .collect())
}

/// Maximal chains common to both trees with at least `min_len` taxa.
pub fn find_common_chains(t: &PhyloTree, t_prime: &PhyloTree, min_len: usize) -> Result<Vec<ChainDescriptor>, TreeError> {
    let pv = PairView::new(t, t_prime)?;
    Ok(pv.maximal_common_chains(min_len.max(2)).iter().map(|c| pv.descriptor(c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;

    fn cat(labels: &[&str]) -> PhyloTree {
        PhyloTree::caterpillar(labels).unwrap()
    }

    fn cat_pair(n: usize) -> (PhyloTree, PhyloTree) {
        let mid: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let mut a = vec!["x".to_string()];
        a.extend(mid.iter().cloned());
        a.push("y".into());
        let mut b = vec!["y".to_string()];
        b.extend(mid.iter().cloned());
        b.push("x".into());
        (PhyloTree::caterpillar(&a).unwrap(), PhyloTree::caterpillar(&b).unwrap())
    }

    #[test]
    fn chain_shapes_in_one_tree() {
        let t = cat(&["a", "b", "c", "d", "e", "f"]);
        let v = TreeView::new(&t);
        // ranks follow label order
        assert!(v.is_chain(&[0, 1, 2, 3, 4, 5]));
        assert!(v.is_chain(&[1, 0, 2]));
        assert!(!v.is_chain(&[0, 2, 1]));
        assert!(!v.is_chain(&[0, 3]));
        assert!(v.is_pendant_chain(&[0, 1, 2]));
        assert!(!v.is_pendant_chain(&[1, 2, 3]));
        assert_eq!(v.sibling(0), Some(1));
        assert_eq!(v.sibling(2), None);
    }

    #[test]
    fn caterpillar_pair_has_one_maximal_chain() {
        let (t, u) = cat_pair(5);
        let chains = find_common_chains(&t, &u, 2).unwrap();
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].taxa, vec!["1", "2", "3", "4", "5"]);
        assert!(!chains[0].pendant_in_t && !chains[0].pendant_in_t_prime);
        assert!(find_common_pendant_subtrees(&t, &u).unwrap().is_empty());
    }

    #[test]
    fn identical_caterpillars_chain_covers_spine() {
        let t = cat(&["a", "b", "c", "d", "e", "f"]);
        let chains = find_common_chains(&t, &t, 2).unwrap();
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].len(), 6);
        assert!(chains[0].pendant_in_t);
    }

    #[test]
    fn identical_trees_have_large_pendant_subtree() {
        let t = parse_newick("((a,b),(c,d),(e,(f,g)));").unwrap();
        let sets = find_common_pendant_subtrees(&t, &t).unwrap();
        assert!(sets.iter().any(|s| s.len() == 6));
        assert!(sets.iter().all(|s| s.len() == 6));
    }

    #[test]
    fn shared_cherry_is_found() {
        let t = parse_newick("((a,b),c,(d,(e,f)));").unwrap();
        let u = parse_newick("((a,b),e,(d,(c,f)));").unwrap();
        let sets = find_common_pendant_subtrees(&t, &u).unwrap();
        let expected: BTreeSet<Taxon> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(sets, vec![expected]);
    }

    #[test]
    fn mismatched_taxa() {
        let t = cat(&["a", "b", "c", "d"]);
        let u = cat(&["a", "b", "c", "e"]);
        assert_eq!(find_common_chains(&t, &u, 2), Err(TreeError::TaxaMismatch));
    }
}
