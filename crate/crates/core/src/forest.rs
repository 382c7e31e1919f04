//! Agreement forests: extraction from cut sets, validation, and the
//! reverse direction from a forest to a cut set.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{SolveError, TreeError};
use crate::tree::{PhyloTree, Taxon};

/// A partition of the taxa into blocks. Blocks are kept sorted by their
/// smallest taxon.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AgreementForest {
    components: Vec<BTreeSet<Taxon>>,
}

impl AgreementForest {
    pub fn new(mut components: Vec<BTreeSet<Taxon>>) -> Self {
        components.retain(|c| !c.is_empty());
        components.sort();
        AgreementForest { components }
    }

    /// The forest with one block per taxon.
    pub fn singletons<'a>(taxa: impl IntoIterator<Item = &'a str>) -> Self {
        Self::new(taxa.into_iter().map(|t| BTreeSet::from([t.to_string()])).collect())
    }

    pub fn components(&self) -> &[BTreeSet<Taxon>] {
        &self.components
    }

    pub fn size(&self) -> usize {
        self.components.len()
    }

    pub fn into_components(self) -> Vec<BTreeSet<Taxon>> {
        self.components
    }
}

impl fmt::Display for AgreementForest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            let names: Vec<&str> = c.iter().map(String::as_str).collect();
            write!(f, "{{{}}}", names.join(","))?;
        }
        Ok(())
    }
}

/// Which agreement-forest condition failed, and for which blocks
/// (indices into [`AgreementForest::components`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ForestViolation {
    /// The two trees restrict differently to this block.
    Topology { block: usize },
    /// The embeddings of two blocks share a vertex of the given tree (0 or 1).
    Overlap { tree: usize, blocks: (usize, usize) },
}

impl fmt::Display for ForestViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForestViolation::Topology { block } => {
                write!(f, "condition (1): block {block} induces different subtrees")
            }
            ForestViolation::Overlap { tree, blocks } => write!(
                f,
                "condition (2): blocks {} and {} overlap in tree {}",
                blocks.0,
                blocks.1,
                tree + 1
            ),
        }
    }
}

/// Result of [`validate_forest`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validation {
    Valid,
    Invalid(ForestViolation),
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validation::Valid)
    }
}

/// Checks that `forest` partitions the taxa of `tree`.
pub fn check_partition(tree: &PhyloTree, forest: &AgreementForest) -> Result<(), SolveError> {
    let mut seen = BTreeSet::new();
    for c in forest.components() {
        for t in c {
            if !tree.contains(t) {
                return Err(SolveError::NotAPartition(format!("unknown taxon `{t}`")));
            }
            if !seen.insert(t.as_str()) {
                return Err(SolveError::NotAPartition(format!("taxon `{t}` in two blocks")));
            }
        }
    }
    if seen.len() != tree.num_taxa() {
        return Err(SolveError::NotAPartition(format!(
            "{} of {} taxa covered",
            seen.len(),
            tree.num_taxa()
        )));
    }
    Ok(())
}

/// Marks the vertices of the minimal subtree spanning `block` with `owner`,
/// reporting the first vertex already owned by another block.
fn embed(tree: &PhyloTree, block: &BTreeSet<Taxon>, owner: usize, marks: &mut [usize]) -> Option<usize> {
    let leaves: Vec<usize> = block.iter().map(|t| tree.leaf(t).expect("checked partition")).collect();
    let root = leaves[0];
    let rooted = tree.rooted(root);
    let mut below = vec![false; tree.num_vertices()];
    for &v in &leaves {
        below[v] = true;
    }
    for &v in rooted.order.iter().rev() {
        if below[v] && v != root {
            below[rooted.parent[v]] = true;
        }
    }
    for v in 0..tree.num_vertices() {
        if below[v] {
            if marks[v] != usize::MAX && marks[v] != owner {
                return Some(marks[v]);
            }
            marks[v] = owner;
        }
    }
    None
}

fn embeddings(tree: &PhyloTree, forest: &AgreementForest) -> Result<Vec<usize>, (usize, usize)> {
    let mut marks = vec![usize::MAX; tree.num_vertices()];
    for (i, c) in forest.components().iter().enumerate() {
        if let Some(j) = embed(tree, c, i, &mut marks) {
            return Err((j, i));
        }
    }
    Ok(marks)
}

/// Checks both agreement-forest conditions for `forest` on the pair.
pub fn validate_forest(t: &PhyloTree, t_prime: &PhyloTree, forest: &AgreementForest) -> Result<Validation, SolveError> {
    if !t.same_taxa(t_prime) {
        return Err(TreeError::TaxaMismatch.into());
    }
    check_partition(t, forest)?;
    for (i, c) in forest.components().iter().enumerate() {
        if c.len() >= 4 && t.restrict(c)? != t_prime.restrict(c)? {
            return Ok(Validation::Invalid(ForestViolation::Topology { block: i }));
        }
    }
    for (k, tree) in [t, t_prime].into_iter().enumerate() {
        if let Err(blocks) = embeddings(tree, forest) {
            return Ok(Validation::Invalid(ForestViolation::Overlap { tree: k, blocks }));
        }
    }
    Ok(Validation::Valid)
}

/// Partition of the taxa induced by deleting the given canonical edges from
/// `tree`. Components without taxa are dropped.
pub fn extract_forest(tree: &PhyloTree, cut_set: &[usize]) -> Result<AgreementForest, TreeError> {
    let edges = tree.edges();
    let n = tree.num_vertices();
    let mut cut = vec![Vec::new(); n];
    for &i in cut_set {
        let &(u, v) = edges.get(i).ok_or(TreeError::InvalidEdge(i))?;
        cut[u].push(v);
        cut[v].push(u);
    }
    let mut comp = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut block = BTreeSet::new();
        comp[s] = id;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            if let Some(l) = tree.label(v) {
                block.insert(l.to_string());
            }
            for &w in tree.neighbors(v) {
                if comp[w] == usize::MAX && !cut[v].contains(&w) {
                    comp[w] = id;
                    queue.push_back(w);
                }
            }
        }
        blocks.push(block);
    }
    Ok(AgreementForest::new(blocks))
}

/// Canonical edges of `tree` whose deletion yields exactly `forest`, one
/// fewer than the number of blocks. The embeddings of the blocks must be
/// vertex-disjoint in `tree`.
pub fn forest_to_cut_set(tree: &PhyloTree, forest: &AgreementForest) -> Result<Vec<usize>, SolveError> {
    check_partition(tree, forest)?;
    let mut part = embeddings(tree, forest)
        .map_err(|(a, b)| SolveError::NotAPartition(format!("blocks {a} and {b} overlap in the tree")))?;
    // grow the embeddings over the uncovered vertices
    let mut queue: VecDeque<usize> = (0..tree.num_vertices()).filter(|&v| part[v] != usize::MAX).collect();
    while let Some(v) = queue.pop_front() {
        for &w in tree.neighbors(v) {
            if part[w] == usize::MAX {
                part[w] = part[v];
                queue.push_back(w);
            }
        }
    }
    Ok(tree
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, &(u, v))| part[u] != part[v])
        .map(|(i, _)| i)
        .collect())
}
