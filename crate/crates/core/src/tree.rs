//! Unrooted binary phylogenetic trees.
//!
//! A [`PhyloTree`] is an immutable value. Vertex identifiers are dense
//! indices that carry no meaning outside the tree they belong to; taxon
//! labels are the only stable identity, so every operation that produces a
//! new tree is free to renumber vertices.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::TreeError;

/// A taxon label.
pub type Taxon = String;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct PhyloTree {
    adj: Vec<Vec<usize>>,
    label: Vec<Option<Taxon>>,
    leaves: BTreeMap<Taxon, usize>,
}

/// Orientation of the tree away from a root vertex.
pub(crate) struct Rooted {
    pub parent: Vec<usize>,
    /// Vertices in preorder; the root comes first.
    pub order: Vec<usize>,
}

impl Rooted {
    pub fn children<'a>(&'a self, tree: &'a PhyloTree, v: usize) -> impl Iterator<Item = usize> + 'a {
        let p = self.parent[v];
        tree.adj[v].iter().copied().filter(move |&w| w != p)
    }
}

impl PhyloTree {
    /// Builds a tree from an explicit vertex count, edge list and leaf labels.
    pub fn from_edges<S: AsRef<str>>(
        num_vertices: usize,
        edges: &[(usize, usize)],
        labels: &[(usize, S)],
    ) -> Result<Self, TreeError> {
        let mut adj = vec![Vec::new(); num_vertices];
        for &(u, v) in edges {
            if u >= num_vertices || v >= num_vertices || u == v {
                return Err(TreeError::Malformed(format!("bad edge ({u}, {v})")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut label = vec![None; num_vertices];
        for (v, l) in labels {
            if *v >= num_vertices {
                return Err(TreeError::Malformed(format!("label on missing vertex {v}")));
            }
            label[*v] = Some(l.as_ref().to_string());
        }
        Self::from_parts(adj, label)
    }

    /// Caterpillar whose leaves appear in the given order along the spine.
    pub fn caterpillar<S: AsRef<str>>(labels: &[S]) -> Result<Self, TreeError> {
        let m = labels.len();
        if m == 0 {
            return Err(TreeError::EmptyTaxonSet);
        }
        let named: Vec<(usize, &str)> = labels.iter().enumerate().map(|(i, s)| (i, s.as_ref())).collect();
        match m {
            1 => Self::from_edges(1, &[], &named),
            2 => Self::from_edges(2, &[(0, 1)], &named),
            _ => {
                // leaves 0..m, spine vertices m..2m-2
                let spine = |i: usize| m + i;
                let mut edges = vec![(0, spine(0)), (1, spine(0))];
                for i in 2..m - 1 {
                    edges.push((i, spine(i - 1)));
                }
                edges.push((m - 1, spine(m - 3)));
                for i in 0..m - 3 {
                    edges.push((spine(i), spine(i + 1)));
                }
                Self::from_edges(2 * m - 2, &edges, &named)
            }
        }
    }

    /// Validates raw parts.
    pub(crate) fn from_parts(adj: Vec<Vec<usize>>, label: Vec<Option<Taxon>>) -> Result<Self, TreeError> {
        let n = adj.len();
        if n == 0 {
            return Err(TreeError::EmptyTaxonSet);
        }
        let edge_ends: usize = adj.iter().map(Vec::len).sum();
        if edge_ends != 2 * (n - 1) {
            return Err(TreeError::Malformed(format!("{n} vertices but {} edges", edge_ends / 2)));
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    queue.push_back(w);
                }
            }
        }
        if reached != n {
            return Err(TreeError::Malformed("disconnected".into()));
        }
        let mut leaves = BTreeMap::new();
        for v in 0..n {
            match &label[v] {
                Some(l) => {
                    if l.is_empty() {
                        return Err(TreeError::Malformed("empty label".into()));
                    }
                    if adj[v].len() > 1 {
                        return Err(TreeError::Malformed(format!("labelled vertex `{l}` is not a leaf")));
                    }
                    if leaves.insert(l.clone(), v).is_some() {
                        return Err(TreeError::RepeatedTaxon(l.clone()));
                    }
                }
                None => {
                    if adj[v].len() != 3 {
                        return Err(TreeError::Malformed(format!(
                            "unlabelled vertex of degree {}",
                            adj[v].len()
                        )));
                    }
                }
            }
        }
        Ok(PhyloTree { adj, label, leaves })
    }

    /// Removes unlabelled leaves and suppresses unlabelled degree-2 vertices,
    /// then renumbers and validates.
    pub(crate) fn normalized(mut adj: Vec<Vec<usize>>, label: Vec<Option<Taxon>>) -> Result<Self, TreeError> {
        let n = adj.len();
        let mut alive = vec![true; n];
        let mut stack: Vec<usize> = (0..n).collect();
        while let Some(v) = stack.pop() {
            if !alive[v] || label[v].is_some() {
                continue;
            }
            match adj[v].len() {
                0 => alive[v] = false,
                1 => {
                    let u = adj[v][0];
                    adj[u].retain(|&w| w != v);
                    adj[v].clear();
                    alive[v] = false;
                    stack.push(u);
                }
                2 => {
                    let (a, b) = (adj[v][0], adj[v][1]);
                    for w in adj[a].iter_mut() {
                        if *w == v {
                            *w = b;
                        }
                    }
                    for w in adj[b].iter_mut() {
                        if *w == v {
                            *w = a;
                        }
                    }
                    adj[v].clear();
                    alive[v] = false;
                }
                _ => {}
            }
        }
        let mut remap = vec![NONE; n];
        let mut next = 0;
        for v in 0..n {
            if alive[v] {
                remap[v] = next;
                next += 1;
            }
        }
        let mut new_adj = vec![Vec::new(); next];
        let mut new_label = vec![None; next];
        let mut label = label;
        for v in 0..n {
            if alive[v] {
                new_adj[remap[v]] = adj[v].iter().map(|&w| remap[w]).collect();
                new_label[remap[v]] = label[v].take();
            }
        }
        Self::from_parts(new_adj, new_label)
    }

    pub fn num_taxa(&self) -> usize {
        self.leaves.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.len() - 1
    }

    /// Taxa in ascending label order.
    pub fn taxa(&self) -> impl Iterator<Item = &str> + '_ {
        self.leaves.keys().map(String::as_str)
    }

    pub fn taxon_set(&self) -> BTreeSet<Taxon> {
        self.leaves.keys().cloned().collect()
    }

    pub fn contains(&self, taxon: &str) -> bool {
        self.leaves.contains_key(taxon)
    }

    pub fn leaf(&self, taxon: &str) -> Option<usize> {
        self.leaves.get(taxon).copied()
    }

    pub fn label(&self, v: usize) -> Option<&str> {
        self.label[v].as_deref()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.label[v].is_some()
    }

    /// Leaf vertices in ascending taxon order.
    pub(crate) fn leaf_vertices(&self) -> Vec<usize> {
        self.leaves.values().copied().collect()
    }

    pub(crate) fn same_taxa(&self, other: &PhyloTree) -> bool {
        self.leaves.len() == other.leaves.len() && self.leaves.keys().eq(other.leaves.keys())
    }

    pub(crate) fn require_leaf(&self, taxon: &str) -> Result<usize, TreeError> {
        self.leaf(taxon).ok_or_else(|| TreeError::UnknownTaxon(taxon.to_string()))
    }

    /// The unique neighbour of a leaf, if it has one.
    pub fn parent_of(&self, taxon: &str) -> Option<usize> {
        let v = self.leaf(taxon)?;
        self.adj[v].first().copied()
    }

    pub(crate) fn rooted(&self, root: usize) -> Rooted {
        let n = self.adj.len();
        let mut parent = vec![NONE; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root];
        let mut seen = vec![false; n];
        seen[root] = true;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in self.adj[v].iter().rev() {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = v;
                    stack.push(w);
                }
            }
        }
        Rooted { parent, order }
    }

    /// Vertex of the smallest taxon.
    pub(crate) fn min_leaf(&self) -> usize {
        *self.leaves.values().next().expect("trees have at least one leaf")
    }

    /// Edges in canonical order, each as `(upper, lower)` with `upper` on
    /// the side of the smallest taxon. Edges are sorted by the sorted label
    /// list of the taxa below them, so the order depends only on topology and
    /// labels.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let clusters = self.edge_clusters();
        clusters.into_iter().map(|(e, _)| e).collect()
    }

    /// Canonical edges together with the taxa on their lower side.
    pub fn edge_clusters(&self) -> Vec<((usize, usize), Vec<&str>)> {
        let rooted = self.rooted(self.min_leaf());
        let mut below: Vec<Vec<&str>> = vec![Vec::new(); self.adj.len()];
        for &v in rooted.order.iter().rev() {
            let mut set: Vec<&str> = Vec::new();
            if let Some(l) = &self.label[v] {
                set.push(l);
            }
            for c in rooted.children(self, v) {
                set.extend(below[c].iter().copied());
            }
            set.sort_unstable();
            below[v] = set;
        }
        let mut out: Vec<((usize, usize), Vec<&str>)> = rooted
            .order
            .iter()
            .skip(1)
            .map(|&v| ((rooted.parent[v], v), std::mem::take(&mut below[v])))
            .collect();
        out.sort_by(|a, b| a.1.cmp(&b.1));
        out
    }

    /// Edge-count distances between all pairs of leaves, indexed by taxon rank.
    pub(crate) fn leaf_distances(&self) -> Vec<Vec<u32>> {
        let leaves = self.leaf_vertices();
        let n = self.adj.len();
        let mut rank = vec![NONE; n];
        for (i, &v) in leaves.iter().enumerate() {
            rank[v] = i;
        }
        let mut out = vec![vec![0u32; leaves.len()]; leaves.len()];
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for (i, &src) in leaves.iter().enumerate() {
            dist.iter_mut().for_each(|d| *d = u32::MAX);
            dist[src] = 0;
            queue.push_back(src);
            while let Some(v) = queue.pop_front() {
                if rank[v] != NONE {
                    out[i][rank[v]] = dist[v];
                }
                for &w in &self.adj[v] {
                    if dist[w] == u32::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        out
    }

    fn distances_from(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.adj.len()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// The quartet displayed on four distinct taxa.
    pub fn quartet_topology(&self, taxa: [&str; 4]) -> Result<Quartet, TreeError> {
        let mut vs = [0; 4];
        for (i, t) in taxa.iter().enumerate() {
            vs[i] = self.require_leaf(t)?;
            if taxa[..i].contains(t) {
                return Err(TreeError::RepeatedTaxon(t.to_string()));
            }
        }
        let da = self.distances_from(vs[0]);
        let db = self.distances_from(vs[1]);
        let dc = self.distances_from(vs[2]);
        let d = |x: &Vec<u32>, y: usize| x[vs[y]];
        let [a, b, c, e] = taxa;
        Ok(match split_by_distances(d(&da, 1) + d(&dc, 3), d(&da, 2) + d(&db, 3), d(&da, 3) + d(&db, 2)) {
            0 => Quartet::new(a, b, c, e),
            1 => Quartet::new(a, c, b, e),
            _ => Quartet::new(a, e, b, c),
        })
    }

    /// The restriction `T|subset`: the minimal connecting subtree with
    /// degree-2 vertices suppressed.
    pub fn restrict<I, S>(&self, subset: I) -> Result<PhyloTree, TreeError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut keep = vec![false; self.adj.len()];
        let mut root = NONE;
        for t in subset {
            let v = self.require_leaf(t.as_ref())?;
            keep[v] = true;
            root = root.min(v);
        }
        if root == NONE {
            return Err(TreeError::EmptyTaxonSet);
        }
        Ok(self.restrict_vertices(&keep, root))
    }

    /// Restriction to the leaves flagged in `keep_leaf`; `root` must be one of them.
    pub(crate) fn restrict_vertices(&self, keep_leaf: &[bool], root: usize) -> PhyloTree {
        let rooted = self.rooted(root);
        let mut below = vec![0usize; self.adj.len()];
        for &v in rooted.order.iter().rev() {
            if keep_leaf[v] {
                below[v] += 1;
            }
            let p = rooted.parent[v];
            if p != NONE {
                below[p] += below[v];
            }
        }
        let mut remap = vec![NONE; self.adj.len()];
        let mut kept = Vec::new();
        for &v in &rooted.order {
            if v == root || below[v] > 0 {
                remap[v] = kept.len();
                kept.push(v);
            }
        }
        let mut adj = vec![Vec::new(); kept.len()];
        let mut label = vec![None; kept.len()];
        for (i, &v) in kept.iter().enumerate() {
            if keep_leaf[v] {
                label[i] = self.label[v].clone();
            }
            let p = rooted.parent[v];
            if p != NONE {
                adj[i].push(remap[p]);
                adj[remap[p]].push(i);
            }
        }
        PhyloTree::normalized(adj, label).expect("restriction of a valid tree is valid")
    }

    /// Copy of the tree with one taxon relabelled.
    pub fn renamed(&self, from: &str, to: &str) -> Result<PhyloTree, TreeError> {
        let v = self.require_leaf(from)?;
        if from != to && self.contains(to) {
            return Err(TreeError::RepeatedTaxon(to.to_string()));
        }
        let mut t = self.clone();
        t.leaves.remove(from);
        t.leaves.insert(to.to_string(), v);
        t.label[v] = Some(to.to_string());
        Ok(t)
    }

    /// Taxa on each side of every edge, as `(edge, lower-side cluster)` in
    /// canonical order, with clusters given as taxon-rank bitmasks.
    pub(crate) fn split_masks(&self) -> Vec<((usize, usize), crate::bitset::BitSet)> {
        let n = self.num_taxa();
        let rank: HashMap<&str, usize> = self.taxa().enumerate().map(|(i, t)| (t, i)).collect();
        self.edge_clusters()
            .into_iter()
            .map(|(e, c)| {
                let mut m = crate::bitset::BitSet::new(n);
                for t in c {
                    m.insert(rank[t]);
                }
                (e, m)
            })
            .collect()
    }

    /// Longest leaf-to-leaf path, in edges.
    pub fn diameter(&self) -> usize {
        let far = |src: usize| {
            let d = self.distances_from(src);
            let (v, &m) = d.iter().enumerate().max_by_key(|(_, &x)| x).expect("nonempty");
            (v, m as usize)
        };
        let (v, _) = far(self.min_leaf());
        far(v).1
    }
}

/// Index of the smallest of three pair-sums; with unit edge lengths the
/// displayed split is the unique strict minimum.
pub(crate) fn split_by_distances(s0: u32, s1: u32, s2: u32) -> usize {
    if s0 < s1 && s0 < s2 {
        0
    } else if s1 < s2 {
        1
    } else {
        2
    }
}

impl PartialEq for PhyloTree {
    fn eq(&self, other: &Self) -> bool {
        self.same_taxa(other) && crate::newick::write_newick(self) == crate::newick::write_newick(other)
    }
}

impl Eq for PhyloTree {}

impl fmt::Display for PhyloTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::newick::write_newick(self))
    }
}

/// A four-taxon split `ab|cd`, stored normalised so that equal splits compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quartet {
    pair1: [Taxon; 2],
    pair2: [Taxon; 2],
}

impl Quartet {
    pub fn new(a: &str, b: &str, c: &str, d: &str) -> Self {
        let p = sorted_pair(a, b);
        let q = sorted_pair(c, d);
        let (pair1, pair2) = if p <= q { (p, q) } else { (q, p) };
        Quartet { pair1, pair2 }
    }

    pub fn pairs(&self) -> (&[Taxon; 2], &[Taxon; 2]) {
        (&self.pair1, &self.pair2)
    }

    pub fn taxa(&self) -> [&str; 4] {
        [&self.pair1[0], &self.pair1[1], &self.pair2[0], &self.pair2[1]]
    }
}

fn sorted_pair(a: &str, b: &str) -> [Taxon; 2] {
    if a <= b {
        [a.to_string(), b.to_string()]
    } else {
        [b.to_string(), a.to_string()]
    }
}

impl fmt::Display for Quartet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}|{},{}", self.pair1[0], self.pair1[1], self.pair2[0], self.pair2[1])
    }
}
