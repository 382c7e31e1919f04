//! The quartet hitting-set model over the edges of the first tree.
//!
//! Variable `x_e` means edge `e` of `T` is cut. Every quartet displayed
//! by `T` as `ab|cd` but not by `T'` yields the constraint that some edge on
//! the path `a-b` or on the path `c-d` in `T` is cut.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::bitset::{iter_words, words_for, BitSet};
use crate::common::{ChainDescriptor, PairView};
use crate::error::{SolveError, TreeError};
use crate::tree::{split_by_distances, PhyloTree, Quartet, Taxon};

/// Maps adjacent vertex pairs of a tree to canonical edge indices.
pub(crate) struct EdgeIndex {
    parent: Vec<usize>,
    by_lower: Vec<usize>,
}

impl EdgeIndex {
    pub fn new(tree: &PhyloTree) -> Self {
        let edges = tree.edges();
        let mut parent = vec![usize::MAX; tree.num_vertices()];
        let mut by_lower = vec![usize::MAX; tree.num_vertices()];
        for (i, &(u, v)) in edges.iter().enumerate() {
            parent[v] = u;
            by_lower[v] = i;
        }
        EdgeIndex { parent, by_lower }
    }

    pub fn edge(&self, u: usize, v: usize) -> usize {
        if self.parent[v] == u {
            self.by_lower[v]
        } else {
            debug_assert_eq!(self.parent[u], v);
            self.by_lower[u]
        }
    }
}

/// Edge sets of all leaf-to-leaf paths, indexed by taxon rank.
struct PathSets {
    words: usize,
    n: usize,
    data: Vec<u64>,
}

impl PathSets {
    fn new(tree: &PhyloTree, index: &EdgeIndex) -> Self {
        let leaves = tree.leaf_vertices();
        let n = leaves.len();
        let words = words_for(tree.num_edges());
        let mut data = vec![0u64; n * n * words];
        let mut rank = vec![usize::MAX; tree.num_vertices()];
        for (i, &v) in leaves.iter().enumerate() {
            rank[v] = i;
        }
        let mut path = vec![0u64; tree.num_vertices() * words];
        for (a, &src) in leaves.iter().enumerate() {
            let rooted = tree.rooted(src);
            path[src * words..(src + 1) * words].iter_mut().for_each(|w| *w = 0);
            for &v in rooted.order.iter().skip(1) {
                let p = rooted.parent[v];
                let e = index.edge(p, v);
                for k in 0..words {
                    path[v * words + k] = path[p * words + k];
                }
                path[v * words + e / 64] |= 1 << (e % 64);
                if rank[v] != usize::MAX {
                    let b = rank[v];
                    let at = (a * n + b) * words;
                    data[at..at + words].copy_from_slice(&path[v * words..(v + 1) * words]);
                }
            }
        }
        PathSets { words, n, data }
    }

    fn get(&self, a: usize, b: usize) -> &[u64] {
        let at = (a * self.n + b) * self.words;
        &self.data[at..at + self.words]
    }
}

#[derive(Clone, Debug)]
pub struct HittingSetModel {
    tree: PhyloTree,
    taxa: Vec<Taxon>,
    num_vars: usize,
    words: usize,
    rows: Vec<u64>,
    /// Taxon ranks `[a, b, c, d]` of each constraint, meaning `ab|cd` in `T`.
    quartets: Vec<[u32; 4]>,
    fixed_zero: BitSet,
    fixed_one: BitSet,
    preserved: Vec<ChainDescriptor>,
}

fn conflicts(t: &PhyloTree, u: &PhyloTree) -> Vec<[u32; 4]> {
    let n = t.num_taxa();
    let dt = t.leaf_distances();
    let du = u.leaf_distances();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let top = |m: &Vec<Vec<u32>>| {
                        split_by_distances(m[a][b] + m[c][d], m[a][c] + m[b][d], m[a][d] + m[b][c])
                    };
                    let x = top(&dt);
                    if x != top(&du) {
                        let q = match x {
                            0 => [a, b, c, d],
                            1 => [a, c, b, d],
                            _ => [a, d, b, c],
                        };
                        out.push(q.map(|i| i as u32));
                    }
                }
            }
        }
    }
    out
}

/// Quartets displayed by `t` but not by `t_prime`, in the topology of `t`.
pub fn conflicting_quartets(t: &PhyloTree, t_prime: &PhyloTree) -> Result<Vec<Quartet>, TreeError> {
    if !t.same_taxa(t_prime) {
        return Err(TreeError::TaxaMismatch);
    }
    let taxa: Vec<&str> = t.taxa().collect();
    Ok(conflicts(t, t_prime)
        .into_iter()
        .map(|q| {
            let [a, b, c, d] = q.map(|i| taxa[i as usize]);
            Quartet::new(a, b, c, d)
        })
        .collect())
}

/// Greedily picks taxa-disjoint common chains covered by the chain
/// preservation theorem (length at least 3, or 2 and pendant in one of the
/// trees), longest first, and returns them with the edges of `t` they span.
pub fn select_preserved_chains(
    t: &PhyloTree,
    t_prime: &PhyloTree,
) -> Result<(Vec<ChainDescriptor>, BTreeSet<usize>), TreeError> {
    let pv = PairView::new(t, t_prime)?;
    let mut chains: Vec<Vec<usize>> = pv
        .maximal_common_chains(2)
        .into_iter()
        .filter(|c| c.len() >= 3 || pv.t[0].is_pendant_chain(c) || pv.t[1].is_pendant_chain(c))
        .collect();
    chains.sort_by(|a, b| {
        let key = |c: &Vec<usize>| {
            let mut s = c.clone();
            s.sort_unstable();
            s
        };
        b.len().cmp(&a.len()).then_with(|| key(a).cmp(&key(b)))
    });
    let index = EdgeIndex::new(t);
    let mut used = vec![false; pv.n()];
    let mut picked = Vec::new();
    let mut edges = BTreeSet::new();
    for c in chains {
        if c.iter().any(|&i| used[i]) {
            continue;
        }
        for &i in &c {
            used[i] = true;
            let leaf = t.leaf(pv.taxa[i]).expect("taxon of t");
            edges.insert(index.edge(leaf, pv.t[0].parent[i]));
        }
        for w in c.windows(2) {
            let (p, q) = (pv.t[0].parent[w[0]], pv.t[0].parent[w[1]]);
            if p != q {
                edges.insert(index.edge(p, q));
            }
        }
        picked.push(pv.descriptor(&c));
    }
    Ok((picked, edges))
}

/// Builds the model with `t` as the designated tree.
pub fn build_model(t: &PhyloTree, t_prime: &PhyloTree, preserve_chains: bool) -> Result<HittingSetModel, SolveError> {
    if !t.same_taxa(t_prime) {
        return Err(TreeError::TaxaMismatch.into());
    }
    let num_vars = t.num_edges();
    let words = words_for(num_vars);
    let quartets = conflicts(t, t_prime);
    let index = EdgeIndex::new(t);
    let paths = PathSets::new(t, &index);
    let mut rows = Vec::with_capacity(quartets.len() * words);
    for q in &quartets {
        let [a, b, c, d] = q.map(|i| i as usize);
        let (p, r) = (paths.get(a, b), paths.get(c, d));
        rows.extend(p.iter().zip(r).map(|(x, y)| x | y));
    }
    let mut fixed_zero = BitSet::new(num_vars);
    let mut preserved = Vec::new();
    if preserve_chains && t.num_taxa() >= 4 {
        let (chains, edges) = select_preserved_chains(t, t_prime)?;
        for e in edges {
            fixed_zero.insert(e);
        }
        preserved = chains;
    }
    let model = HittingSetModel {
        tree: t.clone(),
        taxa: t.taxa().map(str::to_string).collect(),
        num_vars,
        words,
        rows,
        quartets,
        fixed_zero,
        fixed_one: BitSet::new(num_vars),
        preserved,
    };
    model.validate()?;
    Ok(model)
}

impl HittingSetModel {
    pub fn tree(&self) -> &PhyloTree {
        &self.tree
    }

    pub fn num_variables(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.quartets.len()
    }

    pub(crate) fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    /// Variables of constraint `i`.
    pub fn constraint(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        iter_words(self.row(i))
    }

    /// The quartet behind constraint `i`, as displayed by the designated tree.
    pub fn quartet(&self, i: usize) -> Quartet {
        let [a, b, c, d] = self.quartets[i].map(|r| self.taxa[r as usize].as_str());
        Quartet::new(a, b, c, d)
    }

    pub fn fixed_zero(&self) -> &BitSet {
        &self.fixed_zero
    }

    pub fn fixed_one(&self) -> &BitSet {
        &self.fixed_one
    }

    pub fn preserved_chains(&self) -> &[ChainDescriptor] {
        &self.preserved
    }

    /// Variables fixed to neither value.
    pub fn num_free(&self) -> usize {
        self.num_vars - self.fixed_zero.len() - self.fixed_one.len()
    }

    /// Canonical index of the pendant edge of `taxon` in the designated tree.
    pub fn pendant_edge(&self, taxon: &str) -> Result<usize, TreeError> {
        let leaf = self.tree.require_leaf(taxon)?;
        let parent = self.tree.neighbors(leaf).first().ok_or(TreeError::InvalidEdge(0))?;
        Ok(EdgeIndex::new(&self.tree).edge(leaf, *parent))
    }

    /// Forces variable `var` to 1.
    pub fn fix_one(&mut self, var: usize) -> Result<(), SolveError> {
        if var >= self.num_vars {
            return Err(SolveError::InvalidModel(format!("variable {var} out of range")));
        }
        if self.fixed_zero.contains(var) {
            return Err(SolveError::InvalidModel(format!("variable {var} is fixed to 0")));
        }
        self.fixed_one.insert(var);
        Ok(())
    }

    /// Drops all zero-fixings.
    pub fn clear_fixed_zero(&mut self) {
        self.fixed_zero = BitSet::new(self.num_vars);
        self.preserved.clear();
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.num_vars != self.tree.num_edges() || self.rows.len() != self.quartets.len() * self.words {
            return Err(SolveError::InvalidModel("dimension mismatch".into()));
        }
        if self.fixed_zero.words().iter().zip(self.fixed_one.words()).any(|(a, b)| a & b != 0) {
            return Err(SolveError::InvalidModel("variable fixed to both 0 and 1".into()));
        }
        for i in 0..self.num_constraints() {
            if self.row(i).iter().zip(self.fixed_zero.words()).all(|(r, z)| r & !z == 0) {
                return Err(SolveError::InvalidModel(format!("constraint {} lies inside the fixed-zero set", self.quartet(i))));
            }
        }
        Ok(())
    }

    /// Whether cutting exactly `cut` satisfies every constraint and fixing.
    pub fn is_feasible(&self, cut: &[usize]) -> bool {
        let mut set = BitSet::new(self.num_vars);
        for &e in cut {
            if e >= self.num_vars || self.fixed_zero.contains(e) {
                return false;
            }
            set.insert(e);
        }
        if !self.fixed_one.is_subset(&set) {
            return false;
        }
        (0..self.num_constraints()).all(|i| self.row(i).iter().zip(set.words()).any(|(r, s)| r & s != 0))
    }
}

fn write_terms(out: &mut String, vars: impl Iterator<Item = usize>) {
    for (k, v) in vars.enumerate() {
        if k > 0 {
            out.push_str(if k % 12 == 0 { "\n   + " } else { " + " });
        }
        let _ = write!(out, "x{v}");
    }
}

/// The model in CPLEX LP text format.
pub fn export_lp(model: &HittingSetModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ TBR hitting set: {} variables, {} constraints",
        model.num_variables(),
        model.num_constraints()
    );
    out.push_str("Minimize\n obj: ");
    if model.num_variables() == 0 {
        out.push('0');
    }
    write_terms(&mut out, 0..model.num_variables());
    out.push('\n');
    if model.num_constraints() > 0 {
        out.push_str("Subject To\n");
        for i in 0..model.num_constraints() {
            let _ = write!(out, " q{i}: ");
            write_terms(&mut out, model.constraint(i));
            out.push_str(" >= 1\n");
        }
    }
    if !model.fixed_zero.is_empty() || !model.fixed_one.is_empty() {
        out.push_str("Bounds\n");
        for v in model.fixed_zero.iter() {
            let _ = writeln!(out, " x{v} = 0");
        }
        for v in model.fixed_one.iter() {
            let _ = writeln!(out, " x{v} = 1");
        }
    }
    if model.num_variables() > 0 {
        out.push_str("Binaries\n");
        for chunk in (0..model.num_variables()).collect::<Vec<_>>().chunks(12) {
            let names: Vec<String> = chunk.iter().map(|v| format!("x{v}")).collect();
            let _ = writeln!(out, " {}", names.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
