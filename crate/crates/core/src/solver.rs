//! Exact branch-and-bound for the quartet hitting-set model.

use std::fmt;
use std::time::{Duration, Instant};

use crate::bitset::{iter_words, words_for, BitSet};
use crate::bounds::greedy_upper_bound;
use crate::cell::LowerBoundCell;
use crate::error::SolveError;
use crate::forest::{extract_forest, forest_to_cut_set, AgreementForest};
use crate::model::HittingSetModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProofStatus {
    Optimal,
    /// A budget ran out; the distance is the best solution found.
    UpperBoundOnly,
}

impl fmt::Display for ProofStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProofStatus::Optimal => "optimal",
            ProofStatus::UpperBoundOnly => "upper-bound-only",
        })
    }
}

/// Limits for one solve. `max_nodes` is deterministic, `time_cap` is not.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveBudget {
    pub max_nodes: Option<u64>,
    pub time_cap: Option<Duration>,
}

impl SolveBudget {
    pub fn unlimited() -> Self {
        SolveBudget::default()
    }

    pub fn nodes(n: u64) -> Self {
        SolveBudget { max_nodes: Some(n), time_cap: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub distance: usize,
    pub forest: AgreementForest,
    /// Canonical edge indices of the designated tree.
    pub cut_set: Vec<usize>,
    pub nodes_explored: u64,
    /// Certified `(lower, upper)` bounds on the distance.
    pub bounds_used: (usize, usize),
    pub proof_status: ProofStatus,
}

/// Rows over a compact variable numbering.
struct Instance {
    words: usize,
    rows: Vec<u64>,
    /// Original variable id of each compact variable.
    vars: Vec<usize>,
}

impl Instance {
    fn len(&self) -> usize {
        self.rows.len() / self.words.max(1)
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }
}

fn popcount(r: &[u64]) -> u32 {
    r.iter().map(|w| w.count_ones()).sum()
}

fn is_subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

fn intersects(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

/// Removes duplicate rows and rows that contain another row. Rows come back
/// sorted by size.
fn drop_dominated_rows(rows: Vec<Vec<u64>>, nvars: usize) -> Vec<Vec<u64>> {
    let mut rows = rows;
    rows.sort_by(|a, b| popcount(a).cmp(&popcount(b)).then_with(|| a.cmp(b)));
    rows.dedup();
    // kept rows indexed by their smallest variable
    let mut by_min: Vec<Vec<usize>> = vec![Vec::new(); nvars];
    let mut kept: Vec<Vec<u64>> = Vec::new();
    for r in rows {
        let dominated = iter_words(&r).any(|v| by_min[v].iter().any(|&k| is_subset(&kept[k], &r)));
        if !dominated {
            let m = iter_words(&r).next().expect("rows are nonempty");
            by_min[m].push(kept.len());
            kept.push(r);
        }
    }
    kept
}

enum Prep {
    Infeasible,
    Ready { forced: Vec<usize>, rest: Vec<Vec<u64>> },
}

/// Unit rows, dominated rows and dominated columns, to a fixed point.
fn preprocess(model: &HittingSetModel) -> Prep {
    let n = model.num_variables();
    let mut ones = model.fixed_one().clone();
    let mut zeros = model.fixed_zero().clone();
    let mut rows: Vec<Vec<u64>> = (0..model.num_constraints())
        .map(|i| model.row(i).to_vec())
        .collect();
    loop {
        let mut next = Vec::with_capacity(rows.len());
        for r in rows {
            if intersects(&r, ones.words()) {
                continue;
            }
            let masked: Vec<u64> = r.iter().zip(zeros.words()).map(|(a, z)| a & !z).collect();
            if masked.iter().all(|&w| w == 0) {
                return Prep::Infeasible;
            }
            next.push(masked);
        }
        let mut changed = false;
        for r in &next {
            if popcount(r) == 1 {
                let v = iter_words(r).next().expect("one bit");
                if !ones.contains(v) {
                    ones.insert(v);
                    changed = true;
                }
            }
        }
        if changed {
            rows = next;
            continue;
        }
        rows = drop_dominated_rows(next, n);
        // column dominance: if every row holding v also holds u, v is never needed
        let rw = words_for(rows.len());
        let mut cols = vec![vec![0u64; rw]; n];
        for (i, r) in rows.iter().enumerate() {
            for v in iter_words(r) {
                cols[v][i / 64] |= 1 << (i % 64);
            }
        }
        let active: Vec<usize> = (0..n).filter(|&v| cols[v].iter().any(|&w| w != 0)).collect();
        for &v in &active {
            if zeros.contains(v) {
                continue;
            }
            let dominated = active.iter().any(|&u| {
                u != v && !zeros.contains(u) && is_subset(&cols[v], &cols[u]) && (cols[u] != cols[v] || u < v)
            });
            if dominated {
                zeros.insert(v);
                changed = true;
            }
        }
        // variables in no row are irrelevant
        for (v, col) in cols.iter().enumerate() {
            if !ones.contains(v) && !zeros.contains(v) && col.iter().all(|&w| w == 0) {
                zeros.insert(v);
            }
        }
        if !changed {
            return Prep::Ready { forced: ones.iter().collect(), rest: rows };
        }
    }
}

/// Splits rows into groups that share no variable, each renumbered compactly.
fn components(rows: Vec<Vec<u64>>, nvars: usize) -> Vec<Instance> {
    let mut parent: Vec<usize> = (0..nvars).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nxt = p[y];
            p[y] = r;
            y = nxt;
        }
        r
    }
    for r in &rows {
        let mut it = iter_words(r);
        let first = it.next().expect("nonempty row");
        for v in it {
            let (a, b) = (find(&mut parent, first), find(&mut parent, v));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Vec<u64>>)> = Vec::new();
    for r in rows {
        let root = find(&mut parent, iter_words(&r).next().expect("nonempty row"));
        match groups.iter_mut().find(|(g, _)| *g == root) {
            Some((_, list)) => list.push(r),
            None => groups.push((root, vec![r])),
        }
    }
    groups.sort_by_key(|(g, _)| *g);
    groups
        .into_iter()
        .map(|(_, list)| {
            let mut used = BitSet::new(nvars);
            for r in &list {
                for v in iter_words(r) {
                    used.insert(v);
                }
            }
            let vars: Vec<usize> = used.iter().collect();
            let mut compact = vec![usize::MAX; nvars];
            for (i, &v) in vars.iter().enumerate() {
                compact[v] = i;
            }
            let words = words_for(vars.len());
            let mut flat = Vec::with_capacity(list.len() * words);
            for r in &list {
                let mut row = vec![0u64; words];
                for v in iter_words(r) {
                    let c = compact[v];
                    row[c / 64] |= 1 << (c % 64);
                }
                flat.extend(row);
            }
            Instance { words, rows: flat, vars }
        })
        .collect()
}

struct Search<'a> {
    inst: &'a Instance,
    best: usize,
    best_sol: Vec<usize>,
    nodes: &'a mut u64,
    budget: &'a SolveBudget,
    start: Instant,
    external: &'a LowerBoundCell,
    /// Cuts contributed by everything outside this component.
    offset: usize,
    aborted: bool,
    done: bool,
    zero: Vec<u64>,
    ones: Vec<usize>,
    free_buf: Vec<u64>,
}

impl Search<'_> {
    fn out_of_budget(&mut self) -> bool {
        if let Some(m) = self.budget.max_nodes {
            if *self.nodes >= m {
                return true;
            }
        }
        if let Some(cap) = self.budget.time_cap {
            if (*self.nodes).is_multiple_of(256) && self.start.elapsed() >= cap {
                return true;
            }
        }
        false
    }

    fn free_part(&self, i: usize, out: &mut [u64]) -> u32 {
        let r = self.inst.row(i);
        let mut c = 0;
        for k in 0..out.len() {
            out[k] = r[k] & !self.zero[k];
            c += out[k].count_ones();
        }
        c
    }

    /// Greedy packing of pairwise disjoint unsatisfied rows.
    fn packing_bound(&mut self, unsat: &[u32]) -> usize {
        let w = self.inst.words;
        let mut used = vec![0u64; w];
        let mut buf = std::mem::take(&mut self.free_buf);
        let mut count = 0;
        for &i in unsat {
            self.free_part(i as usize, &mut buf);
            if !intersects(&buf, &used) {
                for k in 0..w {
                    used[k] |= buf[k];
                }
                count += 1;
            }
        }
        self.free_buf = buf;
        count
    }

    fn dfs(&mut self, unsat: Vec<u32>) {
        if self.aborted || self.done {
            return;
        }
        if self.out_of_budget() {
            self.aborted = true;
            return;
        }
        *self.nodes += 1;
        let w = self.inst.words;
        let mark = self.ones.len();
        let mut unsat = unsat;
        let mut buf = vec![0u64; w];
        // unit propagation
        loop {
            let mut unit = None;
            for &i in &unsat {
                match self.free_part(i as usize, &mut buf) {
                    0 => {
                        self.ones.truncate(mark);
                        return;
                    }
                    1 => {
                        unit = Some(iter_words(&buf).next().expect("one bit"));
                        break;
                    }
                    _ => {}
                }
            }
            let Some(v) = unit else { break };
            self.ones.push(v);
            unsat.retain(|&i| self.inst.row(i as usize)[v / 64] >> (v % 64) & 1 == 0);
        }
        if unsat.is_empty() {
            if self.ones.len() < self.best {
                self.best = self.ones.len();
                self.best_sol = self.ones.clone();
                if self.best + self.offset <= self.external.get() {
                    self.done = true;
                }
            }
            self.ones.truncate(mark);
            return;
        }
        if self.ones.len() + self.packing_bound(&unsat) >= self.best {
            self.ones.truncate(mark);
            return;
        }
        // free variable hitting the most unsatisfied rows
        let nv = self.inst.vars.len();
        let mut count = vec![0u32; nv];
        for &i in &unsat {
            self.free_part(i as usize, &mut buf);
            for v in iter_words(&buf) {
                count[v] += 1;
            }
        }
        let v = (0..nv).max_by(|&a, &b| count[a].cmp(&count[b]).then(b.cmp(&a))).expect("some variable");
        let with: Vec<u32> = unsat
            .iter()
            .copied()
            .filter(|&i| self.inst.row(i as usize)[v / 64] >> (v % 64) & 1 == 0)
            .collect();
        self.ones.push(v);
        self.dfs(with);
        self.ones.pop();
        self.zero[v / 64] |= 1 << (v % 64);
        self.dfs(unsat);
        self.zero[v / 64] &= !(1 << (v % 64));
        self.ones.truncate(mark);
    }
}

/// Greedy solution of one component, in compact variables.
fn greedy_component(inst: &Instance) -> Vec<usize> {
    let mut unsat: Vec<usize> = (0..inst.len()).collect();
    let mut sol = Vec::new();
    let nv = inst.vars.len();
    while !unsat.is_empty() {
        let mut count = vec![0u32; nv];
        for &i in &unsat {
            for v in iter_words(inst.row(i)) {
                count[v] += 1;
            }
        }
        let v = (0..nv).max_by(|&a, &b| count[a].cmp(&count[b]).then(b.cmp(&a))).expect("some variable");
        sol.push(v);
        unsat.retain(|&i| inst.row(i)[v / 64] >> (v % 64) & 1 == 0);
    }
    sol
}

/// Minimum hitting set of `model` by branch and bound.
///
/// Stops early with a proof of optimality once the incumbent reaches the
/// value in `lower`. `upper_hint`, if feasible, seeds the incumbent.
pub fn solve_exact(
    model: &HittingSetModel,
    lower: &LowerBoundCell,
    upper_hint: Option<&[usize]>,
    budget: &SolveBudget,
) -> Result<SolveResult, SolveError> {
    model.validate()?;
    let start = Instant::now();
    let (forced, rest) = match preprocess(model) {
        Prep::Infeasible => return Err(SolveError::InvalidModel("no feasible cut set".into())),
        Prep::Ready { forced, rest } => (forced, rest),
    };
    let comps = components(rest, model.num_variables());
    // incumbents per component, seeded greedily
    let mut sols: Vec<Vec<usize>> = comps.iter().map(greedy_component).collect();
    let mut exact = vec![false; comps.len()];
    let mut nodes = 0u64;
    let mut aborted = false;
    let mut roots = vec![0usize; comps.len()];
    let total = |sols: &Vec<Vec<usize>>| forced.len() + sols.iter().map(Vec::len).sum::<usize>();

    for c in 0..comps.len() {
        let inst = &comps[c];
        let offset = total(&sols) - sols[c].len();
        if total(&sols) <= lower.get() || aborted {
            break;
        }
        let mut search = Search {
            inst,
            best: sols[c].len(),
            best_sol: sols[c].clone(),
            nodes: &mut nodes,
            budget,
            start,
            external: lower,
            offset,
            aborted: false,
            done: false,
            zero: vec![0u64; inst.words],
            ones: Vec::new(),
            free_buf: vec![0u64; inst.words],
        };
        let all: Vec<u32> = (0..inst.len() as u32).collect();
        roots[c] = search.packing_bound(&all);
        search.dfs(all);
        let (best_sol, was_aborted, was_done) = (search.best_sol, search.aborted, search.done);
        sols[c] = best_sol;
        if was_aborted {
            aborted = true;
        } else {
            exact[c] = true;
            roots[c] = sols[c].len();
        }
        if was_done {
            break;
        }
    }

    let mut cut: Vec<usize> = forced.clone();
    for (inst, sol) in comps.iter().zip(&sols) {
        cut.extend(sol.iter().map(|&v| inst.vars[v]));
    }
    cut.sort_unstable();
    let mut value = cut.len();
    if let Some(hint) = upper_hint {
        if hint.len() < value && model.is_feasible(hint) {
            cut = hint.to_vec();
            cut.sort_unstable();
            value = cut.len();
        }
    }
    // a cut set with taxa-free components can be shortened to one per extra block
    let mut forest = extract_forest(model.tree(), &cut)?;
    if forest.size() < value + 1 {
        let shorter = forest_to_cut_set(model.tree(), &forest)?;
        if model.is_feasible(&shorter) {
            cut = shorter;
            value = cut.len();
            forest = extract_forest(model.tree(), &cut)?;
        }
    }
    let proven = forced.len() + roots.iter().sum::<usize>();
    let lower_value = proven.max(lower.get()).min(value);
    let status = if lower_value == value { ProofStatus::Optimal } else { ProofStatus::UpperBoundOnly };
    debug_assert!(model.is_feasible(&cut));
    Ok(SolveResult {
        distance: value,
        forest,
        cut_set: cut,
        nodes_explored: nodes,
        bounds_used: (lower_value, value),
        proof_status: status,
    })
}

/// Convenience wrapper: greedy warm start, no external bound, no budget.
pub fn solve_model(model: &HittingSetModel) -> Result<SolveResult, SolveError> {
    let (hint, _) = greedy_upper_bound(model);
    solve_exact(model, &LowerBoundCell::default(), Some(&hint), &SolveBudget::unlimited())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_model;
    use crate::newick::parse_newick;
    use crate::tree::PhyloTree;

    fn cat5() -> (PhyloTree, PhyloTree) {
        (
            PhyloTree::caterpillar(&["x", "1", "2", "3", "y"]).unwrap(),
            PhyloTree::caterpillar(&["y", "1", "2", "3", "x"]).unwrap(),
        )
    }

    #[test]
    fn caterpillar_optimum() {
        let (t, u) = cat5();
        let m = build_model(&t, &u, false).unwrap();
        let r = solve_model(&m).unwrap();
        assert_eq!(r.distance, 2);
        assert_eq!(r.proof_status, ProofStatus::Optimal);
        assert!(m.is_feasible(&r.cut_set));
        // with the chain 1,2,3 preserved only the pendants of x and y remain
        let m = build_model(&t, &u, true).unwrap();
        let r = solve_model(&m).unwrap();
        let mut expected = vec![m.pendant_edge("x").unwrap(), m.pendant_edge("y").unwrap()];
        expected.sort();
        assert_eq!(r.cut_set, expected);
        assert_eq!(r.forest.size(), 3);
        assert_eq!(r.bounds_used, (2, 2));
    }

    #[test]
    fn empty_model() {
        let t = parse_newick("((a,b),(c,d),e);").unwrap();
        let r = solve_model(&build_model(&t, &t, true).unwrap()).unwrap();
        assert_eq!(r.distance, 0);
        assert!(r.cut_set.is_empty());
        assert_eq!(r.forest.size(), 1);
    }

    #[test]
    fn external_bound_stops_search() {
        let (t, u) = cat5();
        let m = build_model(&t, &u, false).unwrap();
        let cell = LowerBoundCell::new(2);
        let r = solve_exact(&m, &cell, None, &SolveBudget::unlimited()).unwrap();
        assert_eq!(r.distance, 2);
        assert_eq!(r.nodes_explored, 0);
        assert_eq!(r.proof_status, ProofStatus::Optimal);
    }

    #[test]
    fn forced_variable_is_honoured() {
        let (t, u) = cat5();
        let mut m = build_model(&t, &u, false).unwrap();
        let p1 = m.pendant_edge("1").unwrap();
        m.fix_one(p1).unwrap();
        let r = solve_model(&m).unwrap();
        assert!(r.cut_set.contains(&p1));
        // {1}, {x} and {2,3,y}
        assert_eq!(r.distance, 2);
    }
}
