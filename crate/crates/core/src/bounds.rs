//! Parsimony scores, uniform sampling of convex characters, the sampled
//! maximum-parsimony lower bound and the greedy hitting-set upper bound.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;

use crate::bitset::{iter_words, words_for};
use crate::cell::LowerBoundCell;
use crate::error::{BoundError, TreeError};
use crate::model::HittingSetModel;
use crate::tree::{PhyloTree, Taxon};

/// An assignment of states to taxa.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Character {
    assignment: BTreeMap<Taxon, u32>,
    num_states: usize,
    min_state_size: usize,
}

impl Character {
    pub fn new(assignment: BTreeMap<Taxon, u32>) -> Self {
        let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
        for &s in assignment.values() {
            *sizes.entry(s).or_default() += 1;
        }
        Character {
            num_states: sizes.len(),
            min_state_size: sizes.values().copied().min().unwrap_or(0),
            assignment,
        }
    }

    pub fn from_blocks<S: AsRef<str>>(blocks: &[Vec<S>]) -> Self {
        let mut assignment = BTreeMap::new();
        for (i, b) in blocks.iter().enumerate() {
            for t in b {
                assignment.insert(t.as_ref().to_string(), i as u32);
            }
        }
        Character::new(assignment)
    }

    pub fn state(&self, taxon: &str) -> Option<u32> {
        self.assignment.get(taxon).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<Taxon, u32> {
        &self.assignment
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn min_state_size(&self) -> usize {
        self.min_state_size
    }

    /// Taxa grouped by state, each group sorted, groups ordered by first taxon.
    pub fn blocks(&self) -> Vec<Vec<Taxon>> {
        let mut by_state: BTreeMap<u32, Vec<Taxon>> = BTreeMap::new();
        for (t, &s) in &self.assignment {
            by_state.entry(s).or_default().push(t.clone());
        }
        let mut out: Vec<Vec<Taxon>> = by_state.into_values().collect();
        out.sort();
        out
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.blocks() {
            write!(f, "{{{}}}", b.join(","))?;
        }
        Ok(())
    }
}

/// A tree prepared for repeated Fitch scoring of characters given by taxon rank.
pub(crate) struct FitchScorer {
    root: usize,
    /// Non-root vertices, children before parents.
    post: Vec<usize>,
    parent: Vec<usize>,
    rank_of: Vec<usize>,
    is_leaf: Vec<bool>,
}

impl FitchScorer {
    pub fn new(tree: &PhyloTree) -> Self {
        let root = tree.min_leaf();
        let rooted = tree.rooted(root);
        let mut rank_of = vec![usize::MAX; tree.num_vertices()];
        for (i, v) in tree.leaf_vertices().into_iter().enumerate() {
            rank_of[v] = i;
        }
        FitchScorer {
            root,
            post: rooted.order.iter().rev().copied().filter(|&v| v != root).collect(),
            parent: rooted.parent,
            is_leaf: (0..tree.num_vertices()).map(|v| tree.is_leaf(v)).collect(),
            rank_of,
        }
    }

    /// Fitch score of the character with `states[rank]` and states below `num_states`.
    pub fn score(&self, states: &[u32], num_states: usize) -> usize {
        let w = words_for(num_states);
        let n = self.parent.len();
        // accumulated sets: intersection or union of children, per vertex
        let mut set = vec![0u64; n * w];
        let mut seen = vec![false; n];
        let mut score = 0;
        for &v in &self.post {
            if self.is_leaf[v] {
                let s = states[self.rank_of[v]] as usize;
                set[v * w..(v + 1) * w].iter_mut().for_each(|x| *x = 0);
                set[v * w + s / 64] |= 1 << (s % 64);
            }
            let p = self.parent[v];
            if p == self.root {
                continue;
            }
            if !seen[p] {
                seen[p] = true;
                for k in 0..w {
                    set[p * w + k] = set[v * w + k];
                }
            } else {
                let meet = (0..w).any(|k| set[p * w + k] & set[v * w + k] != 0);
                for k in 0..w {
                    if meet {
                        set[p * w + k] &= set[v * w + k];
                    } else {
                        set[p * w + k] |= set[v * w + k];
                    }
                }
                if !meet {
                    score += 1;
                }
            }
        }
        let child = *self.post.last().expect("at least two vertices");
        let s = states[self.rank_of[self.root]] as usize;
        if set[child * w + s / 64] >> (s % 64) & 1 == 0 {
            score += 1;
        }
        score
    }
}

/// Minimum number of edges with differing end states over all extensions
/// of `character` to the internal vertices of `tree`.
pub fn fitch_score(tree: &PhyloTree, character: &Character) -> Result<usize, BoundError> {
    let mut remap: BTreeMap<u32, u32> = BTreeMap::new();
    let mut states = Vec::with_capacity(tree.num_taxa());
    for t in tree.taxa() {
        let s = character.state(t).ok_or_else(|| BoundError::MissingState(t.to_string()))?;
        let next = remap.len() as u32;
        states.push(*remap.entry(s).or_insert(next));
    }
    if tree.num_taxa() < 2 {
        return Ok(0);
    }
    Ok(FitchScorer::new(tree).score(&states, remap.len()))
}

const NOPE: u8 = u8::MAX;

/// Exact uniform sampler over the characters that are convex on a tree and
/// use every state on at least `p` taxa. Counting runs once, in
/// arbitrary-precision integers; each sample is then drawn top-down.
pub struct ConvexCharacterSampler {
    p: usize,
    taxa: Vec<Taxon>,
    rank_of: Vec<usize>,
    root: usize,
    root_child: usize,
    children: Vec<Vec<usize>>,
    /// Per vertex and state, the choices of child states with cumulative weights.
    options: Vec<Vec<Vec<(BigUint, u8, u8)>>>,
    totals: Vec<Vec<BigUint>>,
    root_options: Vec<(BigUint, u8)>,
    total: BigUint,
}

impl ConvexCharacterSampler {
    pub fn new(tree: &PhyloTree, p: usize) -> Result<Self, BoundError> {
        let n = tree.num_taxa();
        let p = p.max(1);
        if n < p || n < 2 {
            return Err(BoundError::NoEligibleCharacter { p, taxa: n });
        }
        // states: 0..p open with count s+1 (capped at p), p closed, p+1 untouched, p+2 closed-or-untouched
        let (closed, none, done) = (p as u8, p as u8 + 1, p as u8 + 2);
        let ns = p + 3;
        let root = tree.min_leaf();
        let rooted = tree.rooted(root);
        let nv = tree.num_vertices();
        let children: Vec<Vec<usize>> = (0..nv).map(|v| rooted.children(tree, v).collect()).collect();
        let mut totals = vec![vec![BigUint::zero(); ns]; nv];
        let mut options: Vec<Vec<Vec<(BigUint, u8, u8)>>> = vec![Vec::new(); nv];
        let merge = |a: u8, b: u8| ((a as usize + 1 + b as usize + 1).min(p) - 1) as u8;
        for &v in rooted.order.iter().rev() {
            if v == root {
                continue;
            }
            let mut opts: Vec<Vec<(BigUint, u8, u8)>> = vec![Vec::new(); ns];
            if tree.is_leaf(v) {
                totals[v][0] = BigUint::one();
                if p <= 1 {
                    totals[v][closed as usize] = BigUint::one();
                }
            } else {
                let (a, b) = (children[v][0], children[v][1]);
                let mut push = |s: u8, sa: u8, sb: u8| {
                    let w = &totals[a][sa as usize] * &totals[b][sb as usize];
                    if !w.is_zero() {
                        opts[s as usize].push((w, sa, sb));
                    }
                };
                push(none, done, done);
                for j in 0..p as u8 {
                    push(j, j, done);
                    push(j, done, j);
                }
                for ja in 0..p as u8 {
                    for jb in 0..p as u8 {
                        let m = merge(ja, jb);
                        push(m, ja, jb);
                        if m as usize == p - 1 {
                            push(closed, ja, jb);
                        }
                    }
                }
                for s in 0..done as usize {
                    let mut acc = BigUint::zero();
                    for o in opts[s].iter_mut() {
                        acc += &o.0;
                        o.0 = acc.clone();
                    }
                    totals[v][s] = acc;
                }
            }
            let d = &totals[v][closed as usize] + &totals[v][none as usize];
            opts[done as usize] = vec![
                (totals[v][closed as usize].clone(), closed, NOPE),
                (d.clone(), none, NOPE),
            ];
            totals[v][done as usize] = d;
            options[v] = opts;
        }
        let root_child = children[root][0];
        let mut root_options = Vec::new();
        let mut total = BigUint::zero();
        for j in 0..p as u8 {
            if j as usize + 2 >= p && !totals[root_child][j as usize].is_zero() {
                total += &totals[root_child][j as usize];
                root_options.push((total.clone(), j));
            }
        }
        if p <= 1 && !totals[root_child][done as usize].is_zero() {
            total += &totals[root_child][done as usize];
            root_options.push((total.clone(), done));
        }
        if total.is_zero() {
            return Err(BoundError::NoEligibleCharacter { p, taxa: n });
        }
        let mut rank_of = vec![usize::MAX; nv];
        for (i, v) in tree.leaf_vertices().into_iter().enumerate() {
            rank_of[v] = i;
        }
        Ok(ConvexCharacterSampler {
            p,
            taxa: tree.taxa().map(str::to_string).collect(),
            rank_of,
            root,
            root_child,
            children,
            options,
            totals,
            root_options,
            total,
        })
    }

    /// Number of eligible characters.
    pub fn count(&self) -> &BigUint {
        &self.total
    }

    pub fn min_state_size(&self) -> usize {
        self.p
    }

    fn pick<'a, T>(options: &'a [(BigUint, T)], total: &BigUint, rng: &mut (impl Rng + ?Sized)) -> &'a T {
        let r = rng.gen_biguint_below(total);
        &options.iter().find(|(c, _)| &r < c).expect("draw below total").1
    }

    /// A sample as block ids by taxon rank, blocks numbered by first taxon,
    /// together with the number of blocks.
    pub(crate) fn sample_ranks<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<u32>, usize) {
        let (closed, none, done) = (self.p as u8, self.p as u8 + 1, self.p as u8 + 2);
        let mut block = vec![u32::MAX; self.taxa.len()];
        let mut next = 1u32;
        block[self.rank_of[self.root]] = 0;
        let s = *Self::pick(&self.root_options, &self.total, rng);
        let mut stack: Vec<(usize, u8, u32)> = vec![(self.root_child, s, 0)];
        while let Some((v, s, inherited)) = stack.pop() {
            let s = if s == done {
                let opts: Vec<(BigUint, u8)> = self.options[v][done as usize].iter().map(|(w, a, _)| (w.clone(), *a)).collect();
                *Self::pick(&opts, &self.totals[v][done as usize], rng)
            } else {
                s
            };
            let mine = if s < closed {
                inherited
            } else if s == closed {
                next += 1;
                next - 1
            } else {
                u32::MAX
            };
            if self.children[v].is_empty() {
                block[self.rank_of[v]] = mine;
                continue;
            }
            debug_assert!(s != none || mine == u32::MAX);
            let opts = &self.options[v][s as usize];
            let r = rng.gen_biguint_below(&self.totals[v][s as usize]);
            let &(_, sa, sb) = opts.iter().find(|(c, _, _)| &r < c).expect("draw below total");
            for (c, cs) in [(self.children[v][0], sa), (self.children[v][1], sb)] {
                stack.push((c, cs, if cs < closed { mine } else { u32::MAX }));
            }
        }
        // renumber blocks by first taxon
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        for b in block.iter_mut() {
            let k = map.len() as u32;
            *b = *map.entry(*b).or_insert(k);
        }
        (block, map.len())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Character {
        let (block, _) = self.sample_ranks(rng);
        Character::new(self.taxa.iter().cloned().zip(block).collect())
    }
}

/// One uniform draw; see [`ConvexCharacterSampler`].
pub fn sample_convex_character<R: Rng + ?Sized>(tree: &PhyloTree, p: usize, rng: &mut R) -> Result<Character, BoundError> {
    Ok(ConvexCharacterSampler::new(tree, p)?.sample(rng))
}

/// Sampling limits for [`dmp_lower_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundBudget {
    pub samples: u64,
    pub time_cap: Option<Duration>,
}

impl BoundBudget {
    pub fn samples(samples: u64) -> Self {
        BoundBudget { samples, time_cap: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub value: usize,
    pub samples_taken: u64,
    pub elapsed: Duration,
    /// A character attaining `value`, if any sample was taken.
    pub best_character: Option<Character>,
}

/// Largest `|l_f(T) - l_f(T')|` over sampled characters `f`, each drawn
/// uniformly from the eligible characters (p = 2) of a tree picked at random.
pub fn dmp_lower_bound<R: Rng + ?Sized>(
    t: &PhyloTree,
    t_prime: &PhyloTree,
    budget: &BoundBudget,
    rng: &mut R,
) -> Result<BoundReport, BoundError> {
    dmp_lower_bound_shared(t, t_prime, budget, rng, &LowerBoundCell::default(), None)
}

/// As [`dmp_lower_bound`], publishing every improvement to `cell` and
/// stopping early when `stop` is raised.
pub fn dmp_lower_bound_shared<R: Rng + ?Sized>(
    t: &PhyloTree,
    t_prime: &PhyloTree,
    budget: &BoundBudget,
    rng: &mut R,
    cell: &LowerBoundCell,
    stop: Option<&AtomicBool>,
) -> Result<BoundReport, BoundError> {
    if !t.same_taxa(t_prime) {
        return Err(TreeError::TaxaMismatch.into());
    }
    let start = Instant::now();
    let mut report = BoundReport { value: 0, samples_taken: 0, elapsed: Duration::ZERO, best_character: None };
    let samplers = match (ConvexCharacterSampler::new(t, 2), ConvexCharacterSampler::new(t_prime, 2)) {
        (Ok(a), Ok(b)) => [a, b],
        _ => return Ok(report),
    };
    let scorers = [FitchScorer::new(t), FitchScorer::new(t_prime)];
    let mut best: Option<(Vec<u32>, usize)> = None;
    while report.samples_taken < budget.samples {
        if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            break;
        }
        if let Some(cap) = budget.time_cap {
            if start.elapsed() >= cap {
                break;
            }
        }
        let which = usize::from(rng.gen_bool(0.5));
        let (states, r) = samplers[which].sample_ranks(rng);
        report.samples_taken += 1;
        let a = scorers[0].score(&states, r);
        let b = scorers[1].score(&states, r);
        let gap = a.abs_diff(b);
        if gap > report.value || best.is_none() {
            report.value = gap;
            best = Some((states, r));
            cell.raise(gap);
        }
    }
    report.elapsed = start.elapsed();
    report.best_character = best.map(|(states, _)| Character::new(t.taxa().map(str::to_string).zip(states).collect()));
    Ok(report)
}

/// Chvatal's greedy hitting set: start from the variables fixed to 1, then
/// repeatedly cut the free edge in the most unsatisfied constraints (lowest
/// index on ties).
pub fn greedy_upper_bound(model: &HittingSetModel) -> (Vec<usize>, usize) {
    let n = model.num_variables();
    let mut chosen: BTreeSet<usize> = model.fixed_one().iter().collect();
    let hit = |row: &[u64], chosen: &BTreeSet<usize>| iter_words(row).any(|v| chosen.contains(&v));
    let mut unsat: Vec<usize> = (0..model.num_constraints()).filter(|&i| !hit(model.row(i), &chosen)).collect();
    let zero = model.fixed_zero();
    while !unsat.is_empty() {
        let mut count = vec![0u32; n];
        for &i in &unsat {
            for v in iter_words(model.row(i)) {
                count[v] += 1;
            }
        }
        let best = (0..n)
            .filter(|&v| !zero.contains(v))
            .max_by(|&a, &b| count[a].cmp(&count[b]).then(b.cmp(&a)))
            .expect("validated models have a free variable in every constraint");
        chosen.insert(best);
        unsat.retain(|&i| model.row(i)[best / 64] >> (best % 64) & 1 == 0);
    }
    let cut: Vec<usize> = chosen.into_iter().collect();
    let value = cut.len();
    (cut, value)
}
