//! Reductions 1-7 and the kernelization loop.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::common::PairView;
use crate::error::{KernelError, TreeError};
use crate::tree::{PhyloTree, Taxon};

/// Which reductions [`kernelize`] may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ruleset {
    /// Reduction 1 only.
    SubtreeOnly,
    /// Reductions 1 and 2.
    SubtreeChain,
    /// All seven reductions.
    AllSeven,
}

impl Ruleset {
    pub fn max_rule(self) -> u8 {
        match self {
            Ruleset::SubtreeOnly => 1,
            Ruleset::SubtreeChain => 2,
            Ruleset::AllSeven => 7,
        }
    }
}

impl fmt::Display for Ruleset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ruleset::SubtreeOnly => "subtree",
            Ruleset::SubtreeChain => "subtree-chain",
            Ruleset::AllSeven => "all",
        })
    }
}

impl FromStr for Ruleset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subtree" => Ok(Ruleset::SubtreeOnly),
            "subtree-chain" => Ok(Ruleset::SubtreeChain),
            "all" => Ok(Ruleset::AllSeven),
            _ => Err(format!("unknown ruleset `{s}` (expected subtree, subtree-chain or all)")),
        }
    }
}

/// One application of a reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionStep {
    pub rule_id: u8,
    pub removed_taxa: BTreeSet<Taxon>,
    /// Fresh labels introduced by Reduction 1.
    pub added_taxa: BTreeSet<Taxon>,
    /// 1 for Reductions 3, 4 and 5, which lower the distance by one.
    pub parameter_delta: usize,
}

impl fmt::Display for ReductionStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &BTreeSet<Taxon>| s.iter().cloned().collect::<Vec<_>>().join(",");
        write!(
            f,
            "rule={} removed={{{}}} added={{{}}} delta={}",
            self.rule_id,
            join(&self.removed_taxa),
            join(&self.added_taxa),
            self.parameter_delta
        )
    }
}

#[derive(Clone, Debug)]
pub struct KernelResult {
    pub reduced: (PhyloTree, PhyloTree),
    pub trace: Vec<ReductionStep>,
    pub parameter_reduction: usize,
    pub ruleset: Ruleset,
}

impl KernelResult {
    pub fn num_taxa(&self) -> usize {
        self.reduced.0.num_taxa()
    }

    /// Fewer than four taxa remain, so the reduced distance is zero.
    pub fn is_trivial(&self) -> bool {
        self.num_taxa() < 4
    }
}

/// A concrete match: taxa to delete (ranks) or, for rule 1, the subtree to collapse.
enum Match {
    Collapse(Vec<usize>),
    Remove(Vec<usize>),
}

fn first_match<I: IntoIterator<Item = (Vec<usize>, Match)>>(candidates: I) -> Option<Match> {
    candidates
        .into_iter()
        .map(|(mut involved, m)| {
            involved.sort_unstable();
            (involved, m)
        })
        .min_by(|a, b| a.0.cmp(&b.0))
        .map(|(_, m)| m)
}

fn find_match(pv: &PairView, rule: u8) -> Option<Match> {
    let (t, u) = (&pv.t[0], &pv.t[1]);
    match rule {
        1 => pv.maximal_common_pendant_sets().into_iter().next().map(|s| Match::Collapse(s.iter().collect())),
        2 => pv
            .maximal_common_chains(4)
            .into_iter()
            .next()
            .map(|c| Match::Remove(c[3..].to_vec())),
        3 => {
            let (_, threes) = pv.short_common_chains();
            first_match(
                threes
                    .into_iter()
                    .filter(|&[a, b, c]| t.is_cherry(a, b) && u.is_cherry(b, c))
                    .map(|c| (c.to_vec(), Match::Remove(c.to_vec()))),
            )
        }
        4 => {
            let (_, threes) = pv.short_common_chains();
            first_match(threes.into_iter().filter(|&[_, b, c]| t.is_cherry(b, c)).filter_map(|ch| {
                let x = u.sibling(ch[2])?;
                (!ch.contains(&x)).then(|| ([ch[0], ch[1], ch[2], x].to_vec(), Match::Remove(vec![x])))
            }))
        }
        5 => {
            let (twos, _) = pv.short_common_chains();
            let twos_set: BTreeSet<[usize; 2]> = twos.iter().copied().collect();
            first_match(twos.iter().filter(|&&[l1, l2]| u.is_cherry(l1, l2)).filter_map(|&[l1, l2]| {
                let x = t.sibling(l2)?;
                let l4 = u.sibling(x)?;
                let l3 = t.sibling(l4)?;
                let all = [l1, l2, l3, l4, x];
                let distinct = (0..5).all(|i| (0..i).all(|j| all[i] != all[j]));
                (distinct && twos_set.contains(&[l3, l4])).then(|| (all.to_vec(), Match::Remove(vec![x])))
            }))
        }
        6 | 7 => {
            let (twos, threes) = pv.short_common_chains();
            let firsts: Vec<Vec<usize>> = threes
                .iter()
                .filter(|&&[_, b, c]| t.is_cherry(b, c))
                .map(|c| c.to_vec())
                .collect();
            let seconds: Vec<Vec<usize>> = if rule == 6 {
                threes.iter().filter(|&&[a, b, _]| t.is_cherry(a, b)).map(|c| c.to_vec()).collect()
            } else {
                twos.iter().filter(|&&[a, b]| t.is_cherry(a, b)).map(|c| c.to_vec()).collect()
            };
            let mut candidates = Vec::new();
            for c1 in &firsts {
                for c2 in &seconds {
                    if c2.iter().any(|x| c1.contains(x)) {
                        continue;
                    }
                    let joined: Vec<usize> = c1.iter().chain(c2.iter()).copied().collect();
                    if u.is_chain(&joined) {
                        let removed = if rule == 6 { vec![c2[0], c2[1]] } else { vec![c2[0]] };
                        candidates.push((joined, Match::Remove(removed)));
                    }
                }
            }
            first_match(candidates)
        }
        _ => None,
    }
}

fn fresh_label(taxa: &BTreeSet<&str>) -> Taxon {
    (0..).map(|i| format!("_s{i}")).find(|l| !taxa.contains(l.as_str())).expect("unbounded")
}

fn apply_match(pv: &PairView, rule: u8, m: Match) -> Result<(PhyloTree, PhyloTree, ReductionStep), TreeError> {
    let n = pv.n();
    let (t, u) = (pv.t[0].tree, pv.t[1].tree);
    match m {
        Match::Collapse(set) => {
            let rep = set[0];
            let keep: Vec<&str> = (0..n).filter(|i| *i == rep || !set.contains(i)).map(|i| pv.taxa[i]).collect();
            let all: BTreeSet<&str> = pv.taxa.iter().copied().collect();
            let fresh = fresh_label(&all);
            let from = pv.taxa[rep];
            let a = t.restrict(&keep)?.renamed(from, &fresh)?;
            let b = u.restrict(&keep)?.renamed(from, &fresh)?;
            let step = ReductionStep {
                rule_id: rule,
                removed_taxa: set.iter().map(|&i| pv.taxa[i].to_string()).collect(),
                added_taxa: BTreeSet::from([fresh]),
                parameter_delta: 0,
            };
            Ok((a, b, step))
        }
        Match::Remove(gone) => {
            let keep: Vec<&str> = (0..n).filter(|i| !gone.contains(i)).map(|i| pv.taxa[i]).collect();
            let step = ReductionStep {
                rule_id: rule,
                removed_taxa: gone.iter().map(|&i| pv.taxa[i].to_string()).collect(),
                added_taxa: BTreeSet::new(),
                parameter_delta: usize::from(matches!(rule, 3..=5)),
            };
            Ok((t.restrict(&keep)?, u.restrict(&keep)?, step))
        }
    }
}

fn reduce_once(pv: &PairView, rule: u8) -> Result<Option<(PhyloTree, PhyloTree, ReductionStep)>, TreeError> {
    match find_match(pv, rule) {
        Some(m) => apply_match(pv, rule, m).map(Some),
        None => Ok(None),
    }
}

/// Applies `rule` once at its first match, ordered by the smallest involved
/// taxa. Returns `None` when the rule does not apply or fewer than four taxa
/// remain. Rules 3-7 require rules 1 and 2 to be exhausted.
pub fn apply_reduction(
    t: &PhyloTree,
    t_prime: &PhyloTree,
    rule: u8,
) -> Result<Option<(PhyloTree, PhyloTree, ReductionStep)>, KernelError> {
    if !(1..=7).contains(&rule) {
        return Err(KernelError::UnknownRule(rule));
    }
    let pv = PairView::new(t, t_prime)?;
    if pv.n() < 4 {
        return Ok(None);
    }
    if rule >= 3 && (find_match(&pv, 1).is_some() || find_match(&pv, 2).is_some()) {
        return Err(KernelError::Precondition { rule });
    }
    Ok(reduce_once(&pv, rule)?)
}

/// Applies the reductions of `ruleset` until none applies. Rule 1 is
/// exhausted first, then rule 2, restarting at rule 1 after every change;
/// rules 3-7 are tried in order only once 1 and 2 are exhausted.
pub fn kernelize(t: &PhyloTree, t_prime: &PhyloTree, ruleset: Ruleset) -> Result<KernelResult, KernelError> {
    let mut pair = (t.clone(), t_prime.clone());
    let mut trace = Vec::new();
    'outer: loop {
        let pv = PairView::new(&pair.0, &pair.1)?;
        if pv.n() < 4 {
            break;
        }
        for rule in 1..=ruleset.max_rule() {
            if let Some((a, b, step)) = reduce_once(&pv, rule)? {
                trace.push(step);
                pair = (a, b);
                continue 'outer;
            }
        }
        break;
    }
    let parameter_reduction = trace.iter().map(|s| s.parameter_delta).sum();
    Ok(KernelResult { reduced: pair, trace, parameter_reduction, ruleset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;

    fn nw(s: &str) -> PhyloTree {
        parse_newick(s).unwrap()
    }

    fn cat_pair(n: usize) -> (PhyloTree, PhyloTree) {
        let mid: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let a: Vec<String> = std::iter::once("x".to_string()).chain(mid.iter().cloned()).chain(["y".into()]).collect();
        let b: Vec<String> = std::iter::once("y".to_string()).chain(mid.iter().cloned()).chain(["x".into()]).collect();
        (PhyloTree::caterpillar(&a).unwrap(), PhyloTree::caterpillar(&b).unwrap())
    }

    #[test]
    fn chain_rule_on_caterpillars() {
        let (t, u) = cat_pair(6);
        let (a, b, step) = apply_reduction(&t, &u, 2).unwrap().unwrap();
        assert_eq!(a.taxa().collect::<Vec<_>>(), vec!["1", "2", "3", "x", "y"]);
        assert_eq!(step.removed_taxa.len(), 3);
        assert_eq!(step.parameter_delta, 0);
        assert_eq!(b.num_taxa(), 5);
    }

    #[test]
    fn subtree_rule_on_identical_trees() {
        let t = nw("((a,b),(c,d),(e,f));");
        let (a, b, step) = apply_reduction(&t, &t, 1).unwrap().unwrap();
        assert_eq!(a.num_taxa(), 2);
        assert_eq!(a, b);
        assert_eq!(step.added_taxa, BTreeSet::from(["_s0".to_string()]));
        let k = kernelize(&t, &t, Ruleset::SubtreeOnly).unwrap();
        assert!(k.is_trivial());
        assert_eq!(k.parameter_reduction, 0);
    }

    #[test]
    fn caterpillar_kernel_has_five_taxa() {
        let (t, u) = cat_pair(10);
        let k = kernelize(&t, &u, Ruleset::SubtreeChain).unwrap();
        assert_eq!(k.num_taxa(), 5);
        assert_eq!(k.parameter_reduction, 0);
        assert_eq!(k.trace.len(), 1);
        let s = kernelize(&t, &u, Ruleset::SubtreeOnly).unwrap();
        assert_eq!(s.num_taxa(), 12);
    }

    #[test]
    fn rule_three_instance() {
        // (a,b,c) is a common 3-chain, {a,b} a cherry in T and {b,c} one in T'
        let t = nw("((a,b),c,(d,(e,(f,g))));");
        let u = nw("(a,(b,c),(f,(d,(e,g))));");
        let (x, y, step) = apply_reduction(&t, &u, 3).unwrap().unwrap();
        assert_eq!(step.removed_taxa, ["a", "b", "c"].iter().map(|s| s.to_string()).collect());
        assert_eq!(step.parameter_delta, 1);
        assert_eq!(x.num_taxa(), 4);
        assert_eq!(y.num_taxa(), 4);
    }

    #[test]
    fn precondition_and_unknown_rule() {
        let (t, u) = cat_pair(6);
        assert_eq!(apply_reduction(&t, &u, 4).unwrap_err(), KernelError::Precondition { rule: 4 });
        assert_eq!(apply_reduction(&t, &u, 8).unwrap_err(), KernelError::UnknownRule(8));
        let small = nw("(a,b,c);");
        assert!(apply_reduction(&small, &small, 1).unwrap().is_none());
    }

    #[test]
    fn ruleset_names_round_trip() {
        for r in [Ruleset::SubtreeOnly, Ruleset::SubtreeChain, Ruleset::AllSeven] {
            assert_eq!(r.to_string().parse::<Ruleset>().unwrap(), r);
        }
        assert!("none".parse::<Ruleset>().is_err());
    }
}
