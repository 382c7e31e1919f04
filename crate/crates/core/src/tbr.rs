//! TBR moves, random trees and random TBR walks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::TreeError;
use crate::tree::{PhyloTree, Taxon};

/// Where one side of a bisected tree is reconnected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Attachment {
    /// Subdivide the edge with this canonical index of the component.
    Edge(usize),
    /// The component is a single vertex and is used as is.
    Isolated,
}

impl PhyloTree {
    /// Deletes the edge with canonical index `cut` and suppresses the
    /// resulting degree-2 vertices. The first component is the one holding
    /// the smallest taxon.
    pub fn bisect(&self, cut: usize) -> Result<(PhyloTree, PhyloTree), TreeError> {
        let edges = self.edges();
        let &(upper, lower) = edges.get(cut).ok_or(TreeError::InvalidEdge(cut))?;
        let n = self.num_vertices();
        let mut side = vec![false; n];
        let mut stack = vec![lower];
        side[lower] = true;
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                if !side[w] && !(v == lower && w == upper) {
                    side[w] = true;
                    stack.push(w);
                }
            }
        }
        let part = |keep: bool| {
            let ids: Vec<usize> = (0..n).filter(|&v| side[v] == keep).collect();
            let mut remap = vec![usize::MAX; n];
            for (i, &v) in ids.iter().enumerate() {
                remap[v] = i;
            }
            let adj: Vec<Vec<usize>> = ids
                .iter()
                .map(|&v| self.neighbors(v).iter().filter(|&&w| side[w] == keep).map(|&w| remap[w]).collect())
                .collect();
            let label: Vec<Option<Taxon>> = ids.iter().map(|&v| self.label(v).map(str::to_string)).collect();
            PhyloTree::normalized(adj, label)
        };
        Ok((part(false)?, part(true)?))
    }

    /// Joins two trees on disjoint taxon sets by a new edge between the
    /// chosen attachment points.
    pub fn reconnect(
        first: &PhyloTree,
        attach_first: Attachment,
        second: &PhyloTree,
        attach_second: Attachment,
    ) -> Result<PhyloTree, TreeError> {
        if first.taxa().any(|t| second.contains(t)) {
            return Err(TreeError::Malformed("components share taxa".into()));
        }
        let mut adj: Vec<Vec<usize>> = Vec::new();
        let mut label: Vec<Option<Taxon>> = Vec::new();
        let mut anchors = [0; 2];
        for (side, (tree, attach)) in [(first, attach_first), (second, attach_second)].into_iter().enumerate() {
            let offset = adj.len();
            for v in 0..tree.num_vertices() {
                adj.push(tree.neighbors(v).iter().map(|&w| w + offset).collect());
                label.push(tree.label(v).map(str::to_string));
            }
            anchors[side] = match attach {
                Attachment::Isolated => {
                    if tree.num_edges() != 0 {
                        return Err(TreeError::BadAttachment { side, msg: "component has edges" });
                    }
                    offset
                }
                Attachment::Edge(i) => {
                    let edges = tree.edges();
                    let &(u, v) = edges
                        .get(i)
                        .ok_or(TreeError::BadAttachment { side, msg: "edge index out of range" })?;
                    let (u, v) = (u + offset, v + offset);
                    let mid = adj.len();
                    adj.push(vec![u, v]);
                    label.push(None);
                    for w in adj[u].iter_mut() {
                        if *w == v {
                            *w = mid;
                        }
                    }
                    for w in adj[v].iter_mut() {
                        if *w == u {
                            *w = mid;
                        }
                    }
                    mid
                }
            };
        }
        adj[anchors[0]].push(anchors[1]);
        adj[anchors[1]].push(anchors[0]);
        PhyloTree::from_parts(adj, label)
    }

    /// One TBR move: cut edge `cut`, then reconnect the two components
    /// (ordered as in [`PhyloTree::bisect`]) at the given attachments.
    pub fn apply_tbr_move(&self, cut: usize, attach1: Attachment, attach2: Attachment) -> Result<PhyloTree, TreeError> {
        let (a, b) = self.bisect(cut)?;
        PhyloTree::reconnect(&a, attach1, &b, attach2)
    }
}

fn uniform_attachment<R: Rng + ?Sized>(tree: &PhyloTree, rng: &mut R) -> Attachment {
    match tree.num_edges() {
        0 => Attachment::Isolated,
        m => Attachment::Edge(rng.gen_range(0..m)),
    }
}

/// Applies `k` TBR moves, each with cut edge and both attachment points
/// drawn uniformly. Moves may undo each other, so the result is within TBR
/// distance `k` of the input.
pub fn random_tbr_walk<R: Rng + ?Sized>(tree: &PhyloTree, k: usize, rng: &mut R) -> PhyloTree {
    let mut current = tree.clone();
    for _ in 0..k {
        let m = current.num_edges();
        if m == 0 {
            break;
        }
        let cut = rng.gen_range(0..m);
        let (a, b) = current.bisect(cut).expect("cut index in range");
        let att_a = uniform_attachment(&a, rng);
        let att_b = uniform_attachment(&b, rng);
        current = PhyloTree::reconnect(&a, att_a, &b, att_b).expect("attachments drawn from the components");
    }
    current
}

/// Labels used by [`random_tree`]: `t1`, `t2`, ...
pub fn default_labels(t: usize) -> Vec<Taxon> {
    (1..=t).map(|i| format!("t{i}")).collect()
}

/// Random unrooted binary tree on `t` taxa. Taxa are split recursively,
/// each going to the left side with probability `skew / 100`; splits that
/// leave a side empty are redrawn. The degree-2 root is suppressed at the end.
pub fn random_tree<R: Rng + ?Sized>(t: usize, skew: f64, rng: &mut R) -> Result<PhyloTree, TreeError> {
    random_tree_with_labels(&default_labels(t), skew, rng)
}

pub fn random_tree_with_labels<R: Rng + ?Sized>(
    labels: &[Taxon],
    skew: f64,
    rng: &mut R,
) -> Result<PhyloTree, TreeError> {
    if labels.is_empty() {
        return Err(TreeError::NoLeaves);
    }
    if !(0.0..=100.0).contains(&skew) {
        return Err(TreeError::Malformed(format!("skew {skew} outside [0, 100]")));
    }
    let p = skew / 100.0;
    let mut adj: Vec<Vec<usize>> = Vec::new();
    let mut label: Vec<Option<Taxon>> = Vec::new();
    let new_vertex = |adj: &mut Vec<Vec<usize>>, label: &mut Vec<Option<Taxon>>, l: Option<Taxon>| {
        adj.push(Vec::new());
        label.push(l);
        adj.len() - 1
    };
    let root = new_vertex(&mut adj, &mut label, None);
    let mut work: Vec<(usize, Vec<usize>)> = vec![(root, (0..labels.len()).collect())];
    while let Some((v, taxa)) = work.pop() {
        if taxa.len() == 1 {
            label[v] = Some(labels[taxa[0]].clone());
            continue;
        }
        let (left, right) = split_taxa(&taxa, p, rng);
        for side in [left, right] {
            let c = new_vertex(&mut adj, &mut label, None);
            adj[v].push(c);
            adj[c].push(v);
            work.push((c, side));
        }
    }
    PhyloTree::normalized(adj, label)
}

fn split_taxa<R: Rng + ?Sized>(taxa: &[usize], p: f64, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    if p <= 0.0 || p >= 1.0 {
        // every draw would put all taxa on one side; take the limiting split
        let mut shuffled = taxa.to_vec();
        shuffled.shuffle(rng);
        let lone = shuffled.pop().expect("at least two taxa");
        return if p >= 1.0 { (shuffled, vec![lone]) } else { (vec![lone], shuffled) };
    }
    loop {
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &x in taxa {
            if rng.gen_bool(p) {
                left.push(x);
            } else {
                right.push(x);
            }
        }
        if !left.is_empty() && !right.is_empty() {
            return (left, right);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_move_exists_for_every_cut() {
        let t = parse_newick("((a,b),(c,d),(e,(f,g)));").unwrap();
        for cut in 0..t.num_edges() {
            let (a, b) = t.bisect(cut).unwrap();
            let atts = |c: &PhyloTree| -> Vec<Attachment> {
                if c.num_edges() == 0 {
                    vec![Attachment::Isolated]
                } else {
                    (0..c.num_edges()).map(Attachment::Edge).collect()
                }
            };
            let found = atts(&a).into_iter().any(|x| {
                atts(&b).into_iter().any(|y| PhyloTree::reconnect(&a, x, &b, y).unwrap() == t)
            });
            assert!(found, "cut {cut}");
        }
    }

    #[test]
    fn moving_a_leaf_reaches_all_quartets() {
        let t = parse_newick("((a,b),(c,d));").unwrap();
        let pendant_a = t.edge_clusters().iter().position(|(_, c)| c == &["b", "c", "d"]).unwrap();
        let (lone, star) = t.bisect(pendant_a).unwrap();
        assert_eq!(lone.num_edges(), 0);
        assert_eq!(star.num_edges(), 3);
        let mut seen: Vec<String> = (0..3)
            .map(|i| t.apply_tbr_move(pendant_a, Attachment::Isolated, Attachment::Edge(i)).unwrap().to_string())
            .collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn bad_attachments() {
        let t = parse_newick("((a,b),(c,d));").unwrap();
        // edge 0 is the pendant edge of b: components {a,c,d} and {b}
        assert!(matches!(
            t.apply_tbr_move(0, Attachment::Isolated, Attachment::Isolated),
            Err(TreeError::BadAttachment { side: 0, .. })
        ));
        assert!(matches!(
            t.apply_tbr_move(0, Attachment::Edge(0), Attachment::Edge(0)),
            Err(TreeError::BadAttachment { side: 1, .. })
        ));
        assert!(matches!(
            t.apply_tbr_move(0, Attachment::Edge(7), Attachment::Isolated),
            Err(TreeError::BadAttachment { side: 0, .. })
        ));
        assert_eq!(t.apply_tbr_move(99, Attachment::Isolated, Attachment::Isolated), Err(TreeError::InvalidEdge(99)));
    }

    #[test]
    fn random_tree_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(random_tree(0, 50.0, &mut rng), Err(TreeError::NoLeaves));
        let t3 = random_tree(3, 90.0, &mut rng).unwrap();
        assert_eq!(t3, parse_newick("(t1,t2,t3);").unwrap());
        let t = random_tree(50, 50.0, &mut rng).unwrap();
        assert_eq!(t.num_taxa(), 50);
        assert_eq!(t.num_edges(), 97);
        for s in [0.0, 100.0] {
            let c = random_tree(10, s, &mut rng).unwrap();
            assert_eq!(c.diameter(), 9, "extreme skew gives a caterpillar");
        }
    }

    #[test]
    fn random_tree_is_reproducible() {
        let a = random_tree(40, 70.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = random_tree(40, 70.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.to_string(), b.to_string());
    }

    #[test]
    fn walk_of_zero_moves_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tree(12, 50.0, &mut rng).unwrap();
        assert_eq!(random_tbr_walk(&t, 0, &mut rng), t);
    }
}
