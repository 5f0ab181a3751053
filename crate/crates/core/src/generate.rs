//! Tree generators: uniform random trees, exhaustive tree spaces and random
//! SPR walks.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;

use crate::forest::{NodeLabel, PhyloForest};
use crate::moves::{for_each_spr_neighbor, SprMove};
use crate::tree::{TaxonSet, UTree};

/// Taxon table `t01, t02, ...` (zero padded so the id order is numeric).
pub fn numbered_taxa(n: usize) -> Arc<TaxonSet> {
    let width = n.to_string().len().max(2);
    TaxonSet::new((1..=n).map(|i| format!("t{i:0width$}")))
}

fn star3(taxa: &Arc<TaxonSet>, ids: [u32; 3]) -> PhyloForest {
    let mut f = PhyloForest::new(taxa.clone());
    let c = f.add_node(NodeLabel::Unlabeled);
    for t in ids {
        let l = f.add_node(NodeLabel::Taxon(t));
        f.add_edge(c, l);
    }
    f
}

fn attach(f: &mut PhyloForest, (a, b): (usize, usize), taxon: u32) {
    let z = f.subdivide(a, b).expect("edge exists");
    let l = f.add_node(NodeLabel::Taxon(taxon));
    f.add_edge(z, l);
}

fn small_tree(taxa: &Arc<TaxonSet>) -> UTree {
    let mut f = PhyloForest::new(taxa.clone());
    let ids: Vec<usize> = (0..taxa.len() as u32).map(|t| f.add_node(NodeLabel::Taxon(t))).collect();
    if ids.len() == 2 {
        f.add_edge(ids[0], ids[1]);
    }
    UTree::from_forest(&f).expect("valid small tree")
}

/// A uniformly random unrooted binary tree over all taxa of `taxa`, built by
/// random stepwise addition.
pub fn random_tree<R: Rng + ?Sized>(taxa: &Arc<TaxonSet>, rng: &mut R) -> UTree {
    let n = taxa.len();
    if n < 3 {
        return small_tree(taxa);
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut f = star3(taxa, [order[0], order[1], order[2]]);
    for &t in &order[3..] {
        let edges = f.edges();
        let e = edges[rng.gen_range(0..edges.len())];
        attach(&mut f, e, t);
    }
    UTree::from_forest(&f).expect("valid tree")
}

/// Every unrooted binary tree on the taxa, by stepwise addition with
/// canonical deduplication. There are (2n-5)!! of them for n >= 3.
pub fn all_trees(taxa: &Arc<TaxonSet>) -> Vec<UTree> {
    let n = taxa.len();
    if n < 3 {
        return vec![small_tree(taxa)];
    }
    let mut level = vec![star3(taxa, [0, 1, 2])];
    for t in 3..n as u32 {
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        for f in &level {
            for e in f.edges() {
                let mut g = f.clone();
                attach(&mut g, e, t);
                // keys are only comparable over the full taxon table, so use
                // the forest canonical form while leaves are still missing
                let key = g.canonical().expect("tree");
                if seen.insert(key) {
                    next.push(g);
                }
            }
        }
        level = next;
    }
    let mut trees: Vec<UTree> = level
        .iter()
        .map(|f| UTree::from_forest(f).expect("valid tree"))
        .collect();
    trees.sort_by_key(|t| t.canonical_key());
    trees
}

/// Number of unrooted binary trees on `n` leaves.
pub fn tree_count(n: usize) -> u128 {
    if n < 3 {
        return 1;
    }
    (3..n as u128).fold(1, |acc, k| acc * (2 * k - 3))
}

/// Applies `steps` uniformly chosen non-null SPR moves. Moves may undo each
/// other, so the walk length is only an upper bound on the distance.
pub fn random_spr_walk<R: Rng + ?Sized>(tree: &UTree, steps: usize, rng: &mut R) -> UTree {
    let mut cur = tree.clone();
    if cur.leaf_count() < 4 {
        return cur;
    }
    for _ in 0..steps {
        let mut moves: Vec<SprMove> = Vec::new();
        for_each_spr_neighbor(&cur, |_, m| moves.push(m));
        let m = moves[rng.gen_range(0..moves.len())];
        cur = crate::moves::spr_move(&cur, (m.u, m.v), (m.x, m.y)).expect("legal move");
        cur = UTree::from_key(cur.taxa(), &cur.canonical_key());
    }
    cur
}

/// A random tree and the end point of a random SPR walk from it.
pub fn random_walk_pair<R: Rng + ?Sized>(taxa: &Arc<TaxonSet>, steps: usize, rng: &mut R) -> (UTree, UTree) {
    let t1 = random_tree(taxa, rng);
    let t2 = random_spr_walk(&t1, steps, rng);
    (t1, t2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tree_space_sizes() {
        for n in 3..=7 {
            let trees = all_trees(&numbered_taxa(n));
            assert_eq!(trees.len() as u128, tree_count(n));
        }
        assert_eq!(tree_count(7), 945);
    }

    #[test]
    fn random_trees_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let taxa = numbered_taxa(20);
        for _ in 0..20 {
            let t = random_tree(&taxa, &mut rng);
            assert_eq!(t.leaf_count(), 20);
            assert_eq!(t.len(), 38);
        }
    }
}
