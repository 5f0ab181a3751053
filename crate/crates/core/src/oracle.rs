//! Brute-force ground truth for small trees: breadth-first SPR distance,
//! agreement forests from every edge subset and endpoint agreement forests
//! from every endpoint edge set.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forest::{EndpointEdge, PhyloForest};
use crate::generate::all_trees;
use crate::maf::{is_agreement_forest, AgreementForest};
use crate::moves::spr_neighbor_keys;
use crate::tree::{check_pair, CanonKey, TaxonSet, UTree};

const MAX_BFS: usize = 8;
const MAX_EXHAUSTIVE: usize = 7;

/// Shortest SPR path length by breadth-first search.
pub fn bfs_uspr(t1: &UTree, t2: &UTree) -> Result<usize> {
    check_pair(t1, t2)?;
    if t1.leaf_count() > MAX_BFS {
        return Err(Error::TooLarge(t1.leaf_count()));
    }
    let goal = t2.canonical_key();
    let start = t1.canonical_key();
    if start == goal {
        return Ok(0);
    }
    let taxa = t1.taxa();
    let mut dist: HashMap<CanonKey, usize> = HashMap::new();
    dist.insert(start.clone(), 0);
    let mut queue = VecDeque::from([start]);
    while let Some(k) = queue.pop_front() {
        let d = dist[&k];
        for nb in spr_neighbor_keys(&UTree::from_key(taxa, &k))? {
            if nb == goal {
                return Ok(d + 1);
            }
            if !dist.contains_key(&nb) {
                dist.insert(nb.clone(), d + 1);
                queue.push_back(nb);
            }
        }
    }
    unreachable!("tree space is connected")
}

/// Every tree on a small taxon set with its SPR adjacency.
pub struct TreeSpaceIndex {
    pub trees: Vec<UTree>,
    pub index: HashMap<CanonKey, usize>,
    pub adjacency: Vec<Vec<usize>>,
}

impl TreeSpaceIndex {
    pub fn new(taxa: &Arc<TaxonSet>) -> Result<Self> {
        if taxa.len() > MAX_BFS {
            return Err(Error::TooLarge(taxa.len()));
        }
        let trees = all_trees(taxa);
        let index: HashMap<CanonKey, usize> = trees
            .iter()
            .enumerate()
            .map(|(i, t)| (t.canonical_key(), i))
            .collect();
        let adjacency = if taxa.len() < 4 {
            vec![Vec::new(); trees.len()]
        } else {
            trees
                .iter()
                .map(|t| {
                    let mut nb: Vec<usize> = spr_neighbor_keys(t)
                        .expect("n >= 4")
                        .iter()
                        .map(|k| index[k])
                        .collect();
                    nb.sort_unstable();
                    nb
                })
                .collect()
        };
        Ok(TreeSpaceIndex {
            trees,
            index,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn position(&self, t: &UTree) -> Option<usize> {
        self.index.get(&t.canonical_key()).copied()
    }

    /// SPR distances from tree `src` to every tree.
    pub fn distances_from(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Taxon sets of the pieces of `t` minus the edges in `mask`; `None` when
/// some piece has no taxon.
fn pieces(t: &UTree, edges: &[(usize, usize)], mask: u32) -> Option<Vec<Vec<u32>>> {
    let mut parent: Vec<usize> = (0..t.len()).collect();
    for (i, &(a, b)) in edges.iter().enumerate() {
        if mask & (1 << i) == 0 {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    let mut groups: HashMap<usize, Vec<u32>> = HashMap::new();
    let mut roots = HashSet::new();
    for v in 0..t.len() {
        let r = find(&mut parent, v);
        roots.insert(r);
        if let Some(l) = t.leaf_label(v) {
            groups.entry(r).or_default().push(l);
        }
    }
    if groups.len() != roots.len() {
        return None;
    }
    let mut out: Vec<Vec<u32>> = groups
        .into_values()
        .map(|mut b| {
            b.sort_unstable();
            b
        })
        .collect();
    out.sort();
    Some(out)
}

/// Minimum number of components of an agreement forest and all maximal
/// agreement forests, from every edge subset of the first tree.
pub fn exhaustive_maf(t1: &UTree, t2: &UTree) -> Result<(usize, Vec<AgreementForest>)> {
    check_pair(t1, t2)?;
    if t1.leaf_count() > MAX_EXHAUSTIVE {
        return Err(Error::TooLarge(t1.leaf_count()));
    }
    let edges = t1.edges();
    let m = edges.len();
    let mut part_of: HashMap<u32, Vec<Vec<u32>>> = HashMap::new();
    let mut afs: HashSet<Vec<Vec<u32>>> = HashSet::new();
    for mask in 0..(1u32 << m) {
        if let Some(p) = pieces(t1, &edges, mask) {
            if is_agreement_forest(t1, t2, &p) {
                afs.insert(p.clone());
                part_of.insert(mask, p);
            }
        }
    }
    // an AF is not maximal if restoring one cut edge still gives an AF
    let mut non_maximal: HashSet<Vec<Vec<u32>>> = HashSet::new();
    for (&mask, p) in &part_of {
        for i in 0..m {
            if mask & (1 << i) != 0 && part_of.contains_key(&(mask & !(1 << i))) {
                non_maximal.insert(p.clone());
            }
        }
    }
    let min = afs.iter().map(Vec::len).min().expect("singletons form an AF");
    let mut maximal: Vec<AgreementForest> = afs
        .into_iter()
        .filter(|p| !non_maximal.contains(p))
        .map(AgreementForest::new)
        .collect();
    maximal.sort();
    Ok((min, maximal))
}

/// Canonical forms of `t ÷ E` over all endpoint edge sets of total cost
/// exactly `budget` (1 per fixed endpoint, 2 per free edge) that leave no
/// piece without a taxon or φ-leaf. For such sets the cost is the weight.
fn endpoint_forests(t: &UTree, budget: usize) -> HashMap<String, Vec<EndpointEdge>> {
    let base = t.to_forest();
    let edges = t.edges();
    let mut out = HashMap::new();
    let mut chosen = Vec::new();
    endpoint_rec(&base, &edges, 0, budget, &mut chosen, &mut out);
    out
}

fn endpoint_rec(
    base: &PhyloForest,
    edges: &[(usize, usize)],
    i: usize,
    left: usize,
    chosen: &mut Vec<EndpointEdge>,
    out: &mut HashMap<String, Vec<EndpointEdge>>,
) {
    if left == 0 {
        let raw = base.cut_raw(chosen).expect("edges exist");
        let labelled_pieces = raw
            .components()
            .iter()
            .all(|c| c.iter().any(|&v| raw.label(v).is_labeled()));
        if labelled_pieces {
            let key = raw.canonical().expect("cutting a tree leaves a forest");
            out.entry(key).or_insert_with(|| chosen.clone());
        }
        return;
    }
    if i == edges.len() {
        return;
    }
    let (u, v) = edges[i];
    endpoint_rec(base, edges, i + 1, left, chosen, out);
    for e in [EndpointEdge::fixed_at(u, v, u), EndpointEdge::fixed_at(u, v, v), EndpointEdge::free(u, v)] {
        if e.cost() <= left {
            chosen.push(e);
            endpoint_rec(base, edges, i + 1, left - e.cost(), chosen, out);
            chosen.pop();
        }
    }
}

/// A minimum-weight endpoint agreement forest found by enumeration.
#[derive(Clone, Debug)]
pub struct OracleEaf {
    pub weight: usize,
    pub canonical: String,
    pub cuts1: Vec<EndpointEdge>,
    pub cuts2: Vec<EndpointEdge>,
}

/// Minimum weight of a forest that is an endpoint forest of both trees.
pub fn exhaustive_meaf(t1: &UTree, t2: &UTree) -> Result<usize> {
    Ok(exhaustive_meaf_witness(t1, t2)?.weight)
}

pub fn exhaustive_meaf_witness(t1: &UTree, t2: &UTree) -> Result<OracleEaf> {
    check_pair(t1, t2)?;
    if t1.leaf_count() > MAX_EXHAUSTIVE {
        return Err(Error::TooLarge(t1.leaf_count()));
    }
    for w in 0.. {
        let f1 = endpoint_forests(t1, w);
        let f2 = endpoint_forests(t2, w);
        let mut common: Vec<&String> = f1.keys().filter(|k| f2.contains_key(*k)).collect();
        common.sort();
        if let Some(k) = common.first() {
            return Ok(OracleEaf {
                weight: w,
                canonical: (*k).clone(),
                cuts1: f1[*k].clone(),
                cuts2: f2[*k].clone(),
            });
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::numbered_taxa;
    use crate::newick::parse_newick;

    #[test]
    fn bfs_small() {
        let a = parse_newick("(a,b,(c,d));").unwrap();
        let b = parse_newick("(a,c,(b,d));").unwrap().with_taxa(a.taxa()).unwrap();
        assert_eq!(bfs_uspr(&a, &a).unwrap(), 0);
        assert_eq!(bfs_uspr(&a, &b).unwrap(), 1);
    }

    #[test]
    fn five_leaf_diameter() {
        let idx = TreeSpaceIndex::new(&numbered_taxa(5)).unwrap();
        assert_eq!(idx.len(), 15);
        for i in 0..idx.len() {
            assert!(idx.distances_from(i).iter().all(|&d| d <= 2));
        }
    }

    #[test]
    fn quartet_forests() {
        let a = parse_newick("(a,b,(c,d));").unwrap();
        let b = parse_newick("(a,c,(b,d));").unwrap().with_taxa(a.taxa()).unwrap();
        let (m, mafs) = exhaustive_maf(&a, &a).unwrap();
        assert_eq!((m, mafs.len()), (1, 1));
        let (m, mafs) = exhaustive_maf(&a, &b).unwrap();
        assert_eq!(m, 2);
        assert!(mafs.iter().all(|f| f.component_count() >= 2));
        assert_eq!(exhaustive_meaf(&a, &a).unwrap(), 0);
        assert_eq!(exhaustive_meaf(&a, &b).unwrap(), 1);
    }
}
