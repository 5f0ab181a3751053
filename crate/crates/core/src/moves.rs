//! SPR, TBR and replug moves, neighbourhoods and quartets.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::forest::PhyloForest;
use crate::tree::{CanonKey, UTree};

/// An SPR move: cut `(u, v)`, keep `u` with its side and attach it to the
/// middle of `(x, y)` on the other side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SprMove {
    pub u: usize,
    pub v: usize,
    pub x: usize,
    pub y: usize,
}

/// A replug move on a graph: detach the `moved` end of edge
/// `(keep, moved)` and attach it to a new node subdividing `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplugMove {
    pub keep: usize,
    pub moved: usize,
    pub x: usize,
    pub y: usize,
}

/// Nodes reachable from `start` without using the edge `(start, block)`.
fn side(tree: &UTree, start: usize, block: usize) -> Vec<bool> {
    let mut seen = vec![false; tree.len()];
    seen[start] = true;
    seen[block] = true;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &w in tree.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen[block] = false;
    seen
}

fn replace(adj: &mut [Vec<usize>], at: usize, old: usize, new: usize) {
    let slot = adj[at]
        .iter_mut()
        .find(|x| **x == old)
        .expect("adjacency entry present");
    *slot = new;
}

/// Applies an SPR move. The pruned node `v` is suppressed and reused as the
/// node subdividing the regraft edge, so all other node ids are preserved.
pub fn spr_move(tree: &UTree, prune: (usize, usize), regraft: (usize, usize)) -> Result<UTree> {
    let (u, v) = prune;
    let (x, y) = regraft;
    if !tree.has_edge(u, v) {
        return Err(Error::NoSuchEdge(u, v));
    }
    if !tree.has_edge(x, y) {
        return Err(Error::NoSuchEdge(x, y));
    }
    if tree.is_leaf(v) {
        return Err(Error::InvalidRegraft("pruned edge leaves nothing to regraft onto"));
    }
    let tv = side(tree, v, u);
    if !tv[x] || !tv[y] {
        return Err(Error::InvalidRegraft("regraft edge lies in the pruned subtree"));
    }
    if x == v || y == v {
        return Err(Error::InvalidRegraft("null move"));
    }
    let mut adj: Vec<Vec<usize>> = (0..tree.len()).map(|i| tree.neighbors(i).to_vec()).collect();
    apply_in_place(&mut adj, u, v, x, y);
    let leaf = (0..tree.len()).map(|i| tree.leaf_label(i)).collect();
    UTree::from_parts(tree.taxa().clone(), adj, leaf)
}

/// Rewires `adj` for the SPR move and returns the data needed to undo it.
fn apply_in_place(adj: &mut [Vec<usize>], u: usize, v: usize, x: usize, y: usize) -> (usize, usize) {
    let mut others = adj[v].iter().copied().filter(|&w| w != u);
    let a = others.next().unwrap();
    let b = others.next().unwrap();
    replace(adj, a, v, b);
    replace(adj, b, v, a);
    replace(adj, x, y, v);
    replace(adj, y, x, v);
    adj[v] = vec![u, x, y];
    (a, b)
}

fn undo_in_place(adj: &mut [Vec<usize>], u: usize, v: usize, x: usize, y: usize, a: usize, b: usize) {
    replace(adj, x, v, y);
    replace(adj, y, v, x);
    replace(adj, a, b, v);
    replace(adj, b, a, v);
    adj[v] = vec![u, a, b];
}

/// Calls `f` on every tree one SPR move away (with repetitions: distinct
/// moves may give isomorphic trees). The argument is a scratch tree that is
/// only valid during the call.
pub fn for_each_spr_neighbor<F: FnMut(&UTree, SprMove)>(tree: &UTree, mut f: F) {
    let n = tree.len();
    let mut scratch = tree.clone();
    let mut stack = Vec::new();
    let mut in_tv = vec![false; n];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in 0..n {
        if tree.is_leaf(v) {
            continue;
        }
        for &u in tree.neighbors(v) {
            // regraft edges: edges inside T_v that do not touch v
            in_tv.iter_mut().for_each(|s| *s = false);
            in_tv[v] = true;
            in_tv[u] = true;
            edges.clear();
            for &w in tree.neighbors(v) {
                if w != u {
                    in_tv[w] = true;
                    stack.push(w);
                }
            }
            while let Some(p) = stack.pop() {
                for &q in tree.neighbors(p) {
                    if !in_tv[q] {
                        in_tv[q] = true;
                        edges.push((p, q));
                        stack.push(q);
                    }
                }
            }
            for &(x, y) in &edges {
                let adj = scratch.adj_mut();
                let (a, b) = apply_in_place(adj, u, v, x, y);
                f(&scratch, SprMove { u, v, x, y });
                let adj = scratch.adj_mut();
                undo_in_place(adj, u, v, x, y, a, b);
            }
        }
    }
}

/// Canonical keys of all distinct SPR neighbours, excluding the tree itself.
pub fn spr_neighbor_keys(tree: &UTree) -> Result<Vec<CanonKey>> {
    if tree.leaf_count() <= 3 {
        return Err(Error::TooSmall(tree.leaf_count()));
    }
    let own = tree.canonical_key();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for_each_spr_neighbor(tree, |t, _| {
        let k = t.canonical_key();
        if k != own && seen.insert(k.clone()) {
            out.push(k);
        }
    });
    Ok(out)
}

/// All distinct trees one SPR move away, excluding the tree itself.
pub fn spr_neighbors(tree: &UTree) -> Result<Vec<UTree>> {
    Ok(spr_neighbor_keys(tree)?
        .iter()
        .map(|k| UTree::from_key(tree.taxa(), k))
        .collect())
}

/// All distinct trees one TBR move away, excluding the tree itself.
pub fn tbr_neighbors(tree: &UTree) -> Result<Vec<UTree>> {
    if tree.leaf_count() <= 3 {
        return Err(Error::TooSmall(tree.leaf_count()));
    }
    let own = tree.canonical_key();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (u, v) in tree.edges() {
        let mut f = tree.to_forest();
        f.remove_edge(u, v)?;
        f.normalize();
        let f = f.compacted();
        let comps = f.components();
        let attach_points = |c: &Vec<usize>| -> Vec<(usize, Option<usize>)> {
            if c.len() == 1 {
                vec![(c[0], None)]
            } else {
                c.iter()
                    .flat_map(|&a| {
                        f.neighbors(a)
                            .iter()
                            .filter(move |&&b| a < b)
                            .map(move |&b| (a, Some(b)))
                    })
                    .collect()
            }
        };
        let p0 = attach_points(&comps[0]);
        let p1 = attach_points(&comps[1]);
        for &(a, b) in &p0 {
            for &(c, d) in &p1 {
                let mut g = f.clone();
                let s = match b {
                    Some(b) => g.subdivide(a, b)?,
                    None => a,
                };
                let t = match d {
                    Some(d) => g.subdivide(c, d)?,
                    None => c,
                };
                g.add_edge(s, t);
                let t = UTree::from_forest(&g)?;
                let k = t.canonical_key();
                if k != own && seen.insert(k) {
                    out.push(t);
                }
            }
        }
    }
    Ok(out)
}

/// Applies a replug move to a graph. The detached endpoint is left in place
/// (not suppressed), so node ids stay valid across a sequence of moves.
pub fn replug_move(graph: &PhyloForest, mv: ReplugMove) -> Result<PhyloForest> {
    let ReplugMove { keep, moved, x, y } = mv;
    if !graph.has_edge(keep, moved) {
        return Err(Error::NoSuchEdge(keep, moved));
    }
    if !graph.has_edge(x, y) {
        return Err(Error::NoSuchEdge(x, y));
    }
    if (x == keep && y == moved) || (x == moved && y == keep) {
        return Err(Error::InvalidRegraft("regraft edge is the moved edge"));
    }
    if x == keep || y == keep {
        return Err(Error::InvalidRegraft("regraft edge touches the kept endpoint"));
    }
    let mut g = graph.clone();
    g.remove_edge(keep, moved)?;
    let z = g.subdivide(x, y)?;
    g.add_edge(keep, z);
    Ok(g)
}

/// A resolved quartet `ab|cd` over taxon ids, normalised so that each pair
/// is sorted and the pair holding the smallest id comes first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quartet {
    pub pairs: [[u32; 2]; 2],
}

impl Quartet {
    pub fn new(a: u32, b: u32, c: u32, d: u32) -> Quartet {
        let mut p = [[a.min(b), a.max(b)], [c.min(d), c.max(d)]];
        p.sort();
        Quartet { pairs: p }
    }

    pub fn taxa(&self) -> [u32; 4] {
        [self.pairs[0][0], self.pairs[0][1], self.pairs[1][0], self.pairs[1][1]]
    }
}

fn all_pairs_distances(adj: &dyn Fn(usize) -> Vec<usize>, n: usize, sources: &[usize]) -> Vec<Vec<usize>> {
    sources
        .iter()
        .map(|&s| {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for w in adj(v) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Topology induced on four leaves, from path lengths (four-point
/// condition); `None` if they are not all connected.
fn quartet_from_dist(ids: [u32; 4], d: &dyn Fn(usize, usize) -> usize) -> Option<Quartet> {
    let s0 = d(0, 1).checked_add(d(2, 3))?;
    let s1 = d(0, 2).checked_add(d(1, 3))?;
    let s2 = d(0, 3).checked_add(d(1, 2))?;
    let [a, b, c, e] = ids;
    Some(if s0 < s1 && s0 < s2 {
        Quartet::new(a, b, c, e)
    } else if s1 < s0 && s1 < s2 {
        Quartet::new(a, c, b, e)
    } else {
        Quartet::new(a, e, b, c)
    })
}

/// All resolved quartets displayed by the tree.
pub fn quartets(tree: &UTree) -> Vec<Quartet> {
    let leaves: Vec<usize> = {
        let mut l: Vec<usize> = tree.leaves().collect();
        l.sort_by_key(|&v| tree.leaf_label(v));
        l
    };
    let nb = |v: usize| tree.neighbors(v).to_vec();
    let dist = all_pairs_distances(&nb, tree.len(), &leaves);
    let m = leaves.len();
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                for l in k + 1..m {
                    let idx = [i, j, k, l];
                    let ids = idx.map(|x| tree.leaf_label(leaves[x]).unwrap());
                    let d = |p: usize, q: usize| dist[idx[p]][leaves[idx[q]]];
                    out.extend(quartet_from_dist(ids, &d));
                }
            }
        }
    }
    out
}

/// Whether a quartet is incompatible with a forest: its four leaves are not
/// in one component, or that component resolves them differently.
pub fn is_incompatible(q: &Quartet, forest: &PhyloForest) -> Result<bool> {
    let ids = q.taxa();
    let mut nodes = [0usize; 4];
    for (i, &t) in ids.iter().enumerate() {
        nodes[i] = forest
            .node_of_taxon(t)
            .ok_or_else(|| Error::UnknownLabel(forest.taxa().name(t).to_string()))?;
    }
    let nb = |v: usize| forest.neighbors(v).to_vec();
    let dist = all_pairs_distances(&nb, forest.capacity(), &nodes);
    let d = |p: usize, r: usize| dist[p][nodes[r]];
    Ok(match quartet_from_dist(ids, &d) {
        None => true,
        Some(found) => found != *q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;

    fn t(s: &str) -> UTree {
        parse_newick(s).unwrap()
    }

    #[test]
    fn quartet_trees_have_two_neighbors() {
        let n = spr_neighbors(&t("(a,b,(c,d));")).unwrap();
        assert_eq!(n.len(), 2);
    }

    #[test]
    fn null_and_invalid_regrafts() {
        let tr = t("((a,b),(c,d),(e,f));");
        let a = tr.node_of(tr.taxa().id("a").unwrap()).unwrap();
        let pa = tr.neighbors(a)[0];
        let other: Vec<usize> = tr.neighbors(pa).iter().copied().filter(|&w| w != a).collect();
        // regrafting onto an edge incident to the pruned node is a null move
        assert!(matches!(
            spr_move(&tr, (a, pa), (pa, other[0])),
            Err(Error::InvalidRegraft(_))
        ));
        // regrafting into the pruned side is rejected
        assert!(matches!(
            spr_move(&tr, (pa, a), (pa, other[0])),
            Err(Error::InvalidRegraft(_))
        ));
    }

    #[test]
    fn quartet_change() {
        let tr = t("(a,b,(c,d));");
        let id = |s| tr.node_of(tr.taxa().id(s).unwrap()).unwrap();
        let (b, c) = (id("b"), id("c"));
        let pb = tr.neighbors(b)[0];
        let pc = tr.neighbors(c)[0];
        let r = spr_move(&tr, (b, pb), (c, pc)).unwrap();
        assert_eq!(r, t("(a,d,(b,c));"));
    }

    #[test]
    fn quartets_and_incompatibility() {
        let tr = t("(a,b,(c,d));");
        let q = quartets(&tr);
        assert_eq!(q, vec![Quartet::new(0, 1, 2, 3)]);
        let other = t("(a,c,(b,d));").with_taxa(tr.taxa()).unwrap();
        assert!(is_incompatible(&q[0], &other.to_forest()).unwrap());
        assert!(!is_incompatible(&q[0], &tr.to_forest()).unwrap());
        let (x, y) = tr
            .edges()
            .into_iter()
            .find(|&(x, y)| !tr.is_leaf(x) && !tr.is_leaf(y))
            .unwrap();
        let split = tr
            .to_forest()
            .cut(&[crate::forest::EndpointEdge::free(x, y)])
            .unwrap();
        assert!(is_incompatible(&q[0], &split).unwrap());
    }

    #[test]
    fn replug_into_own_side_makes_cycle() {
        let tr = t("((a,b),(c,d),(e,f));");
        let f = tr.to_forest();
        let a = tr.node_of(0).unwrap();
        let pa = tr.neighbors(a)[0];
        let (x, y) = tr
            .edges()
            .into_iter()
            .find(|&(x, y)| x != pa && y != pa && x != a && y != a)
            .unwrap();
        // keep pa, move a's end: a becomes isolated, the rest gains a cycle
        let g = replug_move(&f, ReplugMove { keep: pa, moved: a, x, y }).unwrap();
        assert_eq!(g.components().len(), 2);
        assert!(!g.is_forest());
    }
}
