//! Maximal agreement forests by bounded search, the TBR distance and a
//! linear-time approximation used as a cheap lower bound.
//!
//! The search works on contracted graphs: every subtree known to agree in
//! both trees is collapsed into a single leaf ("cluster"), so `g1` is the
//! still-undecided part of the first tree and `g2` the undecided components
//! of the second.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::forest::{NodeLabel, PhyloForest};
use crate::tree::{check_pair, UTree};

const NIL: u32 = u32::MAX;

/// Edges cut per conflict by the approximation pass, at most.
pub const APPROX_RATIO: usize = 3;

/// An agreement forest, as the taxon sets of its components.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgreementForest {
    pub blocks: Vec<Vec<u32>>,
}

impl AgreementForest {
    pub fn new(mut blocks: Vec<Vec<u32>>) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort();
        AgreementForest { blocks }
    }

    pub fn component_count(&self) -> usize {
        self.blocks.len()
    }

    /// Number of edges cut from either tree to obtain the forest.
    pub fn cuts(&self) -> usize {
        self.blocks.len() - 1
    }

    /// The forest itself, as restrictions of `tree` to the blocks.
    pub fn to_forest(&self, tree: &UTree) -> Result<PhyloForest> {
        let mut f = PhyloForest::new(tree.taxa().clone());
        for b in &self.blocks {
            let r = tree.restrict(b)?;
            let base = f.capacity();
            for v in 0..r.len() {
                f.add_node(match r.leaf_label(v) {
                    Some(t) => NodeLabel::Taxon(t),
                    None => NodeLabel::Unlabeled,
                });
            }
            for (a, c) in r.edges() {
                f.add_edge(base + a, base + c);
            }
        }
        Ok(f)
    }

    pub fn to_newick(&self, tree: &UTree) -> Result<Vec<String>> {
        self.blocks
            .iter()
            .map(|b| Ok(tree.restrict(b)?.canonical_form()))
            .collect()
    }
}

/// Per block, the set of nodes of `tree` spanned by the block's leaves;
/// `None` if two spanning subtrees share a node.
pub(crate) fn block_of_nodes(tree: &UTree, blocks: &[Vec<u32>]) -> Option<Vec<u32>> {
    let n = tree.len();
    let leaf_nodes = tree.leaf_nodes();
    let order = preorder(tree, 0);
    let mut owner = vec![NIL; n];
    let mut count = vec![0u32; n];
    for (bi, b) in blocks.iter().enumerate() {
        if b.len() == 1 {
            let v = leaf_nodes[b[0] as usize];
            if owner[v] != NIL {
                return None;
            }
            owner[v] = bi as u32;
            continue;
        }
        count.iter_mut().for_each(|c| *c = 0);
        for &t in b {
            count[leaf_nodes[t as usize]] = 1;
        }
        let total = b.len() as u32;
        for &(v, p) in order.iter().rev() {
            if p != usize::MAX {
                let c = count[v];
                if c > 0 && c < total {
                    for x in [v, p] {
                        if owner[x] != NIL && owner[x] != bi as u32 {
                            return None;
                        }
                        owner[x] = bi as u32;
                    }
                }
                count[p] += c;
            }
        }
    }
    Some(owner)
}

/// `(node, parent)` pairs in preorder from `root`.
pub(crate) fn preorder(tree: &UTree, root: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(tree.len());
    let mut stack = vec![(root, usize::MAX)];
    while let Some((v, p)) = stack.pop() {
        out.push((v, p));
        for &w in tree.neighbors(v) {
            if w != p {
                stack.push((w, v));
            }
        }
    }
    out
}

/// Whether the partition is an agreement forest of the two trees.
pub fn is_agreement_forest(t1: &UTree, t2: &UTree, blocks: &[Vec<u32>]) -> bool {
    if block_of_nodes(t1, blocks).is_none() || block_of_nodes(t2, blocks).is_none() {
        return false;
    }
    blocks.iter().all(|b| {
        b.len() <= 3
            || match (t1.restrict(b), t2.restrict(b)) {
                (Ok(a), Ok(c)) => a.canonical_key() == c.canonical_key(),
                _ => false,
            }
    })
}

/// Whether no two components can be rejoined by a single edge into a
/// larger agreement forest.
pub fn is_maximal(t1: &UTree, t2: &UTree, blocks: &[Vec<u32>]) -> bool {
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            let mut merged: Vec<u32> = blocks[i].iter().chain(&blocks[j]).copied().collect();
            merged.sort_unstable();
            let mut next: Vec<Vec<u32>> = blocks
                .iter()
                .enumerate()
                .filter(|&(x, _)| x != i && x != j)
                .map(|(_, b)| b.clone())
                .collect();
            next.push(merged.clone());
            if !is_agreement_forest(t1, t2, &next) {
                continue;
            }
            // the two blocks must be the sides of one edge of the joined tree
            let joined = t1.restrict(&merged).expect("labels present");
            let mut side = blocks[i].clone();
            let mut other = blocks[j].clone();
            side.sort_unstable();
            other.sort_unstable();
            if joined
                .splits()
                .iter()
                .any(|s| *s == side || *s == other)
            {
                return false;
            }
        }
    }
    true
}

/// Contracted graph used by the search.
#[derive(Clone)]
struct Cg {
    nb: Vec<[u32; 3]>,
    deg: Vec<u8>,
    live: Vec<bool>,
    cl: Vec<u32>,
    node_of: Vec<u32>,
}

impl Cg {
    fn from_tree(t: &UTree) -> Cg {
        let n = t.len();
        let mut g = Cg {
            nb: vec![[NIL; 3]; n],
            deg: vec![0; n],
            live: vec![true; n],
            cl: vec![NIL; n],
            node_of: vec![NIL; 2 * t.taxa().len() + 1],
        };
        for v in 0..n {
            for &w in t.neighbors(v) {
                let d = g.deg[v] as usize;
                g.nb[v][d] = w as u32;
                g.deg[v] += 1;
            }
            if let Some(l) = t.leaf_label(v) {
                g.cl[v] = l;
                g.node_of[l as usize] = v as u32;
            }
        }
        g
    }

    fn nbrs(&self, v: usize) -> &[u32] {
        &self.nb[v][..self.deg[v] as usize]
    }

    fn add_edge(&mut self, a: usize, b: usize) {
        self.nb[a][self.deg[a] as usize] = b as u32;
        self.deg[a] += 1;
        self.nb[b][self.deg[b] as usize] = a as u32;
        self.deg[b] += 1;
    }

    fn unlink(&mut self, a: usize, b: usize) {
        let d = self.deg[a] as usize;
        let i = self.nb[a][..d].iter().position(|&x| x == b as u32).expect("edge");
        self.nb[a][i] = self.nb[a][d - 1];
        self.nb[a][d - 1] = NIL;
        self.deg[a] -= 1;
    }

    fn remove_edge(&mut self, a: usize, b: usize) {
        self.unlink(a, b);
        self.unlink(b, a);
    }

    fn kill(&mut self, v: usize) {
        self.live[v] = false;
        if self.cl[v] != NIL {
            self.node_of[self.cl[v] as usize] = NIL;
            self.cl[v] = NIL;
        }
    }

    /// Yields around an unlabelled node whose degree dropped.
    fn tidy(&mut self, v: usize) {
        if !self.live[v] || self.cl[v] != NIL {
            return;
        }
        match self.deg[v] {
            0 => self.kill(v),
            1 => {
                let w = self.nb[v][0] as usize;
                self.remove_edge(v, w);
                self.kill(v);
                self.tidy(w);
            }
            2 => {
                let (a, b) = (self.nb[v][0] as usize, self.nb[v][1] as usize);
                self.remove_edge(v, a);
                self.remove_edge(v, b);
                self.add_edge(a, b);
                self.kill(v);
            }
            _ => {}
        }
    }

    fn cut(&mut self, a: usize, b: usize) {
        self.remove_edge(a, b);
        self.tidy(a);
        self.tidy(b);
    }

    /// Cuts the single edge of a cluster leaf.
    fn isolate(&mut self, c: u32) {
        let v = self.node_of[c as usize] as usize;
        if self.deg[v] == 1 {
            let p = self.nb[v][0] as usize;
            self.cut(v, p);
        }
    }

    fn clusters(&self) -> impl Iterator<Item = (u32, usize)> + '_ {
        self.node_of
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != NIL)
            .map(|(c, &v)| (c as u32, v as usize))
    }

    fn siblings(&self, a: u32, c: u32) -> bool {
        let (va, vc) = (self.node_of[a as usize] as usize, self.node_of[c as usize] as usize);
        if self.deg[va] != 1 || self.deg[vc] != 1 {
            return false;
        }
        let (pa, pc) = (self.nb[va][0] as usize, self.nb[vc][0] as usize);
        pa == pc || pa == vc
    }

    fn merge(&mut self, a: u32, c: u32, new: u32) {
        let (va, vc) = (self.node_of[a as usize] as usize, self.node_of[c as usize] as usize);
        let pa = self.nb[va][0] as usize;
        let target = if pa == vc {
            self.remove_edge(va, vc);
            self.kill(vc);
            self.kill(va);
            va
        } else {
            self.remove_edge(va, pa);
            self.remove_edge(vc, pa);
            self.kill(va);
            self.kill(vc);
            pa
        };
        self.live[target] = true;
        self.cl[target] = new;
        self.node_of[new as usize] = target as u32;
    }

    /// Node path between two clusters, if connected.
    fn path(&self, a: u32, c: u32) -> Option<Vec<usize>> {
        let (va, vc) = (self.node_of[a as usize] as usize, self.node_of[c as usize] as usize);
        let mut parent = vec![NIL; self.nb.len()];
        parent[va] = va as u32;
        let mut stack = vec![va];
        while let Some(v) = stack.pop() {
            if v == vc {
                break;
            }
            for &w in self.nbrs(v) {
                if parent[w as usize] == NIL {
                    parent[w as usize] = v as u32;
                    stack.push(w as usize);
                }
            }
        }
        if parent[vc] == NIL {
            return None;
        }
        let mut p = vec![vc];
        let mut v = vc;
        while v != va {
            v = parent[v] as usize;
            p.push(v);
        }
        p.reverse();
        Some(p)
    }
}

/// Cluster bookkeeping shared by one depth-first search.
struct Clusters {
    min: Vec<u32>,
    kids: Vec<Option<(u32, u32)>>,
}

impl Clusters {
    fn new(taxa: usize) -> Self {
        Clusters {
            min: (0..taxa as u32).collect(),
            kids: vec![None; taxa],
        }
    }

    fn push(&mut self, a: u32, c: u32) -> u32 {
        self.min.push(self.min[a as usize].min(self.min[c as usize]));
        self.kids.push(Some((a, c)));
        (self.min.len() - 1) as u32
    }

    fn truncate(&mut self, len: usize) {
        self.min.truncate(len);
        self.kids.truncate(len);
    }

    fn expand(&self, c: u32, out: &mut Vec<u32>) {
        match self.kids[c as usize] {
            None => out.push(c),
            Some((a, b)) => {
                self.expand(a, out);
                self.expand(b, out);
            }
        }
    }
}

/// Outcome of the contraction loop (steps 2 to 5).
enum Reduced {
    Done(u32),
    Pair(u32, u32),
}

/// Prunes isolated clusters and merges common siblings until a branching
/// decision is needed or only one cluster is left.
fn contract(g1: &mut Cg, g2: &mut Cg, f0: &mut Vec<u32>, cl: &mut Clusters) -> Reduced {
    loop {
        let (first, more) = {
            let mut live = g1.clusters();
            (live.next(), live.next().is_some())
        };
        if !more {
            return Reduced::Done(first.expect("at least one cluster").0);
        }
        // prune clusters that form a whole component in the second forest
        let isolated = g1
            .clusters()
            .filter(|&(c, _)| g2.deg[g2.node_of[c as usize] as usize] == 0)
            .min_by_key(|&(c, _)| cl.min[c as usize]);
        if let Some((r, _)) = isolated {
            f0.push(r);
            g1.isolate(r);
            let v = g1.node_of[r as usize] as usize;
            g1.kill(v);
            let w = g2.node_of[r as usize] as usize;
            g2.kill(w);
            continue;
        }
        let (a, c) = sibling_pair(g1, cl);
        if g2.siblings(a, c) {
            let new = cl.push(a, c);
            g1.merge(a, c, new);
            g2.merge(a, c, new);
            continue;
        }
        return Reduced::Pair(a, c);
    }
}

/// The sibling pair of `g1` with the smallest labels.
fn sibling_pair(g1: &Cg, cl: &Clusters) -> (u32, u32) {
    let mut best: Option<(u32, u32, u32, u32)> = None;
    let mut consider = |x: u32, y: u32| {
        let (mx, my) = (cl.min[x as usize], cl.min[y as usize]);
        let key = if mx < my { (mx, my, x, y) } else { (my, mx, y, x) };
        if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
            best = Some(key);
        }
    };
    for (c, v) in g1.clusters() {
        if g1.deg[v] != 1 {
            continue;
        }
        let p = g1.nb[v][0] as usize;
        if g1.cl[p] != NIL {
            consider(c, g1.cl[p]);
            continue;
        }
        for &w in g1.nbrs(p) {
            let w = w as usize;
            if w != v && g1.cl[w] != NIL && g1.deg[w] == 1 {
                consider(c, g1.cl[w]);
            }
        }
    }
    let b = best.expect("a tree with two leaves has a sibling pair");
    (b.2, b.3)
}

/// A set of edges of `g2` to cut in one branch, as node pairs.
type Branch = Vec<(usize, usize)>;

/// Branches for the conflicting sibling pair `(a, c)`.
fn branches(g2: &Cg, a: u32, c: u32) -> Vec<Branch> {
    let va = g2.node_of[a as usize] as usize;
    let vc = g2.node_of[c as usize] as usize;
    let ea = (va, g2.nb[va][0] as usize);
    let ec = (vc, g2.nb[vc][0] as usize);
    match g2.path(a, c) {
        None => vec![vec![ea], vec![ec]],
        Some(path) => {
            let pend: Vec<(usize, usize)> = path[1..path.len() - 1]
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let (prev, next) = (path[i], path[i + 2]);
                    let w = g2
                        .nbrs(v)
                        .iter()
                        .map(|&w| w as usize)
                        .find(|&w| w != prev && w != next)
                        .expect("path node has a pendant");
                    (v, w)
                })
                .collect();
            let mut out = vec![vec![ea]];
            for keep in 0..pend.len() {
                out.push(
                    pend.iter()
                        .enumerate()
                        .filter(|&(i, _)| i != keep)
                        .map(|(_, &e)| e)
                        .collect(),
                );
            }
            out.push(vec![ec]);
            out
        }
    }
}

/// Search counters.
#[derive(Clone, Copy, Debug, Default)]
pub struct SearchStats {
    /// Terminal calls of the search tree (successes and exhausted budgets).
    pub leaves: u64,
    /// All calls.
    pub calls: u64,
}

struct Search {
    clusters: Clusters,
    found: BTreeSet<Vec<Vec<u32>>>,
    stats: SearchStats,
    first_only: bool,
}

impl Search {
    fn run(&mut self, mut g1: Cg, mut g2: Cg, mut f0: Vec<u32>, k: usize) {
        if self.first_only && !self.found.is_empty() {
            return;
        }
        self.stats.calls += 1;
        let mark = self.clusters.min.len();
        match contract(&mut g1, &mut g2, &mut f0, &mut self.clusters) {
            Reduced::Done(last) => {
                self.stats.leaves += 1;
                f0.push(last);
                let mut blocks: Vec<Vec<u32>> = f0
                    .iter()
                    .map(|&c| {
                        let mut b = Vec::new();
                        self.clusters.expand(c, &mut b);
                        b.sort_unstable();
                        b
                    })
                    .collect();
                blocks.sort();
                self.found.insert(blocks);
            }
            Reduced::Pair(a, c) => {
                if k == 0 {
                    self.stats.leaves += 1;
                } else {
                    for br in branches(&g2, a, c) {
                        if br.len() > k {
                            continue;
                        }
                        let mut h2 = g2.clone();
                        for &(x, y) in &br {
                            h2.cut(x, y);
                        }
                        self.run(g1.clone(), h2, f0.clone(), k - br.len());
                    }
                }
            }
        }
        self.clusters.truncate(mark);
    }
}

fn search(t1: &UTree, t2: &UTree, k: usize, first_only: bool) -> (BTreeSet<Vec<Vec<u32>>>, SearchStats) {
    let mut s = Search {
        clusters: Clusters::new(t1.taxa().len()),
        found: BTreeSet::new(),
        stats: SearchStats::default(),
        first_only,
    };
    s.run(Cg::from_tree(t1), Cg::from_tree(t2), Vec::new(), k);
    (s.found, s.stats)
}

/// Agreement forests reached by the search with at most `k` cuts, before
/// the maximality filter.
pub fn enumerate_afs_raw(t1: &UTree, t2: &UTree, k: usize) -> Result<(Vec<AgreementForest>, SearchStats)> {
    check_pair(t1, t2)?;
    let (found, stats) = search(t1, t2, k, false);
    Ok((
        found.into_iter().map(|blocks| AgreementForest { blocks }).collect(),
        stats,
    ))
}

/// All maximal agreement forests obtainable by cutting at most `k` edges,
/// sorted and without duplicates.
pub fn enumerate_mafs(t1: &UTree, t2: &UTree, k: usize) -> Result<Vec<AgreementForest>> {
    let (afs, _) = enumerate_afs_raw(t1, t2, k)?;
    Ok(afs
        .into_iter()
        .filter(|f| is_maximal(t1, t2, &f.blocks))
        .collect())
}

/// Whether some agreement forest needs at most `k` cuts.
pub fn tbr_at_most(t1: &UTree, t2: &UTree, k: usize) -> bool {
    !search(t1, t2, k, true).0.is_empty()
}

/// The TBR distance: the number of components of a maximum agreement
/// forest, minus one.
pub fn tbr_distance(t1: &UTree, t2: &UTree) -> Result<usize> {
    check_pair(t1, t2)?;
    let mut k = 0;
    while !tbr_at_most(t1, t2, k) {
        k += 1;
    }
    Ok(k)
}

/// `min(dtbr, cap)`, trying budgets from `lo` upwards. A result equal to
/// `cap` only says that the distance is at least `cap`.
pub fn tbr_distance_capped(t1: &UTree, t2: &UTree, lo: usize, cap: usize) -> usize {
    (lo..cap).find(|&k| tbr_at_most(t1, t2, k)).unwrap_or(cap.max(lo))
}

/// Cut count of a single greedy pass that, at every conflict, cuts all
/// candidate edges at once. Always a feasible agreement forest, so the count
/// bounds the TBR distance from above.
pub fn tbr_approx_cuts(t1: &UTree, t2: &UTree) -> Result<usize> {
    check_pair(t1, t2)?;
    let mut g1 = Cg::from_tree(t1);
    let mut g2 = Cg::from_tree(t2);
    let mut cl = Clusters::new(t1.taxa().len());
    let mut f0 = Vec::new();
    let mut cuts = 0;
    while let Reduced::Pair(a, c) = contract(&mut g1, &mut g2, &mut f0, &mut cl) {
        // the pendant next to `a` goes first: cutting `a` would suppress its
        // attachment node
        if let Some(path) = g2.path(a, c) {
            let v = path[1];
            let w = g2
                .nbrs(v)
                .iter()
                .map(|&w| w as usize)
                .find(|&w| w != path[0] && w != path[2])
                .expect("pendant");
            g2.cut(v, w);
            cuts += 1;
        }
        for x in [a, c] {
            g2.isolate(x);
            cuts += 1;
        }
    }
    Ok(cuts)
}

/// `⌈A/3⌉` for the approximation's cut count `A`, a lower bound on the TBR
/// distance.
pub fn tbr_lower_bound_approx(t1: &UTree, t2: &UTree) -> Result<usize> {
    Ok(tbr_approx_cuts(t1, t2)?.div_ceil(APPROX_RATIO))
}
