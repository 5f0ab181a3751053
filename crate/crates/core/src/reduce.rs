//! Kernelization: common pendant subtrees collapse to one new leaf and long
//! common chains are cut back to three leaves, alternately, until neither
//! rule applies.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::error::Result;
use crate::tree::{harmonize, TaxonSet, UTree};

/// Leaves kept from every common chain.
pub const CHAIN_KEEP: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionKind {
    Subtree,
    Chain,
}

/// What a reduction did. For a subtree step the leaf set is the collapsed
/// subtree and `label` its new leaf; for a chain step it is the removed
/// leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionStep {
    pub kind: ReductionKind,
    pub leaves: Vec<String>,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionReceipt {
    pub original_leaf_count: usize,
    pub reduced_leaf_count: usize,
    pub steps: Vec<ReductionStep>,
}

#[derive(Clone, Copy, Debug)]
pub struct ReduceOptions {
    pub chains: bool,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions { chains: true }
    }
}

/// Reduces both trees with subtree and chain reduction.
pub fn reduce_pair(t1: &UTree, t2: &UTree) -> Result<(UTree, UTree, ReductionReceipt)> {
    reduce_pair_with(t1, t2, ReduceOptions::default())
}

pub fn reduce_pair_with(t1: &UTree, t2: &UTree, opts: ReduceOptions) -> Result<(UTree, UTree, ReductionReceipt)> {
    let (mut a, mut b) = harmonize(t1, t2)?;
    let mut receipt = ReductionReceipt {
        original_leaf_count: a.leaf_count(),
        reduced_leaf_count: a.leaf_count(),
        steps: Vec::new(),
    };
    let mut fresh = 0usize;
    loop {
        let mut changed = false;
        if let Some((x, y)) = subtree_pass(&a, &b, &mut fresh, &mut receipt.steps)? {
            (a, b) = (x, y);
            changed = true;
        }
        if opts.chains {
            if let Some((x, y)) = chain_pass(&a, &b, &mut receipt.steps)? {
                (a, b) = (x, y);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    receipt.reduced_leaf_count = a.leaf_count();
    Ok((a, b, receipt))
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Shape {
    Leaf(u32),
    Node(u32, u32),
}

/// Interned ids of rooted subtrees, shared by both trees.
#[derive(Default)]
struct Interner {
    ids: HashMap<Shape, u32>,
    size: Vec<usize>,
}

impl Interner {
    fn get(&mut self, s: Shape, size: usize) -> u32 {
        let next = self.ids.len() as u32;
        let id = *self.ids.entry(s).or_insert(next);
        if id == next {
            self.size.push(size);
        }
        id
    }
}

/// Id of the subtree below every directed edge `(parent, child)`.
fn subtree_ids(t: &UTree, it: &mut Interner) -> HashMap<(usize, usize), u32> {
    let mut memo = HashMap::new();
    for (a, b) in t.edges() {
        for (p, v) in [(a, b), (b, a)] {
            id_of(t, p, v, it, &mut memo);
        }
    }
    memo
}

fn id_of(t: &UTree, p: usize, v: usize, it: &mut Interner, memo: &mut HashMap<(usize, usize), u32>) -> u32 {
    if let Some(&id) = memo.get(&(p, v)) {
        return id;
    }
    let id = match t.leaf_label(v) {
        Some(l) => it.get(Shape::Leaf(l), 1),
        None => {
            let kids: Vec<usize> = t.neighbors(v).iter().copied().filter(|&w| w != p).collect();
            let x = id_of(t, v, kids[0], it, memo);
            let y = id_of(t, v, kids[1], it, memo);
            let size = it.size[x as usize] + it.size[y as usize];
            it.get(Shape::Node(x.min(y), x.max(y)), size)
        }
    };
    memo.insert((p, v), id);
    id
}

fn leaves_below(t: &UTree, p: usize, v: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut stack = vec![(p, v)];
    while let Some((p, v)) = stack.pop() {
        match t.leaf_label(v) {
            Some(l) => out.push(l),
            None => stack.extend(t.neighbors(v).iter().filter(|&&w| w != p).map(|&w| (v, w))),
        }
    }
    out.sort_unstable();
    out
}

fn fresh_label(taxa: &TaxonSet, fresh: &mut usize) -> String {
    loop {
        *fresh += 1;
        let name = format!("__R{fresh}");
        if taxa.id(&name).is_none() {
            return name;
        }
    }
}

/// Collapses every maximal common pendant subtree with at least two leaves,
/// keeping at least four leaves overall.
fn subtree_pass(
    a: &UTree,
    b: &UTree,
    fresh: &mut usize,
    steps: &mut Vec<ReductionStep>,
) -> Result<Option<(UTree, UTree)>> {
    let n = a.leaf_count();
    if n <= 4 {
        return Ok(None);
    }
    let mut it = Interner::default();
    let ids_a = subtree_ids(a, &mut it);
    let in_b: HashSet<u32> = subtree_ids(b, &mut it).into_values().collect();
    let mut common: Vec<(usize, (usize, usize))> = ids_a
        .iter()
        .filter(|(_, id)| it.size[**id as usize] >= 2 && in_b.contains(id))
        .map(|(&e, id)| (it.size[*id as usize], e))
        .collect();
    common.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut used = vec![false; a.taxa().len()];
    let mut left = n;
    let mut chosen: Vec<Vec<u32>> = Vec::new();
    for (size, (p, v)) in common {
        if left + 1 < size + 4 {
            continue;
        }
        let s = leaves_below(a, p, v);
        if s.iter().any(|&l| used[l as usize]) {
            continue;
        }
        for &l in &s {
            used[l as usize] = true;
        }
        left -= size - 1;
        chosen.push(s);
    }
    if chosen.is_empty() {
        return Ok(None);
    }
    // each subtree keeps its smallest leaf, renamed
    let taxa = a.taxa();
    let mut rename: HashMap<u32, String> = HashMap::new();
    let mut drop = vec![false; taxa.len()];
    for s in &chosen {
        let label = fresh_label(taxa, fresh);
        steps.push(ReductionStep {
            kind: ReductionKind::Subtree,
            leaves: s.iter().map(|&l| taxa.name(l).to_string()).collect(),
            label: Some(label.clone()),
        });
        rename.insert(s[0], label);
        for &l in &s[1..] {
            drop[l as usize] = true;
        }
    }
    let keep: Vec<u32> = a.leaf_set().into_iter().filter(|&l| !drop[l as usize]).collect();
    Ok(Some(rebuild(a, b, &keep, &rename)?))
}

/// Restricts both trees to `keep` and moves them onto one compact taxon
/// table, renaming as given.
fn rebuild(a: &UTree, b: &UTree, keep: &[u32], rename: &HashMap<u32, String>) -> Result<(UTree, UTree)> {
    let old = a.taxa();
    let name = |l: u32| rename.get(&l).cloned().unwrap_or_else(|| old.name(l).to_string());
    let taxa = TaxonSet::new(keep.iter().map(|&l| name(l)));
    let id = |l: u32| taxa.id(&name(l)).expect("kept label");
    Ok((relabel(&a.restrict(keep)?, &taxa, id)?, relabel(&b.restrict(keep)?, &taxa, id)?))
}

fn relabel(t: &UTree, taxa: &Arc<TaxonSet>, f: impl Fn(u32) -> u32) -> Result<UTree> {
    let adj = (0..t.len()).map(|v| t.neighbors(v).to_vec()).collect();
    let leaf = (0..t.len()).map(|v| t.leaf_label(v).map(&f)).collect();
    UTree::from_parts(taxa.clone(), adj, leaf)
}

/// Leaf pairs whose attachment nodes are adjacent, each attachment node
/// carrying exactly one leaf.
fn chain_links(t: &UTree) -> HashSet<(u32, u32)> {
    let mut pendant: HashMap<usize, u32> = HashMap::new();
    let mut count: HashMap<usize, usize> = HashMap::new();
    for v in t.leaves() {
        if let Some(&p) = t.neighbors(v).first() {
            if !t.is_leaf(p) {
                *count.entry(p).or_default() += 1;
                pendant.insert(p, t.leaf_label(v).expect("leaf"));
            }
        }
    }
    let mut links = HashSet::new();
    for (&p, &a) in &pendant {
        if count[&p] != 1 {
            continue;
        }
        for &q in t.neighbors(p) {
            if let Some(&b) = pendant.get(&q) {
                if count[&q] == 1 && a < b {
                    links.insert((a, b));
                }
            }
        }
    }
    links
}

/// Shortens every common chain longer than [`CHAIN_KEEP`].
fn chain_pass(a: &UTree, b: &UTree, steps: &mut Vec<ReductionStep>) -> Result<Option<(UTree, UTree)>> {
    let la = chain_links(a);
    let lb = chain_links(b);
    let mut nb: HashMap<u32, Vec<u32>> = HashMap::new();
    for &(x, y) in la.intersection(&lb) {
        nb.entry(x).or_default().push(y);
        nb.entry(y).or_default().push(x);
    }
    let mut seen: HashSet<u32> = HashSet::new();
    let mut drop: Vec<u32> = Vec::new();
    let mut ends: Vec<u32> = nb.iter().filter(|(_, v)| v.len() == 1).map(|(&k, _)| k).collect();
    ends.sort_unstable();
    for start in ends {
        if seen.contains(&start) {
            continue;
        }
        let mut chain = vec![start];
        seen.insert(start);
        let mut cur = start;
        while let Some(&next) = nb[&cur].iter().find(|w| !seen.contains(w)) {
            seen.insert(next);
            chain.push(next);
            cur = next;
        }
        if chain.len() > CHAIN_KEEP {
            let removed = chain[CHAIN_KEEP..].to_vec();
            steps.push(ReductionStep {
                kind: ReductionKind::Chain,
                leaves: removed.iter().map(|&l| a.taxa().name(l).to_string()).collect(),
                label: None,
            });
            drop.extend(removed);
        }
    }
    if drop.is_empty() {
        return Ok(None);
    }
    let dropped: HashSet<u32> = drop.into_iter().collect();
    let keep: Vec<u32> = a.leaf_set().into_iter().filter(|l| !dropped.contains(l)).collect();
    Ok(Some(rebuild(a, b, &keep, &HashMap::new())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;

    fn pair(a: &str, b: &str) -> (UTree, UTree) {
        let t1 = parse_newick(a).unwrap();
        let t2 = parse_newick(b).unwrap().with_taxa(t1.taxa()).unwrap();
        (t1, t2)
    }

    #[test]
    fn identical_trees_shrink_to_four_leaves() {
        let (a, b) = pair("((a,b),(c,d),((e,f),(g,h)));", "((a,b),(c,d),((e,f),(g,h)));");
        let (x, y, r) = reduce_pair(&a, &b).unwrap();
        assert_eq!(x.leaf_count(), 4);
        assert_eq!(x.canonical_form(), y.canonical_form());
        assert_eq!((r.original_leaf_count, r.reduced_leaf_count), (8, 4));
    }

    #[test]
    fn common_cherry_collapses() {
        let (a, b) = pair("((a,b),c,(d,(e,f)));", "((a,b),d,(c,(e,f)));");
        let (x, _, r) = reduce_pair(&a, &b).unwrap();
        assert_eq!(x.leaf_count(), 4);
        let collapsed: Vec<&Vec<String>> = r.steps.iter().map(|s| &s.leaves).collect();
        assert!(collapsed.contains(&&vec!["a".to_string(), "b".to_string()]));
        assert!(collapsed.contains(&&vec!["e".to_string(), "f".to_string()]));
    }

    #[test]
    fn long_chain_is_cut_to_three() {
        // the chain c1..c6 hangs between different ends in the two trees
        let (a, b) = pair(
            "((x,y),(c1,(c2,(c3,(c4,(c5,(c6,(z,w))))))));",
            "((x,z),(c1,(c2,(c3,(c4,(c5,(c6,(y,w))))))));",
        );
        let (x, y, r) = reduce_pair(&a, &b).unwrap();
        let chain: Vec<&ReductionStep> = r.steps.iter().filter(|s| s.kind == ReductionKind::Chain).collect();
        assert_eq!(chain.len(), 1);
        assert_eq!(chain[0].leaves.len(), 3);
        assert_eq!(x.leaf_count(), 7);
        assert_eq!(x.leaf_count(), y.leaf_count());
    }

    #[test]
    fn reduction_is_idempotent() {
        let (a, b) = pair(
            "((x,y),(c1,(c2,(c3,(c4,(c5,(c6,(z,w))))))));",
            "((x,z),(c1,(c2,(c3,(c4,(c5,(c6,(y,w))))))));",
        );
        let (x, y, _) = reduce_pair(&a, &b).unwrap();
        let (x2, y2, r2) = reduce_pair(&x, &y).unwrap();
        assert!(r2.steps.is_empty());
        assert_eq!(x.canonical_form(), x2.canonical_form());
        assert_eq!(y.canonical_form(), y2.canonical_form());
    }

    #[test]
    fn chains_can_be_disabled() {
        let (a, b) = pair(
            "((x,y),(c1,(c2,(c3,(c4,(c5,(c6,(z,w))))))));",
            "((x,z),(c1,(c2,(c3,(c4,(c5,(c6,(y,w))))))));",
        );
        let (x, _, _) = reduce_pair_with(&a, &b, ReduceOptions { chains: false }).unwrap();
        assert_eq!(x.leaf_count(), 10);
    }
}
