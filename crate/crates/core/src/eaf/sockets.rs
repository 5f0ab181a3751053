//! How an agreement forest sits inside one of the input trees: which nodes
//! span which component, where the forest edges run, and the dead trees
//! left between the components.

use crate::error::{Error, Result};
use crate::maf::block_of_nodes;
use crate::tree::UTree;

pub(crate) const NIL: u32 = u32::MAX;

/// A forest edge, named by the component and the key of its lower end when
/// the component is rooted at its smallest taxon. A singleton component `{x}`
/// gets the pseudo-edge `(x, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ForestEdge {
    pub block: u32,
    pub lo: u32,
    pub hi: u32,
}

/// A maximal connected set of tree edges that no component uses. Its leaves
/// are the sockets: component nodes where a cut edge was attached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeadTree {
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub sockets: Vec<usize>,
}

impl DeadTree {
    pub fn leaf_count(&self) -> usize {
        self.sockets.len()
    }

    pub fn is_uncertain(&self) -> bool {
        self.sockets.len() >= 3
    }
}

/// Position of a socket: its forest edge and its depth below the component
/// root, which orders the sockets along the edge.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Slot {
    pub edge: ForestEdge,
    pub depth: u32,
}

pub(crate) struct Side<'a> {
    pub tree: &'a UTree,
    pub owner: Vec<u32>,
    /// Key of every node that survives as a forest node.
    pub key: Vec<Option<(u32, u32)>>,
    pub slot: Vec<Option<Slot>>,
    pub dead: Vec<DeadTree>,
    pub dead_of: Vec<u32>,
    /// Forest edges between branch nodes as (edge, lower node, upper node).
    pub fedges: Vec<(ForestEdge, usize, usize)>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl<'a> Side<'a> {
    pub fn new(tree: &'a UTree, blocks: &[Vec<u32>]) -> Result<Side<'a>> {
        let owner = block_of_nodes(tree, blocks).ok_or(Error::NotAnAgreementForest)?;
        let n = tree.len();
        let leaf_nodes = tree.leaf_nodes();
        let mut side = Side {
            tree,
            key: vec![None; n],
            slot: vec![None; n],
            dead: Vec::new(),
            dead_of: vec![NIL; n],
            fedges: Vec::new(),
            owner,
        };
        for (bi, b) in blocks.iter().enumerate() {
            let bi = bi as u32;
            let root = leaf_nodes[b[0] as usize];
            if b.len() == 1 {
                side.key[root] = Some((b[0], b[0]));
                side.slot[root] = Some(Slot {
                    edge: ForestEdge { block: bi, lo: b[0], hi: b[0] },
                    depth: 0,
                });
                continue;
            }
            side.span_block(bi, root);
        }
        side.collect_dead();
        Ok(side)
    }

    fn span_block(&mut self, bi: u32, root: usize) {
        let t = self.tree;
        let n = t.len();
        let inside = |w: usize| self.owner[w] == bi;
        let mut order = vec![(root, usize::MAX, 0u32)];
        let mut i = 0;
        while i < order.len() {
            let (v, p, d) = order[i];
            i += 1;
            for &w in t.neighbors(v) {
                if w != p && inside(w) {
                    order.push((w, v, d + 1));
                }
            }
        }
        let mut min_below = vec![u32::MAX; n];
        let mut lower = vec![usize::MAX; n];
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(v, p, _) in order.iter().rev() {
            if let Some(l) = t.leaf_label(v) {
                min_below[v] = l;
            }
            let branch = kids[v].len() != 1;
            if branch {
                lower[v] = v;
                self.key[v] = Some(match kids[v].as_slice() {
                    [] => {
                        let l = t.leaf_label(v).expect("component leaf");
                        (l, l)
                    }
                    [a, b] => {
                        let (x, y) = (min_below[*a], min_below[*b]);
                        (x.min(y), x.max(y))
                    }
                    _ => unreachable!("binary tree"),
                });
            } else {
                lower[v] = lower[kids[v][0]];
            }
            if p != usize::MAX {
                min_below[p] = min_below[p].min(min_below[v]);
                kids[p].push(v);
            }
        }
        // the root leaf has one child but is a forest node
        lower[root] = root;
        let l = t.leaf_label(root).expect("root is a leaf");
        self.key[root] = Some((l, l));
        let mut parent = vec![usize::MAX; n];
        for &(v, p, d) in &order {
            parent[v] = p;
            if v != root && kids[v].len() == 1 {
                let (lo, hi) = self.key[lower[v]].expect("branch key");
                self.slot[v] = Some(Slot {
                    edge: ForestEdge { block: bi, lo, hi },
                    depth: d,
                });
            }
        }
        for &(v, _, _) in &order {
            if v == root || self.key[v].is_none() {
                continue;
            }
            let mut up = parent[v];
            while self.key[up].is_none() {
                up = parent[up];
            }
            let (lo, hi) = self.key[v].expect("branch");
            self.fedges.push((ForestEdge { block: bi, lo, hi }, v, up));
        }
    }

    fn collect_dead(&mut self) {
        let t = self.tree;
        let n = t.len();
        let mut parent: Vec<usize> = (0..n).collect();
        let dead_edges: Vec<(usize, usize)> = t
            .edges()
            .into_iter()
            .filter(|&(a, b)| self.owner[a] == NIL || self.owner[a] != self.owner[b])
            .collect();
        for &(a, b) in &dead_edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let mut index = vec![NIL; n];
        for &(a, b) in &dead_edges {
            let r = find(&mut parent, a);
            if index[r] == NIL {
                index[r] = self.dead.len() as u32;
                self.dead.push(DeadTree {
                    nodes: Vec::new(),
                    edges: Vec::new(),
                    sockets: Vec::new(),
                });
            }
            self.dead[index[r] as usize].edges.push((a, b));
        }
        for v in 0..n {
            let r = find(&mut parent, v);
            if index[r] == NIL {
                continue;
            }
            let d = &mut self.dead[index[r] as usize];
            d.nodes.push(v);
            if self.owner[v] != NIL {
                d.sockets.push(v);
                self.dead_of[v] = index[r];
                debug_assert!(self.slot[v].is_some(), "socket without a slot");
            }
        }
    }

    /// Sockets of every forest edge ordered from the top.
    pub fn sockets_by_edge(&self) -> std::collections::BTreeMap<ForestEdge, Vec<usize>> {
        let mut m: std::collections::BTreeMap<ForestEdge, Vec<(u32, usize)>> = Default::default();
        for (v, s) in self.slot.iter().enumerate() {
            if let Some(s) = s {
                if self.dead_of[v] != NIL {
                    m.entry(s.edge).or_default().push((s.depth, v));
                }
            }
        }
        m.into_iter()
            .map(|(e, mut l)| {
                l.sort_unstable();
                (e, l.into_iter().map(|(_, v)| v).collect())
            })
            .collect()
    }

    /// Upper bound on the φ-leaves this tree can contribute: one per cut
    /// edge of a minimal realization.
    pub fn cut_count(&self) -> usize {
        self.dead.iter().map(|d| d.leaf_count() - 1).sum()
    }
}
