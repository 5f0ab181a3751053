//! Exact unrooted SPR distance by progressive A*.
//!
//! Every tree in the frontier carries an estimate from a ladder of lower
//! bounds, cheapest first: the constant one, the TBR approximation divided
//! by its ratio, the TBR distance and the replug distance. A popped tree is
//! re-estimated one level up and reinserted; only trees popped at the top
//! level are expanded into their SPR neighbours.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eaf::{replug_distance_capped, PhiStats, ReplugBound};
use crate::error::{Error, Result};
use crate::maf::{tbr_distance_capped, tbr_lower_bound_approx};
use crate::moves::{for_each_spr_neighbor, spr_neighbor_keys};
use crate::tree::{check_pair, CanonKey, UTree};

pub const DEFAULT_SEED: u64 = 0x5eed;

/// Estimator levels in ladder order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimator {
    One = 0,
    Atbr = 1,
    Dtbr = 2,
    Dreplug = 3,
}

impl Estimator {
    fn next(self) -> Estimator {
        match self {
            Estimator::One => Estimator::Atbr,
            Estimator::Atbr => Estimator::Dtbr,
            _ => Estimator::Dreplug,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub seed: u64,
    pub max_seconds: Option<f64>,
    pub max_bytes: Option<usize>,
    /// Highest estimator used; trees are expanded once estimated at this level.
    pub top: Estimator,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            seed: DEFAULT_SEED,
            max_seconds: None,
            max_bytes: None,
            top: Estimator::Dreplug,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SearchStats {
    pub distance: Option<usize>,
    /// Trees expanded into their neighbourhoods.
    pub trees_explored: u64,
    /// Trees ever inserted.
    pub trees_seen: u64,
    /// Estimator evaluations by level.
    pub heuristic_calls: [u64; 4],
    /// Largest exact TBR or replug value computed.
    pub max_estimate: usize,
    pub peak_frontier: usize,
    pub wall_ms: u128,
    pub phi: PhiStats,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub distance: usize,
    /// `t1`, the intermediate trees and `t2`, each one SPR move from the next.
    pub path: Vec<UTree>,
    pub stats: SearchStats,
}

struct Node {
    tree: UTree,
    d: usize,
    parent: Option<usize>,
    level: Estimator,
    est: usize,
    /// False when `est` is only a lower bound on the level's value.
    exact: bool,
    expanded: bool,
    version: u32,
}

/// Queue entry; the heap pops the smallest `h`, then level, then the
/// largest `d`, then a random tie-break.
type Entry = Reverse<(usize, Estimator, Reverse<usize>, u64, u32, usize)>;

struct Search<'a> {
    goal: &'a UTree,
    goal_key: CanonKey,
    opts: SearchOptions,
    nodes: Vec<Node>,
    index: HashMap<CanonKey, usize>,
    heap: BinaryHeap<Entry>,
    rng: ChaCha8Rng,
    stats: SearchStats,
    bytes: usize,
    start: Instant,
}

impl Search<'_> {
    fn push(&mut self, i: usize) {
        let n = &self.nodes[i];
        let tie = self.rng.gen::<u64>();
        self.heap.push(Reverse((n.d + n.est, n.level, Reverse(n.d), tie, n.version, i)));
        self.stats.peak_frontier = self.stats.peak_frontier.max(self.heap.len());
    }

    fn insert(&mut self, tree: UTree, key: CanonKey, d: usize, parent: Option<usize>, est: usize) {
        let i = self.nodes.len();
        self.bytes += 2 * key.byte_size() + std::mem::size_of::<Node>() + tree.len() * 48;
        self.index.insert(key, i);
        self.nodes.push(Node {
            tree,
            d,
            parent,
            level: Estimator::One,
            est,
            exact: true,
            expanded: false,
            version: 0,
        });
        self.stats.trees_seen += 1;
        self.push(i);
    }

    fn check_limits(&self, f: usize) -> Result<()> {
        let exceeded = |what| {
            Err(Error::ResourceLimit {
                what,
                lower_bound: f,
                explored: self.stats.trees_explored,
            })
        };
        if let Some(s) = self.opts.max_seconds {
            if self.start.elapsed().as_secs_f64() > s {
                return exceeded("time");
            }
        }
        if let Some(b) = self.opts.max_bytes {
            if self.bytes + self.heap.len() * std::mem::size_of::<Entry>() > b {
                return exceeded("memory");
            }
        }
        Ok(())
    }

    /// Raises the node's estimate one step: the next level, or the exact
    /// value of a capped level.
    fn estimate(&mut self, i: usize, f: usize) -> Result<()> {
        let (level, exact) = (self.nodes[i].level, self.nodes[i].exact);
        let target = if exact { level.next() } else { level };
        let n = &self.nodes[i];
        // a value above this only needs to be known once the frontier gets there
        let cap = f.saturating_sub(n.d) + 1;
        let lo = n.est;
        let (v, exact) = match target {
            Estimator::One => unreachable!("trees start at the lowest level"),
            Estimator::Atbr => (tbr_lower_bound_approx(&n.tree, self.goal)?, true),
            Estimator::Dtbr => {
                let v = tbr_distance_capped(&n.tree, self.goal, lo, cap);
                (v, v < cap)
            }
            Estimator::Dreplug => match replug_distance_capped(&n.tree, self.goal, lo, cap, &mut self.stats.phi)? {
                ReplugBound::Exact(v, _) => (v, true),
                ReplugBound::AtLeast(v) => (v, false),
            },
        };
        self.stats.heuristic_calls[target as usize] += 1;
        if exact && target >= Estimator::Dtbr {
            self.stats.max_estimate = self.stats.max_estimate.max(v);
        }
        let n = &mut self.nodes[i];
        n.level = target;
        n.est = n.est.max(v);
        n.exact = exact;
        n.version += 1;
        self.push(i);
        Ok(())
    }

    /// Expands a node; returns the goal distance if a neighbour is the goal.
    fn expand(&mut self, i: usize) -> Result<Option<usize>> {
        self.nodes[i].expanded = true;
        self.stats.trees_explored += 1;
        let d = self.nodes[i].d + 1;
        // one move changes every distance in the ladder by at most one
        let inherited = self.nodes[i].est.saturating_sub(1).max(1);
        let taxa = self.goal.taxa().clone();
        for k in spr_neighbor_keys(&self.nodes[i].tree)? {
            if k == self.goal_key {
                return Ok(Some(d));
            }
            match self.index.get(&k) {
                Some(&j) => {
                    let m = &mut self.nodes[j];
                    if !m.expanded && d < m.d {
                        m.d = d;
                        m.parent = Some(i);
                        m.version += 1;
                        self.push(j);
                    }
                }
                None => {
                    let t = UTree::from_key(&taxa, &k);
                    self.insert(t, k, d, Some(i), inherited);
                }
            }
        }
        Ok(None)
    }

    fn path_to(&self, mut i: usize) -> Vec<UTree> {
        let mut path = vec![self.goal.clone()];
        loop {
            path.push(self.nodes[i].tree.clone());
            match self.nodes[i].parent {
                Some(p) => i = p,
                None => break,
            }
        }
        path.reverse();
        path
    }
}

/// The SPR distance with a shortest path.
pub fn uspr_distance(t1: &UTree, t2: &UTree, opts: SearchOptions) -> Result<SearchResult> {
    check_pair(t1, t2)?;
    let start = Instant::now();
    let goal_key = t2.canonical_key();
    let mut stats = SearchStats::default();
    if t1.canonical_key() == goal_key {
        stats.distance = Some(0);
        stats.wall_ms = start.elapsed().as_millis();
        return Ok(SearchResult {
            distance: 0,
            path: vec![t1.clone()],
            stats,
        });
    }
    let mut s = Search {
        goal: t2,
        goal_key,
        opts,
        nodes: Vec::new(),
        index: HashMap::new(),
        heap: BinaryHeap::new(),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        stats,
        bytes: 0,
        start,
    };
    s.insert(t1.clone(), t1.canonical_key(), 0, None, 1);
    while let Some(Reverse((f, _, _, _, version, i))) = s.heap.pop() {
        let n = &s.nodes[i];
        if n.version != version || n.expanded {
            continue;
        }
        s.check_limits(f)?;
        if n.level == opts.top && n.exact {
            if let Some(d) = s.expand(i)? {
                s.stats.distance = Some(d);
                s.stats.wall_ms = s.start.elapsed().as_millis();
                let path = s.path_to(i);
                return Ok(SearchResult {
                    distance: d,
                    path,
                    stats: s.stats,
                });
            }
        } else {
            s.estimate(i, f)?;
        }
    }
    unreachable!("tree space is connected")
}

/// Checks that consecutive trees of a path are one SPR move apart.
pub fn is_spr_path(path: &[UTree]) -> Result<bool> {
    for w in path.windows(2) {
        if !spr_neighbor_keys(&w[0])?.contains(&w[1].canonical_key()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The taxa carried by the subtree that moves between two neighbouring trees.
pub fn moved_subtree(from: &UTree, to: &UTree) -> Option<Vec<String>> {
    let goal = to.canonical_key();
    let mut found = None;
    for_each_spr_neighbor(from, |t, mv| {
        if found.is_none() && t.canonical_key() == goal {
            found = Some(mv);
        }
    });
    let mv = found?;
    let mut seen = vec![false; from.len()];
    seen[mv.v] = true;
    let mut stack = vec![mv.u];
    let mut names = Vec::new();
    while let Some(w) = stack.pop() {
        if std::mem::replace(&mut seen[w], true) {
            continue;
        }
        if let Some(t) = from.leaf_label(w) {
            names.push(from.taxa().name(t).to_string());
        }
        stack.extend(from.neighbors(w).iter().copied().filter(|&x| !seen[x]));
    }
    names.sort();
    Some(names)
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
    fn identical_and_neighbouring_trees() {
        let (a, b) = pair("((a,b),(c,d),(e,f));", "((a,b),(c,d),(e,f));");
        let r = uspr_distance(&a, &b, SearchOptions::default()).unwrap();
        assert_eq!((r.distance, r.path.len()), (0, 1));
        let (a, b) = pair("((a,b),(c,d),(e,f));", "((a,c),(b,d),(e,f));");
        let r = uspr_distance(&a, &b, SearchOptions::default()).unwrap();
        assert_eq!(r.distance, 2);
        assert_eq!(r.path.len(), 3);
        assert!(is_spr_path(&r.path).unwrap());
        let (a, b) = pair("(a,b,(c,d));", "(a,c,(b,d));");
        let r = uspr_distance(&a, &b, SearchOptions::default()).unwrap();
        assert_eq!(r.distance, 1);
    }

    #[test]
    fn limits_abort_cleanly() {
        let (a, b) = pair(
            "(((a,b),(c,d)),((e,f),(g,h)),((i,j),(k,l)));",
            "(((a,l),(e,i)),((b,f),(c,j)),((d,h),(g,k)));",
        );
        let opts = SearchOptions {
            max_bytes: Some(1),
            ..SearchOptions::default()
        };
        match uspr_distance(&a, &b, opts) {
            Err(Error::ResourceLimit { what, lower_bound, .. }) => {
                assert_eq!(what, "memory");
                assert!(lower_bound >= 1);
            }
            other => panic!("{other:?}"),
        }
    }
}
