//! Endpoint agreement forests and the replug distance.
//!
//! For every agreement forest reached by the forest search, φ-leaves are
//! placed on the cut edges' fixed endpoints so that the decorated forest is
//! still obtainable from both trees; the best placement gives the weight
//! `2(|F| - 1) - q(F)`. The smallest weight over all forests is the replug
//! distance.

mod assign;
mod replay;
mod sockets;

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::forest::{EndpointEdge, NodeLabel, PhyloForest};
use crate::maf::{enumerate_afs_raw, tbr_distance, AgreementForest};
use crate::tree::{check_pair, UTree};

use assign::{outcome_of_cuts, pendant_placement, EdgeTable, Joint, Placement, Shapes};
pub use replay::{extract_replug_sequence, replay_replug_sequence};
use sockets::Side;
pub use sockets::{DeadTree, ForestEdge};

/// Pairings tried by the single-φ fast path before the exact search.
const PAIRING_CAP: usize = 64;

/// An endpoint agreement forest with the endpoint edge sets that produce it
/// from each tree.
#[derive(Clone, Debug)]
pub struct Eaf {
    pub forest: PhyloForest,
    pub weight: usize,
    pub blocks: Vec<Vec<u32>>,
    pub cuts1: Vec<EndpointEdge>,
    pub cuts2: Vec<EndpointEdge>,
}

impl Eaf {
    /// Checks that both cut sets give the same forest.
    pub fn from_cuts(
        t1: &UTree,
        t2: &UTree,
        blocks: Vec<Vec<u32>>,
        cuts1: Vec<EndpointEdge>,
        cuts2: Vec<EndpointEdge>,
    ) -> Result<Eaf> {
        let forest = t1.to_forest().cut(&cuts1)?;
        let other = t2.to_forest().cut(&cuts2)?;
        if forest.canonical()? != other.canonical()? {
            return Err(Error::NotAnEaf("the cut sets give different forests"));
        }
        let weight = forest.weight();
        if weight < 0 {
            return Err(Error::NotAnEaf("negative weight"));
        }
        Ok(Eaf {
            forest,
            weight: weight as usize,
            blocks,
            cuts1,
            cuts2,
        })
    }

    pub fn phi_count(&self) -> usize {
        self.forest.phi_count()
    }

    pub fn component_count(&self) -> usize {
        self.forest.components().len()
    }

    pub fn to_newick(&self) -> Vec<String> {
        self.forest.to_newick_components().expect("yielded forest")
    }

    fn from_placement(t1: &UTree, t2: &UTree, blocks: &[Vec<u32>], p: Placement) -> Result<Eaf> {
        let [c1, c2] = p.cuts;
        Eaf::from_cuts(t1, t2, blocks.to_vec(), c1, c2)
    }
}

/// Tree-to-forest correspondence for both trees.
#[derive(Clone, Debug)]
pub struct ForestMapping {
    pub forest: PhyloForest,
    /// Per tree, the forest node of every tree node that survives the yield;
    /// suppressed and deleted nodes map to `None`.
    pub psi: [Vec<Option<usize>>; 2],
    /// Per tree, the tree node of every forest node.
    pub psi_inv: [Vec<usize>; 2],
    /// Per tree, one edge set whose removal yields the forest.
    pub cuts: [Vec<(usize, usize)>; 2],
}

/// Builds the mappings between the trees and an agreement forest.
pub fn build_mapping(t1: &UTree, t2: &UTree, af: &AgreementForest) -> Result<ForestMapping> {
    check_pair(t1, t2)?;
    let sides = [Side::new(t1, &af.blocks)?, Side::new(t2, &af.blocks)?];
    let mut forest = PhyloForest::new(t1.taxa().clone());
    let mut index: HashMap<(u32, (u32, u32)), usize> = HashMap::new();
    let mut psi_inv: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    let s0 = &sides[0];
    for v in 0..t1.len() {
        if let Some(k) = s0.key[v] {
            let x = forest.add_node(match t1.leaf_label(v) {
                Some(l) => NodeLabel::Taxon(l),
                None => NodeLabel::Unlabeled,
            });
            index.insert((s0.owner[v], k), x);
            psi_inv[0].push(v);
        }
    }
    for &(_, lo, up) in &s0.fedges {
        let a = index[&(s0.owner[lo], s0.key[lo].expect("branch"))];
        let b = index[&(s0.owner[up], s0.key[up].expect("branch"))];
        forest.add_edge(a, b);
    }
    psi_inv[1] = vec![usize::MAX; psi_inv[0].len()];
    let mut psi: [Vec<Option<usize>>; 2] = [vec![None; t1.len()], vec![None; t2.len()]];
    for (i, s) in sides.iter().enumerate() {
        for v in 0..s.tree.len() {
            if let Some(k) = s.key[v] {
                let x = *index.get(&(s.owner[v], k)).ok_or(Error::NotAnAgreementForest)?;
                psi[i][v] = Some(x);
                if i == 1 {
                    psi_inv[1][x] = v;
                }
            }
        }
    }
    let mut table = Shapes::default();
    let cuts = [0, 1].map(|i| {
        (0..sides[i].dead.len())
            .flat_map(|d| assign::pendant_outcome(&sides[i], d, &[], &mut table).cuts)
            .map(|e| (e.u, e.v))
            .collect()
    });
    Ok(ForestMapping {
        forest,
        psi,
        psi_inv,
        cuts,
    })
}

/// Dead trees of `t` with respect to the forest.
pub fn find_dead_trees(t: &UTree, af: &AgreementForest) -> Result<Vec<DeadTree>> {
    Ok(Side::new(t, &af.blocks)?.dead)
}

/// Every minimal edge set of `t` whose removal yields the forest: the
/// product over dead trees of their separating cut sets.
pub fn enumerate_edge_sets(t: &UTree, af: &AgreementForest) -> Result<Vec<Vec<(usize, usize)>>> {
    let side = Side::new(t, &af.blocks)?;
    let mut out: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for d in 0..side.dead.len() {
        let sets = assign::minimal_cut_edge_sets(&side, d);
        out = out
            .iter()
            .flat_map(|base| {
                sets.iter().map(move |s| {
                    let mut e = base.clone();
                    e.extend(s.iter().copied());
                    e.sort_unstable();
                    e
                })
            })
            .collect();
    }
    Ok(out)
}

/// EAFs from every endpoint choice on the edges `e1` of the first tree
/// that is also an endpoint forest of the second, processing at most `k`
/// edges.
pub fn replug_decorate(t1: &UTree, t2: &UTree, af: &AgreementForest, e1: &[(usize, usize)], k: i64) -> Result<Vec<Eaf>> {
    decorate(t1, t2, af, e1, k, [1, 1, 1])
}

/// As [`replug_decorate`], with budget `d` on the weight: a fixed endpoint
/// costs 1 and a free edge 2.
pub fn replug_decorate_bounded(
    t1: &UTree,
    t2: &UTree,
    af: &AgreementForest,
    e1: &[(usize, usize)],
    d: i64,
) -> Result<Vec<Eaf>> {
    decorate(t1, t2, af, e1, d, [1, 1, 2])
}

fn decorate(
    t1: &UTree,
    t2: &UTree,
    af: &AgreementForest,
    e1: &[(usize, usize)],
    budget: i64,
    costs: [i64; 3],
) -> Result<Vec<Eaf>> {
    check_pair(t1, t2)?;
    if budget < 0 {
        return Ok(Vec::new());
    }
    let sides = [Side::new(t1, &af.blocks)?, Side::new(t2, &af.blocks)?];
    let et = EdgeTable::new(&sides);
    // group the cut edges by dead tree
    let mut per_dead: Vec<Vec<(usize, usize)>> = vec![Vec::new(); sides[0].dead.len()];
    for &(a, b) in e1 {
        let d = sides[0]
            .dead
            .iter()
            .position(|d| d.edges.contains(&(a, b)) || d.edges.contains(&(b, a)))
            .ok_or(Error::NotAnEaf("edge set does not realize the forest"))?;
        per_dead[d].push((a, b));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut chosen = Vec::new();
    let mut table = Shapes::default();
    let mut visit = |cuts: &[EndpointEdge]| -> Result<()> {
        let mut first = Vec::new();
        let mut offset = 0;
        for (d, edges) in per_dead.iter().enumerate() {
            let part = &cuts[offset..offset + edges.len()];
            offset += edges.len();
            match outcome_of_cuts(&sides[0], d, part, &mut table) {
                Some(o) => first.push(o),
                None => return Err(Error::NotAnEaf("edge set does not realize the forest")),
            }
        }
        let Some(joint) = Joint::with_fixed_first(&sides, &et, first, &mut table) else {
            return Ok(());
        };
        if let Some(p) = joint.solve(0) {
            let eaf = Eaf::from_placement(t1, t2, &af.blocks, p)?;
            if seen.insert(eaf.forest.canonical()?) {
                out.push(eaf);
            }
        }
        Ok(())
    };
    let ordered: Vec<(usize, usize)> = per_dead.iter().flatten().copied().collect();
    decorate_rec(&ordered, 0, budget, costs, &mut chosen, &mut visit)?;
    out.sort_by_key(|e| (e.weight, e.forest.canonical().unwrap_or_default()));
    Ok(out)
}

/// Three-way branch per edge: fixed at one end, at the other, or free.
fn decorate_rec(
    edges: &[(usize, usize)],
    i: usize,
    budget: i64,
    costs: [i64; 3],
    chosen: &mut Vec<EndpointEdge>,
    visit: &mut impl FnMut(&[EndpointEdge]) -> Result<()>,
) -> Result<()> {
    if budget < 0 {
        return Ok(());
    }
    if i == edges.len() {
        return visit(chosen);
    }
    let (u, v) = edges[i];
    let options = [
        EndpointEdge::fixed_at(u, v, u),
        EndpointEdge::fixed_at(u, v, v),
        EndpointEdge::free(u, v),
    ];
    for (e, c) in options.into_iter().zip(costs) {
        chosen.push(e);
        decorate_rec(edges, i + 1, budget - c, costs, chosen, visit)?;
        chosen.pop();
    }
    Ok(())
}

/// Counters for the φ assignment step.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhiStats {
    pub forests: u64,
    pub fast_path: u64,
    pub exact: u64,
    /// Dead trees too large to enumerate; their placements are single-φ only.
    pub oversized: u64,
}

/// A placement with at least `need` φ-leaves, if one exists.
fn phi_at_least(t1: &UTree, t2: &UTree, blocks: &[Vec<u32>], need: u32, stats: &mut PhiStats) -> Result<Option<Placement>> {
    let sides = [Side::new(t1, blocks)?, Side::new(t2, blocks)?];
    let upper = sides[0].cut_count().min(sides[1].cut_count()) as u32;
    stats.forests += 1;
    if need > upper {
        return Ok(None);
    }
    let et = EdgeTable::new(&sides);
    let mut table = Shapes::default();
    let fast = pendant_placement(&sides, &et, PAIRING_CAP, &mut table);
    if fast.phi >= need {
        stats.fast_path += 1;
        return Ok(Some(fast));
    }
    stats.exact += 1;
    match Joint::new(&sides, &et, upper - need, &mut table) {
        Some(j) => Ok(j.solve(need)),
        None => {
            stats.oversized += 1;
            Ok(None)
        }
    }
}

/// The most φ-leaves any endpoint decoration of the forest can carry.
fn max_phi(t1: &UTree, t2: &UTree, blocks: &[Vec<u32>]) -> Result<Placement> {
    let sides = [Side::new(t1, blocks)?, Side::new(t2, blocks)?];
    let upper = sides[0].cut_count().min(sides[1].cut_count()) as u32;
    let et = EdgeTable::new(&sides);
    let mut table = Shapes::default();
    let fast = pendant_placement(&sides, &et, PAIRING_CAP, &mut table);
    if fast.phi == upper {
        return Ok(fast);
    }
    let exact = Joint::new(&sides, &et, upper - fast.phi, &mut table).and_then(|j| j.solve(fast.phi));
    Ok(match exact {
        Some(p) if p.phi > fast.phi => p,
        _ => fast,
    })
}

/// The minimum-weight decoration of one agreement forest.
pub fn optimal_phi_assignment(t1: &UTree, t2: &UTree, af: &AgreementForest) -> Result<(Eaf, usize)> {
    check_pair(t1, t2)?;
    let p = max_phi(t1, t2, &af.blocks)?;
    let eaf = Eaf::from_placement(t1, t2, &af.blocks, p)?;
    let w = eaf.weight;
    Ok((eaf, w))
}

/// Result of a budgeted replug computation.
#[derive(Clone, Debug)]
pub enum ReplugBound {
    Exact(usize, Box<Eaf>),
    /// The distance is at least this value.
    AtLeast(usize),
}

/// The replug distance, with a minimum-weight EAF as witness.
pub fn replug_distance(t1: &UTree, t2: &UTree) -> Result<(usize, Eaf)> {
    check_pair(t1, t2)?;
    let lo = tbr_distance(t1, t2)?;
    match replug_distance_capped(t1, t2, lo, 2 * lo + 1, &mut PhiStats::default())? {
        ReplugBound::Exact(d, eaf) => Ok((d, *eaf)),
        ReplugBound::AtLeast(_) => unreachable!("an undecorated MAF has weight 2·dtbr"),
    }
}

/// The replug distance if it is below `cap`, trying values from `lo` (a
/// known lower bound) upwards.
pub fn replug_distance_capped(t1: &UTree, t2: &UTree, lo: usize, cap: usize, stats: &mut PhiStats) -> Result<ReplugBound> {
    check_pair(t1, t2)?;
    // smallest `need` known to fail, per forest
    let mut failed: HashMap<Vec<Vec<u32>>, u32> = HashMap::new();
    let mut afs: Vec<AgreementForest> = Vec::new();
    let mut enumerated: Option<usize> = None;
    for d in lo..cap {
        if enumerated.is_none_or(|k| k < d) {
            afs = enumerate_afs_raw(t1, t2, d)?.0;
            afs.sort_by_key(|f| f.cuts());
            enumerated = Some(d);
        }
        for af in &afs {
            let c = af.cuts();
            if c > d {
                break;
            }
            let need = (2 * c).saturating_sub(d) as u32;
            if failed.get(&af.blocks).is_some_and(|&f| f <= need) {
                continue;
            }
            match phi_at_least(t1, t2, &af.blocks, need, stats)? {
                Some(p) => {
                    let eaf = Eaf::from_placement(t1, t2, &af.blocks, p)?;
                    debug_assert!(eaf.weight <= d);
                    return Ok(ReplugBound::Exact(d, Box::new(eaf)));
                }
                None => {
                    failed.insert(af.blocks.clone(), need);
                }
            }
        }
    }
    Ok(ReplugBound::AtLeast(cap.max(lo)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maf::enumerate_mafs;
    use crate::newick::parse_newick;

    fn pair(a: &str, b: &str) -> (UTree, UTree) {
        let t1 = parse_newick(a).unwrap();
        let t2 = parse_newick(b).unwrap().with_taxa(t1.taxa()).unwrap();
        (t1, t2)
    }

    #[test]
    fn identical_trees() {
        let (t1, t2) = pair("((a,b),(c,d),(e,f));", "((a,b),(c,d),(e,f));");
        let (d, eaf) = replug_distance(&t1, &t2).unwrap();
        assert_eq!(d, 0);
        assert_eq!(eaf.component_count(), 1);
        let af = AgreementForest::new(vec![(0..6).collect()]);
        assert!(find_dead_trees(&t1, &af).unwrap().is_empty());
        let m = build_mapping(&t1, &t2, &af).unwrap();
        assert!(m.cuts[0].is_empty() && m.cuts[1].is_empty());
        assert!(m.psi[0].iter().all(Option::is_some));
    }

    #[test]
    fn quartet_pair() {
        let (t1, t2) = pair("(a,b,(c,d));", "(a,c,(b,d));");
        let (d, eaf) = replug_distance(&t1, &t2).unwrap();
        assert_eq!(d, 1);
        assert_eq!(eaf.phi_count(), 1);
        for af in enumerate_mafs(&t1, &t2, 1).unwrap() {
            let m = build_mapping(&t1, &t2, &af).unwrap();
            assert_eq!((m.cuts[0].len(), m.cuts[1].len()), (1, 1));
            let cut: Vec<EndpointEdge> = m.cuts[0].iter().map(|&(a, b)| EndpointEdge::free(a, b)).collect();
            assert!(t1.to_forest().cut(&cut).unwrap().has_blocks(&af.blocks));
            // a single free edge costs 2, so a budget of 1 keeps only φ forms
            let e = replug_decorate_bounded(&t1, &t2, &af, &m.cuts[0], 1).unwrap();
            assert!(e.iter().all(|x| x.weight == 1));
            assert!(replug_decorate(&t1, &t2, &af, &m.cuts[0], -1).unwrap().is_empty());
        }
    }

    #[test]
    fn three_socket_dead_tree() {
        let (t1, _) = pair("(((a,b),(c,d)),(e,f));", "(((a,b),e),((c,d),f));");
        let af = AgreementForest::new(vec![vec![0, 1, 2, 3], vec![4], vec![5]]);
        let dead = find_dead_trees(&t1, &af).unwrap();
        let big = dead.iter().find(|d| d.leaf_count() == 3).expect("three-leaf dead tree");
        assert_eq!(big.edges.len(), 3);
        let sets = enumerate_edge_sets(&t1, &af).unwrap();
        assert_eq!(sets.len(), 3);
    }
}
