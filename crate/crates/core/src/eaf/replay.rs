//! Turning an endpoint agreement forest into replug moves.
//!
//! The working graph `H` starts as the first tree with the first cut set.
//! Each move reattaches the loose end of one cut edge, lowering the cut
//! weight by one, while `H ÷ E_H` stays equal to `T2 ÷ E2` for a cut set of
//! the second tree with the same weight. When both cut sets are empty `H`
//! yields the second tree.

use std::collections::HashMap;

use super::Eaf;
use crate::error::{Error, Result};
use crate::forest::{EndpointEdge, PhyloForest};
use crate::moves::{replug_move, ReplugMove};
use crate::tree::{check_pair, UTree};

/// Search states explored per starting pair, raised after every round.
const STATE_LIMITS: [usize; 3] = [64, 2_000, 50_000];

/// Fixed edges whose ends are varied before searching.
const FLIP_LIMIT: usize = 10;

fn weight_of(cuts: &[EndpointEdge]) -> usize {
    cuts.iter().map(EndpointEdge::cost).sum()
}

/// A sequence of exactly `ω` replug moves taking `t1` to `t2`. Node ids
/// refer to the working graph: tree nodes keep their ids and every move
/// adds one node.
pub fn extract_replug_sequence(t1: &UTree, t2: &UTree, eaf: &Eaf) -> Result<Vec<ReplugMove>> {
    check_pair(t1, t2)?;
    let h = t1.to_forest();
    let g = t2.to_forest();
    let w = eaf.weight;
    if weight_of(&eaf.cuts1) != w || weight_of(&eaf.cuts2) != w {
        return Err(Error::NotAnEaf("cut sets do not realize the weight"));
    }
    if h.cut(&eaf.cuts1)?.canonical()? != g.cut(&eaf.cuts2)?.canonical()? {
        return Err(Error::NotAnEaf("the cut sets give different forests"));
    }
    let mut search = Search {
        goal: t2.to_forest().canonical()?,
        g,
        states: 0,
        limit: 0,
        moves: Vec::with_capacity(w),
    };
    // the same edges with other fixed ends may give a matching pair that
    // replays directly
    let mut firsts: HashMap<String, Vec<Vec<EndpointEdge>>> = HashMap::new();
    for e1 in flips(&eaf.cuts1) {
        if let Ok(f) = h.cut(&e1) {
            firsts.entry(f.canonical()?).or_default().push(e1);
        }
    }
    let mut pairs = Vec::new();
    for e2 in flips(&eaf.cuts2) {
        let Ok(f) = search.g.cut(&e2) else { continue };
        if let Some(e1s) = firsts.get(&f.canonical()?) {
            pairs.extend(e1s.iter().map(|e1| (e1.clone(), e2.clone())));
        }
    }
    for limit in STATE_LIMITS {
        search.limit = limit;
        for (e1, e2) in &pairs {
            search.states = 0;
            if search.rec(h.clone(), e1.clone(), e2.clone())? {
                return Ok(search.moves);
            }
        }
    }
    Err(Error::NotAnEaf("no replug sequence reaches the second tree"))
}

/// Every way of moving the fixed ends of `cuts` to the other endpoint,
/// original first.
fn flips(cuts: &[EndpointEdge]) -> Vec<Vec<EndpointEdge>> {
    let fixed: Vec<usize> = (0..cuts.len()).filter(|&i| cuts[i].fixed.is_some()).collect();
    (0u64..1 << fixed.len().min(FLIP_LIMIT))
        .map(|mask| {
            let mut c = cuts.to_vec();
            for (b, &i) in fixed.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    let e = c[i];
                    let other = if e.fixed == Some(e.u) { e.v } else { e.u };
                    c[i] = EndpointEdge::fixed_at(e.u, e.v, other);
                }
            }
            c
        })
        .collect()
}

/// Applies the moves to `t1` and checks that the result yields `t2`.
pub fn replay_replug_sequence(t1: &UTree, t2: &UTree, moves: &[ReplugMove]) -> Result<bool> {
    check_pair(t1, t2)?;
    let mut h = t1.to_forest();
    for &mv in moves {
        h = replug_move(&h, mv)?;
    }
    if !h.is_forest() || h.components().len() != 1 {
        return Ok(false);
    }
    Ok(h.canonical()? == t2.to_forest().canonical()?)
}

struct Search {
    g: PhyloForest,
    goal: String,
    states: usize,
    limit: usize,
    moves: Vec<ReplugMove>,
}

/// Ways to keep a cut on edge `(x, y)` after `z` subdivides it.
fn split_cut(c: EndpointEdge, z: usize) -> [EndpointEdge; 2] {
    let (x, y) = (c.u, c.v);
    match c.fixed {
        Some(f) if f == x => [EndpointEdge::fixed_at(x, z, x), EndpointEdge::fixed_at(z, y, z)],
        Some(_) => [EndpointEdge::fixed_at(z, y, y), EndpointEdge::fixed_at(x, z, z)],
        None => [EndpointEdge::free(x, z), EndpointEdge::free(z, y)],
    }
}

impl Search {
    fn rec(&mut self, h: PhyloForest, eh: Vec<EndpointEdge>, e2: Vec<EndpointEdge>) -> Result<bool> {
        if eh.is_empty() {
            return Ok(e2.is_empty() && h.is_forest() && h.canonical()? == self.goal);
        }
        self.states += 1;
        if self.states > self.limit {
            return Ok(false);
        }
        // next cut sets of the second tree, by the forest they give
        let mut targets: HashMap<String, Vec<Vec<EndpointEdge>>> = HashMap::new();
        for (i, c) in e2.iter().enumerate() {
            let mut rest: Vec<Vec<EndpointEdge>> = Vec::new();
            match c.fixed {
                Some(_) => rest.push(Vec::new()),
                None => {
                    rest.push(vec![EndpointEdge::fixed_at(c.u, c.v, c.u)]);
                    rest.push(vec![EndpointEdge::fixed_at(c.u, c.v, c.v)]);
                }
            }
            for r in rest {
                let mut next = e2.clone();
                next.remove(i);
                next.extend(r);
                if let Ok(f) = self.g.cut(&next) {
                    targets.entry(f.canonical()?).or_default().push(next);
                }
            }
        }
        // reattach φ-carrying edges first
        let mut order: Vec<usize> = (0..eh.len()).collect();
        order.sort_by_key(|&i| eh[i].fixed.is_none());
        for i in order {
            let c = eh[i];
            let ends: Vec<(usize, usize)> = match c.fixed {
                Some(a) => vec![(a, if a == c.u { c.v } else { c.u })],
                None => vec![(c.u, c.v), (c.v, c.u)],
            };
            for (keep, moved) in ends {
                for (x, y) in h.edges() {
                    let mv = ReplugMove { keep, moved, x, y };
                    let Ok(h2) = replug_move(&h, mv) else { continue };
                    let z = h2.capacity() - 1;
                    let mut base: Vec<EndpointEdge> = eh.clone();
                    base.remove(i);
                    if c.fixed.is_none() {
                        base.push(EndpointEdge::fixed_at(keep, z, z));
                    }
                    let hit = base.iter().position(|e| e.same_edge(x, y));
                    let variants: Vec<Vec<EndpointEdge>> = match hit {
                        None => vec![base],
                        Some(j) => split_cut(base[j], z)
                            .into_iter()
                            .map(|s| {
                                let mut b = base.clone();
                                b[j] = s;
                                b
                            })
                            .collect(),
                    };
                    for eh2 in variants {
                        let Ok(f) = h2.cut(&eh2) else { continue };
                        let Some(nexts) = targets.get(&f.canonical()?) else { continue };
                        for e22 in nexts.clone() {
                            self.moves.push(mv);
                            if self.rec(h2.clone(), eh2.clone(), e22)? {
                                return Ok(true);
                            }
                            self.moves.pop();
                        }
                    }
                }
            }
        }
        Ok(false)
    }
}
