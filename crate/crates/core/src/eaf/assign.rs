//! φ-leaf placement for a fixed agreement forest.
//!
//! A minimal realization of the forest cuts every dead tree into pieces with
//! exactly one socket each. With endpoint choices on the cut edges, each
//! piece yields a rooted φ-structure hanging from its socket ("shape"). The
//! endpoint forest is fixed by the sequence of shapes along every forest
//! edge, so two realizations give the same forest iff those sequences agree.

use std::collections::{BTreeMap, HashMap};

use super::sockets::{ForestEdge, Side, NIL};
use crate::forest::EndpointEdge;
use crate::matching::{minimum_edge_cover, ClauseGraph};

/// Interned shape strings; ids are comparable across both trees.
#[derive(Default)]
pub(crate) struct Shapes {
    ids: HashMap<String, u32>,
}

impl Shapes {
    fn intern(&mut self, s: String) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(s).or_insert(next)
    }
}

/// One way of cutting a dead tree: the shapes it leaves on its sockets
/// (non-empty ones only, sorted by socket) and the cuts that produce them.
#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub shapes: Vec<(usize, u32)>,
    pub phi: u32,
    pub cuts: Vec<EndpointEdge>,
}

impl Outcome {
    fn shape_at(&self, s: usize) -> Option<u32> {
        self.shapes
            .binary_search_by_key(&s, |&(v, _)| v)
            .ok()
            .map(|i| self.shapes[i].1)
    }
}

/// Dead tree in local numbering.
struct Local {
    nodes: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>,
    edges: Vec<(usize, usize)>,
    socket: Vec<bool>,
}

impl Local {
    fn new(side: &Side, d: usize) -> Local {
        let dt = &side.dead[d];
        let index: HashMap<usize, usize> = dt.nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); dt.nodes.len()];
        let mut edges = Vec::new();
        for (ei, &(a, b)) in dt.edges.iter().enumerate() {
            let (a, b) = (index[&a], index[&b]);
            adj[a].push((b, ei));
            adj[b].push((a, ei));
            edges.push((a, b));
        }
        let socket = dt.nodes.iter().map(|&v| side.owner[v] != NIL).collect();
        Local {
            nodes: dt.nodes.clone(),
            adj,
            edges,
            socket,
        }
    }

    fn root(&self) -> usize {
        self.socket.iter().position(|&s| s).expect("dead tree has sockets")
    }

    /// Every edge set whose removal leaves exactly one socket per piece.
    fn minimal_cut_sets(&self) -> Vec<Vec<usize>> {
        let r = self.root();
        self.cut_options(r, usize::MAX)
            .into_iter()
            .map(|(mut c, _)| {
                c.sort_unstable();
                c
            })
            .collect()
    }

    fn cut_options(&self, v: usize, parent: usize) -> Vec<(Vec<usize>, bool)> {
        let mut acc = vec![(Vec::new(), self.socket[v])];
        for &(c, ei) in &self.adj[v] {
            if c == parent {
                continue;
            }
            let child = self.cut_options(c, v);
            let mut next = Vec::new();
            for (ca, ha) in &acc {
                for (cc, hc) in &child {
                    if !(*ha && *hc) {
                        next.push(([ca.as_slice(), cc].concat(), *ha || *hc));
                    }
                    if *hc {
                        let mut cut = [ca.as_slice(), cc].concat();
                        cut.push(ei);
                        next.push((cut, *ha));
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// Shapes left on the sockets when `cut` (edge index, fixed local end)
    /// is removed.
    fn shapes(&self, cut: &[(usize, Option<usize>)], table: &mut Shapes) -> Vec<(usize, u32)> {
        let n = self.nodes.len();
        let mut removed = vec![false; self.edges.len()];
        let mut phi = vec![0u32; n];
        for &(ei, f) in cut {
            removed[ei] = true;
            if let Some(x) = f {
                phi[x] += 1;
            }
        }
        let mut out = Vec::new();
        for s in 0..n {
            if !self.socket[s] {
                continue;
            }
            if let Some(shape) = self.shape_rec(s, usize::MAX, &removed, &phi) {
                out.push((self.nodes[s], table.intern(shape)));
            }
        }
        out.sort_unstable();
        out
    }

    fn shape_rec(&self, v: usize, parent: usize, removed: &[bool], phi: &[u32]) -> Option<String> {
        let mut items: Vec<String> = (0..phi[v]).map(|_| "p".to_string()).collect();
        for &(c, ei) in &self.adj[v] {
            if c != parent && !removed[ei] {
                if let Some(s) = self.shape_rec(c, v, removed, phi) {
                    items.push(s);
                }
            }
        }
        match items.len() {
            0 => None,
            1 => items.pop(),
            _ => {
                items.sort();
                Some(format!("({})", items.join(",")))
            }
        }
    }

    fn endpoint_edges(&self, cut: &[(usize, Option<usize>)]) -> Vec<EndpointEdge> {
        cut.iter()
            .map(|&(ei, f)| {
                let (a, b) = self.edges[ei];
                let (u, v) = (self.nodes[a], self.nodes[b]);
                match f {
                    Some(x) => EndpointEdge::fixed_at(u, v, self.nodes[x]),
                    None => EndpointEdge::free(u, v),
                }
            })
            .collect()
    }
}

/// Work limit for enumerating one dead tree (cut sets times endpoint choices).
const OUTCOME_WORK: u64 = 2_000_000;

/// All distinct outcomes of dead tree `d` with at least `min_phi` φ-leaves,
/// best first; `None` when the enumeration would exceed the work limit.
pub(crate) fn dead_tree_outcomes(side: &Side, d: usize, min_phi: u32, table: &mut Shapes) -> Option<Vec<Outcome>> {
    let local = Local::new(side, d);
    let q = side.dead[d].leaf_count() as u32;
    let cuts = q - 1;
    let max_free = cuts.saturating_sub(min_phi);
    let sets = local.minimal_cut_sets();
    let per_set: u64 = (0..=max_free.min(cuts))
        .map(|f| binomial(cuts as u64, f as u64) * (1u64 << (cuts - f)))
        .sum();
    if sets.len() as u64 * per_set > OUTCOME_WORK {
        return None;
    }
    let mut seen: HashMap<Vec<(usize, u32)>, usize> = HashMap::new();
    let mut out: Vec<Outcome> = Vec::new();
    let mut choice: Vec<(usize, Option<usize>)> = Vec::with_capacity(cuts as usize);
    for set in &sets {
        choose_ends(&local, set, 0, max_free, &mut choice, &mut |c| {
            let shapes = local.shapes(c, table);
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(shapes.clone()) {
                e.insert(out.len());
                out.push(Outcome {
                    shapes,
                    phi: c.iter().filter(|x| x.1.is_some()).count() as u32,
                    cuts: local.endpoint_edges(c),
                });
            }
        });
    }
    out.sort_by_key(|o| std::cmp::Reverse(o.phi));
    Some(out)
}

fn choose_ends(
    local: &Local,
    set: &[usize],
    i: usize,
    free_left: u32,
    choice: &mut Vec<(usize, Option<usize>)>,
    f: &mut impl FnMut(&[(usize, Option<usize>)]),
) {
    if i == set.len() {
        f(choice);
        return;
    }
    let ei = set[i];
    let (a, b) = local.edges[ei];
    for end in [Some(a), Some(b), None] {
        if end.is_none() && free_left == 0 {
            continue;
        }
        choice.push((ei, end));
        choose_ends(local, set, i + 1, free_left - end.is_none() as u32, choice, f);
        choice.pop();
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Outcome of a dead tree that hangs single φ-leaves on the sockets in
/// `phi` (which must miss at least one socket).
pub(crate) fn pendant_outcome(side: &Side, d: usize, phi: &[usize], table: &mut Shapes) -> Outcome {
    let dt = &side.dead[d];
    let root = *dt
        .sockets
        .iter()
        .find(|s| !phi.contains(s))
        .expect("one socket keeps its edge");
    let mut cuts = Vec::new();
    for &s in &dt.sockets {
        if s == root {
            continue;
        }
        let &(a, b) = dt
            .edges
            .iter()
            .find(|&&(a, b)| a == s || b == s)
            .expect("socket has a dead edge");
        cuts.push(if phi.contains(&s) {
            EndpointEdge::fixed_at(a, b, s)
        } else {
            EndpointEdge::free(a, b)
        });
    }
    let p = table.intern("p".to_string());
    let mut shapes: Vec<(usize, u32)> = phi.iter().map(|&s| (s, p)).collect();
    shapes.sort_unstable();
    Outcome {
        shapes,
        phi: phi.len() as u32,
        cuts,
    }
}

/// The outcome produced by an explicit minimal cut of dead tree `d`.
pub(crate) fn outcome_of_cuts(side: &Side, d: usize, cuts: &[EndpointEdge], table: &mut Shapes) -> Option<Outcome> {
    let local = Local::new(side, d);
    let index: HashMap<usize, usize> = local.nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut choice = Vec::new();
    for e in cuts {
        let ei = local
            .edges
            .iter()
            .position(|&(a, b)| {
                let (a, b) = (local.nodes[a], local.nodes[b]);
                (a, b) == (e.u, e.v) || (a, b) == (e.v, e.u)
            })?;
        choice.push((ei, e.fixed.map(|x| index[&x])));
    }
    let mut ids: Vec<usize> = choice.iter().map(|c| c.0).collect();
    ids.sort_unstable();
    if !local.minimal_cut_sets().contains(&ids) {
        return None;
    }
    Some(Outcome {
        shapes: local.shapes(&choice, table),
        phi: cuts.iter().filter(|e| e.fixed.is_some()).count() as u32,
        cuts: cuts.to_vec(),
    })
}

/// A realization pair found by the assignment step.
#[derive(Clone, Debug)]
pub(crate) struct Placement {
    pub phi: u32,
    pub cuts: [Vec<EndpointEdge>; 2],
}

/// Sockets of each forest edge in both trees.
pub(crate) struct EdgeTable {
    pub edges: Vec<ForestEdge>,
    pub sockets: Vec<[Vec<usize>; 2]>,
}

impl EdgeTable {
    pub fn new(sides: &[Side; 2]) -> EdgeTable {
        let mut m: BTreeMap<ForestEdge, [Vec<usize>; 2]> = BTreeMap::new();
        for (i, s) in sides.iter().enumerate() {
            for (e, l) in s.sockets_by_edge() {
                m.entry(e).or_default()[i] = l;
            }
        }
        EdgeTable {
            edges: m.keys().copied().collect(),
            sockets: m.into_values().collect(),
        }
    }
}

/// Best single-φ placement: sockets are paired along each forest edge and
/// every dead tree whose sockets are all paired must keep one of them free.
/// That is a minimum edge cover of the clause graph, with pairs as
/// variables. Tries up to `cap` pairings.
pub(crate) fn pendant_placement(sides: &[Side; 2], et: &EdgeTable, cap: usize, table: &mut Shapes) -> Placement {
    let choices: Vec<Vec<Vec<usize>>> = et
        .sockets
        .iter()
        .map(|[a, b]| {
            let (h1, h2) = (a.len(), b.len());
            let (long, short) = (h1.max(h2), h1.min(h2));
            let mut combos = Vec::new();
            combinations(long, short, cap, &mut combos);
            combos
        })
        .collect();
    let mut best: Option<(u32, Vec<[usize; 2]>, Vec<usize>)> = None;
    let mut counter = vec![0usize; choices.len()];
    for _ in 0..cap {
        let pairs: Vec<[usize; 2]> = et
            .sockets
            .iter()
            .zip(&choices)
            .zip(&counter)
            .flat_map(|((socks, ch), &c)| {
                let pick = &ch[c];
                let [a, b] = socks;
                let long_first = a.len() >= b.len();
                pick.iter()
                    .enumerate()
                    .map(move |(j, &x)| if long_first { [a[x], b[j]] } else { [a[j], b[x]] })
            })
            .collect();
        let withheld = cover_for(sides, &pairs);
        let phi = (pairs.len() - withheld.len()) as u32;
        if best.as_ref().is_none_or(|b| phi > b.0) {
            best = Some((phi, pairs, withheld));
        }
        // next pairing in mixed radix
        let mut i = 0;
        while i < counter.len() {
            counter[i] += 1;
            if counter[i] < choices[i].len() {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
        if i == counter.len() {
            break;
        }
    }
    let (phi, pairs, withheld) = best.expect("at least one pairing");
    let mut with_phi: [Vec<Vec<usize>>; 2] = [
        vec![Vec::new(); sides[0].dead.len()],
        vec![Vec::new(); sides[1].dead.len()],
    ];
    for (vi, p) in pairs.iter().enumerate() {
        if withheld.contains(&vi) {
            continue;
        }
        for side in 0..2 {
            let d = sides[side].dead_of[p[side]] as usize;
            with_phi[side][d].push(p[side]);
        }
    }
    let cuts = [0, 1].map(|side| {
        (0..sides[side].dead.len())
            .flat_map(|d| pendant_outcome(&sides[side], d, &with_phi[side][d], table).cuts)
            .collect()
    });
    Placement { phi, cuts }
}

/// Indices of pairs that must go without a φ-leaf.
fn cover_for(sides: &[Side; 2], pairs: &[[usize; 2]]) -> Vec<usize> {
    let mut paired = [
        vec![0usize; sides[0].dead.len()],
        vec![0usize; sides[1].dead.len()],
    ];
    for p in pairs {
        for s in 0..2 {
            paired[s][sides[s].dead_of[p[s]] as usize] += 1;
        }
    }
    let mut vertex: [Vec<usize>; 2] = [vec![usize::MAX; sides[0].dead.len()], vec![usize::MAX; sides[1].dead.len()]];
    let mut count = 0;
    for s in 0..2 {
        for (d, dt) in sides[s].dead.iter().enumerate() {
            if paired[s][d] == dt.leaf_count() {
                vertex[s][d] = count;
                count += 1;
            }
        }
    }
    let mut g = ClauseGraph::new(count);
    for (vi, p) in pairs.iter().enumerate() {
        let clauses: Vec<usize> = (0..2)
            .map(|s| vertex[s][sides[s].dead_of[p[s]] as usize])
            .filter(|&c| c != usize::MAX)
            .collect();
        if !clauses.is_empty() {
            g.add_variable(vi, &clauses);
        }
    }
    minimum_edge_cover(&g).expect("every saturated clause has a variable")
}

/// k-subsets of 0..n in lexicographic order, at most `cap` of them.
fn combinations(n: usize, k: usize, cap: usize, out: &mut Vec<Vec<usize>>) {
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        if out.len() >= cap {
            return;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if cur[i] < n - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Exact placement by search over dead-tree outcomes of both trees.
pub(crate) struct Joint<'s, 'a> {
    sides: &'s [Side<'a>; 2],
    et: &'s EdgeTable,
    /// Outcome lists per dead tree, `vars[side][dead]`.
    vars: [Vec<Vec<Outcome>>; 2],
}

impl<'s, 'a> Joint<'s, 'a> {
    /// Outcome lists for every dead tree; `None` if a dead tree is too large
    /// to enumerate. Outcomes with fewer than `q - 1 - slack` φ-leaves or
    /// with a shape on an edge the other tree has no sockets on are dropped.
    pub fn new(sides: &'s [Side<'a>; 2], et: &'s EdgeTable, slack: u32, table: &mut Shapes) -> Option<Self> {
        let mut vars: [Vec<Vec<Outcome>>; 2] = [Vec::new(), Vec::new()];
        for s in 0..2 {
            for d in 0..sides[s].dead.len() {
                let q = sides[s].dead[d].leaf_count() as u32;
                let min_phi = (q - 1).saturating_sub(slack);
                let mut outs = dead_tree_outcomes(&sides[s], d, min_phi, table)?;
                outs.retain(|o| o.shapes.iter().all(|&(v, _)| other_has_sockets(&sides[s], et, v)));
                vars[s].push(outs);
            }
        }
        Some(Joint { sides, et, vars })
    }

    /// Same, with the first tree's dead trees fixed to the given outcomes.
    pub fn with_fixed_first(
        sides: &'s [Side<'a>; 2],
        et: &'s EdgeTable,
        first: Vec<Outcome>,
        table: &mut Shapes,
    ) -> Option<Self> {
        let mut vars: [Vec<Vec<Outcome>>; 2] = [first.into_iter().map(|o| vec![o]).collect(), Vec::new()];
        for d in 0..sides[1].dead.len() {
            vars[1].push(dead_tree_outcomes(&sides[1], d, 0, table)?);
        }
        Some(Joint { sides, et, vars })
    }

    /// A placement with the most φ-leaves, provided it has at least `need`.
    pub fn solve(&self, need: u32) -> Option<Placement> {
        let groups = self.groups();
        let ubs: Vec<u32> = groups.iter().map(|g| self.group_ub(g)).collect();
        let total_ub: u32 = ubs.iter().sum();
        if total_ub < need {
            return None;
        }
        let mut got = 0u32;
        let mut cuts = [Vec::new(), Vec::new()];
        for (gi, g) in groups.iter().enumerate() {
            let later: u32 = ubs[gi + 1..].iter().sum();
            let floor = need.saturating_sub(got + later);
            let (phi, chosen) = self.solve_group(g, floor)?;
            got += phi;
            for (&(s, d), &o) in g.vars.iter().zip(&chosen) {
                cuts[s].extend(self.vars[s][d][o].cuts.iter().copied());
            }
        }
        (got >= need).then_some(Placement { phi: got, cuts })
    }

    fn group_ub(&self, g: &Group) -> u32 {
        let side_ub = |s: usize| -> u32 {
            g.vars
                .iter()
                .filter(|v| v.0 == s)
                .map(|&(s, d)| self.vars[s][d].first().map_or(0, |o| o.phi))
                .sum()
        };
        side_ub(0).min(side_ub(1))
    }

    fn groups(&self) -> Vec<Group> {
        let n0 = self.sides[0].dead.len();
        let total = n0 + self.sides[1].dead.len();
        let id = |s: usize, d: usize| if s == 0 { d } else { n0 + d };
        let mut parent: Vec<usize> = (0..total).collect();
        let mut touching: Vec<Vec<usize>> = Vec::new();
        for socks in &self.et.sockets {
            let mut vs: Vec<usize> = Vec::new();
            for s in 0..2 {
                for &v in &socks[s] {
                    vs.push(id(s, self.sides[s].dead_of[v] as usize));
                }
            }
            vs.sort_unstable();
            vs.dedup();
            for w in vs.windows(2) {
                let (a, b) = (root(&mut parent, w[0]), root(&mut parent, w[1]));
                parent[a] = b;
            }
            touching.push(vs);
        }
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..total {
            let r = root(&mut parent, x);
            by_root.entry(r).or_default().push(x);
        }
        by_root
            .into_values()
            .map(|members| {
                // order: breadth first through shared forest edges
                let mut order: Vec<usize> = Vec::new();
                let mut placed = vec![false; total];
                for &start in &members {
                    if placed[start] {
                        continue;
                    }
                    placed[start] = true;
                    order.push(start);
                    let mut i = order.len() - 1;
                    while i < order.len() {
                        let x = order[i];
                        i += 1;
                        for vs in &touching {
                            if vs.contains(&x) {
                                for &y in vs {
                                    if !placed[y] {
                                        placed[y] = true;
                                        order.push(y);
                                    }
                                }
                            }
                        }
                    }
                }
                let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &x)| (x, i)).collect();
                let mut checks: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
                for (ei, vs) in touching.iter().enumerate() {
                    if let Some(last) = vs.iter().filter_map(|x| pos.get(x)).max() {
                        if vs.iter().all(|x| pos.contains_key(x)) {
                            checks[*last].push(ei);
                        }
                    }
                }
                let vars = order
                    .iter()
                    .map(|&x| if x < n0 { (0, x) } else { (1, x - n0) })
                    .collect();
                Group { vars, checks }
            })
            .collect()
    }

    fn solve_group(&self, g: &Group, floor: u32) -> Option<(u32, Vec<usize>)> {
        let k = g.vars.len();
        // remaining best φ per side from position i on
        let mut rem = vec![[0u32; 2]; k + 1];
        for i in (0..k).rev() {
            let (s, d) = g.vars[i];
            rem[i] = rem[i + 1];
            rem[i][s] += self.vars[s][d].first().map_or(0, |o| o.phi);
        }
        let mut st = GroupSearch {
            best: None,
            chosen: vec![0; k],
            floor,
            cap: rem[0][0].min(rem[0][1]),
        };
        self.group_rec(g, &rem, 0, [0, 0], &mut st);
        st.best
    }

    fn group_rec(&self, g: &Group, rem: &[[u32; 2]], i: usize, cur: [u32; 2], st: &mut GroupSearch) {
        if st.best.as_ref().is_some_and(|b| b.0 == st.cap) {
            return;
        }
        let bound = (cur[0] + rem[i][0]).min(cur[1] + rem[i][1]);
        if bound < st.floor || st.best.as_ref().is_some_and(|b| bound <= b.0) {
            return;
        }
        if i == g.vars.len() {
            debug_assert_eq!(cur[0], cur[1]);
            st.best = Some((cur[0], st.chosen.clone()));
            return;
        }
        let (s, d) = g.vars[i];
        for (oi, o) in self.vars[s][d].iter().enumerate() {
            st.chosen[i] = oi;
            if !g.checks[i].iter().all(|&ei| self.edge_agrees(g, ei, &st.chosen)) {
                continue;
            }
            let mut next = cur;
            next[s] += o.phi;
            self.group_rec(g, rem, i + 1, next, st);
        }
    }

    fn edge_agrees(&self, g: &Group, ei: usize, chosen: &[usize]) -> bool {
        let seq = |s: usize| -> Vec<u32> {
            self.et.sockets[ei][s]
                .iter()
                .filter_map(|&v| {
                    let d = self.sides[s].dead_of[v] as usize;
                    let pos = g.vars.iter().position(|&x| x == (s, d)).expect("var in group");
                    self.vars[s][d][chosen[pos]].shape_at(v)
                })
                .collect()
        };
        seq(0) == seq(1)
    }
}

struct Group {
    vars: Vec<(usize, usize)>,
    /// Forest edges whose sockets are all decided once position i is set.
    checks: Vec<Vec<usize>>,
}

struct GroupSearch {
    best: Option<(u32, Vec<usize>)>,
    chosen: Vec<usize>,
    floor: u32,
    cap: u32,
}

fn root(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn other_has_sockets(this: &Side, et: &EdgeTable, v: usize) -> bool {
    let e = this.slot[v].expect("socket").edge;
    match et.edges.binary_search(&e) {
        Ok(i) => et.sockets[i].iter().all(|l| !l.is_empty()),
        Err(_) => false,
    }
}

/// Minimal cut sets of dead tree `d` as tree edges.
pub(crate) fn minimal_cut_edge_sets(side: &Side, d: usize) -> Vec<Vec<(usize, usize)>> {
    let local = Local::new(side, d);
    local
        .minimal_cut_sets()
        .into_iter()
        .map(|s| s.into_iter().map(|ei| side.dead[d].edges[ei]).collect())
        .collect()
}
