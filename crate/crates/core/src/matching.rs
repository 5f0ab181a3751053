//! Maximum matching in general graphs (Edmonds' blossom algorithm) and
//! minimum edge cover, on the clause graphs that arise from φ assignment.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Clauses are vertices; a variable occurring in two clauses is an edge,
/// one occurring in a single clause is a loop.
#[derive(Clone, Debug, Default)]
pub struct ClauseGraph {
    pub vertices: usize,
    /// `(clause, clause, variable)`
    pub edges: Vec<(usize, usize, usize)>,
    /// `(clause, variable)`
    pub loops: Vec<(usize, usize)>,
}

impl ClauseGraph {
    pub fn new(vertices: usize) -> Self {
        ClauseGraph {
            vertices,
            ..Default::default()
        }
    }

    /// Adds a variable given the clauses it occurs in (one or two).
    pub fn add_variable(&mut self, var: usize, clauses: &[usize]) {
        match *clauses {
            [a] => self.loops.push((a, var)),
            [a, b] if a == b => self.loops.push((a, var)),
            [a, b] => self.edges.push((a, b, var)),
            _ => panic!("a variable occurs in one or two clauses"),
        }
    }
}

/// Mate array of a maximum matching of the simple graph on `n` vertices.
pub fn max_matching_mates(n: usize, edges: &[(usize, usize)]) -> Vec<Option<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a != b && !adj[a].contains(&b) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut b = Blossom {
        adj,
        mate: vec![None; n],
        parent: vec![None; n],
        base: (0..n).collect(),
        used: vec![false; n],
        in_blossom: vec![false; n],
        queue: VecDeque::new(),
    };
    // greedy start
    for v in 0..n {
        if b.mate[v].is_none() {
            if let Some(&w) = b.adj[v].iter().find(|&&w| b.mate[w].is_none()) {
                b.mate[v] = Some(w);
                b.mate[w] = Some(v);
            }
        }
    }
    for root in 0..n {
        if b.mate[root].is_none() {
            if let Some(end) = b.augmenting_path(root) {
                b.augment(end);
            }
        }
    }
    b.mate
}

struct Blossom {
    adj: Vec<Vec<usize>>,
    mate: Vec<Option<usize>>,
    parent: Vec<Option<usize>>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
    queue: VecDeque<usize>,
}

impl Blossom {
    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; self.adj.len()];
        loop {
            a = self.base[a];
            seen[a] = true;
            match self.mate[a] {
                Some(m) => a = self.parent[m].expect("even vertex has parent"),
                None => break,
            }
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            b = self.parent[self.mate[b].expect("odd path")].expect("parent");
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            let m = self.mate[v].expect("matched");
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[m]] = true;
            self.parent[v] = Some(child);
            child = m;
            v = self.parent[m].expect("parent");
        }
    }

    fn augmenting_path(&mut self, root: usize) -> Option<usize> {
        let n = self.adj.len();
        self.used.iter_mut().for_each(|x| *x = false);
        self.parent.iter_mut().for_each(|x| *x = None);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        self.queue.clear();
        self.queue.push_back(root);
        while let Some(v) = self.queue.pop_front() {
            for i in 0..self.adj[v].len() {
                let to = self.adj[v][i];
                if self.base[v] == self.base[to] || self.mate[v] == Some(to) {
                    continue;
                }
                let to_is_even = to == root
                    || self.mate[to].is_some_and(|m| self.parent[m].is_some());
                if to_is_even {
                    let cur = self.lca(v, to);
                    self.in_blossom.iter_mut().for_each(|x| *x = false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for u in 0..n {
                        if self.in_blossom[self.base[u]] {
                            self.base[u] = cur;
                            if !self.used[u] {
                                self.used[u] = true;
                                self.queue.push_back(u);
                            }
                        }
                    }
                } else if self.parent[to].is_none() {
                    self.parent[to] = Some(v);
                    match self.mate[to] {
                        None => return Some(to),
                        Some(m) => {
                            self.used[m] = true;
                            self.queue.push_back(m);
                        }
                    }
                }
            }
        }
        None
    }

    fn augment(&mut self, mut v: usize) {
        loop {
            let pv = self.parent[v].expect("path");
            let ppv = self.mate[pv];
            self.mate[v] = Some(pv);
            self.mate[pv] = Some(v);
            match ppv {
                Some(next) => v = next,
                None => break,
            }
        }
    }
}

/// Indices into `g.edges` of a maximum matching. Loops never take part.
pub fn maximum_matching(g: &ClauseGraph) -> Vec<usize> {
    let pairs: Vec<(usize, usize)> = g.edges.iter().map(|&(a, b, _)| (a, b)).collect();
    let mate = max_matching_mates(g.vertices, &pairs);
    let mut out = Vec::new();
    let mut done = vec![false; g.vertices];
    for (i, &(a, b, _)) in g.edges.iter().enumerate() {
        if !done[a] && !done[b] && mate[a] == Some(b) {
            done[a] = true;
            done[b] = true;
            out.push(i);
        }
    }
    out
}

/// Variables of a minimum edge cover: a maximum matching extended by one
/// edge or loop per unmatched vertex.
pub fn minimum_edge_cover(g: &ClauseGraph) -> Result<Vec<usize>> {
    let matching = maximum_matching(g);
    let mut covered = vec![false; g.vertices];
    let mut vars = Vec::new();
    for &i in &matching {
        let (a, b, var) = g.edges[i];
        covered[a] = true;
        covered[b] = true;
        vars.push(var);
    }
    for v in 0..g.vertices {
        if covered[v] {
            continue;
        }
        let pick = g
            .edges
            .iter()
            .find(|&&(a, b, _)| a == v || b == v)
            .map(|&(a, b, var)| (var, Some(if a == v { b } else { a })))
            .or_else(|| g.loops.iter().find(|&&(a, _)| a == v).map(|&(_, var)| (var, None)));
        match pick {
            Some((var, other)) => {
                covered[v] = true;
                if let Some(o) = other {
                    covered[o] = true;
                }
                vars.push(var);
            }
            None => return Err(Error::UncoverableVertex(v)),
        }
    }
    Ok(vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> ClauseGraph {
        let mut g = ClauseGraph::new(n);
        for (i, &(a, b)) in edges.iter().enumerate() {
            g.add_variable(i, &[a, b]);
        }
        g
    }

    #[test]
    fn small_matchings() {
        assert_eq!(maximum_matching(&graph(3, &[(0, 1), (1, 2), (2, 0)])).len(), 1);
        assert_eq!(maximum_matching(&graph(2, &[(0, 1)])).len(), 1);
        let c5 = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        assert_eq!(maximum_matching(&c5).len(), 2);
        // two triangles joined by an edge need the blossom step
        let g = graph(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]);
        assert_eq!(maximum_matching(&g).len(), 3);
    }

    #[test]
    fn small_covers() {
        assert_eq!(minimum_edge_cover(&graph(2, &[(0, 1)])).unwrap().len(), 1);
        assert_eq!(minimum_edge_cover(&graph(3, &[(0, 1), (1, 2), (2, 0)])).unwrap().len(), 2);
        assert_eq!(minimum_edge_cover(&graph(4, &[(0, 1), (1, 2), (2, 3)])).unwrap().len(), 2);
        let mut g = graph(3, &[(0, 1)]);
        assert!(matches!(minimum_edge_cover(&g), Err(Error::UncoverableVertex(2))));
        g.add_variable(9, &[2]);
        assert_eq!(minimum_edge_cover(&g).unwrap(), vec![0, 9]);
    }
}
