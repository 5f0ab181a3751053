//! X-φ-forests: general graphs over taxon and φ leaves with yield
//! (suppression) semantics. Used for agreement forests, endpoint forests and
//! the intermediate graphs of replug sequences.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tree::{TaxonSet, PHI};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    Unlabeled,
    Taxon(u32),
    Phi,
}

impl NodeLabel {
    pub fn is_labeled(self) -> bool {
        !matches!(self, NodeLabel::Unlabeled)
    }
}

/// An edge together with at most one fixed ("augmented") endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndpointEdge {
    pub u: usize,
    pub v: usize,
    pub fixed: Option<usize>,
}

impl EndpointEdge {
    pub fn free(u: usize, v: usize) -> Self {
        EndpointEdge { u, v, fixed: None }
    }

    pub fn fixed_at(u: usize, v: usize, at: usize) -> Self {
        debug_assert!(at == u || at == v);
        EndpointEdge { u, v, fixed: Some(at) }
    }

    /// Contribution to the weight when cut: 1 with a fixed end, 2 without.
    pub fn cost(&self) -> usize {
        if self.fixed.is_some() {
            1
        } else {
            2
        }
    }

    pub fn same_edge(&self, a: usize, b: usize) -> bool {
        (self.u == a && self.v == b) || (self.u == b && self.v == a)
    }
}

#[derive(Clone, Debug)]
pub struct PhyloForest {
    taxa: Arc<TaxonSet>,
    adj: Vec<Vec<usize>>,
    label: Vec<NodeLabel>,
    alive: Vec<bool>,
}

impl PhyloForest {
    pub fn new(taxa: Arc<TaxonSet>) -> Self {
        PhyloForest {
            taxa,
            adj: Vec::new(),
            label: Vec::new(),
            alive: Vec::new(),
        }
    }

    pub fn taxa(&self) -> &Arc<TaxonSet> {
        &self.taxa
    }

    pub fn add_node(&mut self, label: NodeLabel) -> usize {
        self.adj.push(Vec::new());
        self.label.push(label);
        self.alive.push(true);
        self.adj.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) -> Result<()> {
        let i = self.adj.get(a).and_then(|n| n.iter().position(|&x| x == b));
        let j = self.adj.get(b).and_then(|n| n.iter().position(|&x| x == a));
        match (i, j) {
            (Some(i), Some(j)) => {
                self.adj[a].swap_remove(i);
                self.adj[b].swap_remove(j);
                Ok(())
            }
            _ => Err(Error::NoSuchEdge(a, b)),
        }
    }

    /// Inserts a new unlabelled node in the middle of edge `(a, b)`.
    pub fn subdivide(&mut self, a: usize, b: usize) -> Result<usize> {
        self.remove_edge(a, b)?;
        let z = self.add_node(NodeLabel::Unlabeled);
        self.add_edge(a, z);
        self.add_edge(z, b);
        Ok(z)
    }

    pub fn remove_node(&mut self, v: usize) {
        for w in std::mem::take(&mut self.adj[v]) {
            if let Some(i) = self.adj[w].iter().position(|&x| x == v) {
                self.adj[w].swap_remove(i);
            }
        }
        self.alive[v] = false;
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.adj.len() && self.alive[a] && self.adj[a].contains(&b)
    }

    /// Number of node slots, including removed ones.
    pub fn capacity(&self) -> usize {
        self.adj.len()
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.adj.len()).filter(move |&v| self.alive[v])
    }

    pub fn node_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn label(&self, v: usize) -> NodeLabel {
        self.label[v]
    }

    pub fn set_label(&mut self, v: usize, l: NodeLabel) {
        self.label[v] = l;
    }

    /// Edges as `(a, b)` with `a < b`; parallel edges are listed once each.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in self.nodes() {
            for &b in &self.adj[a] {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.nodes().map(|v| self.adj[v].len()).sum::<usize>() / 2
    }

    pub fn phi_count(&self) -> usize {
        self.nodes().filter(|&v| self.label[v] == NodeLabel::Phi).count()
    }

    pub fn node_of_taxon(&self, t: u32) -> Option<usize> {
        self.nodes().find(|&v| self.label[v] == NodeLabel::Taxon(t))
    }

    /// Connected components as sorted node lists, ordered by smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.adj.len()];
        let mut out = Vec::new();
        for s in self.nodes() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                i += 1;
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_forest(&self) -> bool {
        let comps = self.components().len();
        self.edge_count() + comps == self.node_count() && self.no_self_loops()
    }

    fn no_self_loops(&self) -> bool {
        self.nodes().all(|v| !self.adj[v].contains(&v))
    }

    /// Weight `2(|F| - 1) - q(F)`. Meaningful on yielded forests.
    pub fn weight(&self) -> i64 {
        2 * (self.components().len() as i64 - 1) - self.phi_count() as i64
    }

    /// Taxon blocks of the components, each sorted, ordered by smallest
    /// taxon. Components without taxa are skipped.
    pub fn blocks(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = self
            .components()
            .into_iter()
            .map(|c| {
                let mut b: Vec<u32> = c
                    .iter()
                    .filter_map(|&v| match self.label[v] {
                        NodeLabel::Taxon(t) => Some(t),
                        _ => None,
                    })
                    .collect();
                b.sort_unstable();
                b
            })
            .filter(|b| !b.is_empty())
            .collect();
        out.sort();
        out
    }

    /// Yield in place: repeatedly delete unlabelled nodes of degree at most
    /// one and suppress unlabelled nodes of degree two.
    pub fn normalize(&mut self) {
        let mut stack: Vec<usize> = self.nodes().collect();
        while let Some(v) = stack.pop() {
            if !self.alive[v] || self.label[v].is_labeled() {
                continue;
            }
            match self.adj[v].len() {
                0 | 1 => {
                    let nb = self.adj[v].clone();
                    self.remove_node(v);
                    stack.extend(nb);
                }
                2 => {
                    let (a, b) = (self.adj[v][0], self.adj[v][1]);
                    if a == b || a == v || b == v {
                        // part of a cycle collapsing onto itself; leave it
                        continue;
                    }
                    self.remove_node(v);
                    self.add_edge(a, b);
                    stack.push(a);
                    stack.push(b);
                }
                _ => {}
            }
        }
    }

    /// The yielded forest, failing when the graph has a cycle.
    pub fn yielded(&self) -> Result<PhyloForest> {
        if !self.is_forest() {
            return Err(Error::Cyclic);
        }
        let mut f = self.clone();
        f.normalize();
        Ok(f.compacted())
    }

    /// Copy with dead slots dropped and ids renumbered densely.
    pub fn compacted(&self) -> PhyloForest {
        let mut map = vec![usize::MAX; self.adj.len()];
        let mut f = PhyloForest::new(self.taxa.clone());
        for v in self.nodes() {
            map[v] = f.add_node(self.label[v]);
        }
        for v in self.nodes() {
            for &w in &self.adj[v] {
                if v < w {
                    f.add_edge(map[v], map[w]);
                }
            }
        }
        f
    }

    /// `F ÷ E`: delete the edges, hang a φ-leaf on every fixed endpoint and
    /// yield.
    pub fn cut(&self, edges: &[EndpointEdge]) -> Result<PhyloForest> {
        let mut f = self.cut_raw(edges)?;
        if !f.is_forest() {
            return Err(Error::Cyclic);
        }
        f.normalize();
        Ok(f.compacted())
    }

    /// `F - E` without yielding.
    pub fn cut_raw(&self, edges: &[EndpointEdge]) -> Result<PhyloForest> {
        let mut f = self.clone();
        for e in edges {
            if let Some(p) = e.fixed {
                if p != e.u && p != e.v {
                    return Err(Error::NotAnEaf("fixed endpoint is not on the edge"));
                }
                if f.label[p] == NodeLabel::Phi {
                    return Err(Error::NotAnEaf("a φ-leaf cannot be a fixed endpoint"));
                }
            }
            f.remove_edge(e.u, e.v)?;
            if let Some(p) = e.fixed {
                let phi = f.add_node(NodeLabel::Phi);
                f.add_edge(p, phi);
            }
        }
        Ok(f)
    }

    fn label_str(&self, v: usize) -> String {
        match self.label[v] {
            NodeLabel::Taxon(t) => self.taxa.name(t).to_string(),
            NodeLabel::Phi => PHI.to_string(),
            NodeLabel::Unlabeled => String::new(),
        }
    }

    fn subtree_string(&self, v: usize, parent: usize) -> String {
        if self.label[v].is_labeled() && (self.adj[v].len() <= 1) {
            return self.label_str(v);
        }
        let mut parts: Vec<String> = self.adj[v]
            .iter()
            .filter(|&&w| w != parent)
            .map(|&w| self.subtree_string(w, v))
            .collect();
        if self.label[v].is_labeled() {
            parts.push(self.label_str(v));
        }
        parts.sort();
        format!("({})", parts.join(","))
    }

    fn component_string(&self, comp: &[usize]) -> String {
        if comp.len() == 1 {
            return self.label_str(comp[0]);
        }
        let root_of = |r: usize| -> String {
            let w = self.adj[r][0];
            format!("({},{})", self.label_str(r), self.subtree_string(w, r))
        };
        let taxon_root = comp
            .iter()
            .copied()
            .filter(|&v| self.adj[v].len() == 1)
            .filter_map(|v| match self.label[v] {
                NodeLabel::Taxon(t) => Some((t, v)),
                _ => None,
            })
            .min();
        match taxon_root {
            Some((_, r)) => root_of(r),
            None => comp
                .iter()
                .copied()
                .filter(|&v| self.adj[v].len() == 1)
                .map(root_of)
                .min()
                .unwrap_or_default(),
        }
    }

    /// Canonical string of the yielded forest; equal iff the yielded forests
    /// are isomorphic under a label-preserving map (φ-leaves interchangeable).
    pub fn canonical(&self) -> Result<String> {
        let f = self.yielded()?;
        let mut parts: Vec<String> = f
            .components()
            .iter()
            .map(|c| f.component_string(c))
            .collect();
        parts.sort();
        Ok(parts.join(" "))
    }

    /// Components of the yielded forest as Newick strings, φ-leaves rendered
    /// as `phi`.
    pub fn to_newick_components(&self) -> Result<Vec<String>> {
        let f = self.yielded()?;
        let mut parts: Vec<String> = f
            .components()
            .iter()
            .map(|c| format!("{};", f.component_string(c)))
            .collect();
        parts.sort();
        Ok(parts)
    }

    /// Whether the taxon set of every component restricted from `blocks`
    /// matches; convenience for tests.
    pub fn has_blocks(&self, blocks: &[Vec<u32>]) -> bool {
        let mut b = blocks.to_vec();
        for x in b.iter_mut() {
            x.sort_unstable();
        }
        b.sort();
        self.blocks() == b
    }
}
