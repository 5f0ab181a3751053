//! Unrooted binary leaf-labelled trees.
//!
//! A [`UTree`] stores dense node ids `0..len` with adjacency lists. Leaves
//! carry a taxon id that indexes into a shared, lexicographically sorted
//! [`TaxonSet`], so comparing ids compares labels.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forest::{NodeLabel, PhyloForest};

/// Label reserved for φ-leaves of endpoint forests.
pub const PHI: &str = "phi";

/// Sorted table of taxon names. Taxon ids are positions in this table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaxonSet {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl TaxonSet {
    pub fn new<I, S>(names: I) -> Arc<TaxonSet>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Arc::new(TaxonSet { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// An unrooted binary X-tree: every node is a labelled leaf or an unlabelled
/// node of degree 3. Trees with one or two leaves are the degenerate single
/// node and single edge.
#[derive(Clone)]
pub struct UTree {
    taxa: Arc<TaxonSet>,
    adj: Vec<Vec<usize>>,
    leaf: Vec<Option<u32>>,
}

impl UTree {
    /// Builds a tree from raw parts, checking the degree and connectivity
    /// invariants.
    pub fn from_parts(
        taxa: Arc<TaxonSet>,
        adj: Vec<Vec<usize>>,
        leaf: Vec<Option<u32>>,
    ) -> Result<UTree> {
        let t = UTree { taxa, adj, leaf };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let n = self.adj.len();
        if n == 0 {
            return Err(Error::TooFewLeaves);
        }
        let mut seen_taxa = vec![false; self.taxa.len()];
        let mut edges = 0;
        for v in 0..n {
            let d = self.adj[v].len();
            edges += d;
            match self.leaf[v] {
                Some(t) => {
                    if d > 1 {
                        return Err(Error::NonBinary(d));
                    }
                    if std::mem::replace(&mut seen_taxa[t as usize], true) {
                        return Err(Error::DuplicateLabel(self.taxa.name(t).to_string()));
                    }
                }
                None => {
                    if d != 3 {
                        return Err(Error::NonBinary(d));
                    }
                }
            }
        }
        if edges / 2 != n - 1 || !self.is_connected() {
            return Err(Error::Cyclic);
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.adj.len()
    }

    /// Converts a yielded, φ-free, single-component forest into a tree.
    pub fn from_forest(forest: &PhyloForest) -> Result<UTree> {
        let f = forest.compacted();
        if f.components().len() != 1 {
            return Err(Error::Cyclic);
        }
        let mut leaf = Vec::with_capacity(f.capacity());
        for v in 0..f.capacity() {
            leaf.push(match f.label(v) {
                NodeLabel::Taxon(t) => Some(t),
                NodeLabel::Unlabeled => None,
                NodeLabel::Phi => return Err(Error::ReservedLabel(PHI.to_string())),
            });
        }
        let adj = (0..f.capacity()).map(|v| f.neighbors(v).to_vec()).collect();
        UTree::from_parts(f.taxa().clone(), adj, leaf)
    }

    pub fn to_forest(&self) -> PhyloForest {
        let mut f = PhyloForest::new(self.taxa.clone());
        for v in 0..self.len() {
            f.add_node(match self.leaf[v] {
                Some(t) => NodeLabel::Taxon(t),
                None => NodeLabel::Unlabeled,
            });
        }
        for (a, b) in self.edges() {
            f.add_edge(a, b);
        }
        f
    }

    pub fn taxa(&self) -> &Arc<TaxonSet> {
        &self.taxa
    }

    pub(crate) fn adj_mut(&mut self) -> &mut [Vec<usize>] {
        &mut self.adj
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn leaf_label(&self, v: usize) -> Option<u32> {
        self.leaf[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.leaf[v].is_some()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.len() && self.adj[a].contains(&b)
    }

    /// Undirected edges as `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.len().saturating_sub(1));
        for a in 0..self.len() {
            for &b in &self.adj[a] {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&v| self.leaf[v].is_some())
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf.iter().filter(|l| l.is_some()).count()
    }

    /// Sorted taxon ids present in the tree.
    pub fn leaf_set(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.leaf.iter().flatten().copied().collect();
        s.sort_unstable();
        s
    }

    pub fn label_names(&self) -> Vec<String> {
        self.leaf_set()
            .into_iter()
            .map(|t| self.taxa.name(t).to_string())
            .collect()
    }

    /// Node carrying taxon `t`, if present.
    pub fn node_of(&self, t: u32) -> Option<usize> {
        self.leaf.iter().position(|&l| l == Some(t))
    }

    /// Map from taxon id to node id (`usize::MAX` when absent).
    pub fn leaf_nodes(&self) -> Vec<usize> {
        let mut m = vec![usize::MAX; self.taxa.len()];
        for (v, l) in self.leaf.iter().enumerate() {
            if let Some(t) = l {
                m[*t as usize] = v;
            }
        }
        m
    }

    /// Re-expresses this tree over another taxon table containing all of its
    /// labels.
    pub fn with_taxa(&self, taxa: &Arc<TaxonSet>) -> Result<UTree> {
        if Arc::ptr_eq(&self.taxa, taxa) {
            return Ok(self.clone());
        }
        let mut leaf = Vec::with_capacity(self.len());
        for l in &self.leaf {
            leaf.push(match l {
                Some(t) => {
                    let name = self.taxa.name(*t);
                    Some(taxa.id(name).ok_or_else(|| Error::UnknownLabel(name.to_string()))?)
                }
                None => None,
            });
        }
        Ok(UTree {
            taxa: taxa.clone(),
            adj: self.adj.clone(),
            leaf,
        })
    }

    /// The induced tree `T|V` on the given taxa.
    pub fn restrict(&self, labels: &[u32]) -> Result<UTree> {
        if labels.is_empty() {
            return Err(Error::TooFewLeaves);
        }
        let mut keep = vec![false; self.taxa.len()];
        for &t in labels {
            if (t as usize) >= keep.len() || self.node_of(t).is_none() {
                let name = self
                    .taxa
                    .names()
                    .get(t as usize)
                    .cloned()
                    .unwrap_or_else(|| format!("#{t}"));
                return Err(Error::UnknownLabel(name));
            }
            keep[t as usize] = true;
        }
        let mut f = self.to_forest();
        for v in 0..self.len() {
            if let Some(t) = self.leaf[v] {
                if !keep[t as usize] {
                    f.set_label(v, NodeLabel::Unlabeled);
                }
            }
        }
        f.normalize();
        UTree::from_forest(&f)
    }

    /// Restriction by label names.
    pub fn restrict_names<S: AsRef<str>>(&self, names: &[S]) -> Result<UTree> {
        let ids = names
            .iter()
            .map(|n| {
                self.taxa
                    .id(n.as_ref())
                    .ok_or_else(|| Error::UnknownLabel(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        self.restrict(&ids)
    }

    /// Orders taxa of the subtree hanging from `v` away from `parent` and
    /// returns its minimum taxon id. Children lists come out sorted by their
    /// own minimum, which is the canonical ordering used everywhere.
    fn rooted_children(&self, root: usize) -> (Vec<u32>, Vec<Vec<usize>>) {
        let n = self.len();
        let mut parent = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root];
        parent[root] = root;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in &self.adj[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    stack.push(w);
                }
            }
        }
        let mut min = vec![u32::MAX; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &v in order.iter().rev() {
            if let Some(t) = self.leaf[v] {
                min[v] = min[v].min(t);
            }
            let mut ch: Vec<usize> = self.adj[v]
                .iter()
                .copied()
                .filter(|&w| parent[w] == v && w != root)
                .collect();
            ch.sort_by_key(|&w| min[w]);
            for &w in &ch {
                min[v] = min[v].min(min[w]);
            }
            children[v] = ch;
        }
        (min, children)
    }

    fn smallest_leaf(&self) -> usize {
        self.leaves()
            .min_by_key(|&v| self.leaf[v])
            .expect("tree has a leaf")
    }

    /// Canonical Newick string: rooted at the smallest label, children
    /// ordered by the smallest label below them.
    pub fn canonical_form(&self) -> String {
        let mut out = String::new();
        if self.len() == 1 {
            out.push_str(self.taxa.name(self.leaf[0].unwrap()));
            out.push(';');
            return out;
        }
        let r = self.smallest_leaf();
        let (_, children) = self.rooted_children(r);
        let p = self.adj[r][0];
        out.push('(');
        out.push_str(self.taxa.name(self.leaf[r].unwrap()));
        if self.is_leaf(p) {
            out.push(',');
            out.push_str(self.taxa.name(self.leaf[p].unwrap()));
        } else {
            for &c in &children[p] {
                out.push(',');
                self.write_subtree(c, &children, &mut out);
            }
        }
        out.push_str(");");
        out
    }

    fn write_subtree(&self, v: usize, children: &[Vec<usize>], out: &mut String) {
        if let Some(t) = self.leaf[v] {
            out.push_str(self.taxa.name(t));
            return;
        }
        out.push('(');
        for (i, &c) in children[v].iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            self.write_subtree(c, children, out);
        }
        out.push(')');
    }

    /// Compact canonical key over taxon ids: the canonical rooting written
    /// in preorder, one token per leaf and an `OPEN` token per internal node.
    /// Equal iff the trees (over one taxon table) are isomorphic.
    pub fn canonical_key(&self) -> CanonKey {
        let mut out: Vec<u16> = Vec::with_capacity(2 * self.len());
        if self.len() == 1 {
            out.push(self.leaf[0].unwrap() as u16);
            return CanonKey(out.into());
        }
        let r = self.smallest_leaf();
        let (_, children) = self.rooted_children(r);
        out.push(self.leaf[r].unwrap() as u16);
        let mut stack = vec![self.adj[r][0]];
        while let Some(v) = stack.pop() {
            match self.leaf[v] {
                Some(t) => out.push(t as u16),
                None => {
                    out.push(CanonKey::OPEN);
                    stack.push(children[v][1]);
                    stack.push(children[v][0]);
                }
            }
        }
        CanonKey(out.into())
    }

    /// Rebuilds a tree from its canonical key.
    pub fn from_key(taxa: &Arc<TaxonSet>, key: &CanonKey) -> UTree {
        let toks = &key.0;
        let mut adj: Vec<Vec<usize>> = Vec::with_capacity(toks.len());
        let mut leaf = Vec::with_capacity(toks.len());
        adj.push(Vec::with_capacity(1));
        leaf.push(Some(toks[0] as u32));
        // internal nodes still waiting for children, with the count missing
        let mut pending: Vec<(usize, u8)> = Vec::new();
        for &t in &toks[1..] {
            let v = adj.len();
            adj.push(Vec::with_capacity(3));
            let parent = match pending.last_mut() {
                Some((p, missing)) => {
                    let p = *p;
                    *missing -= 1;
                    if *missing == 0 {
                        pending.pop();
                    }
                    p
                }
                None => 0,
            };
            adj[parent].push(v);
            adj[v].push(parent);
            if t == CanonKey::OPEN {
                leaf.push(None);
                pending.push((v, 2));
            } else {
                leaf.push(Some(t as u32));
            }
        }
        UTree {
            taxa: taxa.clone(),
            adj,
            leaf,
        }
    }

    /// Label-preserving isomorphism test.
    pub fn same_topology(&self, other: &UTree) -> bool {
        self.canonical_form() == other.canonical_form()
    }

    /// Non-trivial and trivial splits: for every edge, the sorted taxa on the
    /// side not containing the smallest taxon.
    pub fn splits(&self) -> Vec<Vec<u32>> {
        if self.len() == 1 {
            return Vec::new();
        }
        let r = self.smallest_leaf();
        let (_, children) = self.rooted_children(r);
        let mut out = Vec::new();
        let mut below: Vec<Vec<u32>> = vec![Vec::new(); self.len()];
        let mut order = vec![r];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            i += 1;
            if v == r {
                order.push(self.adj[r][0]);
            } else {
                order.extend(children[v].iter().copied());
            }
        }
        for &v in order.iter().rev() {
            if v == r {
                continue;
            }
            let mut s = Vec::new();
            if let Some(t) = self.leaf[v] {
                s.push(t);
            }
            for &c in &children[v] {
                s.extend(below[c].iter().copied());
            }
            s.sort_unstable();
            out.push(s.clone());
            below[v] = s;
        }
        out
    }
}

impl PartialEq for UTree {
    fn eq(&self, other: &Self) -> bool {
        self.same_topology(other)
    }
}

impl Eq for UTree {}

impl fmt::Debug for UTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UTree({})", self.canonical_form())
    }
}

impl fmt::Display for UTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_form())
    }
}

/// Compact canonical encoding used as a hash key for visited sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonKey(Box<[u16]>);

impl CanonKey {
    const OPEN: u16 = u16::MAX;

    pub fn byte_size(&self) -> usize {
        self.0.len() * 2
    }
}

/// Brings two trees onto one taxon table and checks they share a leaf set.
pub fn harmonize(t1: &UTree, t2: &UTree) -> Result<(UTree, UTree)> {
    if t1.label_names() != t2.label_names() {
        return Err(Error::LabelMismatch);
    }
    if Arc::ptr_eq(t1.taxa(), t2.taxa()) {
        return Ok((t1.clone(), t2.clone()));
    }
    let taxa = TaxonSet::new(t1.label_names());
    Ok((t1.with_taxa(&taxa)?, t2.with_taxa(&taxa)?))
}

/// Checks that two trees already share a taxon table and a leaf set.
pub fn check_pair(t1: &UTree, t2: &UTree) -> Result<()> {
    if !Arc::ptr_eq(t1.taxa(), t2.taxa()) && t1.taxa() != t2.taxa() {
        return Err(Error::LabelMismatch);
    }
    if t1.leaf_set() != t2.leaf_set() {
        return Err(Error::LabelMismatch);
    }
    Ok(())
}
