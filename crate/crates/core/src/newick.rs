//! Newick reading and writing for unrooted binary trees.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::forest::{NodeLabel, PhyloForest};
use crate::tree::{TaxonSet, UTree, PHI};

fn is_label_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, b'_' | b'.' | b'-' | b'|')
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    adj: Vec<Vec<usize>>,
    labels: Vec<Option<String>>,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    fn skip_ws(&mut self) -> Result<()> {
        loop {
            match self.s.get(self.pos) {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => match self.s[self.pos..].iter().position(|&c| c == b']') {
                    Some(off) => self.pos += off + 1,
                    None => return self.err("unterminated comment"),
                },
                _ => return Ok(()),
            }
        }
    }

    fn peek(&mut self) -> Result<Option<u8>> {
        self.skip_ws()?;
        Ok(self.s.get(self.pos).copied())
    }

    fn node(&mut self, label: Option<String>) -> usize {
        self.adj.push(Vec::new());
        self.labels.push(label);
        self.adj.len() - 1
    }

    fn label(&mut self) -> Result<Option<String>> {
        self.skip_ws()?;
        let start = self.pos;
        if self.s.get(self.pos) == Some(&b'\'') {
            return self.err("quoted labels are not supported");
        }
        while self.pos < self.s.len() && is_label_char(self.s[self.pos]) {
            self.pos += 1;
        }
        if self.pos == start {
            return Ok(None);
        }
        Ok(Some(
            String::from_utf8_lossy(&self.s[start..self.pos]).into_owned(),
        ))
    }

    fn branch_length(&mut self) -> Result<()> {
        if self.peek()? == Some(b':') {
            self.pos += 1;
            self.skip_ws()?;
            let start = self.pos;
            while self.pos < self.s.len()
                && (self.s[self.pos].is_ascii_digit()
                    || matches!(self.s[self.pos], b'.' | b'-' | b'+' | b'e' | b'E'))
            {
                self.pos += 1;
            }
            if self.pos == start {
                return self.err("missing branch length");
            }
        }
        Ok(())
    }

    /// Parses a subtree and returns its top node.
    fn subtree(&mut self) -> Result<usize> {
        if self.peek()? == Some(b'(') {
            self.pos += 1;
            let v = self.node(None);
            loop {
                let c = self.subtree()?;
                self.adj[v].push(c);
                self.adj[c].push(v);
                match self.peek()? {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.err("expected ',' or ')'"),
                }
            }
            // internal labels are discarded
            self.label()?;
            self.branch_length()?;
            Ok(v)
        } else {
            match self.label()? {
                Some(l) => {
                    let v = self.node(Some(l));
                    self.branch_length()?;
                    Ok(v)
                }
                None => self.err("empty leaf label"),
            }
        }
    }
}

/// Parses one Newick tree terminated by `;`.
pub fn parse_newick(text: &str) -> Result<UTree> {
    let (labels, adj) = parse_graph(text)?;
    let names: Vec<&String> = labels.iter().flatten().collect();
    let mut seen = HashSet::new();
    for n in &names {
        if n.as_str() == PHI {
            return Err(Error::ReservedLabel(PHI.to_string()));
        }
        if !seen.insert(n.as_str()) {
            return Err(Error::DuplicateLabel(n.to_string()));
        }
    }
    let taxa = TaxonSet::new(names.iter().map(|s| s.as_str()));
    build_tree(&taxa, &labels, &adj)
}

/// Parses a tree over an existing taxon table.
pub fn parse_newick_with(text: &str, taxa: &std::sync::Arc<TaxonSet>) -> Result<UTree> {
    let t = parse_newick(text)?;
    t.with_taxa(taxa)
}

type Graph = (Vec<Option<String>>, Vec<Vec<usize>>);

fn parse_graph(text: &str) -> Result<Graph> {
    let mut p = Parser {
        s: text.as_bytes(),
        pos: 0,
        adj: Vec::new(),
        labels: Vec::new(),
    };
    if p.peek()?.is_none() {
        return Err(Error::TooFewLeaves);
    }
    p.subtree()?;
    match p.peek()? {
        Some(b';') => p.pos += 1,
        Some(b')') => return p.err("unbalanced ')'"),
        Some(_) => return p.err("expected ';'"),
        None => return p.err("missing ';' or unbalanced '('"),
    }
    if p.peek()?.is_some() {
        return p.err("trailing input after ';'");
    }
    Ok((p.labels, p.adj))
}

fn build_tree(
    taxa: &std::sync::Arc<TaxonSet>,
    labels: &[Option<String>],
    adj: &[Vec<usize>],
) -> Result<UTree> {
    let mut f = PhyloForest::new(taxa.clone());
    for l in labels {
        f.add_node(match l {
            Some(name) => NodeLabel::Taxon(taxa.id(name).expect("label indexed")),
            None => NodeLabel::Unlabeled,
        });
    }
    for (a, nb) in adj.iter().enumerate() {
        for &b in nb {
            if a < b {
                f.add_edge(a, b);
            }
        }
    }
    if taxa.is_empty() {
        return Err(Error::TooFewLeaves);
    }
    for v in f.nodes().collect::<Vec<_>>() {
        if !f.label(v).is_labeled() && f.degree(v) > 3 {
            return Err(Error::NonBinary(f.degree(v)));
        }
    }
    f.normalize();
    for v in f.nodes() {
        if f.label(v).is_labeled() && f.degree(v) > 1 {
            return Err(Error::Syntax {
                pos: 0,
                msg: "labelled node is not a leaf".into(),
            });
        }
    }
    UTree::from_forest(&f)
}

/// Serializes a tree; the output re-parses to an isomorphic tree.
pub fn to_newick(tree: &UTree) -> String {
    tree.canonical_form()
}

/// Canonical string of a tree; see [`UTree::canonical_form`].
pub fn canonical_form(tree: &UTree) -> String {
    tree.canonical_form()
}

/// Parses every non-empty line of `text` as a tree.
pub fn parse_lines(text: &str) -> Vec<Result<UTree>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(parse_newick)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_unrooted_and_rooted_forms() {
        let a = parse_newick("(a,b,(c,d));").unwrap();
        let b = parse_newick("((a,b),(c,d));").unwrap();
        assert_eq!(a.canonical_form(), b.canonical_form());
        assert_eq!(a.leaf_count(), 4);
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_newick("(a,(b,c)"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(parse_newick("(a,,b);"), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse_newick("(a,b,(c,a));"),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(matches!(
            parse_newick("(a,b,c,d);"),
            Err(Error::NonBinary(4))
        ));
        assert!(matches!(parse_newick(""), Err(Error::TooFewLeaves)));
        assert!(matches!(
            parse_newick("(a,phi,c);"),
            Err(Error::ReservedLabel(_))
        ));
        assert!(matches!(parse_newick("(a,b));"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn drops_lengths_comments_and_internal_labels() {
        let t = parse_newick("((a:1.5,b:2)x:0.1,[note] c:1e-3, d);").unwrap();
        let u = parse_newick("(a,b,(c,d));").unwrap();
        assert_eq!(t, u);
    }

    #[test]
    fn degenerate_sizes() {
        assert_eq!(to_newick(&parse_newick("a;").unwrap()), "a;");
        assert_eq!(to_newick(&parse_newick("(b,a);").unwrap()), "(a,b);");
        assert_eq!(to_newick(&parse_newick("(c,b,a);").unwrap()), "(a,b,c);");
    }

    #[test]
    fn canonical_form_examples() {
        let c = |s| canonical_form(&parse_newick(s).unwrap());
        assert_eq!(c("(a,b,(c,d));"), c("(c,d,(b,a));"));
        assert_ne!(c("(a,b,(c,d));"), c("(a,c,(b,d));"));
        assert_eq!(c("(a,b,(c,d));"), "(a,b,(c,d));");
    }

    #[test]
    fn key_round_trip() {
        let t = parse_newick("((a,(e,f)),b,(c,(d,g)));").unwrap();
        let k = t.canonical_key();
        let u = UTree::from_key(t.taxa(), &k);
        assert_eq!(t, u);
        assert_eq!(u.canonical_key(), k);
    }
}
