//! Distances for one pair or for many trees against a reference.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::eaf::{replug_distance_capped, PhiStats, ReplugBound};
use crate::error::{Error, Result};
use crate::maf::{tbr_distance_capped, tbr_lower_bound_approx};
use crate::newick::parse_newick;
use crate::reduce::{reduce_pair_with, ReduceOptions};
use crate::search::{uspr_distance, SearchOptions};
use crate::tree::{harmonize, UTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Uspr,
    Replug,
    Tbr,
    TbrApprox,
}

#[derive(Clone, Copy, Debug)]
pub struct PairOptions {
    pub metric: Metric,
    pub search: SearchOptions,
    pub chains: bool,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            metric: Metric::Uspr,
            search: SearchOptions::default(),
            chains: true,
        }
    }
}

/// The SPR field of a record: a distance or the limit that stopped the search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Uspr {
    Solved(usize),
    Timeout,
    Memout,
}

impl fmt::Display for Uspr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Uspr::Solved(d) => write!(f, "{d}"),
            Uspr::Timeout => f.write_str("timeout"),
            Uspr::Memout => f.write_str("memout"),
        }
    }
}

impl Serialize for Uspr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Uspr::Solved(d) => s.serialize_u64(*d as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

/// One output line. Missing values were not requested or not reached.
#[derive(Clone, Debug, Default, Serialize)]
pub struct BatchRecord {
    pub pair_id: usize,
    pub n_common_taxa: usize,
    pub atbr_lb: Option<usize>,
    pub dtbr: Option<usize>,
    pub dreplug: Option<usize>,
    pub duspr: Option<Uspr>,
    pub trees_explored: u64,
    pub wall_ms: u128,
    /// Error or warning text.
    pub note: Option<String>,
}

pub const TSV_HEADER: &str = "pair_id\tn_common_taxa\tatbr_lb\tdtbr\tdreplug\tduspr\ttrees_explored\twall_ms\tnote";

fn cell<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), T::to_string)
}

impl BatchRecord {
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.pair_id,
            self.n_common_taxa,
            cell(&self.atbr_lb),
            cell(&self.dtbr),
            cell(&self.dreplug),
            cell(&self.duspr),
            self.trees_explored,
            self.wall_ms,
            cell(&self.note).replace(['\t', '\n'], " "),
        )
    }

    fn failed(pair_id: usize, e: &Error) -> BatchRecord {
        BatchRecord {
            pair_id,
            note: Some(format!("error: {e}")),
            ..Default::default()
        }
    }
}

/// Distances between two trees on the same leaf set. Fails only on input
/// errors; resource limits end up in `duspr`.
pub fn measure_pair(t1: &UTree, t2: &UTree, opts: &PairOptions) -> Result<BatchRecord> {
    let start = Instant::now();
    let (a, b) = harmonize(t1, t2)?;
    let n = a.leaf_count();
    let mut rec = BatchRecord {
        n_common_taxa: n,
        ..Default::default()
    };
    if n < 4 {
        // one tree per leaf set
        rec.atbr_lb = Some(0);
        rec.dtbr = Some(0);
        rec.dreplug = Some(0);
        rec.duspr = Some(Uspr::Solved(0));
        rec.note = Some(format!("only {n} common taxa"));
        return Ok(rec);
    }
    let atbr = tbr_lower_bound_approx(&a, &b)?;
    rec.atbr_lb = Some(atbr);
    if opts.metric == Metric::TbrApprox {
        rec.wall_ms = start.elapsed().as_millis();
        return Ok(rec);
    }
    let (ra, rb, _) = reduce_pair_with(&a, &b, ReduceOptions { chains: opts.chains })?;
    let mut phi = PhiStats::default();
    match opts.metric {
        Metric::Tbr => {
            rec.dtbr = Some(tbr_distance_capped(&ra, &rb, atbr, usize::MAX));
        }
        Metric::Replug => {
            let dtbr = tbr_distance_capped(&ra, &rb, atbr, usize::MAX);
            rec.dtbr = Some(dtbr);
            match replug_distance_capped(&ra, &rb, dtbr, usize::MAX, &mut phi)? {
                ReplugBound::Exact(d, _) => rec.dreplug = Some(d),
                ReplugBound::AtLeast(_) => unreachable!("uncapped"),
            }
        }
        _ => match uspr_distance(&ra, &rb, opts.search) {
            Ok(r) => {
                // both are at most the SPR distance, so these calls stay cheap
                let cap = r.distance + 1;
                let dtbr = tbr_distance_capped(&ra, &rb, atbr, cap);
                rec.dtbr = Some(dtbr);
                if let ReplugBound::Exact(d, _) = replug_distance_capped(&ra, &rb, dtbr, cap, &mut phi)? {
                    rec.dreplug = Some(d);
                }
                rec.duspr = Some(Uspr::Solved(r.distance));
                rec.trees_explored = r.stats.trees_explored;
            }
            Err(Error::ResourceLimit { what, lower_bound, explored }) => {
                rec.duspr = Some(if what == "time" { Uspr::Timeout } else { Uspr::Memout });
                rec.trees_explored = explored;
                rec.note = Some(format!("distance is at least {lower_bound}"));
            }
            Err(e) => return Err(e),
        },
    }
    rec.wall_ms = start.elapsed().as_millis();
    Ok(rec)
}

/// Compares a gene tree with the reference restricted to their common taxa.
pub fn compare_to_reference(reference: &UTree, gene: &UTree, pair_id: usize, opts: &PairOptions) -> BatchRecord {
    let ours: HashSet<String> = reference.label_names().into_iter().collect();
    let common: Vec<String> = gene.label_names().into_iter().filter(|n| ours.contains(n)).collect();
    if common.is_empty() {
        return BatchRecord {
            pair_id,
            note: Some("error: no taxa in common with the reference".into()),
            ..Default::default()
        };
    }
    let r = (|| {
        let a = reference.restrict_names(&common)?;
        let b = gene.restrict_names(&common)?;
        measure_pair(&a, &b, opts)
    })();
    match r {
        Ok(mut rec) => {
            rec.pair_id = pair_id;
            rec
        }
        Err(e) => BatchRecord::failed(pair_id, &e),
    }
}

/// Runs every non-empty line of `trees` against the reference on `jobs`
/// threads and hands the records to `emit` in input order. Pair ids are
/// line numbers.
pub fn run_batch<F: FnMut(BatchRecord)>(
    reference: &UTree,
    trees: &str,
    opts: &PairOptions,
    jobs: usize,
    mut emit: F,
) -> Result<()> {
    let lines: Vec<(usize, &str)> = trees
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|s| {
        s.spawn(|| {
            pool.install(|| {
                lines.par_iter().enumerate().for_each_with(tx, |tx, (k, &(id, line))| {
                    let rec = match parse_newick(line) {
                        Ok(g) => compare_to_reference(reference, &g, id, opts),
                        Err(e) => BatchRecord::failed(id, &e),
                    };
                    let _ = tx.send((k, rec));
                });
            });
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (k, rec) in rx {
            pending.insert(k, rec);
            while let Some(rec) = pending.remove(&next) {
                emit(rec);
                next += 1;
            }
        }
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restricted_comparison() {
        let reference = parse_newick("((a,b),(c,d),((e,f),(g,h)));").unwrap();
        let gene = parse_newick("((a,c),(b,d),(e,z));").unwrap();
        let rec = compare_to_reference(&reference, &gene, 7, &PairOptions::default());
        assert_eq!(rec.pair_id, 7);
        assert_eq!(rec.n_common_taxa, 5);
        assert_eq!(rec.duspr, Some(Uspr::Solved(2)));
        let far = parse_newick("((x,y),(z,w));").unwrap();
        let rec = compare_to_reference(&reference, &far, 1, &PairOptions::default());
        assert!(rec.note.unwrap().starts_with("error"));
    }

    #[test]
    fn records_in_input_order() {
        let reference = parse_newick("((a,b),(c,d),((e,f),(g,h)));").unwrap();
        let trees = "((a,b),(c,d),((e,f),(g,h)));\n\n(a,(b;\n((a,h),(c,d),((e,f),(g,b)));\n(a,b,c);\n";
        let mut out = Vec::new();
        run_batch(&reference, trees, &PairOptions::default(), 3, |r| out.push(r)).unwrap();
        let ids: Vec<usize> = out.iter().map(|r| r.pair_id).collect();
        assert_eq!(ids, [1, 3, 4, 5]);
        assert_eq!(out[0].duspr, Some(Uspr::Solved(0)));
        assert!(out[1].note.as_ref().unwrap().starts_with("error"));
        assert!(matches!(out[2].duspr, Some(Uspr::Solved(d)) if d > 0));
        assert_eq!(out[3].duspr, Some(Uspr::Solved(0)));
        let json = serde_json::to_string(&out[2]).unwrap();
        assert!(json.contains("\"duspr\":"));
        assert_eq!(out[2].to_tsv().split('\t').count(), TSV_HEADER.split('\t').count());
    }
}
