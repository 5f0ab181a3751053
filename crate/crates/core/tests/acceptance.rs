//! End-to-end checks, one verdict line per criterion.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treedist::eaf::{extract_replug_sequence, replay_replug_sequence, replug_distance, Eaf};
use treedist::generate::{all_trees, numbered_taxa, random_tree, random_walk_pair, tree_count};
use treedist::maf::tbr_distance;
use treedist::matching::{minimum_edge_cover, ClauseGraph};
use treedist::moves::spr_neighbors;
use treedist::oracle::{bfs_uspr, exhaustive_maf, exhaustive_meaf, TreeSpaceIndex};
use treedist::reduce::reduce_pair;
use treedist::search::{is_spr_path, uspr_distance, SearchOptions, SearchResult};
use treedist::UTree;

/// Pairs on 30 leaves at SPR distance 7.
const PERF_PAIRS: usize = 20;
const PERF_MEAN_LIMIT_S: f64 = 120.0;
/// Random-walk pairs on up to 40 leaves and up to 10 moves.
const SURROGATE_PAIRS: usize = 100;
const SURROGATE_LIMIT_S: f64 = 30.0;
const SURROGATE_MEM: usize = 4096 << 20;
const SURROGATE_COMPLETION: f64 = 0.9;

struct Solved {
    a: UTree,
    b: UTree,
    tbr: usize,
    replug: usize,
    eaf: Eaf,
    spr: SearchResult,
}

impl Solved {
    fn new(a: &UTree, b: &UTree) -> Solved {
        let (replug, eaf) = replug_distance(a, b).unwrap();
        Solved {
            a: a.clone(),
            b: b.clone(),
            tbr: tbr_distance(a, b).unwrap(),
            replug,
            eaf,
            spr: uspr_distance(a, b, SearchOptions::default()).unwrap(),
        }
    }

    fn sandwich(&self) -> bool {
        self.tbr <= self.replug && self.replug <= self.spr.distance
    }

    fn replays(&self) -> bool {
        let moves = match extract_replug_sequence(&self.a, &self.b, &self.eaf) {
            Ok(m) => m,
            Err(_) => return false,
        };
        moves.len() == self.replug
            && replay_replug_sequence(&self.a, &self.b, &moves).unwrap_or(false)
            && self.spr.path.len() == self.spr.distance + 1
            && self.spr.path[0].canonical_key() == self.a.canonical_key()
            && self.spr.path.last().unwrap().canonical_key() == self.b.canonical_key()
            && is_spr_path(&self.spr.path).unwrap_or(false)
    }
}

struct Verdicts {
    all: bool,
}

impl Verdicts {
    fn report(&mut self, n: u32, ok: bool, detail: String) {
        self.all &= ok;
        println!("criterion {n:>2}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    }
}

/// Unlabelled shape of a tree: the smallest rooted encoding over all
/// internal roots.
fn shape(t: &UTree) -> String {
    fn enc(t: &UTree, p: usize, v: usize) -> String {
        if t.is_leaf(v) {
            return "L".into();
        }
        let mut kids: Vec<String> = t.neighbors(v).iter().filter(|&&w| w != p).map(|&w| enc(t, v, w)).collect();
        kids.sort();
        format!("({})", kids.concat())
    }
    (0..t.len())
        .filter(|&v| !t.is_leaf(v))
        .map(|v| enc(t, usize::MAX, v))
        .min()
        .unwrap_or_default()
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut v = Verdicts { all: true };

    // shared instances: every pair on 5 and on 6 leaves, then 300 random
    // 6/7-leaf pairs
    let mut pairs: Vec<(UTree, UTree)> = Vec::new();
    for n in [5, 6] {
        let all = all_trees(&numbered_taxa(n));
        for a in &all {
            for b in &all {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    let n_full = pairs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..300 {
        let taxa = numbered_taxa(6 + i % 2);
        pairs.push((random_tree(&taxa, &mut rng), random_tree(&taxa, &mut rng)));
    }
    let solved: Vec<Solved> = pairs.iter().map(|(a, b)| Solved::new(a, b)).collect();

    // 1
    let bad = solved
        .iter()
        .filter(|s| s.spr.distance != bfs_uspr(&s.a, &s.b).unwrap())
        .count();
    v.report(1, bad == 0, format!("{} pairs, {bad} mismatches against BFS", solved.len()));

    // 2
    let bad = solved
        .iter()
        .filter(|s| s.tbr + 1 != exhaustive_maf(&s.a, &s.b).unwrap().0)
        .count();
    v.report(2, bad == 0, format!("{} pairs, {bad} mismatches against exhaustive MAF", solved.len()));

    // 3
    let checked = &solved[..n_full + 200];
    let bad = checked
        .iter()
        .filter(|s| s.replug != exhaustive_meaf(&s.a, &s.b).unwrap())
        .count();
    v.report(3, bad == 0, format!("{} pairs, {bad} mismatches against exhaustive MEAF", checked.len()));

    // 4: plus 100 pairs on 20 leaves within 8 moves
    let taxa20 = numbered_taxa(20);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let sample20: Vec<Solved> = (0..100)
        .map(|_| {
            let steps = rng.gen_range(1..=8);
            let (a, b) = random_walk_pair(&taxa20, steps, &mut rng);
            Solved::new(&a, &b)
        })
        .collect();
    let bad = solved.iter().chain(&sample20).filter(|s| !s.sandwich()).count();
    let over8 = sample20.iter().filter(|s| s.spr.distance > 8).count();
    v.report(
        4,
        bad == 0 && over8 == 0,
        format!("{} pairs, {bad} violations, {over8} n=20 pairs above 8", solved.len() + sample20.len()),
    );

    // 5
    let bad = solved.iter().chain(&sample20).filter(|s| !s.replays()).count();
    v.report(5, bad == 0, format!("{} pairs, {bad} replay failures", solved.len() + sample20.len()));

    // 6
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut bad, mut over, mut shrunk) = (0, 0, 0);
    let mut max_zero = 0;
    for i in 0..200 {
        let taxa = numbered_taxa(rng.gen_range(5..=8));
        let (a, b) = if i % 2 == 0 {
            let steps = rng.gen_range(1..=3);
            random_walk_pair(&taxa, steps, &mut rng)
        } else {
            (random_tree(&taxa, &mut rng), random_tree(&taxa, &mut rng))
        };
        let (ra, rb, receipt) = reduce_pair(&a, &b).unwrap();
        let d = bfs_uspr(&a, &b).unwrap();
        if tbr_distance(&a, &b).unwrap() != tbr_distance(&ra, &rb).unwrap()
            || replug_distance(&a, &b).unwrap().0 != replug_distance(&ra, &rb).unwrap().0
            || d != bfs_uspr(&ra, &rb).unwrap()
        {
            bad += 1;
        }
        if d == 0 {
            max_zero = max_zero.max(receipt.reduced_leaf_count);
        } else if receipt.reduced_leaf_count > 28 * d {
            over += 1;
        }
        if receipt.reduced_leaf_count < a.leaf_count() {
            shrunk += 1;
        }
    }
    v.report(
        6,
        bad == 0 && over == 0,
        format!(
            "200 pairs, {shrunk} reduced, {bad} distance changes, {over} above 28*dspr; identical pairs keep at most {max_zero} leaves"
        ),
    );

    // 7
    let mut bad = 0;
    let mut trees = 0;
    for n in 4..=8 {
        let all = all_trees(&numbered_taxa(n));
        if all.len() as u128 != tree_count(n) {
            bad += 1;
        }
        for t in &all {
            trees += 1;
            if spr_neighbors(t).unwrap().len() != 2 * (n - 3) * (2 * n - 7) {
                bad += 1;
            }
        }
    }
    v.report(7, bad == 0, format!("{trees} trees on 4 to 8 leaves, {bad} violations"));

    // 8
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = 0;
    let mut uncoverable = 0;
    for _ in 0..500 {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(n.min(12)..=12);
        let mut g = ClauseGraph::new(n);
        let mut occ = Vec::new();
        for var in 0..m {
            let c = if rng.gen_bool(0.25) {
                vec![rng.gen_range(0..n)]
            } else {
                vec![rng.gen_range(0..n), rng.gen_range(0..n)]
            };
            g.add_variable(var, &c);
            occ.push(c);
        }
        let covers = |mask: u32| {
            let mut hit = vec![false; n];
            for (var, c) in occ.iter().enumerate() {
                if mask >> var & 1 == 1 {
                    for &x in c {
                        hit[x] = true;
                    }
                }
            }
            hit.iter().all(|&h| h)
        };
        let best = (0u32..1 << m).filter(|&s| covers(s)).map(u32::count_ones).min();
        let ours = minimum_edge_cover(&g).ok().filter(|c| covers(c.iter().fold(0, |s, &var| s | 1 << var)));
        match (best, ours) {
            (None, None) => uncoverable += 1,
            (Some(b), Some(c)) if b as usize == c.len() => {}
            _ => bad += 1,
        }
    }
    v.report(8, bad == 0, format!("500 graphs ({uncoverable} uncoverable), {bad} mismatches"));

    // 9: 30 leaves, distance 7
    let taxa30 = numbered_taxa(30);
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut perf = Vec::new();
    let mut rejected = 0;
    while perf.len() < PERF_PAIRS {
        let (a, b) = random_walk_pair(&taxa30, 7, &mut rng);
        if replug_distance(&a, &b).unwrap().0 < 6 {
            rejected += 1;
            continue;
        }
        let t = Instant::now();
        let (ra, rb, _) = reduce_pair(&a, &b).unwrap();
        let r = uspr_distance(&ra, &rb, SearchOptions::default()).unwrap();
        let secs = t.elapsed().as_secs_f64();
        if r.distance == 7 {
            perf.push(secs);
        } else {
            rejected += 1;
        }
    }
    let mean = perf.iter().sum::<f64>() / perf.len() as f64;
    let max = perf.iter().copied().fold(0.0, f64::max);
    let taxa40: Vec<_> = (20..=40).map(numbered_taxa).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut done = 0;
    let mut by_steps: HashMap<usize, (usize, usize)> = HashMap::new();
    for _ in 0..SURROGATE_PAIRS {
        let taxa = &taxa40[rng.gen_range(0..taxa40.len())];
        let steps = rng.gen_range(1..=10);
        let (a, b) = random_walk_pair(taxa, steps, &mut rng);
        let opts = SearchOptions {
            max_seconds: Some(SURROGATE_LIMIT_S),
            max_bytes: Some(SURROGATE_MEM),
            ..SearchOptions::default()
        };
        let (ra, rb, _) = reduce_pair(&a, &b).unwrap();
        let e = by_steps.entry(steps).or_default();
        e.1 += 1;
        if let Ok(r) = uspr_distance(&ra, &rb, opts) {
            assert!(r.distance <= steps);
            done += 1;
            e.0 += 1;
        }
    }
    let rate = done as f64 / SURROGATE_PAIRS as f64;
    let mut hard: Vec<_> = by_steps.into_iter().filter(|(_, (d, t))| d < t).collect();
    hard.sort();
    v.report(
        9,
        mean <= PERF_MEAN_LIMIT_S && rate >= SURROGATE_COMPLETION,
        format!(
            "n=30 d=7: mean {mean:.2} s, max {max:.2} s over {PERF_PAIRS} pairs ({rejected} walks rejected); \
             surrogate: {done}/{SURROGATE_PAIRS} solved within {SURROGATE_LIMIT_S} s each, unsolved by walk length {hard:?}"
        ),
    );

    // 10: every pair on 4 to 7 leaves, through one tree per shape weighted
    // by the number of trees of that shape
    let mut lines = Vec::new();
    let mut negative = 0;
    let mut above_one = 0u64;
    for n in 4..=7 {
        let space = TreeSpaceIndex::new(&numbered_taxa(n)).unwrap();
        let mut orbits: HashMap<String, (usize, usize)> = HashMap::new();
        for (i, t) in space.trees.iter().enumerate() {
            orbits.entry(shape(t)).or_insert((i, 0)).1 += 1;
        }
        let (mut gap_replug, mut gap_tbr, mut total) = (0.0, 0.0, 0.0);
        for &(rep, weight) in orbits.values() {
            let dist = space.distances_from(rep);
            let a = &space.trees[rep];
            for (j, b) in space.trees.iter().enumerate() {
                let spr = dist[j] as i64;
                let replug = replug_distance(a, b).unwrap().0 as i64;
                let tbr = tbr_distance(a, b).unwrap() as i64;
                if spr < replug {
                    negative += 1;
                }
                if spr - replug > 1 {
                    above_one += weight as u64;
                }
                gap_replug += (weight as i64 * (spr - replug)) as f64;
                gap_tbr += (weight as i64 * (spr - tbr)) as f64;
                total += weight as f64;
            }
        }
        lines.push(format!(
            "n={n}: {:.4} / {:.4}",
            gap_replug / total,
            gap_tbr / total
        ));
    }
    let gaps = |f: fn(&Solved) -> usize| {
        sample20.iter().map(|s| (s.spr.distance - f(s)) as f64).sum::<f64>() / sample20.len() as f64
    };
    let r20 = gaps(|s| s.replug);
    let t20 = gaps(|s| s.tbr);
    let above20 = sample20.iter().filter(|s| s.spr.distance > s.replug + 1).count();
    lines.push(format!("n=20 sample: {r20:.4} / {t20:.4}"));
    v.report(
        10,
        negative == 0,
        format!(
            "mean dspr-dreplug / dspr-dtbr: {}; dspr-dreplug above 1 on {} small pairs and {above20} n=20 pairs",
            lines.join(", "),
            above_one
        ),
    );

    println!("acceptance finished in {:.1} s", start.elapsed().as_secs_f64());
    if v.all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
