use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use treedist::batch::{measure_pair, run_batch, BatchRecord, Metric, PairOptions, Uspr, TSV_HEADER};
use treedist::eaf::replug_distance;
use treedist::maf::{enumerate_mafs, tbr_distance};
use treedist::newick::parse_lines;
use treedist::oracle::{bfs_uspr, exhaustive_maf, exhaustive_meaf};
use treedist::search::{moved_subtree, uspr_distance, SearchOptions, DEFAULT_SEED};
use treedist::{harmonize, parse_newick, Error, UTree};

#[derive(Parser)]
#[command(version, about = "Exact TBR, replug and SPR distances between unrooted binary trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between the two trees in FILE (or stdin).
    Distance(DistanceArgs),
    /// One record per gene tree against a reference tree.
    Batch(BatchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Uspr,
    Replug,
    Tbr,
    TbrApprox,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Uspr => Metric::Uspr,
            MetricArg::Replug => Metric::Replug,
            MetricArg::Tbr => Metric::Tbr,
            MetricArg::TbrApprox => Metric::TbrApprox,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "uspr")]
    metric: MetricArg,
    /// Keep common chains intact (subtree reduction still applies).
    #[arg(long)]
    no_chain_reduction: bool,
    /// Seed for tie-breaking in the SPR search.
    #[arg(long, env = "USPR_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Time limit per pair in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Memory limit per pair in bytes.
    #[arg(long)]
    max_mem: Option<usize>,
    /// One JSON object per record instead of text.
    #[arg(long)]
    json: bool,
}

impl Common {
    fn options(&self) -> PairOptions {
        PairOptions {
            metric: self.metric.into(),
            search: SearchOptions {
                seed: self.seed,
                max_seconds: self.timeout,
                max_bytes: self.max_mem,
                ..SearchOptions::default()
            },
            chains: !self.no_chain_reduction,
        }
    }
}

#[derive(Args)]
struct DistanceArgs {
    /// File holding exactly two Newick trees; stdin if absent.
    file: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    /// Print the components of an optimal (endpoint) agreement forest.
    #[arg(long)]
    show_forest: bool,
    /// Print a shortest SPR path (uspr only; disables reduction).
    #[arg(long)]
    show_path: bool,
    /// Also compute the brute-force value (at most 8 leaves for uspr, 7 otherwise).
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct BatchArgs {
    /// File holding the reference tree.
    reference: PathBuf,
    /// File with one Newick tree per line.
    trees: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Pairs computed in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

enum Failure {
    Input(String),
    Limit(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::ResourceLimit { .. } => Failure::Limit(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

fn read(path: Option<&PathBuf>) -> Result<String, Failure> {
    let mut s = String::new();
    match path {
        Some(p) => s = std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => {
            io::stdin().read_to_string(&mut s).map_err(|e| Failure::Input(e.to_string()))?;
        }
    }
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Distance(a) => distance(a),
        Command::Batch(a) => batch(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Limit(m)) => {
            eprintln!("{m}");
            ExitCode::from(2)
        }
    }
}

fn distance(args: DistanceArgs) -> Result<(), Failure> {
    let text = read(args.file.as_ref())?;
    let trees = parse_lines(&text).into_iter().collect::<Result<Vec<UTree>, Error>>()?;
    if trees.len() != 2 {
        return Err(Failure::Input(format!("expected two trees, found {}", trees.len())));
    }
    let (a, b) = harmonize(&trees[0], &trees[1])?;
    let opts = args.common.options();
    let mut extra = serde_json::Map::new();
    let mut lines = Vec::new();

    let rec = if args.show_path && opts.metric == Metric::Uspr {
        let start = std::time::Instant::now();
        let r = uspr_distance(&a, &b, opts.search)?;
        for (i, w) in r.path.windows(2).enumerate() {
            let moved = moved_subtree(&w[0], &w[1]).unwrap_or_default().join(",");
            lines.push(format!("{}\tmove {{{moved}}}\t{}", i + 1, w[1]));
        }
        extra.insert("path".into(), json!(r.path.iter().map(|t| t.to_string()).collect::<Vec<_>>()));
        BatchRecord {
            n_common_taxa: a.leaf_count(),
            duspr: Some(Uspr::Solved(r.distance)),
            trees_explored: r.stats.trees_explored,
            wall_ms: start.elapsed().as_millis(),
            ..Default::default()
        }
    } else {
        measure_pair(&a, &b, &opts)?
    };
    if let Some(u @ (Uspr::Timeout | Uspr::Memout)) = rec.duspr {
        let bound = rec.note.clone().unwrap_or_default();
        return Err(Failure::Limit(format!("{u} after {} trees; {bound}", rec.trees_explored)));
    }

    if args.show_forest && a.leaf_count() >= 4 {
        let comps = match opts.metric {
            Metric::Tbr | Metric::TbrApprox => {
                let d = tbr_distance(&a, &b)?;
                let maf = enumerate_mafs(&a, &b, d)?.into_iter().find(|f| f.cuts() == d);
                maf.map(|f| f.to_newick(&a)).transpose()?.unwrap_or_default()
            }
            _ => replug_distance(&a, &b)?.1.to_newick(),
        };
        for c in &comps {
            lines.push(format!("component\t{c}"));
        }
        extra.insert("forest".into(), json!(comps));
    }

    let value = match opts.metric {
        Metric::Uspr => rec.duspr.map(|u| u.to_string()),
        Metric::Replug => rec.dreplug.map(|d| d.to_string()),
        Metric::Tbr => rec.dtbr.map(|d| d.to_string()),
        Metric::TbrApprox => rec.atbr_lb.map(|d| d.to_string()),
    }
    .unwrap_or_default();

    if args.oracle {
        let o = match opts.metric {
            Metric::Uspr => bfs_uspr(&a, &b)?,
            Metric::Replug => exhaustive_meaf(&a, &b)?,
            Metric::Tbr | Metric::TbrApprox => exhaustive_maf(&a, &b)?.0 - 1,
        };
        lines.push(format!("oracle\t{o}"));
        extra.insert("oracle".into(), json!(o));
    }

    let mut out = io::stdout().lock();
    if args.common.json {
        let mut v = serde_json::to_value(&rec).expect("record serializes");
        if let Value::Object(m) = &mut v {
            m.extend(extra);
        }
        writeln!(out, "{v}").ok();
    } else {
        writeln!(out, "{value}").ok();
        for l in lines {
            writeln!(out, "{l}").ok();
        }
    }
    Ok(())
}

fn batch(args: BatchArgs) -> Result<(), Failure> {
    let reference = parse_newick(read(Some(&args.reference))?.trim())?;
    let trees = read(Some(&args.trees))?;
    let opts = args.common.options();
    let json = args.common.json;
    let mut out = io::stdout().lock();
    if !json {
        writeln!(out, "{TSV_HEADER}").ok();
    }
    run_batch(&reference, &trees, &opts, args.jobs, |rec| {
        if let Some(n) = &rec.note {
            if !n.starts_with("distance") {
                eprintln!("warning: pair {}: {n}", rec.pair_id);
            }
        }
        let line = if json {
            serde_json::to_string(&rec).expect("record serializes")
        } else {
            rec.to_tsv()
        };
        writeln!(out, "{line}").ok();
        out.flush().ok();
    })?;
    Ok(())
}
