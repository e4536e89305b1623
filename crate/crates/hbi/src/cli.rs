//! `hbi` command line: `gen-data`, `build`, `query`, `bench`, `validate`.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure, 3 I/O or
//! format error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hbi_core::oracle::{check_containment, expected_draws_closed_form, simulate_expected_draws};
use hbi_core::{
    Anchor, Dataset, ElasticPolicy, GraphParams, HalfIndex, HalfIndexParams, PlanStep,
    PostFilterGraph, Query, RankRange, SearchParams, TreeIndex, TreeParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::{run_benchmark, write_csv, GroundTruth};
use crate::error::{Error, Result};
use crate::storage::{load_index, save_index, StoredIndex};
use crate::synth::{perturbed_rows, synthesize_dataset, synthesize_queries, GaussianMixture};
use crate::vecs::{load_fvecs, write_fvecs};
use crate::workload::{gen_queries, RangeMode, WorkloadSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hbi",
    version,
    about = "Range-filtered approximate nearest neighbor search with elastic graph indexes",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a clustered dataset and write it as fvecs plus attributes.
    GenData(GenDataArgs),
    /// Build an index and optionally save it.
    Build(BuildArgs),
    /// Run a single query against a saved index.
    Query(QueryArgs),
    /// Measure recall and QPS over a beam schedule and emit CSV.
    Bench(BenchArgs),
    /// Check the structural and statistical guarantees; exit 2 on violation.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GenSpec {
    n: usize,
    dim: usize,
    clusters: usize,
    seed: u64,
}

fn parse_gen(s: &str) -> std::result::Result<GenSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, dim, clusters, seed] = parts.as_slice() else {
        return Err("expected n,dim,clusters,seed".into());
    };
    let num = |v: &str| {
        v.parse::<u64>()
            .map_err(|_| format!("`{v}` is not a number"))
    };
    let spec = GenSpec {
        n: num(n)? as usize,
        dim: num(dim)? as usize,
        clusters: num(clusters)? as usize,
        seed: num(seed)?,
    };
    if spec.n == 0 || spec.dim == 0 || spec.clusters == 0 {
        return Err("n, dim and clusters must be at least 1".into());
    }
    Ok(spec)
}

fn parse_pair(s: &str) -> std::result::Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or("expected L,R")?;
    let a = a.trim().parse().map_err(|_| format!("bad bound `{a}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad bound `{b}`"))?;
    Ok((a, b))
}

fn parse_mode(s: &str) -> std::result::Result<RangeMode, String> {
    s.parse::<RangeMode>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Vectors in fvecs format, rows in attribute-rank order unless --attrs is given.
    #[arg(long, conflicts_with = "gen")]
    dataset: Option<PathBuf>,
    /// One raw attribute per line, aligned with --dataset rows.
    #[arg(long, requires = "dataset")]
    attrs: Option<PathBuf>,
    /// Query vectors in fvecs format (defaults to perturbed dataset rows).
    #[arg(long, requires = "dataset")]
    query_vectors: Option<PathBuf>,
    /// Synthesize the dataset: n,dim,clusters,seed.
    #[arg(long, value_parser = parse_gen)]
    gen: Option<GenSpec>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Half,
    Tree,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AnchorArg {
    Left,
    Right,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long, value_enum, default_value = "tree")]
    kind: Kind,
    /// Ladder base B for --kind half.
    #[arg(long, default_value_t = 2)]
    base: usize,
    #[arg(long, value_enum, default_value = "left")]
    anchor: AnchorArg,
    /// Segment-tree fanout f for --kind tree.
    #[arg(long, default_value_t = 2)]
    fanout: usize,
    /// Leaf threshold: ranges with r - l below it are scanned, not indexed.
    #[arg(long, default_value_t = 256)]
    leaf: usize,
    /// Elastic threshold c (defaults to 1/f).
    #[arg(long)]
    elastic: Option<f64>,
    /// Graph out-degree M.
    #[arg(long, default_value_t = 16)]
    degree: usize,
    #[arg(long, default_value_t = 200)]
    efc: usize,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(long, value_parser = parse_gen)]
    gen: GenSpec,
    /// Output fvecs path; attributes go to `<out>.attrs`.
    #[arg(long)]
    out: PathBuf,
    /// Also write this many query vectors to `<out>.queries.fvecs`.
    #[arg(long)]
    queries: Option<usize>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    index: IndexArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Where to save the index.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    index: PathBuf,
    /// Query range as L,R (1-based ranks, inclusive).
    #[arg(long, value_parser = parse_pair)]
    range: (u32, u32),
    /// Query vector as comma-separated components.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    vector: Option<Vec<f32>>,
    /// Which generated query vector to use when --vector is absent.
    #[arg(long, default_value_t = 0)]
    query_id: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "64")]
    beam: Vec<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    build: IndexArgs,
    /// Saved index; built in memory from the index flags when absent.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "10,20,50,100,200")]
    beam: Vec<usize>,
    #[arg(long, value_parser = parse_mode, default_value = "mix")]
    range_mode: RangeMode,
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also report post-filtering on the full-range graph.
    #[arg(long)]
    baseline: bool,
    /// Directory for cached ground truth.
    #[arg(long)]
    gt_cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Largest dataset size in the sweeps.
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Monte-Carlo trials per order-statistics check.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// Entry point; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => return report(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let outcome = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Bench(a) => bench(a),
        Command::Validate(a) => validate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

fn exit_code(e: &Error) -> i32 {
    use hbi_core::Error as Core;
    match e {
        Error::Usage(_) => EXIT_USAGE,
        Error::Core(
            Core::InvalidParameter(_)
            | Core::InvalidRange { .. }
            | Core::NotAnchored { .. }
            | Core::DimensionMismatch { .. }
            | Core::TooFewInRange { .. }
            | Core::UnknownRank(_),
        ) => EXIT_USAGE,
        _ => EXIT_IO,
    }
}

/// Splices `key = value` lines from `--config FILE` in right after the
/// subcommand, so flags given on the command line override them.
fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv);
    };
    let path = argv
        .get(pos + 1)
        .ok_or_else(|| Error::Usage("--config needs a path".into()))?
        .clone();
    let mut rest = argv;
    rest.drain(pos..pos + 2);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(PathBuf::from(&path), e))?;
    let mut injected = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (line, None),
        };
        if key.is_empty() {
            return Err(Error::Usage(format!(
                "config line {} has no key",
                lineno + 1
            )));
        }
        injected.push(OsString::from(format!(
            "--{}",
            key.trim_start_matches("--")
        )));
        if let Some(v) = value {
            injected.push(OsString::from(v));
        }
    }
    // argv[0] is the program, argv[1] the subcommand.
    let split = rest.len().min(2);
    let mut merged: Vec<OsString> = rest[..split].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&rest[split..]);
    Ok(merged)
}

struct Loaded {
    dataset: Dataset,
    mixture: Option<GaussianMixture>,
    query_vector_file: Option<PathBuf>,
}

fn load_data(args: &DataArgs) -> Result<Loaded> {
    if let Some(spec) = args.gen {
        let s = synthesize_dataset(spec.n, spec.dim, spec.clusters, spec.seed)?;
        return Ok(Loaded {
            dataset: s.dataset,
            mixture: Some(s.mixture),
            query_vector_file: None,
        });
    }
    let Some(path) = &args.dataset else {
        return Err(Error::Usage("one of --dataset or --gen is required".into()));
    };
    let file = load_fvecs(path)?;
    let label = path.display().to_string();
    let dataset = match &args.attrs {
        Some(attr_path) => {
            let attrs = read_attributes(attr_path)?;
            let rows: Vec<Vec<f32>> = file.rows().map(<[f32]>::to_vec).collect();
            Dataset::from_attributed_rows(&rows, &attrs, label)?
        }
        None => Dataset::from_flat(file.data, file.dim, label)?,
    };
    Ok(Loaded {
        dataset,
        mixture: None,
        query_vector_file: args.query_vectors.clone(),
    })
}

fn read_attributes(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut offset = 0u64;
    let mut out = Vec::new();
    for line in text.split_inclusive('\n') {
        let value = line.trim();
        if !value.is_empty() {
            let v: f64 = value.parse().map_err(|_| Error::Format {
                offset,
                message: format!("attribute `{value}` is not a number"),
            })?;
            out.push(v);
        }
        offset += line.len() as u64;
    }
    Ok(out)
}

fn query_vectors(loaded: &Loaded, count: usize, seed: u64) -> Result<Vec<Vec<f32>>> {
    if let Some(path) = &loaded.query_vector_file {
        let file = load_fvecs(path)?;
        if file.is_empty() {
            return Err(Error::Format {
                offset: 0,
                message: "query vector file is empty".into(),
            });
        }
        return Ok(file.rows().map(<[f32]>::to_vec).collect());
    }
    Ok(match &loaded.mixture {
        Some(m) => synthesize_queries(m, count, seed),
        None => perturbed_rows(&loaded.dataset, count, 0.05, seed),
    })
}

fn graph_params(args: &IndexArgs, seed: u64) -> GraphParams {
    GraphParams::new(args.degree, args.efc, seed)
}

fn build_index(dataset: &Dataset, args: &IndexArgs, seed: u64) -> Result<StoredIndex> {
    let gp = graph_params(args, seed);
    Ok(match args.kind {
        Kind::Half => {
            let params = HalfIndexParams {
                base: args.base,
                anchor: match args.anchor {
                    AnchorArg::Left => Anchor::Left,
                    AnchorArg::Right => Anchor::Right,
                },
            };
            StoredIndex::Half(HalfIndex::build(dataset, params, gp)?)
        }
        Kind::Tree => {
            let mut params = TreeParams::new(args.fanout, args.leaf);
            if let Some(c) = args.elastic {
                params.elastic = ElasticPolicy { c };
            }
            StoredIndex::Tree(TreeIndex::build(dataset, params, gp)?)
        }
    })
}

fn gen_data(args: GenDataArgs) -> Result<i32> {
    let g = args.gen;
    let s = synthesize_dataset(g.n, g.dim, g.clusters, g.seed)?;
    write_fvecs(&args.out, s.dataset.as_flat(), s.dataset.dim())?;
    let attr_path = with_suffix(&args.out, ".attrs");
    let mut text = String::with_capacity(s.attributes.len() * 20);
    for a in &s.attributes {
        text.push_str(&format!("{a:.17}\n"));
    }
    fs::write(&attr_path, text).map_err(|e| Error::io(&attr_path, e))?;
    println!(
        "wrote {} vectors of dim {} to {}",
        g.n,
        g.dim,
        args.out.display()
    );
    println!("wrote attributes to {}", attr_path.display());
    if let Some(count) = args.queries {
        let qs = synthesize_queries(&s.mixture, count, g.seed);
        let flat: Vec<f32> = qs.into_iter().flatten().collect();
        let qpath = with_suffix(&args.out, ".queries.fvecs");
        write_fvecs(&qpath, &flat, g.dim)?;
        println!("wrote {count} query vectors to {}", qpath.display());
    }
    Ok(EXIT_OK)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn build(args: BuildArgs) -> Result<i32> {
    let loaded = load_data(&args.data)?;
    let ds = &loaded.dataset;
    let index = build_index(ds, &args.index, args.seed)?;
    let stored = index.total_stored_nodes();
    let inserts = index.build_insert_count();
    println!("dataset: {} points, dim {}", ds.len(), ds.dim());
    match &index {
        StoredIndex::Half(h) => {
            println!("kind: half (base {})", h.params().base);
            println!("graphs: {}", h.snapshots().len());
        }
        StoredIndex::Tree(t) => {
            println!(
                "kind: tree (fanout {}, leaf {}, c {})",
                t.params().fanout,
                t.params().leaf_threshold,
                t.params().elastic.c
            );
            println!("graphs: {}", t.nodes().len());
            println!("indexed levels: {}", t.indexed_level_count());
        }
    }
    println!("stored nodes: {stored}");
    println!("insert count: {inserts}");
    if stored > 0 {
        println!("insert/node ratio: {:.4}", inserts as f64 / stored as f64);
    }
    if let Some(out) = &args.out {
        let bytes = save_index(&index, ds, out)?;
        println!("saved {bytes} bytes to {}", out.display());
    }
    Ok(EXIT_OK)
}

fn query(args: QueryArgs) -> Result<i32> {
    let loaded = load_data(&args.data)?;
    let ds = &loaded.dataset;
    let index = load_index(&args.index, ds)?;
    let range = RankRange::try_new(args.range.0, args.range.1, ds.len())?;
    let vector = match args.vector {
        Some(v) => v,
        None => {
            let qs = query_vectors(&loaded, args.query_id + 1, args.seed)?;
            qs[args.query_id % qs.len()].clone()
        }
    };
    let q = Query::new(vector, range, args.k);
    let beam = *args.beam.first().unwrap_or(&64);
    let (hits, stats) = index
        .as_searchable()
        .search(ds, &q, &SearchParams::with_beam(beam))?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let _ = writeln!(out, "rank\tdistance");
    for h in &hits {
        let _ = writeln!(out, "{}\t{:.6}", h.rank, h.distance);
    }
    let _ = writeln!(
        out,
        "dist_computations={} hops={} graphs_consulted={} beam_restarts={}",
        stats.dist_computations, stats.hops, stats.graphs_consulted, stats.beam_restarts
    );
    Ok(EXIT_OK)
}

fn bench(args: BenchArgs) -> Result<i32> {
    let loaded = load_data(&args.data)?;
    let ds = &loaded.dataset;
    let index = match &args.index {
        Some(path) => load_index(path, ds)?,
        None => build_index(ds, &args.build, args.seed)?,
    };
    let vectors = query_vectors(&loaded, args.queries, args.seed)?;
    let spec = WorkloadSpec {
        mode: args.range_mode,
        count: args.queries,
        k: args.k,
        seed: args.seed.wrapping_add(1),
    };
    let queries = gen_queries(&spec, ds.len(), &vectors)?;
    let truth = GroundTruth::cached(args.gt_cache.as_deref(), ds, &queries)?;
    let mode = args.range_mode.to_string();
    let mut rows = run_benchmark(
        index.as_searchable(),
        ds,
        &queries,
        &truth,
        &args.beam,
        &mode,
    )?;
    if args.baseline {
        let root = index
            .root()
            .ok_or_else(|| Error::Usage("index has no full-range graph for --baseline".into()))?;
        rows.extend(run_benchmark(
            &PostFilterGraph { graph: root },
            ds,
            &queries,
            &truth,
            &args.beam,
            &mode,
        )?);
    }
    match &args.out {
        Some(path) => {
            let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            write_csv(&rows, io::BufWriter::new(f))?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    Ok(EXIT_OK)
}

fn check(name: &str, ok: bool, detail: String, failures: &mut usize) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    if !ok {
        *failures += 1;
    }
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Result<Dataset> {
    let data = (0..n * dim)
        .map(|_| rng.random_range(-1.0f32..1.0))
        .collect();
    Ok(Dataset::from_flat(data, dim, "validate")?)
}

fn validate(args: ValidateArgs) -> Result<i32> {
    if args.n < 16 || args.trials == 0 {
        return Err(Error::Usage(
            "--n must be at least 16 and --trials at least 1".into(),
        ));
    }
    let mut failures = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.random_range(10..=args.n);
        let dim = rng.random_range(1..=8);
        let k = rng.random_range(1..=10usize);
        let ds = random_dataset(&mut rng, n, dim)?;
        let len = rng.random_range(k..=n);
        let l = rng.random_range(1..=(n - len + 1)) as u32;
        let range = RankRange::new(l, l + len as u32 - 1);
        let q: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if !check_containment(&ds, &q, range, k)?.holds {
            violations += 1;
        }
    }
    check(
        "containment",
        violations == 0,
        format!("{violations} violations in 1000 instances"),
        &mut failures,
    );

    for (n, marked, k) in [(10, 5, 2), (1000, 250, 10), (10_000, 2500, 10)] {
        let closed = expected_draws_closed_form(n, marked, k);
        let sim = simulate_expected_draws(n, marked, k, args.trials, args.seed)?;
        let rel = (sim - closed).abs() / closed;
        check(
            &format!("order-statistics N={n} K={marked} k={k}"),
            rel <= 0.03,
            format!("simulated {sim:.4}, closed form {closed:.4}, relative error {rel:.4}"),
            &mut failures,
        );
    }

    let ds = synthesize_dataset(args.n, 8, 4, args.seed)?.dataset;
    let gp = GraphParams::new(8, 32, args.seed);
    let leaf = (args.n / 64).max(1);
    let qv = synthesize_queries(&GaussianMixture::new(8, 4, args.seed)?, 64, args.seed);
    for fanout in [2usize, 4, 8, 16] {
        let tree = TreeIndex::build(&ds, TreeParams::new(fanout, leaf), gp)?;
        let spec = WorkloadSpec {
            mode: RangeMode::Mix,
            count: 2000,
            k: 10,
            seed: args.seed + fanout as u64,
        };
        let mut worst = 0;
        let mut below_floor = 0;
        for q in gen_queries(&spec, ds.len(), &qv)? {
            let (_, stats) = tree.query(&ds, &q, &SearchParams::with_beam(10))?;
            worst = worst.max(stats.graphs_consulted);
            for step in tree.plan(q.range)? {
                if let PlanStep::Graph { node, fragment } = step {
                    if !tree.params().elastic.admits(&fragment, &node) {
                        below_floor += 1;
                    }
                }
            }
        }
        check(
            &format!("two-index bound f={fanout}"),
            worst <= 2 && below_floor == 0,
            format!("max graphs consulted {worst}, elastic-floor violations {below_floor}"),
            &mut failures,
        );
    }

    let half = HalfIndex::build(&ds, HalfIndexParams::default(), gp)?;
    let spec = WorkloadSpec {
        mode: RangeMode::HalfBounded,
        count: 2000,
        k: 10,
        seed: args.seed + 100,
    };
    let mut bad = 0;
    for q in gen_queries(&spec, ds.len(), &qv)? {
        let (_, stats) = half.query(&ds, &q, &SearchParams::with_beam(10))?;
        let stored = half.select(q.range)?.range.len() as f64;
        let factor = q.range.len() as f64 / stored;
        if stats.graphs_consulted != 1 || factor < 0.5 - 1.0 / stored {
            bad += 1;
        }
    }
    check(
        "one-index bound (half, B=2)",
        bad == 0,
        format!("{bad} violations in 2000 queries"),
        &mut failures,
    );

    Ok(if failures == 0 {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<OsString> {
        list.iter().map(OsString::from).collect()
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run_cli(args(&["hbi", "build", "--bogus"])), EXIT_USAGE);
        assert_eq!(run_cli(args(&["hbi"])), EXIT_USAGE);
    }

    #[test]
    fn missing_dataset_source_is_usage_error() {
        assert_eq!(
            run_cli(args(&["hbi", "build", "--kind", "tree"])),
            EXIT_USAGE
        );
    }

    #[test]
    fn config_lines_are_spliced_before_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        fs::write(&cfg, "# comment\nfanout = 4\nleaf=8\nbaseline\n").unwrap();
        let merged = merge_config(args(&[
            "hbi",
            "bench",
            "--config",
            cfg.to_str().unwrap(),
            "--fanout",
            "2",
        ]))
        .unwrap();
        let merged: Vec<String> = merged
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(
            merged,
            vec![
                "hbi",
                "bench",
                "--fanout",
                "4",
                "--leaf",
                "8",
                "--baseline",
                "--fanout",
                "2"
            ]
        );
        let cli = Cli::try_parse_from(merged).unwrap();
        match cli.command {
            Command::Bench(b) => {
                assert_eq!(b.build.fanout, 2);
                assert_eq!(b.build.leaf, 8);
                assert!(b.baseline);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gen_spec_parsing() {
        assert_eq!(
            parse_gen("100,8,4,7").unwrap(),
            GenSpec {
                n: 100,
                dim: 8,
                clusters: 4,
                seed: 7
            }
        );
        assert!(parse_gen("100,8,4").is_err());
        assert!(parse_gen("0,8,4,1").is_err());
    }
}
