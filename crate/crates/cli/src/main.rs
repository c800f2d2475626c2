use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use crpq::bench::{run_bench, slope_summary, write_csv, Family};
use crpq::graph::STAR_QUERY;
use crpq::query::check_acyclic;
use crpq::{evaluate, fn_fhtw, load_graph, parse_query, Crpq, Engine, Error, EvalOptions, LabeledGraph};

#[derive(Parser)]
#[command(name = "crpq", version, about = "Output-sensitive evaluation of acyclic conjunctive regular path queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a query over a graph and write the answers as sorted TSV.
    Eval {
        /// Graph file: `src<TAB>label<TAB>dst` per line.
        graph: PathBuf,
        /// Query file with `free:` and `atom:` lines.
        query: PathBuf,
        #[arg(long, default_value = "optimal")]
        engine: Engine,
        /// Output path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate independent components on the rayon pool.
        #[arg(long)]
        parallel: bool,
    },
    /// Report acyclicity, components and the free-connex width of a query.
    Analyze { query: PathBuf },
    /// Time engines on a generated instance family and write CSV.
    Bench {
        #[arg(long, default_value = "star")]
        family: String,
        /// Instance sizes, comma separated; `2^k` is accepted.
        #[arg(long, value_delimiter = ',', value_parser = parse_size, default_value = "2^10,2^11,2^12,2^13")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "optimal,baseline")]
        engine: Vec<Engine>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: bool,
    },
    /// Write a generated instance in the graph TSV format.
    Gen {
        #[arg(long, default_value = "star")]
        family: String,
        #[arg(long, value_parser = parse_size)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Graph path. The star family also writes its query next to it,
        /// with the extension replaced by `.query`.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_size(s: &str) -> Result<usize, String> {
    match s.split_once('^') {
        Some((base, exp)) => {
            let base: usize = base.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let exp: u32 = exp.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            base.checked_pow(exp).ok_or_else(|| format!("{s} overflows"))
        }
        None => s.trim().parse().map_err(|e| format!("{s}: {e}")),
    }
}

/// Exit status for a failed command: 2 for cyclic queries, 3 for the
/// oracle's resource guard, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Cyclic(_)) => 2,
        Some(Error::ResourceGuard { .. }) => 3,
        _ => 1,
    }
}

fn read_query(path: &Path) -> anyhow::Result<Crpq> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_query(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_graph(path: &Path) -> anyhow::Result<LabeledGraph> {
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    load_graph(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_eval(graph: &Path, query: &Path, engine: Engine, out: Option<&Path>, parallel: bool) -> anyhow::Result<()> {
    let g = read_graph(graph)?;
    let q = read_query(query)?;
    let opts = EvalOptions { parallel, ..EvalOptions::default() };
    let start = Instant::now();
    let report = evaluate(&q, &g, engine, &opts)?;
    let elapsed = start.elapsed();

    let mut rows: Vec<String> = report
        .output
        .rows()
        .map(|r| r.iter().map(|&v| g.vertex_name(v)).collect::<Vec<_>>().join("\t"))
        .collect();
    rows.sort_unstable();
    let mut w = open_out(out)?;
    for row in &rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;

    eprintln!("rows={} engine={} N={} wall_ms={:.3}", rows.len(), engine, g.size(), elapsed.as_secs_f64() * 1e3);
    match engine {
        Engine::Optimal => eprintln!(
            "components={} component_rows={:?} rounds={} steps(base={} compose={} propagate={})",
            report.component_sizes.len(),
            report.component_sizes,
            report.rounds(),
            report.steps.base,
            report.steps.compose,
            report.steps.propagate
        ),
        Engine::Baseline => eprintln!("OUT_a={}", report.out_a.unwrap_or(0)),
        Engine::Oracle => {}
    }
    Ok(())
}

fn cmd_analyze(query: &Path) -> anyhow::Result<()> {
    let q = read_query(query)?;
    let verdict = check_acyclic(&q);
    println!("acyclic             {verdict}");
    let report = fn_fhtw(&q)?;
    print!("{report}");
    println!("{}", report.record());
    Ok(())
}

fn cmd_bench(
    family: Family,
    ns: &[usize],
    engines: &[Engine],
    reps: usize,
    seed: u64,
    out: Option<&Path>,
    parallel: bool,
) -> anyhow::Result<()> {
    if ns.is_empty() || engines.is_empty() || reps == 0 {
        bail!("bench needs at least one size, one engine and one repetition");
    }
    if family == Family::Star && ns.contains(&0) {
        bail!("star instances need n >= 1");
    }
    let opts = EvalOptions { parallel, ..EvalOptions::default() };
    let records = run_bench(family, ns, engines, reps, seed, &opts)?;
    write_csv(open_out(out)?, &records)?;
    for (engine, slope) in slope_summary(&records) {
        match slope {
            Some(s) => eprintln!("slope {engine:<8} {s:.3}"),
            None => eprintln!("slope {engine:<8} n/a (needs >= 2 sizes and >= 3 reps)"),
        }
    }
    Ok(())
}

fn cmd_gen(family: Family, n: usize, seed: u64, out: &Path) -> anyhow::Result<()> {
    if n == 0 {
        bail!("n must be at least 1");
    }
    let (g, _) = family.instance(n, seed);
    let mut w = open_out(Some(out))?;
    g.write_tsv(&mut w)?;
    w.flush()?;
    if family == Family::Star {
        let query_path = out.with_extension("query");
        fs::write(&query_path, STAR_QUERY).with_context(|| format!("writing {}", query_path.display()))?;
    }
    eprintln!("vertices={} edges={}", g.num_vertices(), g.num_edges());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Eval { graph, query, engine, out, parallel } => cmd_eval(&graph, &query, engine, out.as_deref(), parallel),
        Command::Analyze { query } => cmd_analyze(&query),
        Command::Bench { family, n, engine, reps, seed, out, parallel } => {
            let family: Family = family.parse().map_err(anyhow::Error::msg)?;
            cmd_bench(family, &n, &engine, reps, seed, out.as_deref(), parallel)
        }
        Command::Gen { family, n, seed, out } => {
            let family: Family = family.parse().map_err(anyhow::Error::msg)?;
            cmd_gen(family, n, seed, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
