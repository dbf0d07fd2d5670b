use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use simr_core::evaluation::format_segments;
use simr_core::{
    anneal, evaluate, load_gold, random_text, read_to_string, run_search, synthgen, BitextMap,
    BitextSpace, DistortionSpec, ErrorDirection, Objective, ParamBounds, SimrError, SimrParams,
    TrainingBitext,
};

mod settings;

use settings::{read_manifest, MatchArgs, Matcher, Settings, Side};

#[derive(Parser, Debug)]
#[command(name = "simr", version, about = "Bitext mapping by chain recognition")]
struct Cli {
    /// Settings file of `key: value` lines (recognizer, search, matching and
    /// annealing settings).
    #[arg(long, env = "SIMR_CONFIG", global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Map a bitext, or every bitext in a manifest.
    Map(MapArgs),
    /// Score a map against segment-aligned gold files.
    Eval(EvalArgs),
    /// Calibrate the recognizer parameters on training bitexts.
    Optimize(OptimizeArgs),
    /// Write a synthetic bitext with its gold segments.
    Generate(GenerateArgs),
    /// Dump the tokens of one text as TSV.
    Tokenize(TokenizeArgs),
}

#[derive(Args, Debug)]
struct MapArgs {
    #[arg(long, required_unless_present = "manifest")]
    x: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    y: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    out: Option<PathBuf>,
    /// Tab-separated `x y out` rows, mapped concurrently.
    #[arg(long, conflicts_with_all = ["x", "y", "out"])]
    manifest: Option<PathBuf>,
    /// Concurrent mappings for a manifest.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Recognizer parameters; overrides the settings file.
    #[arg(long)]
    params: Option<PathBuf>,
    #[command(flatten)]
    matching: MatchArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Direction {
    Perpendicular,
    Vertical,
    Horizontal,
}

impl From<Direction> for ErrorDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Perpendicular => ErrorDirection::Perpendicular,
            Direction::Vertical => ErrorDirection::Vertical,
            Direction::Horizontal => ErrorDirection::Horizontal,
        }
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    gold_x: PathBuf,
    #[arg(long)]
    gold_y: PathBuf,
    #[arg(long)]
    text_x: PathBuf,
    #[arg(long)]
    text_y: PathBuf,
    /// Histogram TSV. Printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Direction::Perpendicular)]
    direction: Direction,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    /// Tab-separated `x y gold_x gold_y` rows.
    #[arg(long, conflicts_with_all = ["x", "y", "gold_x", "gold_y"])]
    manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    x: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    y: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    gold_x: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    gold_y: Option<PathBuf>,
    /// Parameter grid, one `name: min max step` or `name: value` line each.
    #[arg(long)]
    bounds: Option<PathBuf>,
    #[arg(long)]
    history: PathBuf,
    #[arg(long)]
    best_params: PathBuf,
    /// Overrides the settings file's `rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    matching: MatchArgs,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Source text. Without it a pseudo-random text is used.
    #[arg(long, conflicts_with = "random_length")]
    source: Option<PathBuf>,
    /// Length in characters of the pseudo-random source.
    #[arg(long, default_value_t = 10_000)]
    random_length: usize,
    #[arg(long, default_value_t = 0.0)]
    substitution_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    inversion_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    length_jitter: f64,
    /// `POSITION:LENGTH` of a source span missing from the x text; repeatable.
    #[arg(long, value_parser = parse_span)]
    omission: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_x: PathBuf,
    #[arg(long)]
    out_y: PathBuf,
    #[arg(long)]
    segments_x: PathBuf,
    #[arg(long)]
    segments_y: PathBuf,
}

#[derive(Args, Debug)]
struct TokenizeArgs {
    #[arg(long)]
    text: PathBuf,
    #[arg(long, value_enum, default_value_t = Side::X)]
    side: Side,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    matching: MatchArgs,
}

fn parse_span(s: &str) -> std::result::Result<(usize, usize), String> {
    let (pos, len) = s.split_once(':').ok_or("expected POSITION:LENGTH")?;
    let num = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((num(pos)?, num(len)?))
}

/// Successful runs either succeed outright or fall back to a degenerate map.
enum Status {
    Done,
    Degenerate,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("{}", path.display()))
}

struct Mapped {
    chains: usize,
    discarded: usize,
    sparse: bool,
}

fn map_one(
    x: &Path,
    y: &Path,
    out: &Path,
    params: &SimrParams,
    settings: &Settings,
    m: &Matcher,
) -> Result<Mapped> {
    let (ax, ay) = m.axes(x, y)?;
    let (map, sparse) = match run_search(&ax, &ay, params, &settings.search, &m.predicate) {
        Ok(map) => (map, false),
        Err(SimrError::SignalTooSparse(map)) => (*map, true),
        Err(e) => return Err(e.into()),
    };
    write(out, &map.to_tsv())?;
    Ok(Mapped {
        chains: map.chains.len(),
        discarded: map.discarded,
        sparse,
    })
}

fn cmd_map(args: &MapArgs, settings: &Settings) -> Result<Status> {
    let params = match &args.params {
        Some(p) => {
            let text = read_to_string(p)?;
            SimrParams::parse(&text).with_context(|| format!("{}", p.display()))?
        }
        None => settings.params,
    };
    let matcher = Matcher::new(&args.matching, &settings.predicate)?;

    let Some(manifest) = &args.manifest else {
        let (x, y, out) = (args.x.as_ref(), args.y.as_ref(), args.out.as_ref());
        let (x, y, out) = (x.unwrap(), y.unwrap(), out.unwrap());
        let m = map_one(x, y, out, &params, settings, &matcher)?;
        println!("chains\t{}", m.chains);
        println!("discarded\t{}", m.discarded);
        if m.sparse {
            eprintln!(
                "simr: warning: no chain accepted; wrote the diagonal map to {}",
                out.display()
            );
            return Ok(Status::Degenerate);
        }
        return Ok(Status::Done);
    };

    let rows = read_manifest(manifest, 3)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .context("thread pool")?;
    let results: Vec<Result<Mapped>> = pool.install(|| {
        rows.par_iter()
            .map(|r| map_one(&r[0], &r[1], &r[2], &params, settings, &matcher))
            .collect()
    });
    println!("out\tchains\tdiscarded");
    let (mut failed, mut sparse) = (0, 0);
    for (row, result) in rows.iter().zip(results) {
        match result {
            Ok(m) => {
                println!("{}\t{}\t{}", row[2].display(), m.chains, m.discarded);
                sparse += m.sparse as usize;
            }
            Err(e) => {
                eprintln!("simr: error: {e:#}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} manifest entries failed", rows.len());
    }
    Ok(if sparse > 0 {
        Status::Degenerate
    } else {
        Status::Done
    })
}

fn cmd_eval(args: &EvalArgs) -> Result<Status> {
    let tx = read_to_string(&args.text_x)?;
    let ty = read_to_string(&args.text_y)?;
    let gx = read_to_string(&args.gold_x)?;
    let gy = read_to_string(&args.gold_y)?;
    let gold = load_gold(&gx, &gy, &tx, &ty)
        .with_context(|| format!("{} / {}", args.gold_x.display(), args.gold_y.display()))?;
    let space = BitextSpace::new(tx.chars().count(), ty.chars().count())?;
    let map_text = read_to_string(&args.map)?;
    let map =
        BitextMap::from_tsv(&map_text, space).with_context(|| format!("{}", args.map.display()))?;
    let report = evaluate(&map, &gold, args.direction.into())?;
    match &args.out {
        Some(out) => {
            write(out, &report.to_tsv())?;
            println!("rms\t{:.2}", report.rms_error);
        }
        None => emit(&report.to_tsv())?,
    }
    Ok(Status::Done)
}

fn load_bounds(path: Option<&PathBuf>) -> Result<ParamBounds> {
    match path {
        None => Ok(ParamBounds::default()),
        Some(p) => {
            let text = read_to_string(p)?;
            Ok(ParamBounds::parse(&text).with_context(|| format!("{}", p.display()))?)
        }
    }
}

fn cmd_optimize(args: &OptimizeArgs, settings: &Settings) -> Result<Status> {
    let matcher = Matcher::new(&args.matching, &settings.predicate)?;
    let rows: Vec<Vec<PathBuf>> = match &args.manifest {
        Some(m) => read_manifest(m, 4)?,
        None => vec![[&args.x, &args.y, &args.gold_x, &args.gold_y]
            .iter()
            .map(|p| {
                p.as_ref()
                    .cloned()
                    .ok_or_else(|| anyhow!("missing training path"))
            })
            .collect::<Result<_>>()?],
    };
    let training = rows
        .iter()
        .map(|r| {
            let (x, y) = matcher.axes(&r[0], &r[1])?;
            let gold = load_gold(
                &read_to_string(&r[2])?,
                &read_to_string(&r[3])?,
                &read_to_string(&r[0])?,
                &read_to_string(&r[1])?,
            )
            .with_context(|| format!("{} / {}", r[2].display(), r[3].display()))?;
            Ok(TrainingBitext { x, y, gold })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cfg = settings.anneal.clone();
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    cfg.bounds = load_bounds(args.bounds.as_ref())?;
    let objective = Objective::new(training, matcher.predicate, settings.search);
    let result = anneal(&cfg, &objective)?;
    write(&args.history, &result.history_tsv())?;
    write(&args.best_params, &result.best.params.to_text())?;
    println!("best\t{:.4}", result.best.objective);
    print!("{}", result.best.params.to_text());
    Ok(Status::Done)
}

fn cmd_generate(args: &GenerateArgs) -> Result<Status> {
    let source = match &args.source {
        Some(p) => read_to_string(p)?,
        None => random_text(args.random_length, args.seed),
    };
    let spec = DistortionSpec {
        substitution_rate: args.substitution_rate,
        omission_spans: args.omission.clone(),
        inversion_rate: args.inversion_rate,
        length_jitter: args.length_jitter,
        rng_seed: args.seed,
    };
    let b = synthgen::generate(&source, &spec)?;
    let (sx, sy) = b.segments()?;
    write(&args.out_x, &b.text_x)?;
    write(&args.out_y, &b.text_y)?;
    write(&args.segments_x, &format_segments(&sx)?)?;
    write(&args.segments_y, &format_segments(&sy)?)?;
    println!("tpcs\t{}", b.gold.len());
    println!("inversions\t{}", b.inversions);
    Ok(Status::Done)
}

fn cmd_tokenize(args: &TokenizeArgs, settings: &Settings) -> Result<Status> {
    let matcher = Matcher::new(&args.matching, &settings.predicate)?;
    let text = read_to_string(&args.text)?;
    let axis = matcher
        .axis(&text, args.side)
        .with_context(|| format!("{}", args.text.display()))?;
    match &args.out {
        Some(out) => write(out, &axis.to_tsv())?,
        None => emit(&axis.to_tsv())?,
    }
    Ok(Status::Done)
}

/// Writes a report to stdout. A reader that closed early (`| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<Status> {
    let settings = Settings::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Map(a) => cmd_map(a, &settings),
        Command::Eval(a) => cmd_eval(a),
        Command::Optimize(a) => cmd_optimize(a, &settings),
        Command::Generate(a) => cmd_generate(a),
        Command::Tokenize(a) => cmd_tokenize(a, &settings),
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1: status 2 is reserved for degenerate maps.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let started = Instant::now();
    let status = run(&cli);
    eprintln!("elapsed\t{:.3}s", started.elapsed().as_secs_f64());
    match status {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Degenerate) => ExitCode::from(2),
        Err(e) => {
            eprintln!("simr: error: {e:#}");
            ExitCode::from(1)
        }
    }
}
