//! Command line front end: autocorrelation and ranking of mark files,
//! bound tables, exhaustive searches and noise-sweep simulations.
//!
//! Exit codes: 0 success, 2 bad input, 3 search budget exceeded, 1 anything
//! else. Runs with `--out` write a manifest recording the exact invocation
//! and SHA-256 digests of every input file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alignmark::bounds::{bound_table, construct_bound_matrix};
use alignmark::correlation::autocorrelate;
use alignmark::matrix::BinaryMatrix;
use alignmark::search::{SearchConfig, SymmetryRestriction};
use alignmark::simulate::{stats_to_csv, TrialConfig};
use alignmark::spectrum::{compare, sharpness, spectrum_of};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "alignmark", version, about = "Design and evaluate binary alignment marks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Autocorrelation map, distance histogram and sharpness of a mark file
    Autocorr(AutocorrArgs),
    /// Rank mark files by the dictionary-order sidelobe criterion
    Rank(RankArgs),
    /// Analytic bound table for a matrix size
    Bounds(BoundsArgs),
    /// Exhaustive search for the marks with maximal peak-sidelobe distance
    Search(SearchArgs),
    /// Monte-Carlo alignment accuracy sweep over an SNR grid
    Simulate(SimulateArgs),
    /// Expand each cell of a mark into a k by k pixel block
    Expand(ExpandArgs),
}

#[derive(Args)]
struct AutocorrArgs {
    /// Mark file: rows of 0/1 characters
    mark: PathBuf,
    /// Write the correlation map as CSV here
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    /// Mark files, best ranked first in the output
    marks: Vec<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(short)]
    m: usize,
    #[arg(short)]
    n: usize,
    /// Write the table as CSV here
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also print the explicit matrix attaining the bound at this weight
    #[arg(long)]
    construct: Option<i64>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(short)]
    m: usize,
    #[arg(short)]
    n: usize,
    /// Restrict to diagonally symmetric matrices (square sizes only)
    #[arg(long)]
    diagonal: bool,
    /// Ranked matrices to keep
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    /// Also record the per-weight minimum sidelobe curve (slower)
    #[arg(long)]
    per_p: bool,
    /// Worker threads (0 = all cores); ALIGNMARK_THREADS overrides the default
    #[arg(long, default_value_t = default_threads())]
    threads: usize,
    /// Prefix rows used to split the search into parallel units
    #[arg(long)]
    partition_depth: Option<usize>,
    /// Directory for resumable per-unit checkpoints
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Run even if the estimated node count exceeds the budget
    #[arg(long)]
    force: bool,
    /// Output directory: manifest.json, result.json, curves.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Mark file
    mark: PathBuf,
    /// Pixels per mark cell
    #[arg(long, default_value_t = 1)]
    expansion: usize,
    /// Background side as a multiple of the expanded mark side
    #[arg(long, default_value_t = 5)]
    factor: usize,
    /// SNR grid in dB: "start:stop:step" or a comma-separated list
    #[arg(long, default_value = "0:10:2", allow_hyphen_values = true)]
    snr: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = default_threads())]
    threads: usize,
    /// Output directory: manifest.json, sweep.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExpandArgs {
    mark: PathBuf,
    #[arg(short, default_value_t = 2)]
    k: usize,
}

fn default_threads() -> usize {
    std::env::var("ALIGNMARK_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

/// Reproducibility record written alongside command outputs.
#[derive(Serialize)]
struct RunManifest {
    tool: String,
    version: String,
    timestamp: chrono::DateTime<chrono::Utc>,
    argv: Vec<String>,
    inputs: Vec<InputDigest>,
}

impl RunManifest {
    fn new(inputs: &[&Path]) -> anyhow::Result<Self> {
        let digests = inputs
            .iter()
            .map(|p| {
                let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(InputDigest {
                    path: p.display().to_string(),
                    sha256: Sha256::digest(&bytes)
                        .iter()
                        .map(|b| format!("{b:02x}"))
                        .collect(),
                })
            })
            .collect::<anyhow::Result<_>>()?;
        Ok(Self {
            tool: "alignmark".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: chrono::Utc::now(),
            argv: std::env::args().collect(),
            inputs: digests,
        })
    }

    fn write(&self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

fn load_mark(path: &Path) -> anyhow::Result<BinaryMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.parse::<BinaryMatrix>()?)
}

fn exit_code_for(err: &anyhow::Error) -> ExitCode {
    match err.downcast_ref::<alignmark::Error>() {
        Some(alignmark::Error::BudgetExceeded { .. }) => ExitCode::from(3),
        Some(alignmark::Error::Io(_)) | Some(alignmark::Error::Serde(_)) | None => {
            // file-not-found style failures still count as bad input
            if err.downcast_ref::<std::io::Error>().is_some()
                || err.to_string().starts_with("reading ")
            {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
        Some(_) => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Autocorr(args) => cmd_autocorr(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Search(args) => cmd_search(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Expand(args) => cmd_expand(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    }
}

fn cmd_autocorr(args: AutocorrArgs) -> anyhow::Result<()> {
    let mark = load_mark(&args.mark)?;
    let map = autocorrelate(&mark);
    let sp = spectrum_of(&map)?;
    println!("{mark}");
    println!("p = {}, s = {}, d1 = {}", sp.p, sp.s, sp.d1);
    println!("spectrum: {sp}");
    if mark.is_square() {
        let lambda = sharpness(&mark)?;
        println!("sharpness: {}/{}", lambda.numer(), lambda.denom());
    }
    if let Some(path) = args.csv {
        let mut f = fs::File::create(&path)?;
        map.write_csv(&mut f)?;
        println!("map written to {}", path.display());
    }
    Ok(())
}

fn cmd_rank(args: RankArgs) -> anyhow::Result<()> {
    if args.marks.is_empty() {
        bail!("no mark files given");
    }
    let mut entries = Vec::new();
    for path in &args.marks {
        let mark = load_mark(path)?;
        let sp = spectrum_of(&autocorrelate(&mark))?;
        entries.push((path, sp));
    }
    entries.sort_by(|a, b| compare(&b.1, &a.1).then_with(|| a.0.cmp(b.0)));
    for (rank, (path, sp)) in entries.iter().enumerate() {
        println!("{}. {} d1={} {}", rank + 1, path.display(), sp.d1, sp);
    }
    Ok(())
}

fn cmd_bounds(args: BoundsArgs) -> anyhow::Result<()> {
    let table = bound_table(args.m, args.n)?;
    println!(
        "{}x{}: N1 = {}, N2 = {}, d1-bound crossing in p = {:?}",
        args.m,
        args.n,
        table.n1,
        table.n2,
        table.crossing_interval()
    );
    let mut stdout = std::io::stdout().lock();
    if let Some(path) = &args.csv {
        let mut f = fs::File::create(path)?;
        table.write_csv(&mut f)?;
    } else {
        table.write_csv(&mut stdout)?;
    }
    if let Some(p) = args.construct {
        let mat = construct_bound_matrix(args.m, args.n, p)?;
        let sp = spectrum_of(&autocorrelate(&mat))?;
        writeln!(stdout, "construction at p = {p} (d1 = {}):\n{mat}", sp.d1)?;
    }
    Ok(())
}

fn cmd_search(args: SearchArgs) -> anyhow::Result<()> {
    let mut config = SearchConfig::new(args.m, args.n);
    if args.diagonal {
        config.restriction = SymmetryRestriction::Diagonal;
    }
    config.top_k = args.top_k;
    config.per_p = args.per_p;
    config.threads = args.threads;
    if let Some(d) = args.partition_depth {
        config.partition_depth = d;
    }
    config.checkpoint_dir = args.checkpoint.clone();
    config.force = args.force;

    let report = alignmark::search::search(&config)?;

    println!(
        "{}x{}{}: best d1 = {}, {} optimal symmetry classes ({} matrices evaluated, {} ms)",
        args.m,
        args.n,
        if args.diagonal { " diagonal" } else { "" },
        report.best_d1,
        report.total_optimal_classes,
        report.stats.matrices_evaluated,
        report.stats.wall_time_ms
    );
    for (i, opt) in report.optima.iter().enumerate() {
        println!("#{} {}\n{}", i + 1, opt.spectrum, opt.matrix);
    }
    for a in &report.anomalies {
        println!("note: {a}");
    }

    if let Some(dir) = &args.out {
        RunManifest::new(&[])?.write(dir)?;
        fs::write(dir.join("result.json"), serde_json::to_vec_pretty(&report)?)?;
        let bounds = bound_table(args.m, args.n)?;
        let mut f = fs::File::create(dir.join("curves.csv"))?;
        report.write_curves_csv(&bounds, &mut f)?;
        println!("results written to {}", dir.display());
    }
    Ok(())
}

/// "start:stop:step" (inclusive stop, positive step) or "a,b,c".
fn parse_snr_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            bail!("SNR range must be start:stop:step");
        }
        let (start, stop, step): (f64, f64, f64) =
            (parts[0].parse()?, parts[1].parse()?, parts[2].parse()?);
        if step <= 0.0 {
            bail!("SNR step must be positive");
        }
        let mut grid = Vec::new();
        let mut i = 0;
        loop {
            let v = start + step * i as f64;
            if v > stop + 1e-9 {
                break;
            }
            grid.push(v);
            i += 1;
        }
        if grid.is_empty() {
            bail!("empty SNR range");
        }
        Ok(grid)
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(Into::into))
            .collect()
    }
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mark = load_mark(&args.mark)?;
    let mut config = TrialConfig::new(mark);
    config.expansion_k = args.expansion;
    config.background_factor = args.factor;
    config.snr_db_grid = parse_snr_grid(&args.snr)?;
    config.trials = args.trials;
    config.seed = args.seed;
    config.threads = args.threads;

    let stats = alignmark::simulate::run_sweep(&config)?;
    let csv = stats_to_csv(&stats);
    print!("{csv}");
    if let Some(dir) = &args.out {
        RunManifest::new(&[args.mark.as_path()])?.write(dir)?;
        fs::write(dir.join("sweep.csv"), &csv)?;
        eprintln!("results written to {}", dir.display());
    }
    Ok(())
}

fn cmd_expand(args: ExpandArgs) -> anyhow::Result<()> {
    let mark = load_mark(&args.mark)?;
    print!("{}", mark.expand(args.k)?);
    Ok(())
}
