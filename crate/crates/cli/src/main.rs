use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twrelay_core::harness::plot::render_svg;
use twrelay_core::harness::selftest::run_selftest;
use twrelay_core::harness::{run_experiment, ExperimentConfig, ExperimentKind, ResultTable};
use twrelay_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_SELFTEST: u8 = 4;

#[derive(Parser)]
#[command(name = "twrelay", version, about = "Two-way relay rate regions, scaling and outage experiments")]
struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal AF, dual channel matching and cut-set bounds over beta
    RateRegion(RunArgs),
    /// Dual channel matching against the cut-set bound as K grows
    Scaling(RunArgs),
    /// Outage probabilities and diversity exponents
    Dmt(RunArgs),
    /// Draw a result table as an SVG line plot
    Plot(PlotArgs),
    /// Closed-form oracle checks
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (overrides output_path; stdout when neither is set)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Result table to plot
    #[arg(long)]
    input: PathBuf,
    /// Output SVG (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Column on the horizontal axis (first column by default)
    #[arg(long)]
    x: Option<String>,
    /// Comma-separated columns to draw (all others by default)
    #[arg(long, value_delimiter = ',')]
    y: Vec<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::DimensionMismatch(_) | Error::InvalidMultiplexingGain { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => {
            let mut f = File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            f.write_all(text.as_bytes())?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(kind: ExperimentKind, args: &RunArgs) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.experiment != kind {
        return Err(Error::Config(format!("config describes a {:?} experiment", cfg.experiment)));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args.out.clone().or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
    let table = run_experiment(&cfg)?;
    write_output(out.as_deref(), &table.to_csv_string())
}

fn plot(args: &PlotArgs) -> Result<(), Error> {
    let f = File::open(&args.input).map_err(|e| Error::Config(format!("{}: {e}", args.input.display())))?;
    let table = ResultTable::read_csv(BufReader::new(f))?;
    let svg = render_svg(&table, args.x.as_deref(), &args.y)?;
    write_output(args.out.as_deref(), &svg)
}

fn selftest() -> ExitCode {
    let checks = run_selftest();
    let mut ok = true;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SELFTEST)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let result = match &cli.command {
        Command::RateRegion(a) => run(ExperimentKind::RateRegion, a),
        Command::Scaling(a) => run(ExperimentKind::Scaling, a),
        Command::Dmt(a) => run(ExperimentKind::Dmt, a),
        Command::Plot(a) => plot(a),
        Command::Selftest => return selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
