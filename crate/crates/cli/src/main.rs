use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use statlim::formats::{self, FormatError};
use statlim::verify;
use statlim_core::arith::{qi, Q};
use statlim_core::forge::{self, SeqGen};
use statlim_core::measure::Submeasure;
use statlim_core::probe::{self, Sample};
use statlim_core::{IdealSpec, IndexSet, RClosedSet, RFSigma};

/// Upper bound on enumerated prefix lengths.
const MAX_N: u64 = 10_000_000;

#[derive(Parser)]
#[command(name = "statlim", version, about = "Sequences with prescribed statistical limit and cluster points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the first N terms of a construction as JSONL.
    Construct(ConstructArgs),
    /// Flag grid points of a JSONL stream and write a CSV spectrum.
    Analyze(AnalyzeArgs),
    /// Run the verification suite.
    Verify {
        #[arg(long, default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(verify::SUITES))]
        suite: String,
    },
    /// Write sample descriptor files into a directory.
    Example {
        #[arg(value_enum)]
        name: ExampleName,
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("construction").required(true).args(["triple", "lambda", "fsigma", "nonclosed", "cantor", "nofsigma"])))]
struct ConstructArgs {
    /// A (F-sigma), B and C (closed) descriptor files.
    #[arg(long, num_args = 3, value_names = ["A", "B", "C"])]
    triple: Option<Vec<PathBuf>>,
    /// F-sigma descriptor B.
    #[arg(long, value_name = "B")]
    lambda: Option<PathBuf>,
    /// Closed descriptors B and C; needs --ideal and --index.
    #[arg(long, num_args = 2, value_names = ["B", "C"], requires_all = ["ideal", "index"])]
    fsigma: Option<Vec<PathBuf>>,
    #[arg(long)]
    nonclosed: bool,
    #[arg(long)]
    cantor: bool,
    #[arg(long)]
    nofsigma: bool,
    /// Ideal descriptor file.
    #[arg(long)]
    ideal: Option<PathBuf>,
    /// Index set descriptor file.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhiArg {
    Density,
    SummableHarmonic,
    Counting,
}

impl From<PhiArg> for Submeasure {
    fn from(p: PhiArg) -> Self {
        match p {
            PhiArg::Density => Submeasure::Density,
            PhiArg::SummableHarmonic => Submeasure::HARMONIC,
            PhiArg::Counting => Submeasure::Counting,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// JSONL stream, `-` for stdin.
    #[arg(long, default_value = "-")]
    input: PathBuf,
    /// Use only the first N terms.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value = "1/32")]
    grid_step: String,
    #[arg(long, default_value = "0")]
    grid_lo: String,
    #[arg(long, default_value = "1")]
    grid_hi: String,
    #[arg(long, default_value = "1/64")]
    radius: String,
    #[arg(long, default_value = "1/100")]
    delta: String,
    #[arg(long, value_enum, default_value = "density")]
    phi: PhiArg,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file receiving u-profiles at every grid point.
    #[arg(long)]
    profiles: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleName {
    Triple,
    Fsigma,
    Lambda,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed stream: {0}")]
    Stream(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("verification failed")]
    Failed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed | CliError::Io(_) | CliError::Usage(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Stream(_) => 3,
        }
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Precondition(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Precondition(format!("{}: {e}", path.display())))
}

fn descriptor<T>(path: &Path, parse: impl Fn(&Value) -> Result<T, FormatError>) -> Result<T, CliError> {
    parse(&read_json(path)?).map_err(|e| CliError::Precondition(format!("{}: {e}", path.display())))
}

/// Accepts either a layered F-sigma descriptor or a single closed set.
fn fsigma_descriptor(path: &Path) -> Result<RFSigma, CliError> {
    descriptor(path, |v| {
        if v.get("layers").is_some() {
            formats::fsigma_from_json(v)
        } else {
            formats::closed_set_from_json(v).map(|s| RFSigma::new(vec![s]))
        }
    })
}

fn closed_descriptor(path: &Path) -> Result<RClosedSet, CliError> {
    descriptor(path, formats::closed_set_from_json)
}

fn precondition<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Precondition(e.to_string())
}

fn build(args: &ConstructArgs) -> Result<SeqGen, CliError> {
    if let Some(files) = &args.triple {
        let a = fsigma_descriptor(&files[0])?;
        let b = closed_descriptor(&files[1])?;
        let c = closed_descriptor(&files[2])?;
        return forge::assemble_triple(&a, &b, &c).map_err(precondition);
    }
    if let Some(file) = &args.lambda {
        return forge::lambda_only(&fsigma_descriptor(file)?).map_err(precondition);
    }
    if let Some(files) = &args.fsigma {
        let b = closed_descriptor(&files[0])?;
        let c = closed_descriptor(&files[1])?;
        let ideal: IdealSpec = descriptor(args.ideal.as_deref().expect("required by clap"), formats::ideal_from_json)?;
        let index: IndexSet = descriptor(args.index.as_deref().expect("required by clap"), formats::index_set_from_json)?;
        return forge::fsigma_pair(&b, &c, &ideal, index, args.n).map_err(precondition);
    }
    if args.nonclosed {
        return Ok(forge::nonclosed_demo());
    }
    if args.cantor {
        return Ok(forge::cantor_seq());
    }
    Ok(forge::nofsigma())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn check_n(n: u64) -> Result<(), CliError> {
    if n == 0 || n > MAX_N {
        return Err(CliError::Usage(format!("--n must lie in [1, {MAX_N}], got {n}")));
    }
    Ok(())
}

fn construct(args: ConstructArgs) -> Result<(), CliError> {
    check_n(args.n)?;
    let x = build(&args)?;
    let out = output(&args.out)?;
    formats::write_jsonl(out, x.meta(), (1..=args.n).map(|n| x.x(n))).map_err(|e| match e {
        FormatError::Io(e) => CliError::Io(e),
        other => CliError::Usage(other.to_string()),
    })
}

fn rational_arg(flag: &str, s: &str) -> Result<Q, CliError> {
    formats::parse_rational_str(s).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let step = rational_arg("grid-step", &args.grid_step)?;
    let lo = rational_arg("grid-lo", &args.grid_lo)?;
    let hi = rational_arg("grid-hi", &args.grid_hi)?;
    let radius = rational_arg("radius", &args.radius)?;
    let delta = rational_arg("delta", &args.delta)?;
    if step <= qi(0) || radius <= qi(0) || delta <= qi(0) || hi < lo {
        return Err(CliError::Usage("grid step, radius and delta must be positive with lo <= hi".to_string()));
    }
    let reader: Box<dyn BufRead> = if args.input.as_os_str() == "-" {
        Box::new(BufReader::new(io::stdin().lock()))
    } else {
        Box::new(BufReader::new(File::open(&args.input)?))
    };
    let mut values = formats::read_jsonl(reader).map_err(|e| match e {
        FormatError::Io(e) => CliError::Io(e),
        other => CliError::Stream(other.to_string()),
    })?;
    if let Some(n) = args.n {
        check_n(n)?;
        if n as usize > values.len() {
            return Err(CliError::Stream(format!("--n {n} exceeds the {} terms in the stream", values.len())));
        }
        values.truncate(n as usize);
    }
    let sample = Sample::from_values(values).map_err(|e| CliError::Stream(e.to_string()))?;
    let phi: Submeasure = args.phi.into();
    let grid = probe::grid(&lo, &hi, &step);
    let report = probe::spectrum(&sample, &grid, &radius, &phi, &delta).map_err(|e| CliError::Usage(e.to_string()))?;
    formats::write_spectrum_csv(output(&args.out)?, &report).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(path) = &args.profiles {
        let radii = probe::dyadic_radii(&radius, 5);
        let profiles = grid
            .iter()
            .map(|l| probe::u_profile(&sample, l, &radii, &phi).map(|p| formats::uprofile_to_json(&p)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &json!({ "phi": phi.to_string(), "profiles": profiles }))
            .map_err(io::Error::other)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn run_verify(suite: &str) -> Result<(), CliError> {
    let checks = verify::run_suite(suite).ok_or_else(|| CliError::Usage(format!("unknown suite {suite}")))?;
    let mut all = true;
    for c in &checks {
        println!("{c}");
        all &= c.pass;
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    println!("{passed}/{} checks passed", checks.len());
    if all {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}

fn write_pretty(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, v).map_err(io::Error::other)?;
    w.write_all(b"\n")?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn example(name: ExampleName, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let (a, b, c) = verify::principal_triple();
    match name {
        ExampleName::Triple => {
            write_pretty(&dir.join("a.json"), &formats::fsigma_to_json(&a))?;
            write_pretty(&dir.join("b.json"), &formats::closed_set_to_json(&b))?;
            write_pretty(&dir.join("c.json"), &formats::closed_set_to_json(&c))?;
        }
        ExampleName::Lambda => {
            write_pretty(&dir.join("lambda.json"), &formats::fsigma_to_json(&a))?;
        }
        ExampleName::Fsigma => {
            let b = RClosedSet::from_pairs([(qi(0), Q::new(1.into(), 2.into()))]).expect("valid interval");
            write_pretty(&dir.join("b.json"), &formats::closed_set_to_json(&b))?;
            write_pretty(&dir.join("c.json"), &formats::closed_set_to_json(&c))?;
            write_pretty(&dir.join("ideal.json"), &formats::ideal_to_json(&IdealSpec::FSigma(Submeasure::HARMONIC)))?;
            let index = IndexSet::powers(2).expect("base 2");
            write_pretty(&dir.join("index.json"), &formats::index_set_to_json(&index))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Construct(args) => construct(args),
        Command::Analyze(args) => analyze(args),
        Command::Verify { suite } => run_verify(&suite),
        Command::Example { name, dir } => example(name, &dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Failed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}
