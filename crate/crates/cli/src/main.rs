//! `aliquot`: aliquot cycles of elliptic curves, class numbers and family
//! averages from the command line.
//!
//! Exit codes: 0 success, 1 invalid input, 2 identity violation, 3 budget
//! refusal.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod output;

use output::{parameters_of, Format, RunManifest, Sink};

pub const ENV_CACHE: &str = "ALIQUOT_HCACHE";

#[derive(Debug, Parser)]
#[command(name = "aliquot", version, about = "Aliquot cycles of elliptic curves and class-number sums")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Seed for any random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Class-number cache file. Defaults to $ALIQUOT_HCACHE, then a file under
    /// the user data directory.
    #[arg(long, global = true, value_name = "PATH")]
    cache: Option<PathBuf>,

    #[arg(long, global = true, conflicts_with = "cache")]
    no_cache: bool,

    /// Run past cost guards.
    #[arg(long, global = true)]
    force: bool,

    /// Write the run manifest here instead of stderr.
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Normalised aliquot cycles of y^2 = x^3 + ax + b.
    #[command(allow_negative_numbers = true, after_help = "CSV columns: p1,...,pL\nJSON keys: rows[{p1..pL}], count")]
    Cycles(CyclesArgs),
    /// Primes p <= X whose aliquot successor is also prime.
    #[command(allow_negative_numbers = true, after_help = "CSV columns: a,b,x_max,twin_count\nJSON keys: a, b, x_max, twin_count")]
    Twin(CurveBoundArgs),
    /// Primes p <= X with #E(F_p) = p.
    #[command(allow_negative_numbers = true, after_help = "CSV columns: p\nJSON keys: rows[{p}], count")]
    Anomalous(CurveBoundArgs),
    /// Hurwitz class numbers H(D) for one D or a range.
    #[command(allow_negative_numbers = true, after_help = "CSV columns: D,twelve_h,H\nJSON keys: rows[{D,twelve_h,H}]")]
    Classnum(ClassnumArgs),
    /// L(1, chi_D) by the class number formula and by the character series.
    #[command(allow_negative_numbers = true, after_help = "CSV columns: D,method,value,error_bound\nJSON keys: rows[{D,method,value,error_bound}]")]
    Lvalue(LvalueArgs),
    /// Quality of the truncated Euler product for L(1, chi_d), |d| <= Q.
    #[command(after_help = "CSV columns: d,l_value,truncated,relative_error\nJSON keys: q, alpha, y, y_used, threshold, exceptional_count, exceptional_bound, mean_relative_error, rows[...]")]
    GsReport(GsArgs),
    /// Checks #{(s,t) : #E = N} = (p - 1) H(D(p, N)) for 5 <= p <= pmax.
    #[command(after_help = "CSV columns: p,n,lhs,rhs,holds\nJSON keys: checked, mismatches, rows[{p,n,lhs,rhs,holds}]\nExits 2 if any exact identity fails.")]
    Deuring(DeuringArgs),
    /// Direct average of pi_{E,L}(X) over the family against the main term.
    #[command(after_help = "CSV columns: family_size,direct_average_num,direct_average_den,main_term,ss_density,ratio_direct_main,ratio_direct_ss\nJSON keys: the same")]
    Family(FamilyArgs),
    /// Class-number main term summed over prime chains.
    #[command(after_help = "CSV columns: x_max,length,main_term\nJSON keys: the same")]
    Mainterm(MaintermArgs),
    /// Window sums of H(D(p, q)) and H(D(p, q)) H(D(r, q)).
    #[command(after_help = "CSV columns: p,r,prop34_sum,prop34_ratio,prop33_sum,prop33_ratio\nJSON keys: rows[...], max_prop34_ratio, max_prop33_ratio")]
    Props(PropsArgs),
    /// Curves in the box reducing into prescribed twist classes.
    #[command(after_help = "CSV columns: count,reference,expected\nJSON keys: the same")]
    Rcount(RcountArgs),
    /// Partial Euler product for the amicable-pair constant.
    #[command(after_help = "CSV columns: cutoff,last_prime,partial_product,last_factor,factors_settling,compare_cutoff,relative_change\nJSON keys: the same")]
    Constants(ConstantsArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Cycles(_) => "cycles",
            Command::Twin(_) => "twin",
            Command::Anomalous(_) => "anomalous",
            Command::Classnum(_) => "classnum",
            Command::Lvalue(_) => "lvalue",
            Command::GsReport(_) => "gs-report",
            Command::Deuring(_) => "deuring",
            Command::Family(_) => "family",
            Command::Mainterm(_) => "mainterm",
            Command::Props(_) => "props",
            Command::Rcount(_) => "rcount",
            Command::Constants(_) => "constants",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CyclesArgs {
    pub a: i64,
    pub b: i64,
    #[arg(value_name = "L")]
    pub length: usize,
    #[arg(value_name = "X")]
    pub x_max: u64,
    #[arg(long, default_value_t = aliquot_core::aliquot::DEFAULT_MIN_PRIME)]
    pub min_prime: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CurveBoundArgs {
    pub a: i64,
    pub b: i64,
    #[arg(value_name = "X")]
    pub x_max: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassnumArgs {
    #[arg(value_name = "D", required_unless_present = "range", conflicts_with = "range")]
    pub d: Option<i64>,
    /// Every discriminant in [DMIN, DMAX].
    #[arg(long, num_args = 2, value_names = ["DMIN", "DMAX"])]
    pub range: Option<Vec<i64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct LvalueArgs {
    #[arg(value_name = "D")]
    pub d: i64,
    /// Also report the Euler product truncated at y.
    #[arg(long)]
    pub y: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct GsArgs {
    #[arg(long, value_name = "Q")]
    pub q: u64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Upper limit on the truncation point actually sieved.
    #[arg(long, default_value_t = 1e7)]
    pub y_cap: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Nonsingular,
    NonzeroResidues,
}

#[derive(Debug, Args, Serialize)]
pub struct DeuringArgs {
    #[arg(long, value_name = "P")]
    pub pmax: u64,
    /// Pairs counted on the left side. Only `nonsingular` is exact.
    #[arg(long, value_enum, default_value_t = Convention::Nonsingular)]
    pub convention: Convention,
    #[arg(long, hide = true)]
    #[serde(skip)]
    pub inject_fault: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FamilyArgs {
    #[arg(value_name = "A")]
    pub a_bound: u64,
    #[arg(value_name = "B")]
    pub b_bound: u64,
    #[arg(value_name = "X")]
    pub x_max: u64,
    #[arg(value_name = "L")]
    pub length: usize,
    /// Largest A*B*X run without --force.
    #[arg(long, default_value_t = 100_000_000)]
    pub budget: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct MaintermArgs {
    #[arg(value_name = "X")]
    pub x_max: u64,
    #[arg(value_name = "L")]
    pub length: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PropsArgs {
    #[arg(long, value_name = "P", required_unless_present = "sample", conflicts_with = "sample")]
    pub p: Option<u64>,
    /// Second prime for the paired sum; defaults to P.
    #[arg(long, value_name = "R")]
    pub r: Option<u64>,
    /// Sample this many primes log-uniformly from --lo..--hi instead.
    #[arg(long, value_name = "N")]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 1_000)]
    pub lo: u64,
    #[arg(long, default_value_t = 10_000)]
    pub hi: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct RcountArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub primes: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub s: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<u64>,
    #[arg(long, value_name = "A")]
    pub a: u64,
    #[arg(long, value_name = "B")]
    pub b: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub cutoff: u64,
    /// Also report the relative change from this smaller cutoff.
    #[arg(long, value_name = "CUTOFF")]
    pub compare: Option<u64>,
}

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Identity(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Identity(_) => 2,
            Failure::Budget(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Identity(m) | Failure::Budget(m) => m,
        }
    }
}

impl From<aliquot_core::Error> for Failure {
    fn from(e: aliquot_core::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(format!("i/o: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    let mut sink = Sink::new(cli.format, Box::new(std::io::BufWriter::new(std::io::stdout())));
    let result = match pool.install(|| commands::run(&cli, &mut sink)) {
        // a failed identity check still prints its report
        Ok(()) => sink.finish().map_err(Failure::from),
        Err(f @ Failure::Identity(_)) => sink.finish().map_err(Failure::from).and(Err(f)),
        Err(f) => Err(f),
    };

    let mut parameters = parameters_of(&cli.command);
    parameters.insert("format".into(), format!("{:?}", cli.format).to_lowercase());
    parameters.insert("seed".into(), cli.seed.to_string());
    let manifest = RunManifest {
        subcommand: cli.command.name().into(),
        parameters,
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        wall_time: started.elapsed().as_secs_f64(),
        worker_count: pool.current_num_threads(),
    };
    if let Err(e) = manifest.write(cli.manifest.as_deref()) {
        eprintln!("error: writing manifest: {e}");
        return ExitCode::from(1);
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
