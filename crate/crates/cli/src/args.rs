//! Command-line definitions and value parsers.

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seqweak_core::{Aggregation, SearchMode, ThresholdCriterion};

/// Values this far above π/4 are read as π/4, so that four-decimal inputs
/// such as `0.7854` work.
pub const ANGLE_SLACK: f64 = 1e-4;

#[derive(Parser, Debug)]
#[command(
    name = "seqweak",
    version,
    about = "Randomness certification for sequences of weak measurements on one entangled pair",
    long_about = "Randomness certification for sequences of weak measurements on one entangled pair.\n\n\
All angles (strengths ξ, Schmidt angle θ₁) are in radians, within [0, π/4]. \
ξ = 0 is a projective measurement and ξ = π/4 a noninteractive one. \
The final strength of every protocol is 0."
)]
pub struct Cli {
    /// Worker threads for parallel evaluation (results do not depend on it).
    #[arg(long, global = true, env = "SEQWEAK_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate certified bits over a grid of strengths (last step projective).
    Sweep(SweepArgs),
    /// Locate a noise threshold by bisection in log10(p).
    Thresholds(ThresholdArgs),
    /// Maximize total certified bits over the free strengths.
    Optimize(OptimizeArgs),
    /// Simulate Poissonian counts and bootstrap the certificates.
    Simulate(SimulateArgs),
    /// Certify from a file of coincidence counts.
    Certify(CertifyArgs),
}

#[derive(Args, Debug, Clone, Copy)]
pub struct NoiseArgs {
    /// Depolarization weight p.
    #[arg(long = "p", value_name = "P")]
    pub p: f64,
    /// Dephasing weight c.
    #[arg(long = "c", value_name = "C", default_value_t = 0.0)]
    pub c: f64,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// ξ₁ grid as start:stop:n (radians, n points, endpoints included).
    #[arg(long, value_name = "START:STOP:N", value_parser = parse_grid)]
    pub xi1_grid: Grid,
    /// ξ₂ grid; when given, sweeps three steps [ξ₁, ξ₂, 0] instead of two.
    #[arg(long, value_name = "START:STOP:N", value_parser = parse_grid)]
    pub xi2_grid: Option<Grid>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    /// xi1 (optimal ξ₁ becomes 0), xi2 (optimal ξ₂ becomes 0) or bits:<x>
    /// (a protocol with every step active reaches x bits).
    #[arg(long, value_parser = parse_criterion)]
    pub criterion: ThresholdCriterion,
    #[arg(long, default_value_t = 1e-10)]
    pub p_low: f64,
    #[arg(long, default_value_t = 1e-1)]
    pub p_high: f64,
    /// Stop when p_high/p_low − 1 falls below this.
    #[arg(long, default_value_t = 1e-3)]
    pub rel_tol: f64,
    /// Protocol length (default 2 for xi1, 3 otherwise).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Dephasing weight held fixed during the search.
    #[arg(long = "c", default_value_t = 0.0)]
    pub c: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Any strengths.
    Free,
    /// Only strengths for which every step certifies a positive amount.
    AllActive,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Free => SearchMode::Free,
            ModeArg::AllActive => SearchMode::AllStepsActive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    Weighted,
    WorstCase,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Weighted => Aggregation::ProbabilityWeighted,
            AggregationArg::WorstCase => Aggregation::WorstCase,
        }
    }
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Number of steps, the last one projective.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub steps: u8,
    #[arg(long, value_enum, default_value_t = ModeArg::Free)]
    pub mode: ModeArg,
    /// How branch values at one step are combined.
    #[arg(long, value_enum, default_value_t = AggregationArg::Weighted)]
    pub aggregation: AggregationArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    /// Comma-separated strengths in radians, e.g. 0.4,0.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_angle)]
    pub strengths: Vec<f64>,
    /// Schmidt angle of the source, radians.
    #[arg(long, default_value_t = FRAC_PI_4, value_parser = parse_angle)]
    pub theta1: f64,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    /// Bootstrap trials.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Master seed; trial t uses stream t of ChaCha20 seeded with it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Mean coincidences per setting.
    #[arg(long)]
    pub counts: f64,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    /// Also write one sampled count table (trial 0) to this CSV file.
    #[arg(long, value_name = "PATH")]
    pub dump_counts: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    /// CSV with header step,history,alice_setting,bob_setting,n_pp,n_pm,n_mp,n_mm.
    #[arg(long, value_name = "PATH")]
    pub counts_file: PathBuf,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_float(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

/// An angle in [0, π/4]; up to [`ANGLE_SLACK`] above π/4 reads as π/4.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let v = parse_float(s)?;
    if (0.0..=FRAC_PI_4).contains(&v) {
        Ok(v)
    } else if v > FRAC_PI_4 && v <= FRAC_PI_4 + ANGLE_SLACK {
        Ok(FRAC_PI_4)
    } else {
        Err(format!("angle {v} outside [0, π/4] radians"))
    }
}

/// Evenly spaced strengths, endpoints included.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// `start:stop:n` with `n ≥ 1`; `n = 1` gives `[start]`.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, n] = parts[..] else {
        return Err(format!("grid {s:?} must look like start:stop:n"));
    };
    let start = parse_angle(start)?;
    let stop = parse_angle(stop)?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| format!("grid size {n:?} is not a positive integer"))?;
    if n == 0 {
        return Err("grid size must be at least 1".into());
    }
    if n == 1 {
        return Ok(Grid(vec![start]));
    }
    if stop < start {
        return Err(format!("grid stop {stop} is below start {start}"));
    }
    Ok(Grid(
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    ))
}

fn parse_criterion(s: &str) -> Result<ThresholdCriterion, String> {
    s.parse().map_err(|e: seqweak_core::Error| e.to_string())
}
