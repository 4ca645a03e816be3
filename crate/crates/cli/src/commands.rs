//! The five subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use seqweak_core::optimize::StepEntropy;
use seqweak_core::{
    bootstrap, bootstrap_table, find_threshold, maximize_with, sample_table, settings_for,
    sweep_one, sweep_two, Aggregation, CountTable, Error, EstimateReport, MaximizeOptions,
    NoiseParams, ProtocolConfig, SearchMode, ThresholdQuery, ThresholdResult,
};
use serde::Serialize;

use crate::args::{
    CertifyArgs, Format, NoiseArgs, OptimizeArgs, OutputArgs, SimulateArgs, SweepArgs,
    ThresholdArgs,
};
use crate::exit::{Failure, EXIT_DATA, EXIT_NUMERIC};

type Outcome = Result<(), Failure>;

fn noise(args: &NoiseArgs) -> Result<NoiseParams, Failure> {
    NoiseParams::new(args.p, args.c).map_err(|e| Failure::usage(format!("--p/--c: {e}")))
}

fn open_output(out: &OutputArgs) -> Result<Box<dyn Write>, Failure> {
    match &out.out {
        Some(path) => {
            let f = File::create(path)
                .map_err(|e| Failure::usage(format!("--out {}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_json<T: Serialize>(out: &OutputArgs, value: &T) -> Outcome {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::io(e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| Failure::io(e.to_string()))
}

fn write_csv<T: Serialize>(out: &OutputArgs, rows: &[T]) -> Outcome {
    let mut w = csv::Writer::from_writer(open_output(out)?);
    for r in rows {
        w.serialize(r).map_err(|e| Failure::io(e.to_string()))?;
    }
    w.flush().map_err(|e| Failure::io(e.to_string()))
}

#[derive(Serialize)]
struct Table<'a, T> {
    p: f64,
    c: f64,
    rows: &'a [T],
}

pub fn sweep(args: &SweepArgs) -> Outcome {
    let noise = noise(&args.noise)?;
    let computed = |e: Error| Failure::from_core(e, EXIT_NUMERIC);
    macro_rules! emit {
        ($rows:expr) => {{
            let rows = $rows;
            match args.format {
                Format::Csv => write_csv(&args.output, &rows),
                Format::Json => write_json(
                    &args.output,
                    &Table {
                        p: noise.p,
                        c: noise.c,
                        rows: &rows,
                    },
                ),
            }
        }};
    }
    match &args.xi2_grid {
        None => emit!(sweep_one(noise, &args.xi1_grid.0).map_err(computed)?),
        Some(xi2) => emit!(sweep_two(noise, &args.xi1_grid.0, &xi2.0).map_err(computed)?),
    }
}

#[derive(Serialize)]
struct ThresholdOutput {
    #[serde(flatten)]
    result: ThresholdResult,
    steps: usize,
    c: f64,
    rel_tol: f64,
}

pub fn thresholds(args: &ThresholdArgs) -> Outcome {
    let mut query = ThresholdQuery::new(args.criterion);
    query.bracket = (args.p_low, args.p_high);
    query.rel_tol = args.rel_tol;
    query.c = args.c;
    if let Some(steps) = args.steps {
        query.steps = steps;
    }
    let result = find_threshold(&query).map_err(|e| Failure::from_core(e, EXIT_NUMERIC))?;
    write_json(
        &args.output,
        &ThresholdOutput {
            result,
            steps: query.steps,
            c: query.c,
            rel_tol: query.rel_tol,
        },
    )
}

#[derive(Serialize)]
struct OptimizeOutput {
    p: f64,
    c: f64,
    steps: usize,
    mode: SearchMode,
    aggregation: Aggregation,
    strengths: Vec<f64>,
    total_bits: f64,
    per_step: Vec<StepEntropy>,
    grid_best: f64,
    feasible: bool,
}

pub fn optimize(args: &OptimizeArgs) -> Outcome {
    let noise = noise(&args.noise)?;
    let opts = MaximizeOptions {
        mode: args.mode.into(),
        aggregation: args.aggregation.into(),
        ..Default::default()
    };
    let steps = args.steps as usize;
    let m = maximize_with(noise, steps, &opts).map_err(|e| Failure::from_core(e, EXIT_NUMERIC))?;
    write_json(
        &args.output,
        &OptimizeOutput {
            p: noise.p,
            c: noise.c,
            steps,
            mode: opts.mode,
            aggregation: opts.aggregation,
            strengths: m.strengths,
            total_bits: m.total_bits,
            per_step: m.summary.per_step,
            grid_best: m.grid_best,
            feasible: m.feasible,
        },
    )
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    config: &'a ProtocolConfig,
    mean_counts: f64,
    #[serde(flatten)]
    report: EstimateReport,
}

fn check_trials(trials: usize) -> Outcome {
    if trials < 2 {
        return Err(Failure::usage(format!(
            "--trials must be at least 2 (got {trials})"
        )));
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let noise = noise(&args.noise)?;
    let config = ProtocolConfig::new(args.protocol.theta1, args.protocol.strengths.clone(), noise)
        .map_err(|e| Failure::usage(e.to_string()))?;
    if !(args.counts > 0.0 && args.counts.is_finite()) {
        return Err(Failure::usage(format!(
            "--counts must be positive (got {})",
            args.counts
        )));
    }
    check_trials(args.bootstrap.trials)?;
    let specs = settings_for(&config, args.counts).map_err(|e| Failure::usage(e.to_string()))?;

    if let Some(path) = &args.dump_counts {
        let table = sample_table(&config, &specs, args.bootstrap.seed, 0)
            .map_err(|e| Failure::from_core(e, EXIT_NUMERIC))?;
        table
            .write_path(path)
            .map_err(|e| Failure::usage(format!("--dump-counts {}: {e}", path.display())))?;
    }
    // with too few counts a setting can come up empty: a numeric, not a file, problem here
    let report = bootstrap(&config, &specs, args.bootstrap.trials, args.bootstrap.seed)
        .map_err(|e| Failure::from_core(e, EXIT_NUMERIC))?;
    write_json(
        &args.output,
        &SimulateOutput {
            config: &config,
            mean_counts: args.counts,
            report,
        },
    )
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    counts_file: &'a Path,
    theta1: f64,
    strengths: &'a [f64],
    #[serde(flatten)]
    report: EstimateReport,
}

pub fn certify(args: &CertifyArgs) -> Outcome {
    // estimation needs only the ideal angles, which are noise-independent
    let config = ProtocolConfig::new(
        args.protocol.theta1,
        args.protocol.strengths.clone(),
        NoiseParams::ideal(),
    )
    .map_err(|e| Failure::usage(e.to_string()))?;
    check_trials(args.bootstrap.trials)?;
    let table =
        CountTable::read_path(&args.counts_file).map_err(|e| Failure::from_core(e, EXIT_DATA))?;
    let report = bootstrap_table(&table, &config, args.bootstrap.trials, args.bootstrap.seed)
        .map_err(|e| Failure::from_core(e, EXIT_DATA))?;
    write_json(
        &args.output,
        &CertifyOutput {
            counts_file: &args.counts_file,
            theta1: config.theta1,
            strengths: &config.strengths,
            report,
        },
    )
}
