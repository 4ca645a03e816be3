//! Counting statistics of the sequential Bell test.
//!
//! Each setting `(step, history, Alice setting, Bob setting)` is exposed for a
//! fixed time; the four outcome-pair cells receive independent Poisson counts
//! whose means are `mean_total_counts × p(a, b)`. Correlators are estimated
//! from the counts and fed through the same certificate as the analytic path.
//!
//! Reproducibility contract: the generator is ChaCha20 (`rand_chacha`). A run
//! with master seed `s` uses `ChaCha20Rng::seed_from_u64(s)` with the stream
//! set to the trial index `t` (`set_stream(t)`), so trials are independent and
//! can run in any order. Within a trial, rows are sampled in table order and
//! cells in the order `++, +−, −+, −−`. [`sample_counts`] is trial 0 of a
//! one-row table.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{beta_unchecked, certify, observables_unchecked, BellCertificate, Correlators};
use crate::error::{Error, Result};
use crate::protocol::{
    evolve_to_depth, kraus, tree_thetas, BranchNode, History, Outcome, ProtocolConfig,
};
use crate::qcore::{expect_unchecked, tensor, QubitOperator};

/// A report flags an estimate when more than this fraction of trials clamped.
pub const CLAMP_FLAG_FRACTION: f64 = 0.01;

pub const CSV_HEADER: [&str; 8] = [
    "step",
    "history",
    "alice_setting",
    "bob_setting",
    "n_pp",
    "n_pm",
    "n_mp",
    "n_mm",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SettingSpec {
    /// 1-based.
    pub step: usize,
    pub history: History,
    pub alice_setting: u8,
    pub bob_setting: u8,
    /// Expected coincidences for this setting's exposure.
    pub mean_total_counts: f64,
}

impl SettingSpec {
    pub fn new(
        step: usize,
        history: History,
        alice_setting: u8,
        bob_setting: u8,
        mean_total_counts: f64,
    ) -> Result<Self> {
        check_key(step, &history, alice_setting, bob_setting).map_err(Error::InvalidArgument)?;
        if !(mean_total_counts > 0.0 && mean_total_counts.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mean_total_counts must be positive (got {mean_total_counts})"
            )));
        }
        Ok(SettingSpec {
            step,
            history,
            alice_setting,
            bob_setting,
            mean_total_counts,
        })
    }
}

fn check_key(
    step: usize,
    history: &History,
    alice: u8,
    bob: u8,
) -> std::result::Result<(), String> {
    if step == 0 {
        return Err("step must be at least 1".into());
    }
    if history.len() != step - 1 {
        return Err(format!(
            "history '{history}' must have length {} at step {step}",
            step - 1
        ));
    }
    if alice > 1 || bob > 1 {
        return Err(format!("settings must be 0 or 1 (got A{alice}/B{bob})"));
    }
    Ok(())
}

/// Every setting needed to certify every step and history of `config`.
pub fn settings_for(config: &ProtocolConfig, mean_total_counts: f64) -> Result<Vec<SettingSpec>> {
    let mut out = Vec::new();
    for step in 1..=config.steps() {
        for history in History::all(step - 1) {
            for a in 0..2 {
                for b in 0..2 {
                    out.push(SettingSpec::new(
                        step,
                        history.clone(),
                        a,
                        b,
                        mean_total_counts,
                    )?);
                }
            }
        }
    }
    Ok(out)
}

/// Counts for outcome pairs (Alice, Bob).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
}

impl OutcomeCounts {
    pub fn total(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }

    pub fn cells(&self) -> [f64; 4] {
        [
            self.pp as f64,
            self.pm as f64,
            self.mp as f64,
            self.mm as f64,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountRow {
    pub step: usize,
    pub history: History,
    pub alice_setting: u8,
    pub bob_setting: u8,
    pub counts: OutcomeCounts,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CountTable {
    pub rows: Vec<CountRow>,
}

impl CountTable {
    pub fn new(rows: Vec<CountRow>) -> Self {
        CountTable { rows }
    }

    /// Comma-separated, header row required. Errors cite the 1-based line number.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::CountFile {
            row: 1,
            message: e.to_string(),
        })?;
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::CountFile {
                row: 1,
                message: format!("header must be {}", CSV_HEADER.join(",")),
            });
        }

        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::CountFile {
                row: e.position().map_or(line, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let bad = |message: String| Error::CountFile { row: line, message };
            if rec.len() != CSV_HEADER.len() {
                return Err(bad(format!(
                    "expected {} fields, found {}",
                    CSV_HEADER.len(),
                    rec.len()
                )));
            }
            let int = |idx: usize| -> Result<u64> {
                rec[idx].parse::<u64>().map_err(|_| {
                    bad(format!(
                        "{} must be a non-negative integer (got {:?})",
                        CSV_HEADER[idx], &rec[idx]
                    ))
                })
            };
            let step = int(0)? as usize;
            let history: History = rec[1].parse().map_err(|e: Error| bad(e.to_string()))?;
            let alice = int(2)?;
            let bob = int(3)?;
            if alice > 1 || bob > 1 {
                return Err(bad(format!("settings must be 0 or 1 (got {alice}, {bob})")));
            }
            check_key(step, &history, alice as u8, bob as u8).map_err(bad)?;
            rows.push(CountRow {
                step,
                history,
                alice_setting: alice as u8,
                bob_setting: bob as u8,
                counts: OutcomeCounts {
                    pp: int(4)?,
                    pm: int(5)?,
                    mp: int(6)?,
                    mm: int(7)?,
                },
            });
        }
        Ok(CountTable { rows })
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            let c = &r.counts;
            w.write_record([
                r.step.to_string(),
                r.history.to_string(),
                r.alice_setting.to_string(),
                r.bob_setting.to_string(),
                c.pp.to_string(),
                c.pm.to_string(),
                c.mp.to_string(),
                c.mm.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::CountFile {
            row: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_csv(std::io::BufReader::new(f))
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        self.to_csv(std::fs::File::create(path)?)
    }
}

/// Exact outcome statistics for every branch of a configuration.
pub struct OutcomeModel {
    config: ProtocolConfig,
    levels: Vec<Vec<BranchNode>>,
}

impl OutcomeModel {
    pub fn new(config: &ProtocolConfig) -> Result<Self> {
        let depth = config.steps().saturating_sub(1);
        Ok(OutcomeModel {
            config: config.clone(),
            levels: evolve_to_depth(config, depth)?,
        })
    }

    fn branch(&self, step: usize, history: &History) -> Result<&BranchNode> {
        let unreachable = || Error::UnreachableHistory {
            history: history.to_string(),
            step,
            steps: self.config.steps(),
        };
        if step == 0 || step > self.config.steps() || history.len() != step - 1 {
            return Err(unreachable());
        }
        self.levels[step - 1]
            .get(history.index())
            .ok_or_else(unreachable)
    }

    /// `[p(+,+), p(+,−), p(−,+), p(−,−)]`, Alice's outcome first.
    pub fn probabilities(
        &self,
        step: usize,
        history: &History,
        alice_setting: u8,
        bob_setting: u8,
    ) -> Result<[f64; 4]> {
        check_key(step, history, alice_setting, bob_setting).map_err(Error::InvalidArgument)?;
        let node = self.branch(step, history)?;
        let xi = self.config.strengths[step - 1];
        let obs = observables_unchecked(node.ideal_theta, xi);
        let a = if alice_setting == 0 { obs.a0 } else { obs.a1 };
        let id = QubitOperator::identity();
        let alice_proj = |o: Outcome| (id + a.scale(o.sign())).scale(0.5);
        let bob_effect = |o: Outcome| {
            if bob_setting == 0 {
                (id + QubitOperator::sigma_z().scale(o.sign())).scale(0.5)
            } else {
                let k = kraus(xi, o);
                k.adjoint() * k
            }
        };
        let mut out = [0.0; 4];
        for (i, oa) in Outcome::BOTH.into_iter().enumerate() {
            for (j, ob) in Outcome::BOTH.into_iter().enumerate() {
                let p = expect_unchecked(&node.state, &tensor(&alice_proj(oa), &bob_effect(ob)));
                out[2 * i + j] = p.max(0.0);
            }
        }
        Ok(out)
    }
}

/// Joint outcome distribution for one setting (see [`OutcomeModel::probabilities`]).
pub fn outcome_probabilities(config: &ProtocolConfig, spec: &SettingSpec) -> Result<[f64; 4]> {
    OutcomeModel::new(config)?.probabilities(
        spec.step,
        &spec.history,
        spec.alice_setting,
        spec.bob_setting,
    )
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn poisson(rng: &mut ChaCha20Rng, mean: f64) -> u64 {
    if mean > 0.0 {
        // the distribution only rejects non-positive or non-finite means
        Poisson::new(mean)
            .map(|d| d.sample(rng) as u64)
            .unwrap_or(0)
    } else {
        0
    }
}

fn sample_cells(rng: &mut ChaCha20Rng, means: &[f64; 4]) -> OutcomeCounts {
    OutcomeCounts {
        pp: poisson(rng, means[0]),
        pm: poisson(rng, means[1]),
        mp: poisson(rng, means[2]),
        mm: poisson(rng, means[3]),
    }
}

/// Independent Poisson counts with means `mean_total_counts × probs`.
pub fn sample_counts(probs: &[f64; 4], mean_total_counts: f64, seed: u64) -> OutcomeCounts {
    let means = probs.map(|p| p * mean_total_counts);
    sample_cells(&mut trial_rng(seed, 0), &means)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchEstimate {
    pub step: usize,
    pub history: History,
    /// Point estimate.
    pub certificate: BellCertificate,
    pub i_mean: f64,
    pub i_std: f64,
    pub h_min_mean: f64,
    pub h_min_std: f64,
    /// Fraction of trials whose Bell value exceeded the quantum bound.
    pub clamp_fraction: f64,
    /// `clamp_fraction > 1%`: the h_min mean is biased upward by clamping.
    pub clamp_flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimates: Vec<BranchEstimate>,
    /// 0 for a plain point estimate.
    pub trials: usize,
    pub seed: Option<u64>,
}

impl EstimateReport {
    pub fn get(&self, step: usize, history: &History) -> Option<&BranchEstimate> {
        self.estimates
            .iter()
            .find(|e| e.step == step && &e.history == history)
    }
}

type GroupKey = (usize, History);

/// Correlators and certificates from (real-valued) cell counts.
fn estimate_cells<'a, I>(
    rows: I,
    config: &ProtocolConfig,
) -> Result<Vec<(GroupKey, BellCertificate)>>
where
    I: IntoIterator<Item = (usize, &'a History, u8, u8, [f64; 4])>,
{
    let mut groups: BTreeMap<GroupKey, [[Option<[f64; 4]>; 2]; 2]> = BTreeMap::new();
    for (step, history, a, b, cells) in rows {
        if step == 0 || step > config.steps() || history.len() != step - 1 {
            return Err(Error::UnreachableHistory {
                history: history.to_string(),
                step,
                steps: config.steps(),
            });
        }
        let slot = &mut groups.entry((step, history.clone())).or_default()[a as usize][b as usize];
        if slot.is_some() {
            return Err(Error::CountTable(format!(
                "duplicate row for step {step}, history '{history}', settings A{a}/B{b}"
            )));
        }
        *slot = Some(cells);
    }

    let thetas = tree_thetas(config)?;
    let mut out = Vec::with_capacity(groups.len());
    for ((step, history), settings) in groups {
        let mut corr = [[0.0; 2]; 2];
        let mut bob_marginal = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let c = settings[a][b].ok_or_else(|| {
                    Error::CountTable(format!(
                        "step {step}, history '{history}': missing setting A{a}/B{b}"
                    ))
                })?;
                let n: f64 = c.iter().sum();
                if !(n > 0.0) {
                    return Err(Error::InsufficientData {
                        step,
                        history: history.to_string(),
                        alice: a as u8,
                        bob: b as u8,
                    });
                }
                corr[a][b] = (c[0] + c[3] - c[1] - c[2]) / n;
                if b == 0 {
                    bob_marginal += 0.5 * (c[0] + c[2] - c[1] - c[3]) / n;
                }
            }
        }
        let correlators = Correlators {
            b0: bob_marginal,
            a0b0: corr[0][0],
            a0b1: corr[0][1],
            a1b0: corr[1][0],
            a1b1: corr[1][1],
        };
        let beta = beta_unchecked(thetas[step - 1]);
        out.push(((step, history), certify(correlators, beta)));
    }
    Ok(out)
}

fn point_report(point: Vec<(GroupKey, BellCertificate)>) -> EstimateReport {
    EstimateReport {
        estimates: point
            .into_iter()
            .map(|((step, history), cert)| BranchEstimate {
                step,
                history,
                i_mean: cert.i_value,
                i_std: 0.0,
                h_min_mean: cert.h_min,
                h_min_std: 0.0,
                clamp_fraction: if cert.overshoot { 1.0 } else { 0.0 },
                clamp_flagged: cert.overshoot,
                certificate: cert,
            })
            .collect(),
        trials: 0,
        seed: None,
    }
}

/// Point estimates from a count table.
pub fn estimate(table: &CountTable, config: &ProtocolConfig) -> Result<EstimateReport> {
    let rows = table.rows.iter().map(|r| {
        (
            r.step,
            &r.history,
            r.alice_setting,
            r.bob_setting,
            r.counts.cells(),
        )
    });
    Ok(point_report(estimate_cells(rows, config)?))
}

/// Point estimates from exact expected (real-valued) counts; equals the
/// analytic certificate up to round-off.
pub fn estimate_expected(config: &ProtocolConfig, specs: &[SettingSpec]) -> Result<EstimateReport> {
    let means = expected_means(config, specs)?;
    let rows = specs
        .iter()
        .zip(&means)
        .map(|(s, m)| (s.step, &s.history, s.alice_setting, s.bob_setting, *m));
    Ok(point_report(estimate_cells(rows, config)?))
}

fn expected_means(config: &ProtocolConfig, specs: &[SettingSpec]) -> Result<Vec<[f64; 4]>> {
    let model = OutcomeModel::new(config)?;
    specs
        .iter()
        .map(|s| {
            let p = model.probabilities(s.step, &s.history, s.alice_setting, s.bob_setting)?;
            Ok(p.map(|x| x * s.mean_total_counts))
        })
        .collect()
}

/// Expected counts rounded to the nearest integer.
pub fn expected_table(config: &ProtocolConfig, specs: &[SettingSpec]) -> Result<CountTable> {
    let means = expected_means(config, specs)?;
    Ok(CountTable::new(
        specs
            .iter()
            .zip(means)
            .map(|(s, m)| CountRow {
                step: s.step,
                history: s.history.clone(),
                alice_setting: s.alice_setting,
                bob_setting: s.bob_setting,
                counts: OutcomeCounts {
                    pp: m[0].round() as u64,
                    pm: m[1].round() as u64,
                    mp: m[2].round() as u64,
                    mm: m[3].round() as u64,
                },
            })
            .collect(),
    ))
}

/// One sampled table: trial `trial` of the seed schedule.
pub fn sample_table(
    config: &ProtocolConfig,
    specs: &[SettingSpec],
    seed: u64,
    trial: u64,
) -> Result<CountTable> {
    let means = expected_means(config, specs)?;
    let mut rng = trial_rng(seed, trial);
    Ok(CountTable::new(
        specs
            .iter()
            .zip(&means)
            .map(|(s, m)| CountRow {
                step: s.step,
                history: s.history.clone(),
                alice_setting: s.alice_setting,
                bob_setting: s.bob_setting,
                counts: sample_cells(&mut rng, m),
            })
            .collect(),
    ))
}

struct Keyed<'a> {
    step: usize,
    history: &'a History,
    alice: u8,
    bob: u8,
    means: [f64; 4],
}

fn run_bootstrap(
    config: &ProtocolConfig,
    rows: &[Keyed<'_>],
    trials: usize,
    seed: u64,
) -> Result<EstimateReport> {
    if trials < 2 {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs at least 2 trials (got {trials})"
        )));
    }
    let point = estimate_cells(
        rows.iter()
            .map(|r| (r.step, r.history, r.alice, r.bob, r.means)),
        config,
    )?;

    let per_trial: Vec<Vec<(GroupKey, BellCertificate)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let sampled: Vec<[f64; 4]> = rows
                .iter()
                .map(|r| sample_cells(&mut rng, &r.means).cells())
                .collect();
            estimate_cells(
                rows.iter()
                    .zip(&sampled)
                    .map(|(r, c)| (r.step, r.history, r.alice, r.bob, *c)),
                config,
            )
        })
        .collect::<Result<_>>()?;

    let n = trials as f64;
    let estimates = point
        .into_iter()
        .enumerate()
        .map(|(g, (key, certificate))| {
            let i_vals: Vec<f64> = per_trial.iter().map(|t| t[g].1.i_value).collect();
            let h_vals: Vec<f64> = per_trial.iter().map(|t| t[g].1.h_min).collect();
            let clamps = per_trial.iter().filter(|t| t[g].1.overshoot).count();
            let (i_mean, i_std) = mean_std(&i_vals);
            let (h_min_mean, h_min_std) = mean_std(&h_vals);
            let clamp_fraction = clamps as f64 / n;
            BranchEstimate {
                step: key.0,
                history: key.1,
                certificate,
                i_mean,
                i_std,
                h_min_mean,
                h_min_std,
                clamp_fraction,
                clamp_flagged: clamp_fraction > CLAMP_FLAG_FRACTION,
            }
        })
        .collect();
    Ok(EstimateReport {
        estimates,
        trials,
        seed: Some(seed),
    })
}

/// Mean and sample (n − 1) standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Samples counts around the model predictions `trials` times; the point
/// estimate comes from the exact expected counts.
pub fn bootstrap(
    config: &ProtocolConfig,
    specs: &[SettingSpec],
    trials: usize,
    seed: u64,
) -> Result<EstimateReport> {
    let means = expected_means(config, specs)?;
    let rows: Vec<Keyed<'_>> = specs
        .iter()
        .zip(means)
        .map(|(s, means)| Keyed {
            step: s.step,
            history: &s.history,
            alice: s.alice_setting,
            bob: s.bob_setting,
            means,
        })
        .collect();
    run_bootstrap(config, &rows, trials, seed)
}

/// Parametric bootstrap around observed counts: each cell is resampled as
/// Poisson with the observed count as its mean.
pub fn bootstrap_table(
    table: &CountTable,
    config: &ProtocolConfig,
    trials: usize,
    seed: u64,
) -> Result<EstimateReport> {
    let rows: Vec<Keyed<'_>> = table
        .rows
        .iter()
        .map(|r| Keyed {
            step: r.step,
            history: &r.history,
            alice: r.alice_setting,
            bob: r.bob_setting,
            means: r.counts.cells(),
        })
        .collect();
    run_bootstrap(config, &rows, trials, seed)
}
