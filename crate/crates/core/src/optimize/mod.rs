//! Total certified randomness over a measurement sequence, parameter sweeps,
//! maximization over strengths, and noise-threshold search.

mod maximize;
pub mod search;
mod threshold;

use rayon::prelude::*;
use serde::Serialize;

use crate::bell::bell_value;
use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::protocol::{evolve_to_depth, ProtocolConfig};

pub use maximize::{maximize, maximize_with, strength_grid, MaximizeOptions, Maximum, SearchMode};
pub use threshold::{
    find_threshold, ThresholdCriterion, ThresholdQuery, ThresholdResult, ZERO_DEADBAND,
};

/// How per-branch min-entropies at one step are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    ProbabilityWeighted,
    WorstCase,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepEntropy {
    /// 1-based step index.
    pub step: usize,
    pub h_min: f64,
    /// Some branch at this step was separable (β = 2) and contributed 0 bits.
    pub uncertifiable: bool,
    /// Some branch had β > 1.99.
    pub low_confidence: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtractionSummary {
    pub per_step: Vec<StepEntropy>,
    pub total_bits: f64,
    pub aggregation: Aggregation,
}

impl ExtractionSummary {
    pub fn h(&self, step: usize) -> f64 {
        self.per_step.get(step - 1).map_or(0.0, |s| s.h_min)
    }
}

/// Certified bits per step, aggregated over histories, and their sum.
///
/// The outcome of the final step is counted even when it is projective; B⁰
/// outcomes never are.
pub fn total_entropy(
    config: &ProtocolConfig,
    aggregation: Aggregation,
) -> Result<ExtractionSummary> {
    let n = config.steps();
    if n == 0 {
        return Ok(ExtractionSummary {
            per_step: Vec::new(),
            total_bits: 0.0,
            aggregation,
        });
    }
    let levels = evolve_to_depth(config, n - 1)?;
    let mut per_step = Vec::with_capacity(n);
    for (k, level) in levels.iter().enumerate() {
        let xi = config.strengths[k];
        let mut weighted = 0.0;
        let mut worst = f64::INFINITY;
        let mut uncertifiable = false;
        let mut low_confidence = false;
        for node in level {
            let cert = bell_value(&node.state, node.ideal_theta, xi)?;
            weighted += node.probability * cert.h_min;
            worst = worst.min(cert.h_min);
            uncertifiable |= cert.uncertifiable;
            low_confidence |= cert.low_confidence;
        }
        let h_min = match aggregation {
            Aggregation::ProbabilityWeighted => weighted.max(0.0),
            Aggregation::WorstCase => worst,
        };
        per_step.push(StepEntropy {
            step: k + 1,
            h_min,
            uncertifiable,
            low_confidence,
        });
    }
    let total_bits = per_step.iter().map(|s| s.h_min).sum();
    Ok(ExtractionSummary {
        per_step,
        total_bits,
        aggregation,
    })
}

/// One weak step followed by a projective one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow1 {
    pub xi1: f64,
    pub h1: f64,
    pub h2: f64,
    pub total: f64,
}

/// Two weak steps followed by a projective one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow2 {
    pub xi1: f64,
    pub xi2: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub total: f64,
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} grid is empty")));
    }
    Ok(())
}

/// Two-step totals for strengths `[ξ₁, 0]`, ordered by ξ₁.
pub fn sweep_one(noise: NoiseParams, xi1_grid: &[f64]) -> Result<Vec<SweepRow1>> {
    check_grid("xi1", xi1_grid)?;
    let mut grid = xi1_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.par_iter()
        .map(|&xi1| {
            let cfg = ProtocolConfig::bell_source(vec![xi1, 0.0], noise)?;
            let s = total_entropy(&cfg, Aggregation::ProbabilityWeighted)?;
            Ok(SweepRow1 {
                xi1,
                h1: s.h(1),
                h2: s.h(2),
                total: s.total_bits,
            })
        })
        .collect()
}

/// Three-step totals for strengths `[ξ₁, ξ₂, 0]`, ξ₁-major in grid order.
pub fn sweep_two(noise: NoiseParams, xi1_grid: &[f64], xi2_grid: &[f64]) -> Result<Vec<SweepRow2>> {
    check_grid("xi1", xi1_grid)?;
    check_grid("xi2", xi2_grid)?;
    let pairs: Vec<(f64, f64)> = xi1_grid
        .iter()
        .flat_map(|&a| xi2_grid.iter().map(move |&b| (a, b)))
        .collect();
    pairs
        .par_iter()
        .map(|&(xi1, xi2)| {
            let cfg = ProtocolConfig::bell_source(vec![xi1, xi2, 0.0], noise)?;
            let s = total_entropy(&cfg, Aggregation::ProbabilityWeighted)?;
            Ok(SweepRow2 {
                xi1,
                xi2,
                h1: s.h(1),
                h2: s.h(2),
                h3: s.h(3),
                total: s.total_bits,
            })
        })
        .collect()
}
