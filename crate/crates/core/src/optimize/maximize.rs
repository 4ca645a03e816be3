//! Maximization of the total certified entropy over the free strengths.
//!
//! The last step is always projective, so an `n`-step protocol has `n − 1`
//! free strengths. The search is a coarse grid (geometric near 0, linear
//! above) followed by cyclic golden-section refinement of each coordinate,
//! started from several grid local maxima so that separated basins are not
//! lost to discretization.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde::Serialize;

use super::search::golden_section_max;
use super::{total_entropy, Aggregation, ExtractionSummary};
use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::protocol::ProtocolConfig;

/// Totals closer than this are ties; ties go to the candidate earliest in
/// grid order, i.e. the one with the smallest leading strengths.
const TIE_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 40;
const CANDIDATES: usize = 4;
/// Strengths this close to π/4 are candidates for canonicalization.
const NONINTERACTIVE_WINDOW: f64 = 1e-3;
/// A canonical form may lose at most this much (round-off and O(ε²) terms).
const CANONICAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    #[default]
    Free,
    /// Only strengths for which every step certifies a positive amount.
    AllStepsActive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaximizeOptions {
    pub mode: SearchMode,
    pub aggregation: Aggregation,
    /// Golden-section tolerance per coordinate, radians.
    pub xtol: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            mode: SearchMode::Free,
            aggregation: Aggregation::ProbabilityWeighted,
            xtol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Maximum {
    /// All strengths including the final projective 0.
    pub strengths: Vec<f64>,
    pub total_bits: f64,
    pub summary: ExtractionSummary,
    /// Best total on the coarse grid before refinement.
    pub grid_best: f64,
    /// False when no point satisfies the search mode (all-steps-active only).
    pub feasible: bool,
}

/// Per-axis coarse grid: 0, 80 geometric points on [1e-6, 0.05), 141 linear
/// points on [0.05, π/4].
pub fn strength_grid() -> Vec<f64> {
    let mut g = Vec::with_capacity(222);
    g.push(0.0);
    let (lo, hi, n_log) = (1e-6f64, 0.05f64, 80);
    let ratio = (hi / lo).powf(1.0 / n_log as f64);
    g.extend((0..n_log).map(|i| lo * ratio.powi(i)));
    let n_lin = 141;
    g.extend((0..n_lin).map(|i| hi + (FRAC_PI_4 - hi) * i as f64 / (n_lin - 1) as f64));
    *g.last_mut().unwrap() = FRAC_PI_4;
    g
}

struct Objective {
    noise: NoiseParams,
    opts: MaximizeOptions,
}

impl Objective {
    fn config(&self, free: &[f64]) -> Result<ProtocolConfig> {
        let mut strengths = free.to_vec();
        strengths.push(0.0);
        ProtocolConfig::bell_source(strengths, self.noise)
    }

    fn summary(&self, free: &[f64]) -> Result<ExtractionSummary> {
        total_entropy(&self.config(free)?, self.opts.aggregation)
    }

    fn value(&self, free: &[f64]) -> Result<f64> {
        let s = self.summary(free)?;
        Ok(match self.opts.mode {
            SearchMode::Free => s.total_bits,
            SearchMode::AllStepsActive if s.per_step.iter().all(|st| st.h_min > 0.0) => {
                s.total_bits
            }
            SearchMode::AllStepsActive => f64::NEG_INFINITY,
        })
    }
}

pub fn maximize(noise: NoiseParams, n_steps: usize) -> Result<Maximum> {
    maximize_with(noise, n_steps, &MaximizeOptions::default())
}

pub fn maximize_with(
    noise: NoiseParams,
    n_steps: usize,
    opts: &MaximizeOptions,
) -> Result<Maximum> {
    if !(1..=3).contains(&n_steps) {
        return Err(Error::InvalidArgument(format!(
            "steps must be 1, 2 or 3 (got {n_steps})"
        )));
    }
    if !(opts.xtol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "xtol must be positive (got {})",
            opts.xtol
        )));
    }
    let noise = NoiseParams::new(noise.p, noise.c)?;
    let obj = Objective { noise, opts: *opts };
    let dims = n_steps - 1;

    if dims == 0 {
        let value = obj.value(&[])?;
        return finish(&obj, Vec::new(), value, value);
    }

    let grid = strength_grid();
    let shape = vec![grid.len(); dims];
    let n_points = grid.len().pow(dims as u32);
    let point =
        |flat: usize| -> Vec<f64> { unflatten(flat, &shape).iter().map(|&i| grid[i]).collect() };

    let values: Vec<f64> = (0..n_points)
        .into_par_iter()
        .map(|flat| obj.value(&point(flat)))
        .collect::<Result<_>>()?;

    let grid_best_idx = select(values.iter().copied().enumerate());
    let grid_best = values[grid_best_idx];
    if grid_best == f64::NEG_INFINITY {
        return finish(&obj, point(grid_best_idx), f64::NEG_INFINITY, grid_best);
    }

    // refine the best few grid local maxima
    let mut peaks: Vec<usize> = (0..n_points)
        .filter(|&i| values[i] > f64::NEG_INFINITY && is_local_max(i, &values, &shape))
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks.truncate(CANDIDATES);
    if !peaks.contains(&grid_best_idx) {
        peaks.insert(0, grid_best_idx);
    }
    peaks.sort_unstable();

    let refined: Vec<(Vec<f64>, f64)> = peaks
        .par_iter()
        .map(|&idx| refine(&obj, &grid, point(idx), values[idx]))
        .collect::<Result<_>>()?;

    let best = select(refined.iter().map(|(_, v)| *v).enumerate());
    let (free, value) = refined[best].clone();
    let (free, value) = canonicalize(&obj, free, value)?;
    finish(&obj, free, value, grid_best)
}

fn finish(obj: &Objective, free: Vec<f64>, value: f64, grid_best: f64) -> Result<Maximum> {
    let summary = obj.summary(&free)?;
    let feasible = value > f64::NEG_INFINITY;
    let mut strengths = free;
    strengths.push(0.0);
    Ok(Maximum {
        strengths,
        total_bits: if feasible { summary.total_bits } else { 0.0 },
        summary,
        grid_best,
        feasible,
    })
}

/// A step at ξ = π/4 does nothing, so `[…, π/4, 0]` and `[…, 0, 0]` are the
/// same protocol with the same total. Report the projective form: from the
/// first near-noninteractive strength on, zero everything if that costs
/// nothing beyond round-off.
fn canonicalize(obj: &Objective, free: Vec<f64>, value: f64) -> Result<(Vec<f64>, f64)> {
    for d in 0..free.len() {
        if free[d] >= FRAC_PI_4 - NONINTERACTIVE_WINDOW {
            let mut alt = free.clone();
            alt[d..].iter_mut().for_each(|x| *x = 0.0);
            let v = obj.value(&alt)?;
            if v >= value - CANONICAL_TOL {
                return Ok((alt, v.max(value)));
            }
        }
    }
    Ok((free, value))
}

/// Index of the maximum, preferring the earliest among ties.
fn select(values: impl Iterator<Item = (usize, f64)>) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values {
        match best {
            Some((_, bv)) if !(v > bv + TIE_TOL) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map_or(0, |(i, _)| i)
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = flat % shape[d];
        flat /= shape[d];
    }
    idx
}

fn flatten(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

fn is_local_max(flat: usize, values: &[f64], shape: &[usize]) -> bool {
    let idx = unflatten(flat, shape);
    let v = values[flat];
    let dims = shape.len();
    // all 3^d − 1 neighbours
    for code in 0..3usize.pow(dims as u32) {
        let mut c = code;
        let mut nb = idx.clone();
        let mut inside = true;
        let mut moved = false;
        for d in 0..dims {
            let step = (c % 3) as isize - 1;
            c /= 3;
            moved |= step != 0;
            let j = idx[d] as isize + step;
            if j < 0 || j >= shape[d] as isize {
                inside = false;
                break;
            }
            nb[d] = j as usize;
        }
        if inside && moved && values[flatten(&nb, shape)] > v {
            return false;
        }
    }
    true
}

/// Cyclic coordinate golden-section refinement inside neighbouring grid cells.
fn refine(
    obj: &Objective,
    grid: &[f64],
    start: Vec<f64>,
    start_value: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut x = start;
    let mut fx = start_value;
    for _ in 0..MAX_SWEEPS {
        let mut moved = 0.0f64;
        for d in 0..x.len() {
            let (lo, hi) = bracket(grid, x[d]);
            let mut trial = x.clone();
            let (xd, fd) = golden_section_max(
                |t| {
                    trial[d] = t;
                    obj.value(&trial)
                },
                lo,
                hi,
                obj.opts.xtol,
            )?;
            if fd > fx {
                moved = moved.max((xd - x[d]).abs());
                x[d] = xd;
                fx = fd;
            }
        }
        if moved < obj.opts.xtol {
            break;
        }
    }
    Ok((x, fx))
}

/// Grid cells on either side of `x`.
fn bracket(grid: &[f64], x: f64) -> (f64, f64) {
    let n = grid.len();
    let i = grid.partition_point(|&g| g <= x).saturating_sub(1);
    let lo = grid[i.saturating_sub(1)];
    let hi = if grid[i] == x {
        grid[(i + 1).min(n - 1)]
    } else {
        grid[(i + 2).min(n - 1)]
    };
    (lo, hi)
}
