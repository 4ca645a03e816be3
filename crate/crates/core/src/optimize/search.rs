//! One-dimensional search primitives.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (√5 − 1)/2

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
///
/// Returns the best point evaluated (including both ends), so the result is
/// never worse than `f(lo)` or `f(hi)` even when `f` is not unimodal.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    debug_assert!(lo <= hi && xtol > 0.0);
    let mut best = (lo, f(lo)?);
    let f_hi = f(hi)?;
    if f_hi > best.1 {
        best = (hi, f_hi);
    }

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx > best.1 {
                best = (x, fx);
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bisection {
    /// Geometric midpoint of the final bracket.
    pub value: f64,
    pub low: f64,
    pub high: f64,
    pub iterations: usize,
}

/// Bisection in `log₁₀ x` on a boolean predicate that changes value once
/// inside `[low, high]`; stops when `high/low − 1 ≤ rel_tol`.
pub fn bisect_log<F>(mut pred: F, low: f64, high: f64, rel_tol: f64) -> Result<Bisection>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(low > 0.0 && high > low && rel_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bisection needs 0 < low < high and rel_tol > 0 (got [{low:e}, {high:e}], {rel_tol:e})"
        )));
    }
    let at_low = pred(low)?;
    let at_high = pred(high)?;
    if at_low == at_high {
        return Err(Error::Bracketing {
            low,
            high,
            value: at_low,
        });
    }

    let (mut a, mut b) = (low.log10(), high.log10());
    let stop = (1.0 + rel_tol).log10();
    let mut iterations = 0;
    while b - a > stop {
        let mid = 0.5 * (a + b);
        if pred(10f64.powf(mid))? == at_low {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    Ok(Bisection {
        value: 10f64.powf(0.5 * (a + b)),
        low: 10f64.powf(a),
        high: 10f64.powf(b),
        iterations,
    })
}
