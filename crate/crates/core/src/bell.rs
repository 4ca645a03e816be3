//! Tilted CHSH certificate for one protocol step.
//!
//! For a step with ideal Schmidt angle θ and Bob strength ξ:
//!
//! ```text
//! μ = arctan(sin 2θ)          β = 2 cos 2θ / √(1 + sin² 2θ)
//! A⁰ = cos μ σ_z + sin μ σ_x  A¹ = cos μ σ_z − sin μ σ_x
//! B⁰ = σ_z                    B¹ = cos 2ξ σ_x
//! I = β⟨B⁰⟩ + ⟨A⁰B⁰⟩ + ⟨A⁰B¹⟩ + ⟨A¹B⁰⟩ − ⟨A¹B¹⟩
//! ```
//!
//! Local models obey `I ≤ 2 + β`; quantum mechanics allows up to
//! `I_max = √(2(4 + β²))`. The guessing probability of Bob's B¹ outcome is
//! bounded by `G = ½ + √(I_max² − I²) / (2(2 − β))` and `H_min = −log₂ G`.

use serde::Serialize;

use crate::error::{check_angle, check_range, Error, Result};
use crate::qcore::{expect_unchecked, on_bob, tensor, QubitOperator, TwoQubitState};

/// β above this is reported but marked low-confidence: the guessing bound has
/// not been characterized that close to the separable limit.
pub const LOW_CONFIDENCE_BETA: f64 = 1.99;

/// `I_max − I` below this is treated as round-off, i.e. a maximal violation.
pub const ROUNDOFF_GAP: f64 = 1e-12;

/// `2 − β` at or below this means θ = 0: nothing to certify.
const SEPARABLE_GAP: f64 = 1e-15;

pub fn beta_of(theta: f64) -> Result<f64> {
    Ok(beta_unchecked(check_angle("theta", theta)?))
}

pub(crate) fn beta_unchecked(theta: f64) -> f64 {
    let s = (2.0 * theta).sin();
    2.0 * (2.0 * theta).cos() / (1.0 + s * s).sqrt()
}

/// Quantum maximum `√(2(4 + β²))`.
pub fn i_max_of(beta: f64) -> f64 {
    (2.0 * (4.0 + beta * beta)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepObservables {
    pub a0: QubitOperator,
    pub a1: QubitOperator,
    pub b0: QubitOperator,
    pub b1: QubitOperator,
}

pub fn observables(theta: f64, xi: f64) -> Result<StepObservables> {
    let theta = check_angle("theta", theta)?;
    let xi = check_angle("xi", xi)?;
    Ok(observables_unchecked(theta, xi))
}

pub(crate) fn observables_unchecked(theta: f64, xi: f64) -> StepObservables {
    let mu = (2.0 * theta).sin().atan();
    let (sm, cm) = mu.sin_cos();
    let z = QubitOperator::sigma_z();
    let x = QubitOperator::sigma_x();
    StepObservables {
        a0: z.scale(cm) + x.scale(sm),
        a1: z.scale(cm) - x.scale(sm),
        b0: z,
        b1: x.scale((2.0 * xi).cos()),
    }
}

/// The five expectation values entering the Bell expression.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Correlators {
    pub b0: f64,
    pub a0b0: f64,
    pub a0b1: f64,
    pub a1b0: f64,
    pub a1b1: f64,
}

impl Correlators {
    pub fn bell_value(&self, beta: f64) -> f64 {
        beta * self.b0 + self.a0b0 + self.a0b1 + self.a1b0 - self.a1b1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BellCertificate {
    pub beta: f64,
    pub correlators: Correlators,
    pub i_value: f64,
    pub i_max: f64,
    pub g_max: f64,
    /// Certified bits per B¹ outcome.
    pub h_min: f64,
    /// The Bell value exceeded the quantum bound (statistical fluctuation) and was clamped.
    pub overshoot: bool,
    /// β > 1.99.
    pub low_confidence: bool,
    /// β = 2: the state is separable and no randomness can be certified.
    pub uncertifiable: bool,
}

/// Upper bound on the guessing probability, capped at 1.
///
/// Bell values at or below the local bound give 1. Values within
/// [`ROUNDOFF_GAP`] of (or above) `I_max` give ½.
pub fn guess_bound(i_value: f64, beta: f64) -> Result<f64> {
    let beta = check_range("beta", beta, 0.0, 2.0)?;
    if 2.0 - beta <= SEPARABLE_GAP {
        return Err(Error::Uncertifiable { beta });
    }
    if !i_value.is_finite() {
        return Err(Error::InvalidArgument(format!("Bell value {i_value}")));
    }
    if i_value <= 2.0 + beta {
        return Ok(1.0);
    }
    let i_max = i_max_of(beta);
    let gap = i_max - i_value;
    if gap < ROUNDOFF_GAP {
        return Ok(0.5);
    }
    // factored form keeps relative accuracy when I is close to I_max
    let radicand = gap * (i_max + i_value);
    Ok((0.5 + radicand.sqrt() / (2.0 * (2.0 - beta))).min(1.0))
}

/// Assembles the certificate from already-estimated correlators.
pub fn certify(correlators: Correlators, beta: f64) -> BellCertificate {
    let i_value = correlators.bell_value(beta);
    let i_max = i_max_of(beta);
    let overshoot = i_value > i_max + ROUNDOFF_GAP;
    let uncertifiable = 2.0 - beta <= SEPARABLE_GAP;
    let (g_max, h_min) = if uncertifiable {
        (1.0, 0.0)
    } else {
        let g = guess_bound(i_value.min(i_max), beta).unwrap_or(1.0);
        // −log₂ 1 is −0
        let h = if i_value > 2.0 + beta {
            (-g.log2()).max(0.0)
        } else {
            0.0
        };
        (g, h)
    };
    BellCertificate {
        beta,
        correlators,
        i_value,
        i_max,
        g_max,
        h_min,
        overshoot,
        low_confidence: beta > LOW_CONFIDENCE_BETA,
        uncertifiable,
    }
}

/// Certificate for `state` at a step with ideal angle `theta` and strength `xi`.
pub fn bell_value(state: &TwoQubitState, theta: f64, xi: f64) -> Result<BellCertificate> {
    let theta = check_angle("theta", theta)?;
    let xi = check_angle("xi", xi)?;
    Ok(certify(
        correlators_of(state, theta, xi),
        beta_unchecked(theta),
    ))
}

pub(crate) fn correlators_of(state: &TwoQubitState, theta: f64, xi: f64) -> Correlators {
    let obs = observables_unchecked(theta, xi);
    let e = |a: &QubitOperator, b: &QubitOperator| expect_unchecked(state, &tensor(a, b));
    Correlators {
        b0: expect_unchecked(state, &on_bob(&obs.b0)),
        a0b0: e(&obs.a0, &obs.b0),
        a0b1: e(&obs.a0, &obs.b1),
        a1b0: e(&obs.a1, &obs.b0),
        a1b1: e(&obs.a1, &obs.b1),
    }
}
