//! Imperfect source state: a Schmidt-diagonal pure state mixed with white
//! noise (weight `p`) and with its dephased diagonal part (weight `c`).
//!
//! For the maximally entangled source the two noise weights map one-to-one onto
//! the `σ_z⊗σ_z` and `σ_x⊗σ_x` visibilities: `V_Z = 1 − p`, `V_X = 1 − p − c`.

use serde::{Deserialize, Serialize};

use crate::error::{check_angle, Error, Result};
use crate::qcore::{
    expect_unchecked, re, tensor, Mat4, PureTwoQubit, QubitOperator, TwoQubitState,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Depolarization weight.
    pub p: f64,
    /// Decoherence (dephasing) weight.
    pub c: f64,
}

impl NoiseParams {
    pub fn new(p: f64, c: f64) -> Result<Self> {
        // a little slack on p + c so that visibility round-trips at the boundary pass
        if p >= 0.0 && c >= 0.0 && p + c <= 1.0 + 1e-15 {
            Ok(NoiseParams { p, c })
        } else {
            Err(Error::InvalidNoise { p, c })
        }
    }

    pub fn ideal() -> Self {
        NoiseParams { p: 0.0, c: 0.0 }
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        Self::new(p, 0.0)
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self::ideal()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visibilities {
    pub v_z: f64,
    pub v_x: f64,
}

impl Visibilities {
    pub fn new(v_z: f64, v_x: f64) -> Self {
        Visibilities { v_z, v_x }
    }
}

/// `ρ = (1−p−c)|ψ⟩⟨ψ| + p 𝟙/4 + c (|00⟩⟨00| + |11⟩⟨11|)/2` with
/// `|ψ⟩ = cos θ|00⟩ + sin θ|11⟩`.
pub fn make_state(params: NoiseParams, theta1: f64) -> Result<TwoQubitState> {
    let params = NoiseParams::new(params.p, params.c)?;
    let theta1 = check_angle("theta1", theta1)?;
    let pure = TwoQubitState::from_pure(&PureTwoQubit::schmidt_diagonal(theta1));
    let mut rho: Mat4 = pure.rho() * re(1.0 - params.p - params.c);
    for i in 0..4 {
        rho[(i, i)] += re(params.p / 4.0);
    }
    rho[(0, 0)] += re(params.c / 2.0);
    rho[(3, 3)] += re(params.c / 2.0);
    Ok(TwoQubitState::from_valid(rho))
}

pub fn visibilities_of(state: &TwoQubitState) -> Visibilities {
    let zz = tensor(&QubitOperator::sigma_z(), &QubitOperator::sigma_z());
    let xx = tensor(&QubitOperator::sigma_x(), &QubitOperator::sigma_x());
    Visibilities {
        v_z: expect_unchecked(state, &zz),
        v_x: expect_unchecked(state, &xx),
    }
}

/// Inverts the visibility relations. Valid for a maximally entangled source
/// (`θ₁ = π/4`); visibilities the model cannot produce are rejected rather
/// than projected onto the model.
pub fn params_from_visibilities(vis: Visibilities) -> Result<NoiseParams> {
    let Visibilities { v_z, v_x } = vis;
    if !(v_z.is_finite() && v_x.is_finite()) || v_z > 1.0 || v_x > v_z {
        return Err(Error::ModelViolation { v_z, v_x });
    }
    NoiseParams::new(1.0 - v_z, v_z - v_x).map_err(|_| Error::ModelViolation { v_z, v_x })
}
