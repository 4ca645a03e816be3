//! Dense complex linear algebra for one- and two-qubit objects.
//!
//! Basis ordering is `|00⟩, |01⟩, |10⟩, |11⟩` with Alice's qubit first, so the
//! state `cos θ|00⟩ + sin θ|11⟩` has amplitude vector `(cos θ, 0, 0, sin θ)`.

use nalgebra::{Complex, Matrix2, Matrix4, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

/// Entrywise tolerance for objects built by construction.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for derived checks (Hermiticity of caller-supplied observables,
/// imaginary residues, reconstruction errors).
pub const DERIVED_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn max_abs_diff<const N: usize>(
    a: impl Fn(usize, usize) -> C64,
    b: impl Fn(usize, usize) -> C64,
) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((a(i, j) - b(i, j)).norm());
        }
    }
    worst
}

/// A 2×2 complex operator on one qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitOperator(Mat2);

impl QubitOperator {
    pub fn new(entries: Mat2) -> Self {
        QubitOperator(entries)
    }

    /// Builds from row-major real entries.
    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        QubitOperator(Mat2::new(re(a), re(b), re(c), re(d)))
    }

    pub fn identity() -> Self {
        QubitOperator(Mat2::identity())
    }

    pub fn sigma_x() -> Self {
        Self::real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn sigma_y() -> Self {
        QubitOperator(Mat2::new(
            ZERO,
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            ZERO,
        ))
    }

    pub fn sigma_z() -> Self {
        Self::real(1.0, 0.0, 0.0, -1.0)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        QubitOperator(self.0.adjoint())
    }

    pub fn scale(&self, factor: f64) -> Self {
        QubitOperator(self.0 * re(factor))
    }

    pub fn determinant(&self) -> C64 {
        self.0.determinant()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let m = &self.0;
        max_abs_diff::<2>(|i, j| m[(i, j)], |i, j| m[(j, i)].conj())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Max entrywise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.0.adjoint() * self.0;
        max_abs_diff::<2>(|i, j| p[(i, j)], |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn max_abs_diff(&self, other: &QubitOperator) -> f64 {
        max_abs_diff::<2>(|i, j| self.0[(i, j)], |i, j| other.0[(i, j)])
    }
}

impl std::ops::Mul for QubitOperator {
    type Output = QubitOperator;
    fn mul(self, rhs: QubitOperator) -> QubitOperator {
        QubitOperator(self.0 * rhs.0)
    }
}

impl std::ops::Add for QubitOperator {
    type Output = QubitOperator;
    fn add(self, rhs: QubitOperator) -> QubitOperator {
        QubitOperator(self.0 + rhs.0)
    }
}

impl std::ops::Sub for QubitOperator {
    type Output = QubitOperator;
    fn sub(self, rhs: QubitOperator) -> QubitOperator {
        QubitOperator(self.0 - rhs.0)
    }
}

/// A 4×4 complex operator on the two-qubit space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator4(Mat4);

impl Operator4 {
    pub fn new(entries: Mat4) -> Self {
        Operator4(entries)
    }

    pub fn identity() -> Self {
        Operator4(Mat4::identity())
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Operator4(self.0.adjoint())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Operator4(self.0 * re(factor))
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let m = &self.0;
        max_abs_diff::<4>(|i, j| m[(i, j)], |i, j| m[(j, i)].conj())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn max_abs_diff(&self, other: &Operator4) -> f64 {
        max_abs_diff::<4>(|i, j| self.0[(i, j)], |i, j| other.0[(i, j)])
    }
}

impl std::ops::Mul for Operator4 {
    type Output = Operator4;
    fn mul(self, rhs: Operator4) -> Operator4 {
        Operator4(self.0 * rhs.0)
    }
}

impl std::ops::Add for Operator4 {
    type Output = Operator4;
    fn add(self, rhs: Operator4) -> Operator4 {
        Operator4(self.0 + rhs.0)
    }
}

/// Kronecker product `a ⊗ b`, Alice's factor first.
pub fn tensor(a: &QubitOperator, b: &QubitOperator) -> Operator4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let aij = a.0[(i, j)];
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = aij * b.0[(k, l)];
                }
            }
        }
    }
    Operator4(out)
}

/// `𝟙 ⊗ b`: an operator acting on Bob's qubit only.
pub fn on_bob(b: &QubitOperator) -> Operator4 {
    tensor(&QubitOperator::identity(), b)
}

/// `a ⊗ 𝟙`: an operator acting on Alice's qubit only.
pub fn on_alice(a: &QubitOperator) -> Operator4 {
    tensor(a, &QubitOperator::identity())
}

/// Density matrix of a two-qubit state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState {
    rho: Mat4,
}

impl TwoQubitState {
    /// Validates Hermiticity and unit trace (1e-12) and positivity (eigenvalues ≥ −1e-10).
    pub fn new(rho: Mat4) -> Result<Self> {
        let state = TwoQubitState { rho };
        state.validate()?;
        Ok(state)
    }

    /// For matrices produced by trace-preserving maps of a valid state.
    pub(crate) fn from_valid(rho: Mat4) -> Self {
        TwoQubitState { rho }
    }

    pub fn from_pure(psi: &PureTwoQubit) -> Self {
        let v = psi.amplitudes;
        TwoQubitState {
            rho: v * v.adjoint(),
        }
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState {
            rho: Mat4::identity() * re(0.25),
        }
    }

    pub fn rho(&self) -> &Mat4 {
        &self.rho
    }

    pub fn validate(&self) -> Result<()> {
        let h = Operator4(self.rho).hermitian_deviation();
        if h > CONSTRUCTION_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {h:e})"
            )));
        }
        let tr = self.rho.trace();
        if (tr - ONE).norm() > CONSTRUCTION_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -DERIVED_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        // symmetrize first so round-off asymmetry does not leak into the solver
        let sym = (self.rho + self.rho.adjoint()) * re(0.5);
        let ev = sym.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &Operator4) -> TwoQubitState {
        TwoQubitState {
            rho: u.0 * self.rho * u.0.adjoint(),
        }
    }

    /// `K ρ K†` without renormalization, returning the unnormalized matrix.
    pub(crate) fn sandwich(&self, k: &Operator4) -> Mat4 {
        k.0 * self.rho * k.0.adjoint()
    }

    pub fn max_abs_diff(&self, other: &TwoQubitState) -> f64 {
        Operator4(self.rho).max_abs_diff(&Operator4(other.rho))
    }
}

/// `tr(ρ·obs)` for a Hermitian observable.
pub fn expect(state: &TwoQubitState, obs: &Operator4) -> Result<f64> {
    let dev = obs.hermitian_deviation();
    if dev > DERIVED_TOL {
        return Err(Error::NonHermitian { deviation: dev });
    }
    let value = trace_product(&state.rho, &obs.0);
    debug_assert!(
        value.im.abs() < DERIVED_TOL,
        "imaginary residue {}",
        value.im
    );
    Ok(value.re)
}

/// `tr(ρ·obs).re` for observables known to be Hermitian by construction.
pub(crate) fn expect_unchecked(state: &TwoQubitState, obs: &Operator4) -> f64 {
    trace_product(&state.rho, &obs.0).re
}

fn trace_product(a: &Mat4, b: &Mat4) -> C64 {
    let mut acc = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Normalized two-qubit state vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureTwoQubit {
    amplitudes: Vector4<C64>,
}

impl PureTwoQubit {
    pub fn new(amplitudes: Vector4<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureTwoQubit { amplitudes })
    }

    /// Normalizes `amplitudes`; fails only for the zero vector.
    pub fn normalized(amplitudes: Vector4<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureTwoQubit {
            amplitudes: amplitudes / re(norm),
        })
    }

    pub fn from_real(a: [f64; 4]) -> Result<Self> {
        Self::new(Vector4::new(re(a[0]), re(a[1]), re(a[2]), re(a[3])))
    }

    /// `cos θ|00⟩ + sin θ|11⟩`.
    pub fn schmidt_diagonal(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        PureTwoQubit {
            amplitudes: Vector4::new(re(c), ZERO, ZERO, re(s)),
        }
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn phi_plus() -> Self {
        Self::schmidt_diagonal(std::f64::consts::FRAC_PI_4)
    }

    pub fn amplitudes(&self) -> &Vector4<C64> {
        &self.amplitudes
    }

    /// Amplitude matrix `M[a][b] = ⟨ab|ψ⟩` (rows: Alice, columns: Bob).
    pub fn amplitude_matrix(&self) -> Mat2 {
        let v = &self.amplitudes;
        Mat2::new(v[0], v[1], v[2], v[3])
    }

    /// Applies `op` and returns the unnormalized vector.
    pub fn apply(&self, op: &Operator4) -> Vector4<C64> {
        op.0 * self.amplitudes
    }

    /// `‖ψ − e^{iφ}φ‖` minimized over the global phase φ.
    pub fn distance_up_to_phase(&self, other: &PureTwoQubit) -> f64 {
        let overlap = other.amplitudes.dotc(&self.amplitudes);
        let phase = if overlap.norm() > 0.0 {
            overlap / re(overlap.norm())
        } else {
            ONE
        };
        (self.amplitudes - other.amplitudes * phase).norm()
    }
}

/// `ψ = (u_alice ⊗ u_bob)(cos θ|00⟩ + sin θ|11⟩)` up to a global phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchmidtForm {
    pub theta: f64,
    #[serde(skip)]
    pub u_alice: QubitOperator,
    #[serde(skip)]
    pub u_bob: QubitOperator,
}

impl SchmidtForm {
    pub fn reconstruct(&self) -> PureTwoQubit {
        let base = PureTwoQubit::schmidt_diagonal(self.theta);
        let v = tensor(&self.u_alice, &self.u_bob).0 * base.amplitudes;
        PureTwoQubit { amplitudes: v }
    }
}

/// Schmidt decomposition via the SVD of the amplitude matrix.
///
/// Writing `M = U Σ Vᵀ'` with `Vᵀ'` the right factor returned by the SVD,
/// `ψ = Σⱼ sⱼ (U eⱼ) ⊗ (Vᵀ'ᵀ eⱼ)`, so `u_alice = U` and `u_bob = (Vᵀ')ᵀ`.
/// Column phases are fixed so `det u_alice = 1`; a global phase then makes
/// `det u_bob = 1`. Real amplitude matrices with `det M ≥ 0` give real factors.
pub fn schmidt(psi: &PureTwoQubit) -> SchmidtForm {
    let svd = psi.amplitude_matrix().svd(true, true);
    let mut u = svd.u.expect("u requested");
    let mut v_t = svd.v_t.expect("v_t requested");
    let mut s = [svd.singular_values[0], svd.singular_values[1]];
    if s[1] > s[0] {
        s.swap(0, 1);
        u.swap_columns(0, 1);
        v_t.swap_rows(0, 1);
    }

    let det_u = u.determinant();
    if det_u.norm() > 0.0 {
        let fix = (det_u / re(det_u.norm())).conj();
        for r in 0..2 {
            u[(r, 1)] *= fix;
        }
        let back = fix.conj();
        for c in 0..2 {
            v_t[(1, c)] *= back;
        }
    }

    let mut u_bob = v_t.transpose();
    let det_b = u_bob.determinant();
    if det_b.norm() > 0.0 && (det_b - ONE).norm() > 1e-15 {
        let gamma = C64::from_polar(1.0, -0.5 * det_b.arg());
        u_bob *= gamma;
    }

    SchmidtForm {
        theta: s[1].atan2(s[0]),
        u_alice: QubitOperator(u),
        u_bob: QubitOperator(u_bob),
    }
}
