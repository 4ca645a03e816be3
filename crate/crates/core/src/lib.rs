//! Simulation and certification toolkit for sequential weak-measurement
//! randomness extraction.
//!
//! A two-qubit source state is shared between Alice and a chain of Bobs. Each
//! Bob performs a σ_x measurement of tunable strength ξ ∈ [0, π/4] (ξ = 0 is
//! projective, ξ = π/4 does nothing), rebalances the post-measurement state with
//! a local unitary and passes the qubit on. At every step Alice and the current
//! Bob can evaluate a tilted CHSH expression whose violation bounds the guessing
//! probability of Bob's outcome, which gives a certified min-entropy.
//!
//! Modules, bottom-up:
//!
//! - [`qcore`]: 2×2 / 4×4 complex linear algebra, states, Schmidt decomposition.
//! - [`noise`]: the depolarized/dephased source state and visibilities.
//! - [`protocol`]: Kraus operators, rebalancing, the history-conditioned branch tree.
//! - [`bell`]: step observables, Bell value, guessing bound, min-entropy.
//! - [`optimize`]: total extractable entropy, sweeps, maximization, noise thresholds.
//! - [`montecarlo`]: Born-rule outcome statistics, Poisson sampling, estimation, bootstrap.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod error;
pub mod montecarlo;
pub mod noise;
pub mod optimize;
pub mod protocol;
pub mod qcore;

pub use bell::{
    bell_value, beta_of, certify, guess_bound, i_max_of, observables, BellCertificate, Correlators,
    StepObservables,
};
pub use error::{Error, Result};
pub use montecarlo::{
    bootstrap, bootstrap_table, estimate, estimate_expected, expected_table, outcome_probabilities,
    sample_counts, sample_table, settings_for, BranchEstimate, CountRow, CountTable,
    EstimateReport, OutcomeCounts, OutcomeModel, SettingSpec,
};
pub use noise::{make_state, params_from_visibilities, visibilities_of, NoiseParams, Visibilities};
pub use optimize::{
    find_threshold, maximize, maximize_with, sweep_one, sweep_two, total_entropy, Aggregation,
    ExtractionSummary, MaximizeOptions, Maximum, SearchMode, StepEntropy, SweepRow1, SweepRow2,
    ThresholdCriterion, ThresholdQuery, ThresholdResult,
};
pub use protocol::{
    evolve_to_depth, evolve_tree, kraus_pair, next_ideal_theta, rebalance_unitaries, tree_thetas,
    weak_branch, BranchNode, History, Outcome, ProtocolConfig, Rebalance,
};
pub use qcore::{
    expect, on_alice, on_bob, schmidt, tensor, Operator4, PureTwoQubit, QubitOperator, SchmidtForm,
    TwoQubitState,
};
