//! Sequential weak measurements on Bob's qubit and the tree of
//! history-conditioned branch states they generate.
//!
//! Every Bob measures σ_x with strength ξ through the Kraus pair
//! `K_± = ½[(cos ξ + sin ξ)𝟙 ± (cos ξ − sin ξ)σ_x]`. After the outcome is known
//! the state is rotated back to Schmidt-diagonal form with local unitaries
//! derived from the noiseless protocol, so the next Bob again sees balanced
//! outcomes. The ideal Schmidt angle obeys `sin 2θ' = sin 2θ · sin 2ξ`.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{check_angle, Error, Result};
use crate::noise::{make_state, NoiseParams};
use crate::qcore::{
    on_bob, re, schmidt, tensor, Operator4, PureTwoQubit, QubitOperator, TwoQubitState,
};

/// Branch probabilities below this are treated as impossible outcomes.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-14;

/// Schmidt angles below this are round-off from a separable state.
const SEPARABLE_THETA: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }
}

/// Outcomes of the Bobs that already measured, oldest first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History(Vec<Outcome>);

impl History {
    pub fn empty() -> Self {
        History(Vec::new())
    }

    pub fn new(outcomes: Vec<Outcome>) -> Self {
        History(outcomes)
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, outcome: Outcome) -> History {
        let mut v = self.0.clone();
        v.push(outcome);
        History(v)
    }

    /// Position among histories of the same length in tree order (`+` before `−`).
    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, o| 2 * acc + usize::from(*o == Outcome::Minus))
    }

    /// Every history of length `len`, in tree order.
    pub fn all(len: usize) -> Vec<History> {
        (0..1usize << len)
            .map(|idx| {
                History(
                    (0..len)
                        .rev()
                        .map(|bit| {
                            if idx >> bit & 1 == 0 {
                                Outcome::Plus
                            } else {
                                Outcome::Minus
                            }
                        })
                        .collect(),
                )
            })
            .collect()
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.0 {
            write!(f, "{}", o.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for History {
    type Err = Error;

    /// Accepts `+`, `-` and the Unicode minus sign `−`.
    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|ch| match ch {
                '+' => Ok(Outcome::Plus),
                '-' | '\u{2212}' => Ok(Outcome::Minus),
                other => Err(Error::InvalidArgument(format!(
                    "history must be a string over {{+,-}}, found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(History)
    }
}

impl Serialize for History {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub theta1: f64,
    /// One strength per step; a trailing `0.0` is a final projective step.
    pub strengths: Vec<f64>,
    pub noise: NoiseParams,
}

impl ProtocolConfig {
    pub fn new(theta1: f64, strengths: Vec<f64>, noise: NoiseParams) -> Result<Self> {
        let theta1 = check_angle("theta1", theta1)?;
        let strengths = strengths
            .into_iter()
            .map(|xi| check_angle("xi", xi))
            .collect::<Result<Vec<_>>>()?;
        let noise = NoiseParams::new(noise.p, noise.c)?;
        Ok(ProtocolConfig {
            theta1,
            strengths,
            noise,
        })
    }

    /// Maximally entangled source.
    pub fn bell_source(strengths: Vec<f64>, noise: NoiseParams) -> Result<Self> {
        Self::new(std::f64::consts::FRAC_PI_4, strengths, noise)
    }

    pub fn steps(&self) -> usize {
        self.strengths.len()
    }

    /// Ideal Schmidt angles θ₁..θ_{n+1} from the closed-form recursion.
    pub fn ideal_thetas(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.strengths.len() + 1);
        let mut theta = self.theta1;
        out.push(theta);
        for &xi in &self.strengths {
            theta = next_ideal_theta(theta, xi);
            out.push(theta);
        }
        out
    }
}

/// Ideal angles θ₁..θ_n exactly as the branch tree carries them (taken from
/// the rebalancing decomposition rather than the closed form, so estimates
/// built on them agree with the tree to round-off).
pub fn tree_thetas(config: &ProtocolConfig) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(config.steps());
    let mut theta = config.theta1;
    for (k, &xi) in config.strengths.iter().enumerate() {
        out.push(theta);
        if k + 1 < config.steps() {
            theta = rebalance_unitaries(theta, xi, Outcome::Plus)?.next_theta;
        }
    }
    Ok(out)
}

/// `½ arcsin(sin 2θ · sin 2ξ)`.
pub fn next_ideal_theta(theta: f64, xi: f64) -> f64 {
    let s = ((2.0 * theta).sin() * (2.0 * xi).sin()).clamp(0.0, 1.0);
    0.5 * s.asin()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchNode {
    pub history: History,
    /// Probability of reaching this branch from the root.
    pub probability: f64,
    /// Rebalanced state handed to the next Bob.
    pub state: TwoQubitState,
    /// Schmidt angle of the noiseless protocol at this depth.
    pub ideal_theta: f64,
}

/// `(K₊, K₋)` for strength `xi`.
pub fn kraus_pair(xi: f64) -> Result<(QubitOperator, QubitOperator)> {
    let xi = check_angle("xi", xi)?;
    Ok((kraus(xi, Outcome::Plus), kraus(xi, Outcome::Minus)))
}

pub(crate) fn kraus(xi: f64, outcome: Outcome) -> QubitOperator {
    let (s, c) = xi.sin_cos();
    let diag = 0.5 * (c + s);
    let off = 0.5 * outcome.sign() * (c - s);
    QubitOperator::real(diag, off, off, diag)
}

/// Applies `𝟙 ⊗ K_outcome` to Bob's qubit and conditions on the outcome.
pub fn weak_branch(
    state: &TwoQubitState,
    xi: f64,
    outcome: Outcome,
) -> Result<(f64, TwoQubitState)> {
    let xi = check_angle("xi", xi)?;
    condition(state, &on_bob(&kraus(xi, outcome)))
}

fn condition(state: &TwoQubitState, kraus_op: &Operator4) -> Result<(f64, TwoQubitState)> {
    let m = state.sandwich(kraus_op);
    let probability = m.trace().re;
    if !(probability >= MIN_BRANCH_PROBABILITY) {
        return Err(Error::DegenerateBranch { probability });
    }
    Ok((
        probability,
        TwoQubitState::from_valid(m * re(1.0 / probability)),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rebalance {
    pub u_alice: QubitOperator,
    pub u_bob: QubitOperator,
    pub next_theta: f64,
    /// The post-measurement ideal state is a product state: later steps cannot
    /// certify anything.
    pub separable: bool,
}

impl Rebalance {
    /// `(U_A ⊗ U_B)†`, the correction applied to the post-measurement state.
    pub fn correction(&self) -> Operator4 {
        tensor(&self.u_alice, &self.u_bob).adjoint()
    }
}

/// Local unitaries that return the ideal post-measurement state to
/// Schmidt-diagonal form.
pub fn rebalance_unitaries(ideal_theta: f64, xi: f64, outcome: Outcome) -> Result<Rebalance> {
    let ideal_theta = check_angle("ideal_theta", ideal_theta)?;
    let xi = check_angle("xi", xi)?;
    let psi = PureTwoQubit::schmidt_diagonal(ideal_theta);
    let post = PureTwoQubit::normalized(psi.apply(&on_bob(&kraus(xi, outcome))))?;
    let form = schmidt(&post);
    let separable = form.theta < SEPARABLE_THETA;
    Ok(Rebalance {
        u_alice: form.u_alice,
        u_bob: form.u_bob,
        next_theta: if separable { 0.0 } else { form.theta },
        separable,
    })
}

/// Branch nodes for every depth `0..=n`; depth `k` has `2^k` nodes in tree order.
pub fn evolve_tree(config: &ProtocolConfig) -> Result<Vec<Vec<BranchNode>>> {
    evolve_to_depth(config, config.steps())
}

/// As [`evolve_tree`] but stops after `depth` measurements.
pub fn evolve_to_depth(config: &ProtocolConfig, depth: usize) -> Result<Vec<Vec<BranchNode>>> {
    assert!(
        depth <= config.steps(),
        "depth {depth} beyond {} steps",
        config.steps()
    );
    let root = BranchNode {
        history: History::empty(),
        probability: 1.0,
        state: make_state(config.noise, config.theta1)?,
        ideal_theta: config.theta1,
    };
    let mut levels = Vec::with_capacity(depth + 1);
    levels.push(vec![root]);

    for k in 0..depth {
        let xi = config.strengths[k];
        let theta = levels[k][0].ideal_theta;
        // the corrections depend only on the ideal angle and this step's outcome
        let mut ops = Vec::with_capacity(2);
        for outcome in Outcome::BOTH {
            let reb = rebalance_unitaries(theta, xi, outcome)?;
            ops.push((
                outcome,
                on_bob(&kraus(xi, outcome)),
                reb.correction(),
                reb.next_theta,
            ));
        }

        let parents = &levels[k];
        let mut children = Vec::with_capacity(parents.len() * 2);
        for node in parents {
            for (outcome, kraus_op, correction, next_theta) in &ops {
                let (p, post) = condition(&node.state, kraus_op)?;
                children.push(BranchNode {
                    history: node.history.child(*outcome),
                    probability: node.probability * p,
                    state: post.conjugate_by(correction),
                    ideal_theta: *next_theta,
                });
            }
        }
        levels.push(children);
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::C64;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    /// Schmidt angle of a pure two-qubit density matrix from Alice's reduced state:
    /// `sin 2θ = 2 √det ρ_A`.
    fn sin_2theta_of_pure(state: &TwoQubitState) -> f64 {
        let r = state.rho();
        let a00 = r[(0, 0)] + r[(1, 1)];
        let a11 = r[(2, 2)] + r[(3, 3)];
        let a01 = r[(0, 2)] + r[(1, 3)];
        let det = (a00 * a11 - a01 * a01.conj()).re;
        2.0 * det.max(0.0).sqrt()
    }

    fn close(a: C64, b: f64) -> bool {
        (a - C64::new(b, 0.0)).norm() < 1e-15
    }

    #[test]
    fn projective_limit() {
        let (kp, km) = kraus_pair(0.0).unwrap();
        for (k, sign) in [(kp, 1.0), (km, -1.0)] {
            assert!(close(k.entry(0, 0), 0.5) && close(k.entry(1, 1), 0.5));
            assert!(close(k.entry(0, 1), 0.5 * sign) && close(k.entry(1, 0), 0.5 * sign));
        }
    }

    #[test]
    fn noninteractive_limit() {
        let (kp, km) = kraus_pair(FRAC_PI_4).unwrap();
        for k in [kp, km] {
            assert!(k.max_abs_diff(&QubitOperator::identity().scale(FRAC_1_SQRT_2)) < 1e-15);
        }
    }

    #[test]
    fn kraus_entries_at_0_4() {
        let (kp, _) = kraus_pair(0.4).unwrap();
        assert!((kp.entry(0, 0).re - 0.655_239_668_155_767_8).abs() < 1e-15);
        assert!((kp.entry(0, 1).re - 0.265_821_325_847_117_26).abs() < 1e-15);
    }

    #[test]
    fn kraus_rejects_out_of_range() {
        assert!(kraus_pair(-0.1).is_err());
        assert!(kraus_pair(0.8).is_err());
        assert!(kraus_pair(f64::NAN).is_err());
    }

    #[test]
    fn bell_pair_branches_are_balanced() {
        let phi = TwoQubitState::from_pure(&PureTwoQubit::phi_plus());
        for xi in [0.0, 0.1, 0.4, FRAC_PI_4] {
            for o in Outcome::BOTH {
                let (p, post) = weak_branch(&phi, xi, o).unwrap();
                assert!((p - 0.5).abs() < 1e-15);
                post.validate().unwrap();
            }
        }
    }

    #[test]
    fn mixed_state_projective_branch() {
        let (p, post) = weak_branch(&TwoQubitState::maximally_mixed(), 0.0, Outcome::Plus).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        post.validate().unwrap();
        // 𝟙/2 ⊗ |+⟩⟨+|
        let r = post.rho();
        assert!((r[(0, 0)].re - 0.25).abs() < 1e-15 && (r[(0, 1)].re - 0.25).abs() < 1e-15);
        assert!(r[(0, 2)].norm() < 1e-15);
    }

    #[test]
    fn weak_branch_schmidt_angle() {
        let rho = make_state(NoiseParams::ideal(), FRAC_PI_4).unwrap();
        let (_, post) = weak_branch(&rho, 0.4, Outcome::Plus).unwrap();
        assert!((post.purity() - 1.0).abs() < 1e-12);
        assert!((sin_2theta_of_pure(&post) - 0.717_356_090_899_522_8).abs() < 1e-12);
    }

    #[test]
    fn degenerate_branch_is_an_error() {
        // Bob's qubit in |+⟩: a projective σ_x measurement never yields −
        let psi = PureTwoQubit::from_real([FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0]).unwrap();
        let rho = TwoQubitState::from_pure(&psi);
        assert!(matches!(
            weak_branch(&rho, 0.0, Outcome::Minus),
            Err(Error::DegenerateBranch { .. })
        ));
    }

    #[test]
    fn rebalance_limits() {
        let r = rebalance_unitaries(FRAC_PI_4, FRAC_PI_4, Outcome::Plus).unwrap();
        assert!((r.next_theta - FRAC_PI_4).abs() < 1e-12 && !r.separable);
        let r = rebalance_unitaries(FRAC_PI_4, 0.0, Outcome::Minus).unwrap();
        assert_eq!(r.next_theta, 0.0);
        assert!(r.separable);
    }

    #[test]
    fn rebalance_at_0_47() {
        for o in Outcome::BOTH {
            let r = rebalance_unitaries(FRAC_PI_4, 0.47, o).unwrap();
            // sin(0.94) = 0.8075581004051142
            assert!(((2.0 * r.next_theta).sin() - 0.807_558_100_405_114_2).abs() < 1e-12);
            assert!((r.next_theta - next_ideal_theta(FRAC_PI_4, 0.47)).abs() < 1e-12);
            assert!(r.u_alice.is_unitary(1e-12) && r.u_bob.is_unitary(1e-12));
        }
    }

    #[test]
    fn single_weak_step_tree() {
        let cfg = ProtocolConfig::bell_source(vec![0.4], NoiseParams::ideal()).unwrap();
        let tree = evolve_tree(&cfg).unwrap();
        assert_eq!(tree.len(), 2);
        assert_eq!(tree[1].len(), 2);
        for leaf in &tree[1] {
            assert!((leaf.probability - 0.5).abs() < 1e-15);
            assert!((leaf.state.purity() - 1.0).abs() < 1e-12);
            assert!((sin_2theta_of_pure(&leaf.state) - 0.717_356_090_899_522_8).abs() < 1e-12);
            // rebalanced: cos θ|00⟩ + sin θ|11⟩
            let ideal = TwoQubitState::from_pure(&PureTwoQubit::schmidt_diagonal(leaf.ideal_theta));
            assert!(leaf.state.max_abs_diff(&ideal) < 1e-10);
        }
    }

    #[test]
    fn noninteractive_chain_preserves_root() {
        let cfg =
            ProtocolConfig::bell_source(vec![FRAC_PI_4, FRAC_PI_4], NoiseParams::ideal()).unwrap();
        let tree = evolve_tree(&cfg).unwrap();
        let root = tree[0][0].state;
        assert_eq!(tree[2].len(), 4);
        for leaf in &tree[2] {
            assert!(leaf.state.max_abs_diff(&root) < 1e-12);
            assert!((leaf.probability - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn projective_step_leaves_product_states() {
        let cfg = ProtocolConfig::bell_source(vec![0.0], NoiseParams::ideal()).unwrap();
        let tree = evolve_tree(&cfg).unwrap();
        for leaf in &tree[1] {
            assert_eq!(leaf.ideal_theta, 0.0);
            assert!(sin_2theta_of_pure(&leaf.state) < 1e-12);
        }
    }

    #[test]
    fn history_order_and_parsing() {
        let all = History::all(2);
        let names: Vec<String> = all.iter().map(|h| h.to_string()).collect();
        assert_eq!(names, ["++", "+-", "-+", "--"]);
        for (i, h) in all.iter().enumerate() {
            assert_eq!(h.index(), i);
        }
        assert_eq!("+\u{2212}".parse::<History>().unwrap().to_string(), "+-");
        assert!("".parse::<History>().unwrap().is_empty());
        assert!("+x".parse::<History>().is_err());
    }

    #[test]
    fn tree_histories_match_tree_order() {
        let cfg = ProtocolConfig::bell_source(vec![0.3, 0.2], NoiseParams::new(0.01, 0.0).unwrap())
            .unwrap();
        let tree = evolve_tree(&cfg).unwrap();
        assert_eq!(
            tree[2]
                .iter()
                .map(|n| n.history.clone())
                .collect::<Vec<_>>(),
            History::all(2)
        );
    }
}
