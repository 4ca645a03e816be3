//! Property-based invariants.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{Complex, Matrix2, Vector4};
use proptest::prelude::*;
use seqweak_core::*;

type C = Complex<f64>;

fn angle() -> impl Strategy<Value = f64> {
    0.0..=FRAC_PI_4
}

fn complex() -> impl Strategy<Value = C> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C::new(a, b))
}

fn qubit_op() -> impl Strategy<Value = QubitOperator> {
    prop::array::uniform4(complex())
        .prop_map(|e| QubitOperator::new(Matrix2::new(e[0], e[1], e[2], e[3])))
}

fn hermitian() -> impl Strategy<Value = QubitOperator> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c, d)| {
        QubitOperator::identity().scale(a)
            + QubitOperator::sigma_x().scale(b)
            + QubitOperator::sigma_y().scale(c)
            + QubitOperator::sigma_z().scale(d)
    })
}

/// exp(−i(a σx + b σy + c σz)) up to a global phase.
fn unitary() -> impl Strategy<Value = QubitOperator> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c)| {
        let n = (a * a + b * b + c * c).sqrt().max(1e-12);
        let (s, co) = n.sin_cos();
        let i = C::new(0.0, 1.0);
        let m = Matrix2::new(
            C::new(co, 0.0) - i * (s * c / n),
            -i * (s * a / n) - C::new(s * b / n, 0.0),
            -i * (s * a / n) + C::new(s * b / n, 0.0),
            C::new(co, 0.0) + i * (s * c / n),
        );
        QubitOperator::new(m)
    })
}

fn pure_state() -> impl Strategy<Value = PureTwoQubit> {
    prop::array::uniform4(complex())
        .prop_filter("non-zero", |a| {
            a.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3
        })
        .prop_map(|a| PureTwoQubit::normalized(Vector4::new(a[0], a[1], a[2], a[3])).unwrap())
}

fn noise() -> impl Strategy<Value = NoiseParams> {
    (0.0..0.3f64, 0.0..0.3f64).prop_map(|(p, c)| NoiseParams::new(p, c).unwrap())
}

fn two_qubit_state() -> impl Strategy<Value = TwoQubitState> {
    (noise(), angle(), unitary(), unitary())
        .prop_map(|(n, t, ua, ub)| make_state(n, t).unwrap().conjugate_by(&tensor(&ua, &ub)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn schmidt_reconstructs(psi in pure_state()) {
        let form = schmidt(&psi);
        prop_assert!((0.0..=FRAC_PI_4 + 1e-12).contains(&form.theta));
        prop_assert!(form.u_alice.is_unitary(1e-10) && form.u_bob.is_unitary(1e-10));
        prop_assert!(form.reconstruct().distance_up_to_phase(&psi) < 1e-10);
    }

    #[test]
    fn tensor_mixed_product(a in qubit_op(), b in qubit_op(), c in qubit_op(), d in qubit_op()) {
        let lhs = tensor(&a, &b) * tensor(&c, &d);
        let rhs = tensor(&(a * c), &(b * d));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn expectation_is_linear(rho in two_qubit_state(), a in hermitian(), b in hermitian(), x in -2.0..2.0f64) {
        let oa = on_alice(&a);
        let ob = tensor(&b, &QubitOperator::sigma_z());
        let lhs = expect(&rho, &(oa.scale(x) + ob)).unwrap();
        let rhs = x * expect(&rho, &oa).unwrap() + expect(&rho, &ob).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn local_unitaries_preserve_spectrum(rho in two_qubit_state(), ua in unitary(), ub in unitary()) {
        let out = rho.conjugate_by(&tensor(&ua, &ub));
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
        prop_assert!((out.purity() - rho.purity()).abs() < 1e-12);
        for (x, y) in out.eigenvalues().iter().zip(rho.eigenvalues()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn branch_probabilities_sum_to_one(rho in two_qubit_state(), xi in angle()) {
        let (pp, sp) = weak_branch(&rho, xi, Outcome::Plus).unwrap();
        let (pm, sm) = weak_branch(&rho, xi, Outcome::Minus).unwrap();
        prop_assert!((pp + pm - 1.0).abs() < 1e-12);
        prop_assert!(sp.validate().is_ok() && sm.validate().is_ok());
    }

    #[test]
    fn ideal_angle_recursion(theta in angle(), xi in angle()) {
        for outcome in Outcome::BOTH {
            let r = rebalance_unitaries(theta, xi, outcome).unwrap();
            let expected = (2.0 * theta).sin() * (2.0 * xi).sin();
            prop_assert!(((2.0 * r.next_theta).sin() - expected).abs() < 1e-10);
        }
    }

    /// The corrected ideal branch state is Schmidt-diagonal at the next angle.
    #[test]
    fn rebalancing_restores_schmidt_form(theta in 0.01..=FRAC_PI_4, xi in 0.01..=FRAC_PI_4) {
        let psi = TwoQubitState::from_pure(&PureTwoQubit::schmidt_diagonal(theta));
        for outcome in Outcome::BOTH {
            let r = rebalance_unitaries(theta, xi, outcome).unwrap();
            let (_, post) = weak_branch(&psi, xi, outcome).unwrap();
            let out = post.conjugate_by(&r.correction());
            let target = TwoQubitState::from_pure(&PureTwoQubit::schmidt_diagonal(r.next_theta));
            prop_assert!(out.max_abs_diff(&target) < 1e-10);
        }
    }

    #[test]
    fn sibling_branches_are_symmetric(n in noise(), xi1 in angle(), xi2 in angle()) {
        let cfg = ProtocolConfig::bell_source(vec![xi1, xi2, 0.0], n).unwrap();
        let tree = evolve_tree(&cfg).unwrap();
        for level in &tree[1..] {
            let total: f64 = level.iter().map(|b| b.probability).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for pair in level.chunks(2) {
                prop_assert!((pair[0].probability - pair[1].probability).abs() < 1e-12);
                let h0 = bell_value(&pair[0].state, pair[0].ideal_theta, 0.0).unwrap().h_min;
                let h1 = bell_value(&pair[1].state, pair[1].ideal_theta, 0.0).unwrap().h_min;
                prop_assert!((h0 - h1).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn guess_bound_decreases_with_violation(beta in 0.0..1.98f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let lo = 2.0 + beta;
        let span = i_max_of(beta) - lo;
        let (x, y) = (lo + span * a.min(b), lo + span * a.max(b));
        let gx = guess_bound(x, beta).unwrap();
        let gy = guess_bound(y, beta).unwrap();
        prop_assert!(gy <= gx + 1e-15);
        prop_assert!((0.5..=1.0).contains(&gx));
    }

    #[test]
    fn bell_value_respects_quantum_bound(rho in two_qubit_state(), theta in angle(), xi in angle()) {
        let cert = bell_value(&rho, theta, xi).unwrap();
        prop_assert!(cert.i_max * cert.i_max - cert.i_value * cert.i_value >= -1e-9);
        prop_assert!(!cert.overshoot);
        prop_assert!(cert.h_min >= 0.0 && cert.h_min <= 1.0 + 1e-12);
    }

    #[test]
    fn visibilities_round_trip(n in noise()) {
        let vis = visibilities_of(&make_state(n, FRAC_PI_4).unwrap());
        let back = params_from_visibilities(vis).unwrap();
        prop_assert!((back.p - n.p).abs() < 1e-12 && (back.c - n.c).abs() < 1e-12);
    }

    #[test]
    fn entropy_decreases_with_depolarization(p1 in 0.0..0.05f64, dp in 0.0..0.05f64, xi in angle()) {
        let h = |p: f64| {
            let cfg = ProtocolConfig::bell_source(vec![xi, 0.0], NoiseParams::depolarizing(p).unwrap()).unwrap();
            total_entropy(&cfg, Aggregation::ProbabilityWeighted).unwrap().total_bits
        };
        prop_assert!(h(p1 + dp) <= h(p1) + 1e-12);
    }

    #[test]
    fn evolution_is_deterministic(n in noise(), xi in angle()) {
        let cfg = ProtocolConfig::bell_source(vec![xi, 0.0], n).unwrap();
        prop_assert_eq!(evolve_tree(&cfg).unwrap(), evolve_tree(&cfg).unwrap());
    }

    #[test]
    fn outcome_statistics_are_no_signaling(n in noise(), xi1 in angle(), xi2 in angle()) {
        let cfg = ProtocolConfig::bell_source(vec![xi1, xi2, 0.0], n).unwrap();
        let model = OutcomeModel::new(&cfg).unwrap();
        for step in 1..=3 {
            for h in History::all(step - 1) {
                let p = |a, b| model.probabilities(step, &h, a, b).unwrap();
                for a in 0..2 {
                    let (x, y) = (p(a, 0), p(a, 1));
                    prop_assert!(((x[0] + x[1]) - (y[0] + y[1])).abs() < 1e-12);
                    prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
                for b in 0..2 {
                    let (x, y) = (p(0, b), p(1, b));
                    prop_assert!(((x[0] + x[2]) - (y[0] + y[2])).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sampling_is_seed_deterministic(seed in any::<u64>(), mean in 1.0..1e5f64) {
        let probs = [0.4, 0.1, 0.2, 0.3];
        prop_assert_eq!(sample_counts(&probs, mean, seed), sample_counts(&probs, mean, seed));
    }
}

#[test]
fn kraus_completeness_on_grid() {
    for i in 0..100 {
        let xi = FRAC_PI_4 * i as f64 / 99.0;
        let (kp, km) = kraus_pair(xi).unwrap();
        let sum = kp.adjoint() * kp + km.adjoint() * km;
        assert!(
            sum.max_abs_diff(&QubitOperator::identity()) < 1e-14,
            "xi = {xi}"
        );
        assert!(kp.is_hermitian(1e-15) && km.is_hermitian(1e-15));
    }
}

#[test]
fn balanced_branches_for_bell_source() {
    for i in 0..50 {
        let xi = FRAC_PI_4 * i as f64 / 49.0;
        for p in [0.0, 1e-3, 0.1] {
            let rho = make_state(NoiseParams::depolarizing(p).unwrap(), FRAC_PI_4).unwrap();
            let (pp, _) = weak_branch(&rho, xi, Outcome::Plus).unwrap();
            assert!((pp - 0.5).abs() < 1e-14);
        }
    }
}
