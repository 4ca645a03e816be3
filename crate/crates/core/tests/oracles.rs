//! Checks against closed forms derived independently of the library's linear
//! algebra, plus frozen reference values.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use seqweak_core::*;

/// Bell value of `(1−p)|ψ_θ⟩⟨ψ_θ| + p𝟙/4` measured with observables matched
/// to θ. Every correlator of the pure state scales by `1 − p`:
/// `⟨B₀⟩ = cos2θ`, `⟨A_{0,1}B₀⟩ = cos μ`, `⟨A_{0,1}B₁⟩ = ± cos2ξ sin μ sin2θ`.
fn bell_closed_form(theta: f64, xi: f64, p: f64) -> f64 {
    let s2 = (2.0 * theta).sin();
    let c2 = (2.0 * theta).cos();
    let mu = s2.atan();
    let beta = 2.0 * c2 / (1.0 + s2 * s2).sqrt();
    (1.0 - p) * (beta * c2 + 2.0 * mu.cos() + 2.0 * (2.0 * xi).cos() * mu.sin() * s2)
}

fn h_closed_form(i: f64, beta: f64) -> f64 {
    if i <= 2.0 + beta {
        return 0.0;
    }
    let imax = (8.0 + 2.0 * beta * beta).sqrt();
    let g = 0.5 + (imax * imax - i * i).max(0.0).sqrt() / (2.0 * (2.0 - beta));
    -g.min(1.0).log2()
}

#[test]
fn first_step_matches_closed_form() {
    for &theta in &[0.2, 0.5, FRAC_PI_4] {
        for &xi in &[0.0, 0.1, 0.4, 0.7] {
            for &p in &[0.0, 1e-3, 0.05] {
                let rho = make_state(NoiseParams::depolarizing(p).unwrap(), theta).unwrap();
                let cert = bell_value(&rho, theta, xi).unwrap();
                let i = bell_closed_form(theta, xi, p);
                assert!((cert.i_value - i).abs() < 1e-12, "θ={theta} ξ={xi} p={p}");
                // √(I_max² − I²) is ill-conditioned at the bound; compare away from it
                if cert.i_max - i > 1e-6 {
                    assert!(
                        (cert.h_min - h_closed_form(i, cert.beta)).abs() < 1e-9,
                        "θ={theta} ξ={xi} p={p}"
                    );
                }
            }
        }
    }
}

#[test]
fn noiseless_branches_stay_on_the_ideal_family() {
    // without noise every branch state is the Schmidt-diagonal ideal state
    let cfg = ProtocolConfig::bell_source(vec![0.3, 0.2, 0.0], NoiseParams::ideal()).unwrap();
    let tree = evolve_tree(&cfg).unwrap();
    let thetas = cfg.ideal_thetas();
    for (k, level) in tree.iter().enumerate() {
        for node in level {
            assert!((node.ideal_theta - thetas[k]).abs() < 1e-12);
            let target = TwoQubitState::from_pure(&PureTwoQubit::schmidt_diagonal(thetas[k]));
            assert!(node.state.max_abs_diff(&target) < 1e-10);
            assert!((node.probability - 0.5f64.powi(k as i32)).abs() < 1e-14);
        }
    }
}

#[test]
fn noiseless_totals() {
    // h of step k is the closed form at the ideal angle with p = 0
    let strengths = vec![0.3, 0.15, 0.0];
    let cfg = ProtocolConfig::bell_source(strengths.clone(), NoiseParams::ideal()).unwrap();
    let s = total_entropy(&cfg, Aggregation::ProbabilityWeighted).unwrap();
    let thetas = cfg.ideal_thetas();
    for k in 0..3 {
        let i = bell_closed_form(thetas[k], strengths[k], 0.0);
        let beta = beta_of(thetas[k]).unwrap();
        assert!(
            (s.h(k + 1) - h_closed_form(i, beta)).abs() < 1e-9,
            "step {}",
            k + 1
        );
    }
    assert!((s.h(3) - 1.0).abs() < 1e-9);
}

#[test]
fn tsirelson_point_certifies_one_bit() {
    let rho = make_state(NoiseParams::ideal(), FRAC_PI_4).unwrap();
    let cert = bell_value(&rho, FRAC_PI_4, 0.0).unwrap();
    assert!((cert.i_value - 2.0 * SQRT_2).abs() < 1e-12);
    assert_eq!(cert.beta, beta_of(FRAC_PI_4).unwrap());
    assert!((cert.h_min - 1.0).abs() < 1e-9);
}

#[test]
fn frozen_reference_values() {
    let one = |p: f64, s: Vec<f64>| {
        let cfg = ProtocolConfig::bell_source(s, NoiseParams::depolarizing(p).unwrap()).unwrap();
        total_entropy(&cfg, Aggregation::ProbabilityWeighted).unwrap()
    };
    assert!((one(1.4e-3, vec![0.0]).total_bits - 0.895_922_442_560_928_8).abs() < 1e-12);
    assert!((one(0.0, vec![0.3, 0.0]).total_bits - 1.341_909_954_955_175_8).abs() < 1e-9);

    let cfg =
        ProtocolConfig::bell_source(vec![0.4, 0.0], NoiseParams::new(0.01, 0.02).unwrap()).unwrap();
    let s = total_entropy(&cfg, Aggregation::ProbabilityWeighted).unwrap();
    assert!((s.h(1) - 0.16597).abs() < 1e-5, "{}", s.h(1));
    assert!((s.h(2) - 0.23525).abs() < 1e-5, "{}", s.h(2));
}

#[test]
fn dephasing_only_lowers_x_visibility() {
    let vis =
        visibilities_of(&make_state(NoiseParams::new(0.01, 0.02).unwrap(), FRAC_PI_4).unwrap());
    assert!((vis.v_z - 0.99).abs() < 1e-14);
    assert!((vis.v_x - 0.97).abs() < 1e-14);
}

#[test]
fn expected_counts_estimator_matches_analytic_everywhere() {
    let cfg = ProtocolConfig::bell_source(
        vec![0.35, 0.06, 0.0],
        NoiseParams::depolarizing(1e-7).unwrap(),
    )
    .unwrap();
    let report = estimate_expected(&cfg, &settings_for(&cfg, 1e6).unwrap()).unwrap();
    let tree = evolve_tree(&cfg).unwrap();
    assert_eq!(report.estimates.len(), 7);
    for e in &report.estimates {
        let node = &tree[e.step - 1][e.history.index()];
        let exact = bell_value(&node.state, node.ideal_theta, cfg.strengths[e.step - 1]).unwrap();
        assert!((e.certificate.i_value - exact.i_value).abs() < 1e-10);
        // h inherits the conditioning of √(I_max − I): scale the tolerance by |dh/dI|
        let gap = exact.i_max - exact.i_value;
        let slope = exact.i_max.sqrt()
            / ((2.0 * gap).sqrt() * (2.0 - exact.beta) * std::f64::consts::LN_2 * 0.5);
        let tol = 1e-10f64.max(slope * 1e-14);
        assert!(
            (e.certificate.h_min - exact.h_min).abs() < tol,
            "step {} {}",
            e.step,
            e.history
        );
    }
}
