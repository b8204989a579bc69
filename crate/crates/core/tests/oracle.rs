//! Solver and report values checked against bisection-based reference
//! solutions that share no code with the Newton path.

mod common;

use alphanet_core::campaign::{campaign_circuit, CampaignConfig};
use alphanet_core::sweep::{bracketing_check_p3, bracketing_check_p4, d_continuity};
use alphanet_core::{
    evaluate_bounds, fixtures, solve, statement2_check, superpose, tellegen_identity, BoundId,
    Case, ConductanceLaw, SolverConfig,
};

fn law(terms: &[(f64, f64)]) -> ConductanceLaw {
    ConductanceLaw::new(terms.iter().copied()).unwrap()
}

fn unit(alpha: f64) -> ConductanceLaw {
    ConductanceLaw::power(1.0, alpha).unwrap()
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

/// Divider middle potential for the unit single-term law.
fn divider_v(alpha: f64) -> f64 {
    common::divider_potential(&unit(alpha), 1.0)
}

#[test]
fn divider_potential_matches_closed_form_and_oracle() {
    let g = fixtures::divider();
    for alpha in [1.0, 1.5, 2.0, 3.0, 4.0, 5.0] {
        let closed = 1.0 / (1.0 + 2f64.powf(1.0 / alpha));
        assert!((divider_v(alpha) - closed).abs() < 1e-14);
        let op = solve(&g, &unit(alpha), 1.0, &cfg()).unwrap();
        assert!((op.potential(1) - closed).abs() < 1e-12, "alpha {alpha}");
    }
    assert!((divider_v(3.0) - 0.4424933).abs() < 1e-7);
}

#[test]
fn divider_superposition_matches_oracle() {
    let g = fixtures::divider();
    let v = common::divider_potential(&law(&[(1.0, 1.0), (1.0, 3.0)]), 1.0);
    let v3 = divider_v(3.0);
    let f = 2.0 * (v + v.powi(3));
    let f1 = 2.0 / 3.0;
    let f3 = 2.0 * v3.powi(3);
    let g_sum = f1 + f3;

    let sup = superpose(&g, &[unit(1.0), unit(3.0)], 1.0, &cfg()).unwrap();
    let rep = &sup.report;
    assert!((sup.connected.potential(1) - v).abs() < 1e-12);
    assert!((rep.f - f).abs() < 1e-12);
    assert!((rep.g - g_sum).abs() < 1e-12);
    assert!((rep.f_alpha[0] - f1).abs() < 1e-12);
    assert!((rep.f_alpha[1] - f3).abs() < 1e-12);
    assert!((rep.f_alpha_cnct[0] - 2.0 * v).abs() < 1e-12);
    assert!((rep.f_alpha_cnct[1] - 2.0 * v.powi(3)).abs() < 1e-12);
    assert!((rep.eta.unwrap() - (f - g_sum) / f).abs() < 1e-11);
    assert_eq!(rep.case, Case::FGreater);

    assert!((v - 0.3777).abs() < 1e-4);
    assert!((f - 0.8632).abs() < 1e-4);
    assert!((f3 - 0.173281).abs() < 1e-6);
    assert!((g_sum - 0.839948).abs() < 1e-6);
    assert!((rep.eta.unwrap() - 0.027).abs() < 5e-4);

    let s2 = statement2_check(&sup);
    assert!(s2.applicable && s2.holds && s2.sign_opposition);
    assert!((s2.lhs - (f - g_sum)).abs() < 1e-12);
    assert!((s2.rhs - (2.0 * v - f1)).abs() < 1e-12);
    assert!((f3 - 2.0 * v.powi(3) - 0.0655).abs() < 1e-4);
}

#[test]
fn divider_bounds_match_closed_forms() {
    let g = fixtures::divider();
    let sup = superpose(&g, &[unit(1.0), unit(3.0)], 1.0, &cfg()).unwrap();
    let bounds = evaluate_bounds(&g, &sup).unwrap();
    let v3 = divider_v(3.0);
    let top3 = 1.0 - v3;
    let err = sup.report.f - sup.report.g;

    let b10 = bounds.get(BoundId::B10).unwrap();
    assert!((b10.rhs - 2.0 * (v3 - 1.0 / 3.0)).abs() < 1e-12);
    assert!((b10.rhs - 0.2184).abs() < 1e-4);
    assert!(b10.applicable && b10.holds);

    // a -> n1 drops more voltage at alpha = 1, so it sits in the second cell
    let part = sup.report.partition.as_ref().unwrap();
    assert_eq!(part.s_first, vec![1, 2]);
    assert_eq!(part.s_second, vec![0]);
    let b25 = 2.0 * (v3.powi(2) - 1.0 / 9.0) + ((2.0f64 / 3.0).powi(4) - top3.powi(4));
    let b26 = 2.0 * (v3.powi(4) - 1.0 / 81.0) + (4.0 / 9.0 - top3.powi(2));
    let e25 = bounds.get(BoundId::B25).unwrap();
    let e26 = bounds.get(BoundId::B26).unwrap();
    assert!((e25.rhs - b25).abs() < 1e-12);
    assert!((e26.rhs - b26).abs() < 1e-12);
    assert!(e25.applicable && !e26.applicable);
    let combined = bounds.get(BoundId::B25B26Max).unwrap();
    assert!((combined.rhs - b25.max(b26)).abs() < 1e-12);
    assert!(combined.holds && combined.rhs >= err);
    assert!(bounds.all_hold());

    let id = tellegen_identity(&g, &sup).unwrap();
    assert!((id.lhs - err).abs() < 1e-12);
    assert!((id.lhs - 0.0233).abs() < 1e-4);
    assert!(id.relative < 1e-9);
}

#[test]
fn fixtures_match_gauss_seidel_oracle() {
    let laws = [
        unit(1.0),
        unit(3.0),
        law(&[(1.0, 1.0), (1.0, 3.0)]),
        law(&[(0.5, 2.0), (2.0, 4.5)]),
    ];
    for name in ["chain", "divider", "bridge", "coupled_bridge"] {
        let g = fixtures::by_name(name).unwrap();
        for l in &laws {
            for v_in in [0.1, 1.0, 10.0] {
                let op = solve(&g, l, v_in, &cfg()).unwrap();
                let reference = common::potentials(&g, l, v_in);
                for (k, (x, y)) in op.node_potentials.iter().zip(&reference).enumerate() {
                    assert!(
                        (x - y).abs() <= 1e-11 * v_in,
                        "{name} {l} v_in {v_in} node {k}: {x} vs {y}"
                    );
                }
                let f_ref = common::input_current(&g, l, &reference);
                assert!(
                    (op.input_current - f_ref).abs() <= 1e-9 * f_ref,
                    "{name} {l}"
                );
            }
        }
    }
}

#[test]
fn random_circuits_match_gauss_seidel_oracle() {
    let cc = CampaignConfig {
        seed: 11,
        ..CampaignConfig::default()
    };
    let l = law(&[(1.0, 1.0), (1.0, 3.0)]);
    for index in 0..40 {
        let g = campaign_circuit(&cc, index).unwrap();
        let op = solve(&g, &l, 1.0, &cfg()).unwrap();
        let reference = common::potentials(&g, &l, 1.0);
        let worst = op
            .node_potentials
            .iter()
            .zip(&reference)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-11, "circuit {index}: {worst}");
    }
}

#[test]
fn three_exponent_bracket_on_divider() {
    let g = fixtures::divider();
    let rep = bracketing_check_p3(&g, [1.0, 2.0, 3.0], 1.0, &cfg()).unwrap();
    let v13 = common::divider_potential(&law(&[(1.0, 1.0), (1.0, 3.0)]), 1.0);
    let (v1, v2, v3) = (divider_v(1.0), divider_v(2.0), divider_v(3.0));
    assert!((v2 - 1.0 / (1.0 + 2f64.sqrt())).abs() < 1e-14);
    assert!(v1 < v13 && v13 < v3 && v1 < v2 && v2 < v3);
    assert!(rep.all_bracketed && rep.all_chain_ordered);
    for b in &rep.branches {
        assert!((b.v13 - v13).abs() < 1e-12);
        assert!((b.v2 - v2).abs() < 1e-12);
        let closeness = b.closeness.unwrap();
        assert!((closeness - (v13 - v2).abs() / (v3 - v1)).abs() < 1e-10);
    }
}

#[test]
fn four_exponent_intermediates_on_divider() {
    let g = fixtures::divider();
    let rep = bracketing_check_p4(&g, [1.0, 2.0, 3.0, 4.0], 1.0, &cfg()).unwrap();
    let v14 = common::divider_potential(&law(&[(1.0, 1.0), (1.0, 4.0)]), 1.0);
    let v23 = common::divider_potential(&law(&[(1.0, 2.0), (1.0, 3.0)]), 1.0);
    let (lo, hi) = (divider_v(1.0), divider_v(4.0));
    assert!(lo < v14 && v14 < hi && lo < v23 && v23 < hi);
    assert!(rep.intermediates_interior);
    assert!((rep.intermediate_distance[1] - (v14 - v23).abs()).abs() < 1e-12);
    assert!(rep.node_chain_ordered.iter().all(|&b| b));
    let vf =
        common::divider_potential(&law(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0), (1.0, 4.0)]), 1.0);
    let f_full = 2.0 * (vf + vf.powi(2) + vf.powi(3) + vf.powi(4));
    assert!((rep.f_full - f_full).abs() < 1e-11);
}

#[test]
fn large_coefficient_pulls_divider_to_higher_exponent() {
    let g = fixtures::divider();
    let scan = d_continuity(
        &g,
        1.0,
        3.0,
        &[0.0, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
        1.0,
        &cfg(),
    )
    .unwrap();
    let at = |d: f64| scan.points.iter().find(|p| p.d == d).unwrap();
    let reference = common::divider_potential(&law(&[(1.0, 1.0), (1e3, 3.0)]), 1.0);
    assert!((at(1e3).node_potentials[1] - reference).abs() < 1e-12);
    assert!((reference - 0.44254).abs() < 1e-2);
    assert_eq!(at(0.0).distance_to_first, 0.0);
    assert!(at(1e-3).distance_to_first < at(1e-1).distance_to_first);
    assert!(scan.lower_tail_monotone && scan.upper_tail_monotone);
}
