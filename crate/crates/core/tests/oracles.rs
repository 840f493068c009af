//! Frozen reference values from independent oracles.

mod common;

use poolscreen_core::adaptive::{expected_tests, EvalMode, StrategySpec};
use poolscreen_core::domain::{NoiseModel, PriorModel};
use poolscreen_core::hypothesis::{classify, closed_form_pf_pd, evaluate, subpool_q, ClassifierConfig, HypothesisPair};
use poolscreen_core::nonadaptive::TestingMatrix;
use poolscreen_core::worstcase::{build_gamma, solve_worstcase, solve_worstcase_with, CorrelationLp, SolveStrategy};

fn iid_tpp(spec: StrategySpec, p: f64) -> f64 {
    expected_tests(
        &spec,
        &PriorModel::iid(p).unwrap(),
        NoiseModel::NOISELESS,
        EvalMode::Exact,
    )
    .unwrap()
    .tests_per_person
}

/// E[Γ] of SOMS written out path by path from the flowchart.
fn soms_by_paths(p: f64) -> f64 {
    let q = 1.0 - p;
    let mut total = 0.0;
    for index in 0..16u32 {
        let k = index.count_ones() as i32;
        let prob = p.powi(k) * q.powi(4 - k);
        let bit = |i: u32| (index >> i) & 1 == 1;
        let t2 = bit(0) || bit(1);
        let t3 = bit(2) || bit(3);
        let t4 = bit(0) || bit(2);
        let tests = match (index, t2, t3, t4) {
            (0, ..) => 1,
            (_, true, true, true) => 8,
            (_, false, true, true) | (_, true, false, true) => 5,
            _ => 4,
        };
        total += prob * tests as f64;
    }
    total / 4.0
}

#[test]
fn soms_matches_path_enumeration() {
    for p in [0.0, 0.01, 0.05, 0.1, 0.3, 0.7, 1.0] {
        assert!(
            (iid_tpp(StrategySpec::Soms4, p) - soms_by_paths(p)).abs() < 1e-14,
            "p = {p}"
        );
    }
}

#[test]
fn frozen_identification_values() {
    let cases = [
        (StrategySpec::Soms4, 0.01, 0.284_749),
        (StrategySpec::Soms4, 0.05, 0.418_933),
        (StrategySpec::Soms4, 0.1, 0.576_425),
        (StrategySpec::Sofa { n: 4, p: 0.01 }, 0.01, 0.277_376),
        (StrategySpec::Sofa { n: 4, p: 0.05 }, 0.05, 0.384_467),
        (StrategySpec::Sofa { n: 4, p: 0.1 }, 0.1, 0.513_225),
    ];
    for (spec, p, want) in cases {
        let got = iid_tpp(spec, p);
        assert!((got - want).abs() < 5e-6, "{spec:?} at {p}: {got}");
    }
}

#[test]
fn worstcase_matches_vertex_enumeration() {
    for spec in [
        StrategySpec::Soms4,
        StrategySpec::Halving4,
        StrategySpec::Individual { n: 4 },
        StrategySpec::Sofa { n: 4, p: 0.05 },
    ] {
        let gamma = build_gamma(&spec).unwrap();
        for p in [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.25, 0.5, 0.75, 1.0] {
            let lp = CorrelationLp::new(gamma.clone(), p).unwrap();
            let sol = solve_worstcase(&lp).unwrap();
            let oracle = common::vertex_enumeration_max(&gamma, p);
            assert!(
                (sol.value - oracle).abs() < 1e-9,
                "{spec:?} p={p}: {} vs {oracle}",
                sol.value
            );
            assert!(lp.violation(&sol.pi) < 1e-9);
            assert!((lp.objective(&sol.pi) - sol.value).abs() < 1e-9);
        }
    }
}

#[test]
fn frozen_worstcase_values() {
    let soms = build_gamma(&StrategySpec::Soms4).unwrap();
    assert_eq!(soms, vec![1, 5, 4, 5, 5, 8, 8, 8, 4, 8, 4, 8, 5, 8, 8, 8]);
    for (p, per_person) in [(0.01, 0.285), (0.05, 0.425), (0.1, 0.6), (0.5, 2.0)] {
        let v = solve_worstcase(&CorrelationLp::new(soms.clone(), p).unwrap())
            .unwrap()
            .value
            / 4.0;
        assert!((v - per_person).abs() < 1e-9, "p={p}: {v}");
    }
    let sofa = build_gamma(&StrategySpec::Sofa { n: 4, p: 0.05 }).unwrap();
    assert_eq!(sofa, vec![1, 4, 4, 7, 4, 7, 6, 9, 3, 5, 5, 8, 4, 7, 6, 9]);
    let v = solve_worstcase(&CorrelationLp::new(sofa, 0.05).unwrap()).unwrap().value / 4.0;
    assert!((v - 0.3875).abs() < 1e-9);
}

#[test]
fn exact_rational_solver_agrees_on_sofa_sixteen_columns() {
    let gamma = build_gamma(&StrategySpec::Sofa { n: 4, p: 0.1 }).unwrap();
    for p in [0.03, 0.1, 0.37] {
        let lp = CorrelationLp::new(gamma.clone(), p).unwrap();
        let exact = solve_worstcase_with(&lp, SolveStrategy::ExactOnly).unwrap();
        assert!((exact.value - common::vertex_enumeration_max(&gamma, p)).abs() < 1e-9);
    }
}

#[test]
fn four_subpool_table_replays() {
    let cfg = ClassifierConfig::noiseless(64, 4, 1, 0);
    for (x, decision, tests) in common::FOUR_SUBPOOL_TABLE {
        let trace = classify(&x.parse().unwrap(), &cfg, 0).unwrap();
        assert_eq!(trace.verdict.hypothesis(), Some(decision), "{x}");
        assert_eq!(trace.test_count(), tests, "{x}");
    }
}

#[test]
fn four_subpool_expected_tests_formulas() {
    let pair = HypothesisPair::new(0.01, 0.05).unwrap();
    for n in [16, 64, 128] {
        let q0 = subpool_q(0.01, n, 4).unwrap();
        let q1 = subpool_q(0.05, n, 4).unwrap();
        let root = evaluate(&ClassifierConfig::noiseless(n, 4, 1, 0), &pair, EvalMode::Exact).unwrap();
        let want = 0.5 * common::four_subpool_root_tests(q0) + 0.5 * common::four_subpool_root_tests(q1);
        assert!((root.expected_tests - want).abs() < 1e-12);

        let skip = evaluate(&ClassifierConfig::noiseless(n, 4, 1, 1), &pair, EvalMode::Exact).unwrap();
        let halves = |q: f64| {
            let h = 1.0 - (1.0 - q).powi(2);
            2.0 * ((1.0 - h).powi(2) + h * h) + 4.0 * 2.0 * h * (1.0 - h)
        };
        assert!((skip.expected_tests - 0.5 * (halves(q0) + halves(q1))).abs() < 1e-12);
    }
}

#[test]
fn closed_form_matches_direct_binomial() {
    for (q0, q1, l) in [(0.05, 0.2, 8), (0.14, 0.56, 4), (0.1, 0.3, 28), (0.01, 0.04, 128)] {
        for v in -1..l as i64 {
            let r = closed_form_pf_pd(q0, q1, l, v).unwrap();
            assert!((r.pf - common::binomial_tail(q0, l, v)).abs() < 1e-12);
            assert!((r.pd - common::binomial_tail(q1, l, v)).abs() < 1e-12);
        }
    }
}

#[test]
fn frozen_pair_level_expected_tests() {
    let small = HypothesisPair::new(0.01, 0.05).unwrap();
    let cases = [(256, 8, 4, 2, 8.710_060), (256, 16, 4, 3, 9.333_042)];
    for (n, l, v, tau, want) in cases {
        let r = evaluate(&ClassifierConfig::noiseless(n, l, v, tau), &small, EvalMode::Exact).unwrap();
        assert!(
            (r.expected_tests - want).abs() < 1e-6,
            "N={n} L={l}: {}",
            r.expected_tests
        );
    }
}

#[test]
fn example_one_matrix_separates_single_infections() {
    let m: TestingMatrix = "3 4\n1100\n1010\n0011".parse().unwrap();
    assert!(m.is_separable(1, true).unwrap());
    let outcomes = m.encode(&"0100".parse().unwrap()).unwrap();
    assert_eq!(m.decode(&outcomes, 1).unwrap(), std::collections::BTreeSet::from([1]));
}
