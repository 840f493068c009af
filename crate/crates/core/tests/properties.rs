use proptest::prelude::*;

use poolscreen_core::adaptive::{expected_tests, run_strategy, EvalMode, StrategyKind, StrategySpec};
use poolscreen_core::domain::{Hypothesis, InfectionVector, NoiseModel, PriorModel};
use poolscreen_core::hypothesis::{
    classify, closed_form_pf_pd, evaluate, tree_depth, ClassifierConfig, HypothesisPair, SplitTree,
};
use poolscreen_core::worstcase::{build_gamma, solve_worstcase, CorrelationLp};

fn bits(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = InfectionVector> {
    prop::collection::vec(any::<bool>(), len).prop_map(|b| InfectionVector::new(b).unwrap())
}

proptest! {
    #[test]
    fn classifier_decides_by_count(x in bits(2..=300), seed in any::<u64>(), tau_frac in 0.0..=1.0f64, v_frac in 0.0..1.0f64) {
        let l = x.len();
        let tau = (tau_frac * tree_depth(l) as f64).floor() as usize;
        let v = (v_frac * (l + 1) as f64).floor() as i64 - 1;
        let cfg = ClassifierConfig::noiseless(l, l, v, tau);
        let trace = classify(&x, &cfg, seed).unwrap();
        let want = if x.weight() as i64 > v { Hypothesis::H1 } else { Hypothesis::H0 };
        prop_assert_eq!(trace.verdict.hypothesis(), Some(want));
        let frontier = SplitTree::new(l).frontier(tau).len();
        prop_assert!(trace.test_count() <= 2 * l - 1 + frontier);
    }

    #[test]
    fn healthy_vector_costs_the_frontier(l in 2usize..200, tau_frac in 0.0..=1.0f64, v_frac in 0.0..1.0f64) {
        let tau = (tau_frac * tree_depth(l) as f64).floor() as usize;
        let v = (v_frac * l as f64).floor() as i64;
        let cfg = ClassifierConfig::noiseless(l, l, v, tau);
        let trace = classify(&InfectionVector::healthy(l).unwrap(), &cfg, 0).unwrap();
        prop_assert_eq!(trace.test_count(), SplitTree::new(l).frontier(tau).len());
    }

    #[test]
    fn noisy_classifier_never_overcounts(x in bits(2..=64), seed in any::<u64>(), rho in 0.0..1.0f64) {
        // Specificity is 1, so a noisy run can only miss infected subpools.
        let l = x.len();
        let cfg = ClassifierConfig::noiseless(l, l, x.weight() as i64 - 1, 0).with_sensitivity(rho);
        if cfg.validate().is_ok() {
            let trace = classify(&x, &cfg, seed).unwrap();
            prop_assert!(trace.test_count() <= 2 * l);
            let h0 = ClassifierConfig { threshold: x.weight().min(l - 1) as i64, ..cfg };
            if x.weight() < l {
                prop_assert_eq!(classify(&x, &h0, seed).unwrap().verdict.hypothesis(), Some(Hypothesis::H0));
            }
        }
    }

    #[test]
    fn sofa_identifies_and_stays_in_budget(x in bits(1..=64), p in 0.0..=1.0f64) {
        let spec = StrategySpec::Sofa { n: x.len(), p };
        let trace = run_strategy(&spec, &x, NoiseModel::NOISELESS, 0).unwrap();
        prop_assert_eq!(trace.verdict.identified(), Some(&x.support()));
    }

    #[test]
    fn small_strategies_use_at_most_4n(index in 0u64..4096, n in 1usize..=12, p in 0.0..=1.0f64) {
        let x = InfectionVector::from_index(index % (1 << n), n).unwrap();
        for spec in [StrategySpec::Individual { n }, StrategySpec::Sofa { n, p }] {
            prop_assert!(run_strategy(&spec, &x, NoiseModel::NOISELESS, 0).unwrap().test_count() <= 4 * n);
        }
    }

    #[test]
    fn closed_form_is_monotone_in_pool_size(l in 2usize..40, v_frac in 0.0..1.0f64, k in 1usize..20) {
        let v = (v_frac * l as f64).floor() as i64;
        let pair = HypothesisPair::new(0.01, 0.05).unwrap();
        let rates = |n: usize| {
            let (q0, q1) = pair.subpool_qs(n, l).unwrap();
            closed_form_pf_pd(q0, q1, l, v).unwrap()
        };
        let (a, b) = (rates(k * l), rates((k + 1) * l));
        prop_assert!(b.pf >= a.pf - 1e-15 && b.pd >= a.pd - 1e-15);
        prop_assert!(a.pd >= a.pf);
    }

    #[test]
    fn worstcase_is_feasible_and_dominates_iid(p in 0.0..=1.0f64, kind in prop::sample::select(vec![StrategyKind::Soms4, StrategyKind::Sofa, StrategyKind::Halving4])) {
        let spec = kind.build(4, p).unwrap();
        let lp = CorrelationLp::new(build_gamma(&spec).unwrap(), p).unwrap();
        let sol = solve_worstcase(&lp).unwrap();
        prop_assert!(lp.violation(&sol.pi) <= 1e-9);
        prop_assert!((lp.objective(&sol.pi) - sol.value).abs() <= 1e-9);
        let iid = expected_tests(&spec, &PriorModel::iid(p).unwrap(), NoiseModel::NOISELESS, EvalMode::Exact).unwrap();
        prop_assert!(sol.value >= iid.expected_tests - 1e-9);
    }
}

#[test]
fn worstcase_is_concave_along_uniform_grids() {
    for spec in [StrategySpec::Soms4, StrategySpec::Halving4] {
        let gamma = build_gamma(&spec).unwrap();
        let values: Vec<f64> = (0..=40)
            .map(|i| {
                solve_worstcase(&CorrelationLp::new(gamma.clone(), i as f64 / 40.0).unwrap())
                    .unwrap()
                    .value
            })
            .collect();
        for w in values.windows(3) {
            assert!(w[1] >= (w[0] + w[2]) / 2.0 - 1e-9, "{spec:?}: {w:?}");
        }
    }
}

#[test]
fn classifier_exact_matches_closed_form_for_small_l() {
    let pair = HypothesisPair::with_priors(0.02, 0.06, 0.7).unwrap();
    for l in 2..=12usize {
        for tau in 0..=tree_depth(l) {
            for v in -1..l as i64 {
                let cfg = ClassifierConfig::noiseless(8 * l, l, v, tau);
                let r = evaluate(&cfg, &pair, EvalMode::Exact).unwrap();
                let cf = r.closed_form.unwrap();
                assert!((r.pf - cf.pf).abs() < 1e-12 && (r.pd - cf.pd).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn monte_carlo_agrees_with_exact() {
    let mode = EvalMode::MonteCarlo {
        trials: 100_000,
        seed: 42,
    };
    for (spec, p) in [
        (StrategySpec::Soms4, 0.1),
        (StrategySpec::Halving4, 0.2),
        (StrategySpec::Sofa { n: 12, p: 0.03 }, 0.03),
    ] {
        let prior = PriorModel::iid(p).unwrap();
        let exact = expected_tests(&spec, &prior, NoiseModel::NOISELESS, EvalMode::Exact).unwrap();
        let sim = expected_tests(&spec, &prior, NoiseModel::NOISELESS, mode).unwrap();
        assert!(
            (sim.expected_tests - exact.expected_tests).abs() <= 4.0 * sim.std_error(),
            "{spec:?}"
        );
    }
}
