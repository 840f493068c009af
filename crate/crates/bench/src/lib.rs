//! Fixed workloads shared by the benchmarks.

use poolscreen_core::worstcase::build_gamma;
use poolscreen_core::{ClassifierConfig, CorrelationLp, HypothesisPair, StrategySpec};

/// Worst-case LP over all 2^n infection vectors for SOFA designed at `p`.
pub fn sofa_lp(n: usize, p: f64) -> CorrelationLp {
    let gamma = build_gamma(&StrategySpec::Sofa { n, p }).expect("valid SOFA instance");
    CorrelationLp::new(gamma, p).expect("gamma has 2^n entries")
}

/// The small-pool operating point: N=256, L=8, V=4, first tests on subpool pairs.
pub fn small_pool() -> (ClassifierConfig, HypothesisPair) {
    (
        ClassifierConfig::noiseless(256, 8, 4, 2),
        HypothesisPair::new(0.01, 0.05).expect("valid pair"),
    )
}

/// The large-pool operating point with 80% sensitivity.
pub fn large_pool_noisy() -> (ClassifierConfig, HypothesisPair) {
    (
        ClassifierConfig::noiseless(4096, 128, 21, 6).with_sensitivity(0.8),
        HypothesisPair::new(0.005, 0.01).expect("valid pair"),
    )
}
