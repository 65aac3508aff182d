mod common;

use proptest::prelude::*;
use sfcplace::costs::LatencyModel;
use sfcplace::embedding::validate;
use sfcplace::hca::{self, HcaConfig};
use sfcplace::ilp::{solve_exact, ExactLimits};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Node sizes vary here, so the heuristic may miss the optimum but can
    // never beat it or succeed where no embedding exists.
    #[test]
    fn heuristic_never_beats_exact(seed in any::<u64>()) {
        let s = common::tiny_scenario_mixed_sizes(seed);
        let h = hca::run(&s, &HcaConfig::default());
        let o = solve_exact(&s, &ExactLimits::default()).unwrap();
        if h.is_success() {
            prop_assert!(validate(&h.embedding, &s, &LatencyModel::Sharing).ok());
            let best = o.objective.expect("exact finds what the heuristic finds");
            prop_assert!(h.active_nodes() >= best);
        }
        if let Some(emb) = &o.embedding {
            prop_assert!(validate(emb, &s, &LatencyModel::Sharing).ok());
        }
    }
}
