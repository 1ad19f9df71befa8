mod common;

use common::*;
use proptest::prelude::*;

fn check(r: Result<(), String>) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn translation_is_deterministic(m in arb_model()) {
        check(translation_deterministic(&m))?;
    }

    #[test]
    fn action_and_clock_counts(m in arb_model()) {
        check(count_laws(&m))?;
    }

    #[test]
    fn at_most_one_running_clock(m in arb_model()) {
        check(one_running_clock(&m))?;
    }

    #[test]
    fn substitution_keeps_well_formed(m in arb_model()) {
        check(substitute_preserves(&m))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn finer_quantum_keeps_misses(m in arb_model()) {
        check(quantum_monotone(&m))?;
    }

    #[test]
    fn witnesses_replay(m in arb_model()) {
        check(witness_replays(&m))?;
    }

    #[test]
    fn saturation_preserves_reachability(m in arb_model()) {
        check(saturation_equivalent(&m, 30))?;
    }
}
