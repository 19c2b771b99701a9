//! Engine invariants over randomized populations, fitness vectors and seeds.

mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: PROPERTY_CASES, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn population_size_is_invariant(case in pop_case()) {
        size_invariance(case)?;
    }

    #[test]
    fn elites_pass_through_bit_identical(case in selection_case()) {
        elite_preservation(case)?;
    }

    #[test]
    fn zero_magnitude_mutation_is_identity(case in mutate_case()) {
        mutate_at_zero(case)?;
    }

    #[test]
    fn exactly_size_minus_m_are_replaced(case in selection_case()) {
        replacement_count(case)?;
    }

    #[test]
    fn fitness_distribution_is_normalized(fitness in fitness_vector()) {
        normalization(fitness)?;
    }

    #[test]
    fn same_seed_gives_byte_identical_traces(case in pop_case()) {
        seed_determinism(case)?;
    }
}
