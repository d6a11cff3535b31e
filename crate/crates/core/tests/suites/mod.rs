//! Randomized property checks, shared by the `properties` and `acceptance`
//! targets.

#![allow(dead_code)]

pub mod eluder;
pub mod estimation;
pub mod norms;
pub mod planning;
pub mod sampler;

use proptest::test_runner::{Config as ProptestConfig, TestCaseError, TestRunner};
use proptest::strategy::Strategy;

use crate::common::config;

/// Number of cases that passed, or the shrunk counterexample.
pub type Outcome = Result<u32, String>;

pub fn check<S, F>(strategy: S, test: F) -> Outcome
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let cfg = ProptestConfig {
        failure_persistence: None,
        ..config()
    };
    let cases = cfg.cases;
    TestRunner::new(cfg)
        .run(&strategy, test)
        .map(|_| cases)
        .map_err(|e| e.to_string())
}

pub type Property = (&'static str, fn() -> Outcome);

pub const ALL: &[Property] = &[
    ("norms::data_norm_is_a_pseudometric", norms::data_norm_is_a_pseudometric),
    ("norms::data_norm_grows_with_the_dataset", norms::data_norm_grows_with_the_dataset),
    ("norms::incremental_norms_match_batch", norms::incremental_norms_match_batch),
    ("norms::mixture_value_is_the_mean_of_member_values", norms::mixture_value_is_the_mean_of_member_values),
    ("norms::mixture_action_distribution_is_uniform", norms::mixture_action_distribution_is_uniform),
    ("norms::argmax_and_argmin_pick_the_lowest_extremum", norms::argmax_and_argmin_pick_the_lowest_extremum),
    ("norms::greedy_policy_is_an_exhaustive_argmax", norms::greedy_policy_is_an_exhaustive_argmax),
    ("norms::prefix_holds_the_first_t_minus_one_records", norms::prefix_holds_the_first_t_minus_one_records),
    ("norms::context_distributions_sum_to_one", norms::context_distributions_sum_to_one),
    ("planning::omega_matches_its_definition", planning::omega_matches_its_definition),
    ("planning::omega_is_nonnegative_and_monotone_in_radius", planning::omega_is_nonnegative_and_monotone_in_radius),
    ("planning::omega_shrinks_as_data_grows", planning::omega_shrinks_as_data_grows),
    ("planning::radius_argmax_is_exhaustive_with_lowest_ties", planning::radius_argmax_is_exhaustive_with_lowest_ties),
    ("planning::planner_is_deterministic_and_replayable", planning::planner_is_deterministic_and_replayable),
    ("estimation::least_squares_is_an_exhaustive_minimizer", estimation::least_squares_is_an_exhaustive_minimizer),
    ("estimation::confidence_radius_is_monotone", estimation::confidence_radius_is_monotone),
    ("estimation::optimism_given_containment", estimation::optimism_given_containment),
    ("estimation::regret_is_nonnegative_and_shift_invariant", estimation::regret_is_nonnegative_and_shift_invariant),
    ("estimation::selection_is_an_exhaustive_argmin", estimation::selection_is_an_exhaustive_argmin),
    ("sampler::identical_inputs_give_identical_datasets", sampler::identical_inputs_give_identical_datasets),
    ("sampler::actions_never_depend_on_rewards", sampler::actions_never_depend_on_rewards),
    ("sampler::streams_are_independent_of_each_other", sampler::streams_are_independent_of_each_other),
    ("sampler::bounded_noise_stays_in_bounds", sampler::bounded_noise_stays_in_bounds),
    ("eluder::dependence_matches_its_definition", eluder::dependence_matches_its_definition),
    ("eluder::certificates_replay_and_greedy_never_beats_exact", eluder::certificates_replay_and_greedy_never_beats_exact),
    ("eluder::estimate_is_monotone_in_eps", eluder::estimate_is_monotone_in_eps),
    ("eluder::tree_functions_have_the_three_level_structure", eluder::tree_functions_have_the_three_level_structure),
    ("eluder::tree_certificate_holds_below_twelve_eps", eluder::tree_certificate_holds_below_twelve_eps),
];
