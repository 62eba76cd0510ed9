"""Household-first record linkage across survey waves.

The heavy lifting lives in the C++ extension; this package re-exports it.
"""

from hhlink._core import (  # noqa: F401
    AttributeSchema,
    FeatureWeights,
    FSModel,
    GroundTruth,
    Household,
    HouseholdModel,
    HouseholdPairDecision,
    HouseholdPrediction,
    Individual,
    IndividualModel,
    LinkageResult,
    LinkedPair,
    Wave,
    __version__,
    agreement_pattern,
    all_pairs_hausdorff,
    apply_missing_policy,
    assign,
    calibrate_tau,
    compare_methods,
    compute_metrics,
    external_validation,
    feature_distance,
    fit_household_model,
    fit_individual,
    fs_fit,
    fs_predict,
    generate_synthetic,
    hausdorff,
    household_log_likelihood,
    individual_score,
    internal_validation,
    link_individuals,
    load_truth,
    load_wave,
    make_wave,
    match_probability,
    pair_distance,
    per_entity_accounting,
    predict_households,
    rank_of_truth,
    write_wave,
)
