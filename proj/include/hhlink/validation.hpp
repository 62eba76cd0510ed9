#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hhlink/fs_baseline.hpp"
#include "hhlink/household_model.hpp"
#include "hhlink/individual_model.hpp"
#include "hhlink/metrics.hpp"
#include "hhlink/schema.hpp"
#include "hhlink/wave.hpp"

namespace hhlink {

struct SplitSpec {
  std::uint64_t seed = 1;
  double train_fraction = 0.6;
  int n_repeats = 10;
};

// Knobs for a full train/predict/evaluate pass.
struct PipelineOptions {
  HouseholdFitConfig household;
  IndividualFitConfig individual;
  bool one_to_one = false;  // optional post-filter on household matches
  int threads = 0;
};

struct FittedModels {
  HouseholdModel household;
  IndividualModel individual;
};

FittedModels fit_pipeline(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
                          const AttributeSchema& schema, const PipelineOptions& options);

// Everything measured on one side (train or test) of an evaluation.
struct SideReport {
  MetricReport household;          // all-pairs household universe
  RankHistogram household_ranks;
  PerEntityReport household_entities;
  MetricReport individual_within;  // pairs inside predicted matched households
  MetricReport individual_global;  // universe-free decisions vs truth
  PerEntityReport individual_entities;
  std::uint64_t candidate_pairs = 0;
  std::uint64_t matched_households = 0;
  std::uint64_t matched_individuals = 0;
  double tau = 0.0;
};

SideReport evaluate_side(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
                         const FittedModels& models, const AttributeSchema& schema,
                         const PipelineOptions& options);

struct RepeatReport {
  HouseholdModel household_model;
  IndividualModel individual_model;
  SideReport train, test;
};

struct SummaryStat {
  double mean = 0.0, stddev = 0.0;  // stddev uses the n-1 denominator
};

using NamedStats = std::vector<std::pair<std::string, SummaryStat>>;

struct ValidationSummary {
  std::vector<RepeatReport> repeats;
  NamedStats train_metrics, test_metrics;
  NamedStats household_coefficients;   // Intercept first, then schema order
  NamedStats individual_coefficients;
  SummaryStat tau;
};

// Repeated random splits keeping matched household pairs together:
// train_fraction of matched pairs plus train_fraction of each wave's
// unmatched households form the training side.
ValidationSummary internal_validation(const Wave& wave1, const Wave& wave2,
                                      const GroundTruth& truth, const AttributeSchema& schema,
                                      const SplitSpec& split, const PipelineOptions& options);

struct ExternalReport {
  FittedModels models;
  SideReport train, test;
};

// Train on (wave1, wave2) in full, then score (wave2, wave3); tau transfers
// from training. wave2 must be the same dataset in both roles.
ExternalReport external_validation(const Wave& wave1, const Wave& wave2,
                                   const GroundTruth& truth12, const Wave& wave2_again,
                                   const Wave& wave3, const GroundTruth& truth23,
                                   const AttributeSchema& schema,
                                   const PipelineOptions& options);

struct FsSideReport {
  MetricReport individual_blocked;  // within-block pair universe
  MetricReport individual_global;
  PerEntityReport individual_entities;
  std::uint64_t scored_pairs = 0;
  std::uint64_t matched_individuals = 0;
};

struct MethodComparison {
  RepeatReport hhlink;
  FSModel fs_model_train, fs_model_test;
  FsSideReport fs_train, fs_test;
};

// One split; the baseline fits its EM on whichever side it is predicting
// (it needs no labels).
MethodComparison compare_methods(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
                                 const AttributeSchema& schema, const SplitSpec& split,
                                 const PipelineOptions& options, const FSConfig& fs_config);

FsSideReport evaluate_fs(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
                         const FSPrediction& prediction, const AttributeSchema& schema,
                         const std::vector<std::string>& blocking_keys);

// Split of a wave pair into train/test with matched households kept together.
struct SplitData {
  Wave train1, train2, test1, test2;
  GroundTruth train_truth, test_truth;
};

SplitData split_waves(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
                      const AttributeSchema& schema, double train_fraction,
                      std::uint64_t seed);

}  // namespace hhlink
