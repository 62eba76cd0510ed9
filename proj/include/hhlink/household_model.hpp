#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hhlink/distance.hpp"
#include "hhlink/schema.hpp"
#include "hhlink/wave.hpp"

namespace hhlink {

struct FitDiagnostics {
  double final_log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Logistic model on the Hausdorff distance, plus the calibrated decision
// threshold tau.
struct HouseholdModel {
  double beta0 = 0.0;
  FeatureWeights weights;
  double tau = 0.0;
  FitDiagnostics diagnostics;
};

// sigmoid(beta0 - delta), numerically stable.
double match_probability(double delta, double beta0);

struct HouseholdFitConfig {
  double init_beta0 = 0.0;
  std::vector<double> init_beta;  // empty means unit weights
  int max_iter = 200;
  double tol = 1e-6;
  double year_scale = 50.0;
  std::optional<std::string> blocking;  // restrict the scored pair set
  // Optional negative subsampling for very large crosses (keeps every
  // positive plus ratio negatives per positive). Off by default; the scored
  // universe then no longer covers the full cross.
  std::optional<double> subsample_negative_ratio;
  std::uint64_t subsample_seed = 1;
  int threads = 0;
};

struct LikelihoodResult {
  double value = 0.0;
  std::vector<double> gradient;  // [0] = d/d beta0, then one entry per feature
};

// Bernoulli log-likelihood of the labels over the scored pair set, with the
// analytic subgradient (the Hausdorff term differentiates through the
// attaining member pair, first in row-major member order on ties).
LikelihoodResult household_log_likelihood(const Wave& wave1, const Wave& wave2,
                                          const GroundTruth& truth,
                                          std::span<const double> params,  // beta0, beta_1..K
                                          const AttributeSchema& schema,
                                          const HouseholdFitConfig& config = {});

HouseholdModel fit_household_model(const Wave& wave1, const Wave& wave2,
                                   const GroundTruth& truth, const AttributeSchema& schema,
                                   const HouseholdFitConfig& config = {});

// Largest threshold whose implied match proportion is closest to the target;
// ties in closeness resolve toward the larger threshold (fewer matches).
double calibrate_tau(const std::vector<double>& max_probabilities, double target_proportion);

struct HouseholdPairDecision {
  std::string household_id1, household_id2;
  double p = 0.0;
  bool matched = false;
  bool tie = false;  // argmax tie resolved by lexicographic wave-2 id
};

struct HouseholdPrediction {
  // One row per wave-1 household: its argmax wave-2 candidate. household_id2
  // is empty when blocking left no candidates.
  std::vector<HouseholdPairDecision> best;
  int argmax_ties = 0;
  int demoted_by_one_to_one = 0;
};

struct HouseholdPredictOptions {
  std::optional<std::string> blocking;
  bool one_to_one = false;  // keep only the highest-p claim per wave-2 household
  int threads = 0;
};

HouseholdPrediction predict_households(const Wave& wave1, const Wave& wave2,
                                       const HouseholdModel& model,
                                       const AttributeSchema& schema,
                                       const HouseholdPredictOptions& options = {});

// Competition-ranked position of the true partner's probability, bucketed as
// {1, 2, 3, 4, >=5}. Truth pairs whose partner is never scored land in >=5.
struct RankHistogram {
  std::array<std::uint64_t, 5> counts{};
  std::uint64_t total = 0;
  std::array<double, 5> shares() const;
};

RankHistogram rank_of_truth(const Wave& wave1, const Wave& wave2, const HouseholdModel& model,
                            const GroundTruth& truth, const AttributeSchema& schema,
                            const HouseholdPredictOptions& options = {});

}  // namespace hhlink
