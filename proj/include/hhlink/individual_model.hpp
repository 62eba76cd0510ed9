#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hhlink/household_model.hpp"
#include "hhlink/schema.hpp"
#include "hhlink/wave.hpp"

namespace hhlink {

// Ridge-penalized logistic model on within-household feature distances.
struct IndividualModel {
  double alpha0 = 0.0;
  std::vector<double> alpha;  // schema order, non-negative
  double lambda = 0.0;
  double year_scale = 50.0;
  std::vector<std::pair<double, double>> cv_curve;  // (lambda, mean deviance)
  FitDiagnostics diagnostics;
};

// sigmoid(alpha0 - D) with D the weighted distance between the two records.
double individual_score(const Individual& a, const Individual& b, const IndividualModel& model,
                        const AttributeSchema& schema);

// Labeled member cross-products of truly matched household pairs.
struct TrainingPairs {
  std::size_t K = 0;
  std::vector<double> features;  // row-major, K per pair, schema order
  std::vector<std::uint8_t> labels;
  std::vector<std::pair<std::string, std::string>> ids;
  // Feature evaluation order (categoricals then years). Empty means 0..K-1;
  // build_training_pairs fills it so fitted scores match individual_score
  // bit for bit.
  std::vector<std::size_t> canonical_order;
  std::size_t positives = 0, negatives = 0;
  std::size_t size() const { return labels.size(); }
};

TrainingPairs build_training_pairs(const Wave& wave1, const Wave& wave2,
                                   const GroundTruth& truth, const AttributeSchema& schema,
                                   double year_scale = 50.0);

// 50 logarithmically spaced values over [1e-4, 1e2].
std::vector<double> default_lambda_grid();

struct IndividualFitConfig {
  std::vector<double> lambda_grid;  // empty -> default_lambda_grid()
  int cv_folds = 10;
  std::uint64_t cv_seed = 1;
  int max_iter = 500;
  double step_tol = 1e-8;  // convergence on the parameter-change infinity norm
  double year_scale = 50.0;
};

// Cross-validated deviance picks lambda (ties toward the larger value), then
// a final fit on all pairs. Folds are stratified by label with a fixed seed.
// If either class has fewer members than two folds, cross-validation is
// skipped and the smallest grid value is used.
IndividualModel fit_individual(const TrainingPairs& pairs,
                               const IndividualFitConfig& config = {});

// Single penalized fit at a fixed lambda over a row subset (empty = all).
struct PenalizedFit {
  double alpha0 = 0.0;
  std::vector<double> alpha;
  FitDiagnostics diagnostics;
};
PenalizedFit fit_individual_at_lambda(const TrainingPairs& pairs, double lambda,
                                      std::span<const std::uint32_t> rows,
                                      const IndividualFitConfig& config = {});

struct LinkedPair {
  std::string individual_id1, individual_id2;
  double q = 0.0;
  bool matched = false;
  std::string household_id1, household_id2;
};

struct LinkageResult {
  std::vector<LinkedPair> pairs;  // all candidate pairs inside matched household pairs
  std::vector<std::string> unmatched_wave1, unmatched_wave2;
  double objective = 0.0;
  // Conflicting claims on a wave-2 individual (possible when two wave-1
  // households matched the same wave-2 household); resolved toward higher q.
  int duplicate_claims = 0;
};

LinkageResult link_individuals(const Wave& wave1, const Wave& wave2,
                               const HouseholdPrediction& prediction,
                               const IndividualModel& model, const AttributeSchema& schema,
                               int threads = 0);

}  // namespace hhlink
