#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hhlink/schema.hpp"
#include "hhlink/wave.hpp"

namespace hhlink {

// Two-class conditional-independence model over binary agreement patterns:
// m = per-feature agreement probability given a match, u = given a non-match,
// pi = match prior. Fit by expectation-maximization on blocked pairs.
struct FSConfig {
  std::vector<std::string> blocking_keys = {"SEX", "NASCREG"};
  double threshold = 0.5;  // posterior cutoff for declaring a match
  int max_iter = 500;
  double tol = 1e-8;  // max parameter change
  double init_m = 0.9, init_u = 0.1, init_pi = 0.05;
};

struct FSModel {
  std::vector<double> m, u;
  double pi = 0.0;
  double threshold = 0.5;
  std::vector<std::string> blocking_keys;
  int iterations = 0;
  bool converged = false;
  std::vector<double> log_likelihood_trace;  // one entry per EM iteration
  bool orientation_warning = false;          // some m_k <= u_k after convergence
};

// Component k agrees (1) iff the feature distance is exactly zero; years must
// match exactly, missing values never agree.
std::vector<std::uint8_t> agreement_pattern(const Individual& a, const Individual& b,
                                            const AttributeSchema& schema);

// Agreement patterns aggregated over within-block cross-wave pairs. Patterns
// are bit-packed with feature k at bit k.
struct PatternCounts {
  std::size_t K = 0;
  std::uint64_t total_pairs = 0;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> counts;  // (pattern, count), sorted
};

PatternCounts blocked_pattern_counts(const Wave& wave1, const Wave& wave2,
                                     const AttributeSchema& schema,
                                     const std::vector<std::string>& blocking_keys);

FSModel fs_em_fit(const PatternCounts& patterns, const FSConfig& config = {});

struct FSDecision {
  std::string individual_id1, individual_id2;
  double posterior = 0.0;
  bool matched = false;
};

struct FSPrediction {
  // Pairs at or above the threshold, sorted by (posterior desc, ids); the
  // matched flag is the one-to-one greedy outcome.
  std::vector<FSDecision> decisions;
  std::uint64_t scored_pairs = 0;  // within-block pair universe size
};

FSPrediction fs_predict(const Wave& wave1, const Wave& wave2, const FSModel& model,
                        const AttributeSchema& schema);

}  // namespace hhlink
