#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hhlink {

using IdPair = std::pair<std::string, std::string>;

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MetricReport {
  double f1 = 0.0, fpr = 0.0, fnr = 0.0, ppv = 0.0, recall = 0.0;
  ConfusionCounts counts;
  std::string universe;
  bool divide_by_zero = false;  // some ratio had an empty denominator (reported as 0)
};

MetricReport metrics_from_counts(const ConfusionCounts& counts, std::string universe);

// decided and truth must already be restricted to the declared universe;
// universe_size fixes tn = size - tp - fp - fn.
MetricReport compute_metrics(const std::vector<IdPair>& decided, const std::vector<IdPair>& truth,
                             std::uint64_t universe_size, std::string universe);

// Universe-free comparison of a decision list against the full truth list:
// tn is not defined, so only f1 / ppv / recall / fnr are meaningful.
MetricReport global_pair_metrics(const std::vector<IdPair>& decided,
                                 const std::vector<IdPair>& truth);

struct PerEntityReport {
  std::uint64_t with_match = 0, correct_matches = 0;
  std::uint64_t without_match = 0, correct_non_matches = 0;
  double correct_match_rate = 0.0;      // over entities that have a truth match
  double correct_non_match_rate = 0.0;  // over entities that do not
};

// Wave-1 entities: with a truth partner, correct iff the decided partner is
// that partner; without one, correct iff nothing was decided.
PerEntityReport per_entity_accounting(const std::vector<IdPair>& decided,
                                      const std::vector<IdPair>& truth,
                                      const std::vector<std::string>& wave1_entities);

}  // namespace hhlink
