#include "hhlink/metrics.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "hhlink/errors.hpp"

namespace hhlink {

namespace {

// count / denom with the documented 0-on-empty-denominator rule.
double ratio(std::uint64_t num, std::uint64_t denom) {
  return denom == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(denom);
}

std::uint64_t intersection_size(std::vector<IdPair> a, std::vector<IdPair> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<IdPair> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return common.size();
}

}  // namespace

MetricReport metrics_from_counts(const ConfusionCounts& counts, std::string universe) {
  MetricReport r;
  r.counts = counts;
  r.universe = std::move(universe);
  r.f1 = ratio(2 * counts.tp, 2 * counts.tp + counts.fp + counts.fn);
  r.fpr = ratio(counts.fp, counts.fp + counts.tn);
  r.fnr = ratio(counts.fn, counts.fn + counts.tp);
  r.ppv = ratio(counts.tp, counts.tp + counts.fp);
  r.recall = ratio(counts.tp, counts.tp + counts.fn);
  r.divide_by_zero = (2 * counts.tp + counts.fp + counts.fn) == 0 ||
                     (counts.fp + counts.tn) == 0 || (counts.fn + counts.tp) == 0 ||
                     (counts.tp + counts.fp) == 0;
  return r;
}

MetricReport compute_metrics(const std::vector<IdPair>& decided, const std::vector<IdPair>& truth,
                             std::uint64_t universe_size, std::string universe) {
  const std::uint64_t tp = intersection_size(decided, truth);
  ConfusionCounts c;
  c.tp = tp;
  c.fp = decided.size() - tp;
  c.fn = truth.size() - tp;
  if (universe_size < c.tp + c.fp + c.fn)
    fail(ErrorCode::Data, "universe smaller than the decided/truth pairs it must contain");
  c.tn = universe_size - c.tp - c.fp - c.fn;
  return metrics_from_counts(c, std::move(universe));
}

MetricReport global_pair_metrics(const std::vector<IdPair>& decided,
                                 const std::vector<IdPair>& truth) {
  const std::uint64_t tp = intersection_size(decided, truth);
  ConfusionCounts c;
  c.tp = tp;
  c.fp = decided.size() - tp;
  c.fn = truth.size() - tp;
  c.tn = 0;
  MetricReport r = metrics_from_counts(c, "global");
  r.fpr = 0.0;  // undefined without a universe
  return r;
}

PerEntityReport per_entity_accounting(const std::vector<IdPair>& decided,
                                      const std::vector<IdPair>& truth,
                                      const std::vector<std::string>& wave1_entities) {
  std::unordered_map<std::string, std::string> decided_partner, truth_partner;
  for (const auto& [a, b] : decided) decided_partner.emplace(a, b);
  for (const auto& [a, b] : truth) truth_partner.emplace(a, b);

  PerEntityReport r;
  for (const auto& id : wave1_entities) {
    auto t = truth_partner.find(id);
    auto d = decided_partner.find(id);
    if (t != truth_partner.end()) {
      ++r.with_match;
      if (d != decided_partner.end() && d->second == t->second) ++r.correct_matches;
    } else {
      ++r.without_match;
      if (d == decided_partner.end()) ++r.correct_non_matches;
    }
  }
  r.correct_match_rate = r.with_match == 0
                             ? 0.0
                             : static_cast<double>(r.correct_matches) /
                                   static_cast<double>(r.with_match);
  r.correct_non_match_rate = r.without_match == 0
                                 ? 0.0
                                 : static_cast<double>(r.correct_non_matches) /
                                       static_cast<double>(r.without_match);
  return r;
}

}  // namespace hhlink
