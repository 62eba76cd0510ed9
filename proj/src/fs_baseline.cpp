#include "hhlink/fs_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "hhlink/distance.hpp"
#include "hhlink/errors.hpp"

namespace hhlink {

namespace {

constexpr double kProbFloor = 1e-9;  // keeps EM parameters off the boundary

// Individuals flattened with their block key (missing block value = no block).
struct BlockedIndividuals {
  std::vector<const Individual*> individuals;
  std::vector<std::string> block_of;  // empty string = excluded from blocking
};

BlockedIndividuals flatten(const Wave& wave, const std::vector<std::size_t>& block_features) {
  BlockedIndividuals out;
  for (const auto& hh : wave.households()) {
    for (const auto& ind : hh.members) {
      std::string key;
      bool usable = true;
      for (const std::size_t k : block_features) {
        const Value& v = ind.values[k];
        if (v.kind == Value::Kind::Category) {
          key += v.category;
          key += '\x1f';
        } else if (v.kind == Value::Kind::Year) {
          key += std::to_string(v.year);
          key += '\x1f';
        } else {
          usable = false;
          break;
        }
      }
      out.individuals.push_back(&ind);
      out.block_of.push_back(usable ? key : std::string());
    }
  }
  return out;
}

std::vector<std::size_t> resolve_block_features(const AttributeSchema& schema,
                                                const std::vector<std::string>& keys) {
  std::vector<std::size_t> features;
  for (const auto& name : keys) {
    const auto k = schema.index_of(name);
    if (!k) fail(ErrorCode::Config, "unknown blocking key: " + name);
    features.push_back(*k);
  }
  return features;
}

double pattern_prob(std::uint32_t pattern, const std::vector<double>& p) {
  double prob = 1.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    prob *= (pattern >> k & 1) ? p[k] : 1.0 - p[k];
  return prob;
}

}  // namespace

std::vector<std::uint8_t> agreement_pattern(const Individual& a, const Individual& b,
                                            const AttributeSchema& schema) {
  const std::size_t K = schema.feature_count();
  std::vector<std::uint8_t> pattern(K);
  for (std::size_t k = 0; k < K; ++k)
    pattern[k] = feature_distance(a, b, k, schema, 1.0) == 0.0 ? 1 : 0;
  return pattern;
}

PatternCounts blocked_pattern_counts(const Wave& wave1, const Wave& wave2,
                                     const AttributeSchema& schema,
                                     const std::vector<std::string>& blocking_keys) {
  const auto block_features = resolve_block_features(schema, blocking_keys);
  const BlockedIndividuals a = flatten(wave1, block_features);
  const BlockedIndividuals b = flatten(wave2, block_features);

  std::unordered_map<std::string, std::vector<std::size_t>> blocks2;
  for (std::size_t j = 0; j < b.individuals.size(); ++j)
    if (!b.block_of[j].empty()) blocks2[b.block_of[j]].push_back(j);

  const std::size_t K = schema.feature_count();
  if (K > 32) fail(ErrorCode::Config, "agreement patterns support at most 32 features");

  std::unordered_map<std::uint32_t, std::uint64_t> counter;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < a.individuals.size(); ++i) {
    if (a.block_of[i].empty()) continue;
    auto it = blocks2.find(a.block_of[i]);
    if (it == blocks2.end()) continue;
    for (const std::size_t j : it->second) {
      const auto bits = agreement_pattern(*a.individuals[i], *b.individuals[j], schema);
      std::uint32_t pattern = 0;
      for (std::size_t k = 0; k < K; ++k) pattern |= static_cast<std::uint32_t>(bits[k]) << k;
      ++counter[pattern];
      ++total;
    }
  }

  PatternCounts out;
  out.K = K;
  out.total_pairs = total;
  out.counts.assign(counter.begin(), counter.end());
  std::sort(out.counts.begin(), out.counts.end());
  return out;
}

FSModel fs_em_fit(const PatternCounts& patterns, const FSConfig& config) {
  if (patterns.counts.size() < 2)
    fail(ErrorCode::Data, "EM needs at least two distinct agreement patterns");
  const std::size_t K = patterns.K;

  FSModel model;
  model.m.assign(K, config.init_m);
  model.u.assign(K, config.init_u);
  model.pi = config.init_pi;
  model.threshold = config.threshold;
  model.blocking_keys = config.blocking_keys;

  const double total = static_cast<double>(patterns.total_pairs);
  for (int iter = 0; iter < config.max_iter; ++iter) {
    // E-step over distinct patterns.
    double ll = 0.0;
    double sum_w = 0.0;
    std::vector<double> m_num(K, 0.0), u_num(K, 0.0);
    for (const auto& [pattern, count] : patterns.counts) {
      const double c = static_cast<double>(count);
      const double pm = model.pi * pattern_prob(pattern, model.m);
      const double pu = (1.0 - model.pi) * pattern_prob(pattern, model.u);
      const double w = pm / (pm + pu);
      ll += c * std::log(pm + pu);
      sum_w += c * w;
      for (std::size_t k = 0; k < K; ++k) {
        if (pattern >> k & 1) {
          m_num[k] += c * w;
          u_num[k] += c * (1.0 - w);
        }
      }
    }
    model.log_likelihood_trace.push_back(ll);

    // M-step.
    double change = 0.0;
    const double new_pi = std::clamp(sum_w / total, kProbFloor, 1.0 - kProbFloor);
    change = std::abs(new_pi - model.pi);
    model.pi = new_pi;
    for (std::size_t k = 0; k < K; ++k) {
      const double nm =
          std::clamp(m_num[k] / std::max(sum_w, kProbFloor), kProbFloor, 1.0 - kProbFloor);
      const double nu = std::clamp(u_num[k] / std::max(total - sum_w, kProbFloor), kProbFloor,
                                   1.0 - kProbFloor);
      change = std::max({change, std::abs(nm - model.m[k]), std::abs(nu - model.u[k])});
      model.m[k] = nm;
      model.u[k] = nu;
    }
    model.iterations = iter + 1;
    if (change < config.tol) {
      model.converged = true;
      break;
    }
  }

  for (std::size_t k = 0; k < K; ++k)
    if (model.m[k] <= model.u[k]) model.orientation_warning = true;
  return model;
}

FSPrediction fs_predict(const Wave& wave1, const Wave& wave2, const FSModel& model,
                        const AttributeSchema& schema) {
  const auto block_features = resolve_block_features(schema, model.blocking_keys);
  const BlockedIndividuals a = flatten(wave1, block_features);
  const BlockedIndividuals b = flatten(wave2, block_features);

  std::unordered_map<std::string, std::vector<std::size_t>> blocks2;
  for (std::size_t j = 0; j < b.individuals.size(); ++j)
    if (!b.block_of[j].empty()) blocks2[b.block_of[j]].push_back(j);

  const std::size_t K = schema.feature_count();
  FSPrediction out;
  for (std::size_t i = 0; i < a.individuals.size(); ++i) {
    if (a.block_of[i].empty()) continue;
    auto it = blocks2.find(a.block_of[i]);
    if (it == blocks2.end()) continue;
    for (const std::size_t j : it->second) {
      ++out.scored_pairs;
      const auto bits = agreement_pattern(*a.individuals[i], *b.individuals[j], schema);
      std::uint32_t pattern = 0;
      for (std::size_t k = 0; k < K; ++k) pattern |= static_cast<std::uint32_t>(bits[k]) << k;
      const double pm = model.pi * pattern_prob(pattern, model.m);
      const double pu = (1.0 - model.pi) * pattern_prob(pattern, model.u);
      const double posterior = pm / (pm + pu);
      if (posterior >= model.threshold)
        out.decisions.push_back({a.individuals[i]->individual_id,
                                 b.individuals[j]->individual_id, posterior, false});
    }
  }

  // One-to-one greedy: descending posterior, ids break ties, claimed
  // individuals are skipped. Sorting first makes the outcome independent of
  // the pair evaluation order above.
  std::sort(out.decisions.begin(), out.decisions.end(), [](const auto& x, const auto& y) {
    if (x.posterior != y.posterior) return x.posterior > y.posterior;
    if (x.individual_id1 != y.individual_id1) return x.individual_id1 < y.individual_id1;
    return x.individual_id2 < y.individual_id2;
  });
  std::unordered_map<std::string, bool> used1, used2;
  for (auto& d : out.decisions) {
    if (used1[d.individual_id1] || used2[d.individual_id2]) continue;
    d.matched = true;
    used1[d.individual_id1] = true;
    used2[d.individual_id2] = true;
  }
  return out;
}

}  // namespace hhlink
