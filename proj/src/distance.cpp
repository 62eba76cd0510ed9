#include "hhlink/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hhlink/errors.hpp"
#include "hhlink/pair_context.hpp"
#include "hhlink/parallel.hpp"

namespace hhlink {

void validate_weights(const FeatureWeights& w, const AttributeSchema& schema) {
  if (w.beta.size() != schema.feature_count())
    fail(ErrorCode::Config, "weights must have one entry per schema feature");
  for (double b : w.beta)
    if (!(b >= 0.0)) fail(ErrorCode::Config, "feature weights must be non-negative");
  if (!(w.year_scale > 0.0)) fail(ErrorCode::Config, "year_scale must be positive");
}

double feature_distance(const Individual& a, const Individual& b, std::size_t k,
                        const AttributeSchema& schema, double year_scale) {
  if (k >= schema.feature_count()) fail(ErrorCode::Config, "feature index out of range");
  const Value& va = a.values[k];
  const Value& vb = b.values[k];
  if (va.is_missing() || vb.is_missing()) return 1.0;  // maximum dissimilarity
  if (schema.feature(k).kind == FeatureKind::Year)
    return std::abs(static_cast<double>(va.year) - static_cast<double>(vb.year)) / year_scale;
  return va.category == vb.category ? 0.0 : 1.0;
}

double pair_distance(const Individual& a, const Individual& b, const FeatureWeights& w,
                     const AttributeSchema& schema) {
  validate_weights(w, schema);
  // Canonical accumulation order (categoricals, then years) shared with the
  // encoded fast path, so both produce bit-identical sums.
  double sum = 0.0;
  for (std::size_t k = 0; k < schema.feature_count(); ++k)
    if (schema.feature(k).kind == FeatureKind::Categorical)
      sum += w.beta[k] * feature_distance(a, b, k, schema, w.year_scale);
  for (std::size_t k = 0; k < schema.feature_count(); ++k)
    if (schema.feature(k).kind == FeatureKind::Year)
      sum += w.beta[k] * feature_distance(a, b, k, schema, w.year_scale);
  return sum;
}

DistanceMatrix distance_matrix(const Household& hs, const Household& ht,
                               const FeatureWeights& w, const AttributeSchema& schema) {
  if (hs.members.empty() || ht.members.empty())
    fail(ErrorCode::Data, "distance_matrix on empty household");
  DistanceMatrix m;
  m.rows = hs.members.size();
  m.cols = ht.members.size();
  m.values.reserve(m.rows * m.cols);
  for (const Individual& a : hs.members)
    for (const Individual& b : ht.members)
      m.values.push_back(pair_distance(a, b, w, schema));
  return m;
}

double hausdorff(const Household& hs, const Household& ht, const FeatureWeights& w,
                 const AttributeSchema& schema) {
  const DistanceMatrix m = distance_matrix(hs, ht, w, schema);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double forward = -inf;
  for (std::size_t i = 0; i < m.rows; ++i) {
    double best = inf;
    for (std::size_t j = 0; j < m.cols; ++j) best = std::min(best, m.at(i, j));
    forward = std::max(forward, best);
  }
  double backward = -inf;
  for (std::size_t j = 0; j < m.cols; ++j) {
    double best = inf;
    for (std::size_t i = 0; i < m.rows; ++i) best = std::min(best, m.at(i, j));
    backward = std::max(backward, best);
  }
  return std::max(forward, backward);
}

std::vector<HausdorffEntry> all_pairs_hausdorff(const Wave& wave1, const Wave& wave2,
                                                const FeatureWeights& w,
                                                const AttributeSchema& schema,
                                                const std::optional<std::string>& block_key,
                                                int threads) {
  validate_weights(w, schema);
  PairContext ctx(wave1, wave2, schema, w.year_scale);
  const PairContext::Weights cw = ctx.make_weights(w.beta);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  if (block_key) {
    const auto k = schema.index_of(*block_key);
    if (!k) fail(ErrorCode::Config, "unknown block key: " + *block_key);
    pairs = ctx.blocked_household_pairs(*k);
  } else {
    const std::size_t N1 = ctx.household_count1(), N2 = ctx.household_count2();
    pairs.reserve(N1 * N2);
    for (std::uint32_t s = 0; s < N1; ++s)
      for (std::uint32_t t = 0; t < N2; ++t) pairs.emplace_back(s, t);
  }

  std::vector<HausdorffEntry> out(pairs.size());
  constexpr std::size_t kChunk = 4096;
  parallel_chunks(pairs.size(), kChunk, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    PairContext::Scratch scratch;
    for (std::size_t p = lo; p < hi; ++p) {
      const auto [s, t] = pairs[p];
      out[p] = HausdorffEntry{s, t, ctx.hausdorff_pair(s, t, cw, scratch).delta};
    }
  });
  return out;
}

}  // namespace hhlink
