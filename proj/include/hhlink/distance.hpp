#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hhlink/schema.hpp"
#include "hhlink/wave.hpp"

namespace hhlink {

// Nonnegative per-feature weights for the linear combination of feature
// distances. year_scale divides year differences so they land near the 0..1
// range of the categorical distances.
struct FeatureWeights {
  std::vector<double> beta;
  double year_scale = 50.0;
};

void validate_weights(const FeatureWeights& w, const AttributeSchema& schema);

// Distance on feature k: categorical 0/1, year |a-b|/year_scale, and 1
// (maximum dissimilarity) whenever either side is missing.
double feature_distance(const Individual& a, const Individual& b, std::size_t k,
                        const AttributeSchema& schema, double year_scale);

// Weighted sum of the K feature distances. Terms are accumulated in a fixed
// canonical order (categorical features in schema order, then year features)
// so every code path in the toolkit produces bit-identical values.
double pair_distance(const Individual& a, const Individual& b, const FeatureWeights& w,
                     const AttributeSchema& schema);

struct DistanceMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;  // row-major
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

DistanceMatrix distance_matrix(const Household& hs, const Household& ht,
                               const FeatureWeights& w, const AttributeSchema& schema);

// Hausdorff distance: the larger of the two directed max-min distances.
double hausdorff(const Household& hs, const Household& ht, const FeatureWeights& w,
                 const AttributeSchema& schema);

struct HausdorffEntry {
  std::uint32_t s = 0, t = 0;  // household indices into wave1/wave2
  double delta = 0.0;
};

// Scores household pairs across two waves; all N1*N2 pairs without a block
// key, otherwise only pairs sharing a block value through any member. Output
// is s-major, t-ascending regardless of thread count.
std::vector<HausdorffEntry> all_pairs_hausdorff(const Wave& wave1, const Wave& wave2,
                                                const FeatureWeights& w,
                                                const AttributeSchema& schema,
                                                const std::optional<std::string>& block_key,
                                                int threads = 0);

}  // namespace hhlink
