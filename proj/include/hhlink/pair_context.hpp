#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hhlink/schema.hpp"
#include "hhlink/wave.hpp"

namespace hhlink {

// Encoded cross of two waves: category codes interned through a shared
// codebook, individuals flattened in household order, and (at desk scale) a
// per-member-pair cache of the categorical mismatch mask and year deltas.
// This is the hot path behind household-model fitting and prediction; its
// arithmetic matches pair_distance() bit for bit.
class PairContext {
 public:
  // Per-weight-vector evaluation tables. beta is in schema order.
  struct Weights {
    std::vector<double> mask_sum;   // subset sums over the mismatch mask (table path)
    std::vector<double> beta_cat;   // categorical weights, schema order
    std::vector<double> beta_year;  // year weights, schema order
    double year_scale = 0.0;
  };

  // Reusable per-thread buffers for hausdorff_pair.
  struct Scratch {
    std::vector<double> row_min, col_min;
    std::vector<std::uint32_t> row_arg, col_arg;
  };

  PairContext(const Wave& wave1, const Wave& wave2, const AttributeSchema& schema,
              double year_scale);

  const AttributeSchema& schema() const { return schema_; }
  double year_scale() const { return year_scale_; }

  std::size_t household_count1() const { return begin1_.size() - 1; }
  std::size_t household_count2() const { return begin2_.size() - 1; }
  std::size_t individual_count1() const { return n1_; }
  std::size_t individual_count2() const { return n2_; }

  std::uint32_t household_begin1(std::size_t s) const { return begin1_[s]; }
  std::uint32_t household_end1(std::size_t s) const { return begin1_[s + 1]; }
  std::uint32_t household_begin2(std::size_t t) const { return begin2_[t]; }
  std::uint32_t household_end2(std::size_t t) const { return begin2_[t + 1]; }

  const std::string& household_id1(std::size_t s) const;
  const std::string& household_id2(std::size_t t) const;
  const std::string& individual_id1(std::uint32_t i) const;
  const std::string& individual_id2(std::uint32_t j) const;

  Weights make_weights(std::span<const double> beta) const;

  // Weighted distance between wave-1 row i and wave-2 row j.
  double member_pair_distance(std::uint32_t i, std::uint32_t j, const Weights& w) const;

  // All K per-feature distances (schema order) for one member pair.
  void member_pair_feature_distances(std::uint32_t i, std::uint32_t j, double* out) const;

  struct HausdorffResult {
    double delta = 0.0;
    std::uint32_t attain_i = 0, attain_j = 0;  // pair attaining the max-min
  };

  // scratch is resized as needed; pass a per-thread instance.
  HausdorffResult hausdorff_pair(std::uint32_t s, std::uint32_t t, const Weights& w,
                                 Scratch& scratch) const;

  // Household pairs sharing the block feature's value through any member,
  // s-major then t-ascending. Missing values never share a block.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> blocked_household_pairs(
      std::size_t block_feature) const;

 private:
  static constexpr std::int32_t kMissing = INT32_MIN;
  static constexpr std::size_t kMaskTableMax = 12;      // table path if K_cat <= this
  static constexpr std::size_t kPairCacheLimit = 30'000'000;

  void encode_wave(const Wave& wave, std::vector<std::int32_t>& cat,
                   std::vector<std::int32_t>& year, std::vector<std::uint32_t>& begin,
                   std::vector<const std::string*>& ind_ids,
                   std::vector<const std::string*>& hh_ids,
                   std::vector<std::unordered_map<std::string, std::int32_t>>& codebook);

  void build_pair_cache();

  // Mask/deltas for one member pair, computed from the code matrices.
  inline std::uint32_t mask_of(std::uint32_t i, std::uint32_t j) const;
  inline std::uint16_t year_delta_of(std::uint32_t i, std::uint32_t j, std::size_t y) const;

  const AttributeSchema& schema_;
  double year_scale_;
  std::vector<std::size_t> cat_features_;   // schema indices of categorical features
  std::vector<std::size_t> year_features_;  // schema indices of year features

  std::size_t n1_ = 0, n2_ = 0;
  std::vector<std::int32_t> cat1_, cat2_;    // n x K_cat, row-major
  std::vector<std::int32_t> year1_, year2_;  // n x K_year, row-major
  std::vector<std::uint32_t> begin1_, begin2_;
  std::vector<const std::string*> ind_ids1_, ind_ids2_, hh_ids1_, hh_ids2_;

  // Pair cache (n1*n2 entries, j-major within i) when small enough.
  bool cache_enabled_ = false;
  std::vector<std::uint16_t> pair_mask_;
  std::vector<std::uint16_t> pair_year_;  // stride K_year; 0xFFFF = missing
};

}  // namespace hhlink
