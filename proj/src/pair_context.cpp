#include "hhlink/pair_context.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "hhlink/errors.hpp"

namespace hhlink {

PairContext::PairContext(const Wave& wave1, const Wave& wave2, const AttributeSchema& schema,
                         double year_scale)
    : schema_(schema), year_scale_(year_scale) {
  if (year_scale <= 0.0) fail(ErrorCode::Config, "year_scale must be positive");
  for (std::size_t k = 0; k < schema.feature_count(); ++k) {
    if (schema.feature(k).kind == FeatureKind::Year) year_features_.push_back(k);
    else cat_features_.push_back(k);
  }

  // One codebook shared by both waves so codes compare across them.
  std::vector<std::unordered_map<std::string, std::int32_t>> codebook(cat_features_.size());
  encode_wave(wave1, cat1_, year1_, begin1_, ind_ids1_, hh_ids1_, codebook);
  encode_wave(wave2, cat2_, year2_, begin2_, ind_ids2_, hh_ids2_, codebook);
  n1_ = ind_ids1_.size();
  n2_ = ind_ids2_.size();
  build_pair_cache();
}

void PairContext::encode_wave(const Wave& wave, std::vector<std::int32_t>& cat,
                              std::vector<std::int32_t>& year,
                              std::vector<std::uint32_t>& begin,
                              std::vector<const std::string*>& ind_ids,
                              std::vector<const std::string*>& hh_ids,
                              std::vector<std::unordered_map<std::string, std::int32_t>>& codebook) {
  const std::size_t kc = cat_features_.size();
  const std::size_t ky = year_features_.size();
  cat.reserve(wave.individual_count() * kc);
  year.reserve(wave.individual_count() * ky);
  begin.reserve(wave.household_count() + 1);
  begin.push_back(0);
  for (const Household& hh : wave.households()) {
    hh_ids.push_back(&hh.household_id);
    for (const Individual& ind : hh.members) {
      ind_ids.push_back(&ind.individual_id);
      for (std::size_t c = 0; c < kc; ++c) {
        const Value& v = ind.values[cat_features_[c]];
        if (v.kind == Value::Kind::Category) {
          auto [it, inserted] = codebook[c].emplace(
              v.category, static_cast<std::int32_t>(codebook[c].size()));
          cat.push_back(it->second);
        } else {
          cat.push_back(kMissing);  // both missing kinds: maximum dissimilarity
        }
      }
      for (std::size_t y = 0; y < ky; ++y) {
        const Value& v = ind.values[year_features_[y]];
        year.push_back(v.kind == Value::Kind::Year ? v.year : kMissing);
      }
    }
    begin.push_back(static_cast<std::uint32_t>(ind_ids.size()));
  }
}

std::uint32_t PairContext::mask_of(std::uint32_t i, std::uint32_t j) const {
  const std::size_t kc = cat_features_.size();
  const std::int32_t* a = cat1_.data() + static_cast<std::size_t>(i) * kc;
  const std::int32_t* b = cat2_.data() + static_cast<std::size_t>(j) * kc;
  std::uint32_t mask = 0;
  for (std::size_t c = 0; c < kc; ++c) {
    // Differing codes or any missing side count as a mismatch.
    if (a[c] != b[c] || a[c] == kMissing) mask |= (1u << c);
  }
  return mask;
}

std::uint16_t PairContext::year_delta_of(std::uint32_t i, std::uint32_t j, std::size_t y) const {
  const std::size_t ky = year_features_.size();
  const std::int32_t a = year1_[static_cast<std::size_t>(i) * ky + y];
  const std::int32_t b = year2_[static_cast<std::size_t>(j) * ky + y];
  if (a == kMissing || b == kMissing) return 0xFFFF;
  const std::int64_t d = std::llabs(static_cast<std::int64_t>(a) - b);
  return static_cast<std::uint16_t>(std::min<std::int64_t>(d, 0xFFFE));
}

void PairContext::build_pair_cache() {
  const std::size_t pairs = n1_ * n2_;
  if (pairs == 0 || pairs > kPairCacheLimit || cat_features_.size() > 16) return;
  const std::size_t ky = year_features_.size();
  pair_mask_.resize(pairs);
  pair_year_.resize(pairs * ky);
  for (std::uint32_t i = 0; i < n1_; ++i) {
    for (std::uint32_t j = 0; j < n2_; ++j) {
      const std::size_t p = static_cast<std::size_t>(i) * n2_ + j;
      pair_mask_[p] = static_cast<std::uint16_t>(mask_of(i, j));
      for (std::size_t y = 0; y < ky; ++y) pair_year_[p * ky + y] = year_delta_of(i, j, y);
    }
  }
  cache_enabled_ = true;
}

PairContext::Weights PairContext::make_weights(std::span<const double> beta) const {
  if (beta.size() != schema_.feature_count())
    fail(ErrorCode::Config, "weight vector length does not match schema");
  Weights w;
  w.year_scale = year_scale_;
  w.beta_cat.reserve(cat_features_.size());
  for (std::size_t k : cat_features_) w.beta_cat.push_back(beta[k]);
  w.beta_year.reserve(year_features_.size());
  for (std::size_t k : year_features_) w.beta_year.push_back(beta[k]);
  if (cat_features_.size() <= kMaskTableMax) {
    // mask_sum[m] accumulates set-bit weights in ascending bit order, matching
    // the sequential loop bit for bit.
    w.mask_sum.resize(std::size_t{1} << cat_features_.size());
    w.mask_sum[0] = 0.0;
    for (std::size_t m = 1; m < w.mask_sum.size(); ++m) {
      const int high = std::bit_width(m) - 1;
      w.mask_sum[m] = w.mask_sum[m ^ (std::size_t{1} << high)] + w.beta_cat[high];
    }
  }
  return w;
}

double PairContext::member_pair_distance(std::uint32_t i, std::uint32_t j,
                                         const Weights& w) const {
  const std::size_t ky = year_features_.size();
  const std::size_t p = static_cast<std::size_t>(i) * n2_ + j;
  const std::uint32_t mask = cache_enabled_ ? pair_mask_[p] : mask_of(i, j);
  double sum;
  if (!w.mask_sum.empty()) {
    sum = w.mask_sum[mask];
  } else {
    sum = 0.0;
    for (std::size_t c = 0; c < w.beta_cat.size(); ++c)
      if (mask & (1u << c)) sum += w.beta_cat[c];
  }
  for (std::size_t y = 0; y < ky; ++y) {
    const std::uint16_t d = cache_enabled_ ? pair_year_[p * ky + y] : year_delta_of(i, j, y);
    sum += w.beta_year[y] * (d == 0xFFFF ? 1.0 : static_cast<double>(d) / w.year_scale);
  }
  return sum;
}

void PairContext::member_pair_feature_distances(std::uint32_t i, std::uint32_t j,
                                                double* out) const {
  const std::uint32_t mask = cache_enabled_
                                 ? pair_mask_[static_cast<std::size_t>(i) * n2_ + j]
                                 : mask_of(i, j);
  for (std::size_t c = 0; c < cat_features_.size(); ++c)
    out[cat_features_[c]] = (mask & (1u << c)) ? 1.0 : 0.0;
  const std::size_t ky = year_features_.size();
  for (std::size_t y = 0; y < ky; ++y) {
    const std::uint16_t d = cache_enabled_
                                ? pair_year_[(static_cast<std::size_t>(i) * n2_ + j) * ky + y]
                                : year_delta_of(i, j, y);
    out[year_features_[y]] = d == 0xFFFF ? 1.0 : static_cast<double>(d) / year_scale_;
  }
}

PairContext::HausdorffResult PairContext::hausdorff_pair(std::uint32_t s, std::uint32_t t,
                                                         const Weights& w,
                                                         Scratch& scratch) const {
  const std::uint32_t ib = begin1_[s], ie = begin1_[s + 1];
  const std::uint32_t jb = begin2_[t], je = begin2_[t + 1];
  const std::size_t ns = ie - ib, nt = je - jb;
  if (ns == 0 || nt == 0) fail(ErrorCode::Data, "hausdorff on empty household");

  constexpr double inf = std::numeric_limits<double>::infinity();
  scratch.row_min.assign(ns, inf);
  scratch.col_min.assign(nt, inf);
  scratch.row_arg.assign(ns, 0);
  scratch.col_arg.assign(nt, 0);

  for (std::uint32_t i = ib; i < ie; ++i) {
    for (std::uint32_t j = jb; j < je; ++j) {
      const double d = member_pair_distance(i, j, w);
      const std::size_t ri = i - ib, cj = j - jb;
      if (d < scratch.row_min[ri]) {  // strict: first attaining j wins ties
        scratch.row_min[ri] = d;
        scratch.row_arg[ri] = j;
      }
      if (d < scratch.col_min[cj]) {
        scratch.col_min[cj] = d;
        scratch.col_arg[cj] = i;
      }
    }
  }

  double a = -inf, b = -inf;
  std::size_t a_row = 0, b_col = 0;
  for (std::size_t ri = 0; ri < ns; ++ri) {
    if (scratch.row_min[ri] > a) {
      a = scratch.row_min[ri];
      a_row = ri;
    }
  }
  for (std::size_t cj = 0; cj < nt; ++cj) {
    if (scratch.col_min[cj] > b) {
      b = scratch.col_min[cj];
      b_col = cj;
    }
  }

  HausdorffResult r;
  if (a >= b) {  // forward direction wins ties
    r.delta = a;
    r.attain_i = static_cast<std::uint32_t>(ib + a_row);
    r.attain_j = scratch.row_arg[a_row];
  } else {
    r.delta = b;
    r.attain_i = scratch.col_arg[b_col];
    r.attain_j = static_cast<std::uint32_t>(jb + b_col);
  }
  return r;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> PairContext::blocked_household_pairs(
    std::size_t block_feature) const {
  const bool is_year = schema_.feature(block_feature).kind == FeatureKind::Year;
  std::size_t col = 0;
  const auto& list = is_year ? year_features_ : cat_features_;
  for (std::size_t idx = 0; idx < list.size(); ++idx)
    if (list[idx] == block_feature) col = idx;
  const std::size_t stride = list.size();
  const auto& codes1 = is_year ? year1_ : cat1_;
  const auto& codes2 = is_year ? year2_ : cat2_;

  // Block value -> wave-2 households containing it.
  std::unordered_map<std::int32_t, std::vector<std::uint32_t>> index2;
  for (std::uint32_t t = 0; t + 1 < begin2_.size(); ++t) {
    for (std::uint32_t j = begin2_[t]; j < begin2_[t + 1]; ++j) {
      const std::int32_t v = codes2[static_cast<std::size_t>(j) * stride + col];
      if (v == kMissing) continue;
      auto& vec = index2[v];
      if (vec.empty() || vec.back() != t) vec.push_back(t);
    }
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t s = 0; s + 1 < begin1_.size(); ++s) {
    candidates.clear();
    for (std::uint32_t i = begin1_[s]; i < begin1_[s + 1]; ++i) {
      const std::int32_t v = codes1[static_cast<std::size_t>(i) * stride + col];
      if (v == kMissing) continue;
      auto it = index2.find(v);
      if (it != index2.end())
        candidates.insert(candidates.end(), it->second.begin(), it->second.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (std::uint32_t t : candidates) out.emplace_back(s, t);
  }
  return out;
}

const std::string& PairContext::household_id1(std::size_t s) const { return *hh_ids1_[s]; }
const std::string& PairContext::household_id2(std::size_t t) const { return *hh_ids2_[t]; }
const std::string& PairContext::individual_id1(std::uint32_t i) const { return *ind_ids1_[i]; }
const std::string& PairContext::individual_id2(std::uint32_t j) const { return *ind_ids2_[j]; }

}  // namespace hhlink
