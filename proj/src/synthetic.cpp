#include "hhlink/synthetic.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "hhlink/errors.hpp"
#include "hhlink/rng.hpp"

namespace hhlink {

namespace {

struct CategoryPool {
  std::vector<std::string> codes;
  std::vector<double> probs;
};

// Geometrically skewed category frequencies. Survey categoricals concentrate
// on a few dominant levels, which makes individual profiles collide across
// households while household compositions stay distinctive.
CategoryPool make_pool(const std::string& prefix, int n, double ratio) {
  CategoryPool pool;
  char buf[64];
  for (int i = 1; i <= n; ++i) {
    std::snprintf(buf, sizeof(buf), "%s%02d", prefix.c_str(), i);
    pool.codes.emplace_back(buf);
  }
  pool.probs.resize(pool.codes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pool.probs.size(); ++i) {
    pool.probs[i] = std::pow(ratio, static_cast<double>(i));
    total += pool.probs[i];
  }
  for (auto& p : pool.probs) p /= total;
  return pool;
}

struct Pools {
  std::vector<CategoryPool> categorical;  // per feature index (unused for years)
  int year_lo = 1930, year_hi = 2005;
};

Pools build_pools(const AttributeSchema& schema) {
  Pools pools;
  pools.categorical.resize(schema.feature_count());
  for (std::size_t k = 0; k < schema.feature_count(); ++k) {
    const FeatureSpec& f = schema.feature(k);
    if (f.kind == FeatureKind::Year) continue;
    if (f.name == "SEX") {
      pools.categorical[k] = {{"M", "F"}, {0.5, 0.5}};
    } else if (f.name == "CIT") {
      pools.categorical[k] = {{"IT", "OTHER"}, {0.93, 0.07}};
    } else if (f.name == "QUAL") {
      pools.categorical[k] = {{"blue_collar", "office_worker", "teacher", "manager",
                               "self_employed", "unemployed", "pensioner"},
                              {0.27, 0.23, 0.06, 0.04, 0.10, 0.08, 0.22}};
    } else if (f.name == "STUDIO") {
      pools.categorical[k] = make_pool("edu", 8, 0.62);
    } else if (f.name == "NASCREG") {
      pools.categorical[k] = make_pool("reg", 21, 0.76);
    } else if (f.name == "NACE") {
      pools.categorical[k] = make_pool("sec", 22, 0.74);
    } else if (f.name == "IREG") {
      pools.categorical[k] = make_pool("ireg", 20, 0.76);
    } else {
      pools.categorical[k] = make_pool(f.name + "_c", 10, 0.7);
    }
  }
  return pools;
}

std::string pad_id(const char* prefix, std::size_t n) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, n);
  return buf;
}

// Tracks household signatures so freshly generated households are never
// confusable with an existing one: same member categorical profiles with all
// member years inside the window the year increment could bridge. Without
// this, noiseless carry-forward recovery would depend on collision luck.
class SignatureRegistry {
 public:
  explicit SignatureRegistry(int window) : window_(window) {}

  // key: member categorical profiles (sorted); years: aligned member years.
  bool confusable(const std::string& key, const std::vector<int>& years) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return false;
    for (const auto& other : it->second) {
      bool close = true;
      for (std::size_t m = 0; m < years.size(); ++m) {
        if (std::abs(static_cast<long>(years[m]) - other[m]) > window_) {
          close = false;
          break;
        }
      }
      if (close) return true;
    }
    return false;
  }

  void add(const std::string& key, std::vector<int> years) {
    entries_[key].push_back(std::move(years));
  }

 private:
  int window_;
  std::unordered_map<std::string, std::vector<std::vector<int>>> entries_;
};

// A wave-2 household before ids are assigned.
struct PendingHousehold {
  std::vector<Individual> members;
  std::vector<std::size_t> retained_from;  // member index in the source household
  int source_household = -1;               // wave-1 household index, -1 if fresh
};

class Generator {
 public:
  Generator(const SyntheticConfig& config, const AttributeSchema& schema)
      : config_(config),
        schema_(schema),
        pools_(build_pools(schema)),
        rng_(config.seed),
        K_(schema.feature_count()) {
    flip_rates_ = config.attribute_flip_rates;
    if (flip_rates_.empty()) flip_rates_.assign(K_, 0.05);
    cit_k_ = schema.index_of("CIT");
    nascreg_k_ = schema.index_of("NASCREG");
    nace_k_ = schema.index_of("NACE");
    qual_k_ = schema.index_of("QUAL");
    ireg_k_ = schema.index_of("IREG");
  }

  Wave make_fresh_wave(const std::string& label, char digit) {
    std::vector<Household> hhs;
    hhs.reserve(config_.n_households);
    SignatureRegistry registry = make_registry();
    const std::string prefix = std::string("H") + digit + "-";
    for (int h = 0; h < config_.n_households; ++h)
      hhs.push_back(
          fresh_household(pad_id(prefix.c_str(), static_cast<std::size_t>(h) + 1), registry));
    return make_wave(label, std::move(hhs), schema_);
  }

  std::pair<Wave, GroundTruth> evolve(const Wave& base, const std::string& label, char digit) {
    const std::vector<Household>& src = base.households();

    std::vector<PendingHousehold> pending;
    pending.reserve(src.size());
    SignatureRegistry registry = make_registry();
    for (std::size_t h = 0; h < src.size(); ++h) {
      if (rng_.bernoulli(config_.carry_forward_rate)) {
        pending.push_back(carry_household(src[h], static_cast<int>(h)));
        Household carried_view;
        carried_view.members = pending.back().members;
        auto [key, years] = household_signature(carried_view);
        registry.add(key, std::move(years));
      }
    }
    const std::size_t carried = pending.size();
    for (std::size_t h = carried; h < src.size(); ++h) {
      PendingHousehold fresh;
      fresh.members = fresh_household("", registry).members;
      pending.push_back(std::move(fresh));
    }

    // Shuffle the new household order so carried households are not a
    // positional prefix, then assign final ids.
    std::vector<std::size_t> order(pending.size());
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order);

    const std::string prefix = std::string("H") + digit + "-";
    std::vector<Household> next;
    next.reserve(pending.size());
    std::vector<std::pair<std::string, std::string>> hh_truth, ind_truth;
    for (std::size_t slot = 0; slot < order.size(); ++slot) {
      PendingHousehold& p = pending[order[slot]];
      Household out;
      out.household_id = pad_id(prefix.c_str(), slot + 1);
      for (std::size_t m = 0; m < p.members.size(); ++m) {
        Individual ind = std::move(p.members[m]);
        ind.household_id = out.household_id;
        ind.individual_id = member_id(out.household_id, m);
        if (p.source_household >= 0 && m < p.retained_from.size()) {
          const Household& from = src[static_cast<std::size_t>(p.source_household)];
          ind_truth.emplace_back(from.members[p.retained_from[m]].individual_id,
                                 ind.individual_id);
        }
        out.members.push_back(std::move(ind));
      }
      if (p.source_household >= 0)
        hh_truth.emplace_back(src[static_cast<std::size_t>(p.source_household)].household_id,
                              out.household_id);
      next.push_back(std::move(out));
    }

    return {make_wave(label, std::move(next), schema_),
            GroundTruth(std::move(hh_truth), std::move(ind_truth))};
  }

 private:
  // "H1-000007" -> "P1-000007-03"
  static std::string member_id(const std::string& household_id, std::size_t m) {
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "-%02zu", m + 1);
    std::string id = household_id + suffix;
    id[0] = 'P';
    return id;
  }

  Value draw_value(std::size_t k) {
    if (schema_.feature(k).kind == FeatureKind::Year)
      return Value::of_year(rng_.uniform_int(pools_.year_lo, pools_.year_hi));
    const CategoryPool& pool = pools_.categorical[k];
    return Value::of_category(pool.codes[rng_.categorical(pool.probs)]);
  }

  Value redraw_category(std::size_t k, const Value& current) {
    const CategoryPool& pool = pools_.categorical[k];
    if (pool.codes.size() < 2) return current;
    for (;;) {
      Value v = draw_value(k);
      if (!(v == current)) return v;
    }
  }

  // The survey's systematic missingness: region of birth is absent for
  // non-citizens; the activity sector is absent for out-of-work statuses.
  void apply_structural_missing(Individual& ind) {
    if (cit_k_ && nascreg_k_) {
      const Value& cit = ind.values[*cit_k_];
      if (cit.kind == Value::Kind::Category && cit.category == "OTHER") {
        ind.values[*nascreg_k_] = Value::missing();
      } else if (ind.values[*nascreg_k_].is_missing()) {
        ind.values[*nascreg_k_] = draw_value(*nascreg_k_);
      }
    }
    if (qual_k_ && nace_k_) {
      const Value& qual = ind.values[*qual_k_];
      const bool no_sector = qual.kind == Value::Kind::Category &&
                             (qual.category == "unemployed" || qual.category == "pensioner");
      if (no_sector) {
        ind.values[*nace_k_] = Value::missing();
      } else if (ind.values[*nace_k_].is_missing()) {
        ind.values[*nace_k_] = draw_value(*nace_k_);
      }
    }
  }

  Individual fresh_member(const Value* household_region) {
    Individual ind;
    ind.values.resize(K_);
    for (std::size_t k = 0; k < K_; ++k) {
      if (ireg_k_ && k == *ireg_k_ && household_region != nullptr) {
        ind.values[k] = *household_region;
      } else {
        ind.values[k] = draw_value(k);
      }
    }
    apply_structural_missing(ind);
    return ind;
  }

  Household fresh_household_once(const std::string& household_id) {
    Household hh;
    hh.household_id = household_id;
    const std::size_t size = 1 + rng_.categorical(config_.household_size_distribution);
    Value region;
    const Value* region_ptr = nullptr;
    if (ireg_k_) {
      region = draw_value(*ireg_k_);
      region_ptr = &region;
    }
    for (std::size_t m = 0; m < size; ++m) {
      Individual ind = fresh_member(region_ptr);
      ind.household_id = household_id;
      if (!household_id.empty()) ind.individual_id = member_id(household_id, m);
      hh.members.push_back(std::move(ind));
    }
    return hh;
  }

  // Member categorical profiles (sorted) plus aligned years. Sorting members
  // by (profile, year) aligns equal-profile members optimally for the
  // confusability window check.
  std::pair<std::string, std::vector<int>> household_signature(const Household& hh) const {
    std::vector<std::pair<std::string, int>> members;
    for (const Individual& ind : hh.members) {
      std::string cats;
      int year = INT_MIN;
      for (std::size_t k = 0; k < K_; ++k) {
        const Value& v = ind.values[k];
        if (schema_.feature(k).kind == FeatureKind::Year) {
          if (v.kind == Value::Kind::Year) year = v.year;
        } else {
          cats += v.kind == Value::Kind::Category ? v.category : std::string("\x01");
          cats += '\x1f';
        }
      }
      members.emplace_back(std::move(cats), year);
    }
    std::sort(members.begin(), members.end());
    std::string key;
    std::vector<int> years;
    for (auto& [cats, year] : members) {
      key += cats;
      key += '\x1e';
      years.push_back(year);
    }
    return {std::move(key), std::move(years)};
  }

  Household fresh_household(const std::string& household_id, SignatureRegistry& registry) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      Household hh = fresh_household_once(household_id);
      auto [key, years] = household_signature(hh);
      if (!registry.confusable(key, years)) {
        registry.add(key, std::move(years));
        return hh;
      }
    }
    // Tiny value spaces (custom schemas) may not admit distinct households;
    // accept the collision rather than loop forever.
    Household hh = fresh_household_once(household_id);
    auto [key, years] = household_signature(hh);
    registry.add(key, std::move(years));
    return hh;
  }

  SignatureRegistry make_registry() const {
    return SignatureRegistry(2 * std::max(config_.age_increment, 1) + 2);
  }

  PendingHousehold carry_household(const Household& src, int source_index) {
    PendingHousehold out;
    out.source_household = source_index;

    std::vector<std::size_t> retained;
    for (std::size_t m = 0; m < src.members.size(); ++m)
      if (!rng_.bernoulli(config_.member_leave_rate)) retained.push_back(m);
    if (retained.empty()) retained.push_back(0);  // households stay non-empty

    // Region of residence is household-constant: one flip draw per household.
    Value new_region;
    bool region_flipped = false;
    if (ireg_k_ && rng_.bernoulli(flip_rates_[*ireg_k_])) {
      new_region = redraw_category(*ireg_k_, src.members[retained[0]].values[*ireg_k_]);
      region_flipped = true;
    }

    for (std::size_t m : retained) {
      Individual ind = src.members[m];
      ind.individual_id.clear();
      ind.household_id.clear();
      for (std::size_t k = 0; k < K_; ++k) {
        if (schema_.feature(k).kind == FeatureKind::Year) {
          if (ind.values[k].kind == Value::Kind::Year)
            ind.values[k].year += config_.age_increment;
          if (rng_.bernoulli(flip_rates_[k]) && ind.values[k].kind == Value::Kind::Year) {
            const int shift = 1 + static_cast<int>(rng_.next_below(3));
            ind.values[k].year += rng_.bernoulli(0.5) ? shift : -shift;
          }
        } else if (ireg_k_ && k == *ireg_k_) {
          if (region_flipped) ind.values[k] = new_region;
        } else if (rng_.bernoulli(flip_rates_[k])) {
          if (ind.values[k].kind == Value::Kind::Category)
            ind.values[k] = redraw_category(k, ind.values[k]);
        }
      }
      apply_structural_missing(ind);
      out.members.push_back(std::move(ind));
      out.retained_from.push_back(m);
    }

    if (rng_.bernoulli(config_.member_join_rate)) {
      const Value* region_ptr = nullptr;
      Value region;
      if (ireg_k_) {
        region = out.members[0].values[*ireg_k_];
        region_ptr = &region;
      }
      out.members.push_back(fresh_member(region_ptr));  // no truth pair
    }
    return out;
  }

  const SyntheticConfig& config_;
  const AttributeSchema& schema_;
  Pools pools_;
  Rng rng_;
  std::size_t K_;
  std::vector<double> flip_rates_;
  std::optional<std::size_t> cit_k_, nascreg_k_, nace_k_, qual_k_, ireg_k_;
};

}  // namespace

void validate_config(const SyntheticConfig& config, const AttributeSchema& schema) {
  if (config.n_households < 1)
    fail(ErrorCode::Config, "n_households must be at least 1");
  if (config.household_size_distribution.empty())
    fail(ErrorCode::Config, "household_size_distribution must be non-empty");
  double total = 0.0;
  for (double p : config.household_size_distribution) {
    if (p < 0.0 || p > 1.0)
      fail(ErrorCode::Config, "household size probabilities must be in [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    fail(ErrorCode::Config, "household_size_distribution must sum to 1");
  auto check_rate = [](double r, const char* name) {
    if (r < 0.0 || r > 1.0) fail(ErrorCode::Config, std::string(name) + " must be in [0,1]");
  };
  check_rate(config.carry_forward_rate, "carry_forward_rate");
  check_rate(config.member_leave_rate, "member_leave_rate");
  check_rate(config.member_join_rate, "member_join_rate");
  if (!config.attribute_flip_rates.empty()) {
    if (config.attribute_flip_rates.size() != schema.feature_count())
      fail(ErrorCode::Config, "attribute_flip_rates must have one entry per feature");
    for (double r : config.attribute_flip_rates) check_rate(r, "attribute_flip_rates");
  }
  if (config.age_increment < 0)
    fail(ErrorCode::Config, "age_increment must be non-negative");
}

SyntheticData generate_synthetic(const SyntheticConfig& config, const AttributeSchema& schema) {
  validate_config(config, schema);
  Generator gen(config, schema);
  Wave wave1 = gen.make_fresh_wave("wave1", '1');
  auto [wave2, truth] = gen.evolve(wave1, "wave2", '2');
  return SyntheticData{std::move(wave1), std::move(wave2), std::move(truth)};
}

std::pair<Wave, GroundTruth> evolve_wave(const Wave& base, const SyntheticConfig& config,
                                         const AttributeSchema& schema,
                                         const std::string& new_label, char id_digit) {
  validate_config(config, schema);
  Generator gen(config, schema);
  return gen.evolve(base, new_label, id_digit);
}

}  // namespace hhlink
