#include "hhlink/wave.hpp"

#include <algorithm>
#include <unordered_set>

#include "hhlink/errors.hpp"

namespace hhlink {

const Household* Wave::find_household(const std::string& household_id) const {
  auto it = household_index_.find(household_id);
  return it == household_index_.end() ? nullptr : &households_[it->second];
}

std::optional<std::pair<std::uint32_t, std::uint32_t>> Wave::find_individual(
    const std::string& individual_id) const {
  auto it = individual_index_.find(individual_id);
  if (it == individual_index_.end()) return std::nullopt;
  return it->second;
}

Wave make_wave(std::string label, std::vector<Household> households,
               const AttributeSchema& schema) {
  Wave wave;
  wave.label_ = std::move(label);
  wave.households_ = std::move(households);
  const std::size_t K = schema.feature_count();
  for (std::uint32_t h = 0; h < wave.households_.size(); ++h) {
    const Household& hh = wave.households_[h];
    if (hh.members.empty())
      fail(ErrorCode::Data, "household " + hh.household_id + " has no members");
    if (!wave.household_index_.emplace(hh.household_id, h).second)
      fail(ErrorCode::Data, "duplicate household id: " + hh.household_id);
    for (std::uint32_t m = 0; m < hh.members.size(); ++m) {
      const Individual& ind = hh.members[m];
      if (ind.household_id != hh.household_id)
        fail(ErrorCode::Data, "individual " + ind.individual_id +
                                  " does not carry its household id");
      if (ind.values.size() != K)
        fail(ErrorCode::Data, "individual " + ind.individual_id + " has " +
                                  std::to_string(ind.values.size()) + " values, schema has " +
                                  std::to_string(K));
      for (std::size_t k = 0; k < K; ++k) {
        const Value& v = ind.values[k];
        if (schema.feature(k).kind == FeatureKind::Year && v.kind == Value::Kind::Year &&
            v.year <= 0)
          fail(ErrorCode::Data, "individual " + ind.individual_id +
                                    ": year value must be positive for " + schema.feature(k).name);
      }
      if (!wave.individual_index_.emplace(ind.individual_id, std::make_pair(h, m)).second)
        fail(ErrorCode::Data, "duplicate individual id: " + ind.individual_id);
    }
    wave.individual_count_ += hh.members.size();
  }
  return wave;
}

namespace {

void check_one_to_one(const std::vector<std::pair<std::string, std::string>>& pairs,
                      const char* what) {
  std::unordered_set<std::string> left, right;
  for (const auto& [a, b] : pairs) {
    if (!left.insert(a).second)
      fail(ErrorCode::Data, std::string(what) + " truth links " + a + " more than once");
    if (!right.insert(b).second)
      fail(ErrorCode::Data, std::string(what) + " truth links " + b + " more than once");
  }
}

}  // namespace

GroundTruth::GroundTruth(std::vector<std::pair<std::string, std::string>> household_pairs,
                         std::vector<std::pair<std::string, std::string>> individual_pairs)
    : household_pairs_(std::move(household_pairs)),
      individual_pairs_(std::move(individual_pairs)) {
  std::sort(household_pairs_.begin(), household_pairs_.end());
  std::sort(individual_pairs_.begin(), individual_pairs_.end());
  check_one_to_one(household_pairs_, "household");
  check_one_to_one(individual_pairs_, "individual");
  for (const auto& [a, b] : household_pairs_) household_forward_.emplace(a, b);
  for (const auto& [a, b] : individual_pairs_) individual_forward_.emplace(a, b);
}

const std::string* GroundTruth::household_partner(const std::string& id) const {
  auto it = household_forward_.find(id);
  return it == household_forward_.end() ? nullptr : &it->second;
}

const std::string* GroundTruth::individual_partner(const std::string& id) const {
  auto it = individual_forward_.find(id);
  return it == individual_forward_.end() ? nullptr : &it->second;
}

void validate_truth(const GroundTruth& truth, const Wave& wave1, const Wave& wave2) {
  std::unordered_map<std::string, std::string> hh_of_ind1, hh_of_ind2;
  for (const auto& hh : wave1.households())
    for (const auto& ind : hh.members) hh_of_ind1.emplace(ind.individual_id, hh.household_id);
  for (const auto& hh : wave2.households())
    for (const auto& ind : hh.members) hh_of_ind2.emplace(ind.individual_id, hh.household_id);

  for (const auto& [a, b] : truth.household_pairs()) {
    if (!wave1.find_household(a))
      fail(ErrorCode::Data, "truth household " + a + " not in wave " + wave1.label());
    if (!wave2.find_household(b))
      fail(ErrorCode::Data, "truth household " + b + " not in wave " + wave2.label());
  }
  for (const auto& [a, b] : truth.individual_pairs()) {
    auto it1 = hh_of_ind1.find(a);
    auto it2 = hh_of_ind2.find(b);
    if (it1 == hh_of_ind1.end())
      fail(ErrorCode::Data, "truth individual " + a + " not in wave " + wave1.label());
    if (it2 == hh_of_ind2.end())
      fail(ErrorCode::Data, "truth individual " + b + " not in wave " + wave2.label());
    const std::string* partner = truth.household_partner(it1->second);
    if (partner == nullptr || *partner != it2->second)
      fail(ErrorCode::Data, "truth individual pair (" + a + "," + b +
                                ") is not inside a truth household pair");
  }
}

}  // namespace hhlink
