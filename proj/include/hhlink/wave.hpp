#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hhlink/schema.hpp"

namespace hhlink {

struct Individual {
  std::string individual_id;
  std::string household_id;
  std::vector<Value> values;  // exactly K entries, schema order
};

struct Household {
  std::string household_id;
  std::vector<Individual> members;  // non-empty
};

// One survey wave. Construct through make_wave so the invariants (unique
// household ids, unique individual ids, members carrying their household id,
// K values per record) hold for every instance in circulation.
class Wave {
 public:
  const std::string& label() const { return label_; }
  const std::vector<Household>& households() const { return households_; }
  std::size_t household_count() const { return households_.size(); }
  std::size_t individual_count() const { return individual_count_; }

  const Household* find_household(const std::string& household_id) const;
  // (household index, member index) for an individual id, or nullopt.
  std::optional<std::pair<std::uint32_t, std::uint32_t>> find_individual(
      const std::string& individual_id) const;

  friend Wave make_wave(std::string label, std::vector<Household> households,
                        const AttributeSchema& schema);

 private:
  std::string label_;
  std::vector<Household> households_;
  std::size_t individual_count_ = 0;
  std::unordered_map<std::string, std::uint32_t> household_index_;
  std::unordered_map<std::string, std::pair<std::uint32_t, std::uint32_t>> individual_index_;
};

Wave make_wave(std::string label, std::vector<Household> households,
               const AttributeSchema& schema);

// Truth links between two waves, one-to-one on both sides.
class GroundTruth {
 public:
  GroundTruth() = default;
  GroundTruth(std::vector<std::pair<std::string, std::string>> household_pairs,
              std::vector<std::pair<std::string, std::string>> individual_pairs);

  const std::vector<std::pair<std::string, std::string>>& household_pairs() const {
    return household_pairs_;
  }
  const std::vector<std::pair<std::string, std::string>>& individual_pairs() const {
    return individual_pairs_;
  }

  // Partner lookups; nullptr when the id has no truth link.
  const std::string* household_partner(const std::string& wave1_household_id) const;
  const std::string* individual_partner(const std::string& wave1_individual_id) const;

 private:
  std::vector<std::pair<std::string, std::string>> household_pairs_;   // sorted
  std::vector<std::pair<std::string, std::string>> individual_pairs_;  // sorted
  std::unordered_map<std::string, std::string> household_forward_;
  std::unordered_map<std::string, std::string> individual_forward_;
};

// Checks that truth ids exist in the waves and that every individual pair lies
// inside some truth household pair. Throws ErrorCode::Data on violation.
void validate_truth(const GroundTruth& truth, const Wave& wave1, const Wave& wave2);

}  // namespace hhlink
