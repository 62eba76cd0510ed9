#pragma once

#include <cstdint>
#include <vector>

#include "hhlink/schema.hpp"
#include "hhlink/wave.hpp"

namespace hhlink {

// Desk-scale two-wave population with known links. Households carry forward at
// carry_forward_rate with fresh second-wave ids; retained members keep their
// attributes up to per-feature flips and a uniform shift of the year feature;
// members leave/join between waves; non-carried households are replaced by fresh
// ones so both waves have n_households households.
struct SyntheticConfig {
  std::uint64_t seed = 1;
  int n_households = 500;
  // Probabilities for household sizes 1..len(vector).
  std::vector<double> household_size_distribution = {0.28, 0.34, 0.16, 0.12,
                                                     0.05, 0.03, 0.013, 0.007};
  double carry_forward_rate = 0.5;
  // Per-feature probability of a spurious value change between waves.
  // Empty means 0.05 for every feature.
  std::vector<double> attribute_flip_rates;
  double member_leave_rate = 0.1;
  double member_join_rate = 0.1;
  int age_increment = 2;
};

struct SyntheticData {
  Wave wave1;
  Wave wave2;
  GroundTruth truth;
};

void validate_config(const SyntheticConfig& config, const AttributeSchema& schema);

SyntheticData generate_synthetic(const SyntheticConfig& config,
                                 const AttributeSchema& schema = AttributeSchema::survey_default());

// Evolves an existing wave one survey period forward under the same churn
// model, producing the next wave plus links from `base` into it. n_households
// in the config is ignored; the new wave keeps the base household count.
// id_digit names the new wave's id space ("H<digit>-...", "P<digit>-...").
std::pair<Wave, GroundTruth> evolve_wave(const Wave& base, const SyntheticConfig& config,
                                         const AttributeSchema& schema,
                                         const std::string& new_label, char id_digit);

}  // namespace hhlink
