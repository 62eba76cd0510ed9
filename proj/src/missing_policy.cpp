#include "hhlink/missing_policy.hpp"

namespace hhlink {

Wave apply_missing_policy(const Wave& wave, const AttributeSchema& schema,
                          const MissingPolicy& policy, MissingPolicyStats* stats) {
  const auto region_k = schema.index_of(policy.region_of_birth_feature);
  const auto sector_k = schema.index_of(policy.sector_feature);
  const auto employment_k = schema.index_of(policy.employment_feature);

  MissingPolicyStats local;
  std::vector<Household> households = wave.households();
  for (auto& hh : households) {
    for (auto& ind : hh.members) {
      if (region_k && ind.values[*region_k].kind == Value::Kind::Missing) {
        ind.values[*region_k] = Value::of_category(policy.not_born_category);
        ++local.not_born_filled;
      }
      if (sector_k && employment_k && ind.values[*sector_k].kind == Value::Kind::Missing) {
        const Value& qual = ind.values[*employment_k];
        if (qual.kind == Value::Kind::Category &&
            policy.quals_without_sector.count(qual.category) > 0) {
          ind.values[*sector_k] = Value::of_category(policy.no_sector_category);
          ++local.no_sector_filled;
        }
      }
      for (auto& v : ind.values) {
        if (v.kind == Value::Kind::Missing) {
          v = Value::mar_missing();
          ++local.mar_flagged;
        }
      }
    }
  }
  if (stats != nullptr) *stats = local;
  return make_wave(wave.label(), std::move(households), schema);
}

}  // namespace hhlink
