#include "hhlink/schema.hpp"

#include <unordered_set>

#include "hhlink/errors.hpp"

namespace hhlink {

AttributeSchema::AttributeSchema(std::vector<FeatureSpec> features)
    : features_(std::move(features)) {
  if (features_.empty()) fail(ErrorCode::Config, "schema must have at least one feature");
  std::unordered_set<std::string> seen;
  for (const auto& f : features_) {
    if (f.name.empty()) fail(ErrorCode::Config, "schema feature names must be non-empty");
    if (!seen.insert(f.name).second)
      fail(ErrorCode::Config, "duplicate schema feature name: " + f.name);
  }
}

AttributeSchema AttributeSchema::survey_default() {
  return AttributeSchema({
      {"SEX", FeatureKind::Categorical},
      {"CIT", FeatureKind::Categorical},
      {"ANASC", FeatureKind::Year},
      {"STUDIO", FeatureKind::Categorical},
      {"NASCREG", FeatureKind::Categorical},
      {"NACE", FeatureKind::Categorical},
      {"IREG", FeatureKind::Categorical},
      {"QUAL", FeatureKind::Categorical},
  });
}

std::optional<std::size_t> AttributeSchema::index_of(std::string_view name) const {
  for (std::size_t k = 0; k < features_.size(); ++k)
    if (features_[k].name == name) return k;
  return std::nullopt;
}

}  // namespace hhlink
