#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hhlink {

enum class FeatureKind : std::uint8_t { Categorical, Year };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Categorical;
};

// Ordered feature list the matching runs on. The default is the eight-variable
// survey profile: sex, citizenship, birth year, education, region of birth,
// activity sector, region of residence, employment status.
class AttributeSchema {
 public:
  explicit AttributeSchema(std::vector<FeatureSpec> features);

  static AttributeSchema survey_default();

  std::size_t feature_count() const { return features_.size(); }
  const FeatureSpec& feature(std::size_t k) const { return features_[k]; }
  const std::vector<FeatureSpec>& features() const { return features_; }
  std::optional<std::size_t> index_of(std::string_view name) const;

 private:
  std::vector<FeatureSpec> features_;
};

// One cell of a record. MarMissing marks a value that stayed missing after the
// missing-data policy ran (missing at random); it compares at maximum
// dissimilarity everywhere.
struct Value {
  enum class Kind : std::uint8_t { Missing, MarMissing, Category, Year };

  Kind kind = Kind::Missing;
  std::string category;  // Kind::Category only
  int year = 0;          // Kind::Year only

  static Value missing() { return {}; }
  static Value mar_missing() { return {Kind::MarMissing, {}, 0}; }
  static Value of_category(std::string code) { return {Kind::Category, std::move(code), 0}; }
  static Value of_year(int y) { return {Kind::Year, {}, y}; }

  bool is_missing() const { return kind == Kind::Missing || kind == Kind::MarMissing; }
  bool operator==(const Value&) const = default;
};

}  // namespace hhlink
