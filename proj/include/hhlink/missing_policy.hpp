#pragma once

#include <string>
#include <unordered_set>

#include "hhlink/schema.hpp"
#include "hhlink/wave.hpp"

namespace hhlink {

// Missing-data policy: a missing region of birth means "not born in Italy" and
// becomes a synthetic category; a missing activity sector is explained by an
// out-of-work employment status and becomes a synthetic category; anything
// still missing afterwards is flagged missing-at-random and later compares at
// maximum dissimilarity.
struct MissingPolicy {
  std::string region_of_birth_feature = "NASCREG";
  std::string sector_feature = "NACE";
  std::string employment_feature = "QUAL";
  std::string not_born_category = "NOT_BORN_IN_ITALY";
  std::string no_sector_category = "NOT_EMPLOYED_SECTOR";
  // Employment codes that explain a missing sector. Configurable because the
  // survey codebook, not this toolkit, defines which codes mean out-of-work.
  std::unordered_set<std::string> quals_without_sector = {"unemployed", "pensioner"};
};

struct MissingPolicyStats {
  std::size_t not_born_filled = 0;
  std::size_t no_sector_filled = 0;
  std::size_t mar_flagged = 0;
};

// Total: never fails. Features absent from the schema are skipped.
Wave apply_missing_policy(const Wave& wave, const AttributeSchema& schema,
                          const MissingPolicy& policy = MissingPolicy{},
                          MissingPolicyStats* stats = nullptr);

}  // namespace hhlink
