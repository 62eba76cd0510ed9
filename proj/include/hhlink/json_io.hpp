#pragma once

#include <string>

#include <json.hpp>

#include "hhlink/household_model.hpp"
#include "hhlink/individual_model.hpp"

namespace hhlink {

nlohmann::json household_model_to_json(const HouseholdModel& model);
HouseholdModel household_model_from_json(const nlohmann::json& j);

nlohmann::json individual_model_to_json(const IndividualModel& model);
IndividualModel individual_model_from_json(const nlohmann::json& j);

void save_json(const nlohmann::json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

}  // namespace hhlink
