#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hhlink/schema.hpp"
#include "hhlink/wave.hpp"

namespace hhlink {

// Wave CSV: UTF-8, header `individual_id,household_id,<feature names...>`,
// empty cell = missing. Values must not contain commas, quotes or newlines.
Wave load_wave(const std::string& path, const AttributeSchema& schema,
               const std::string& wave_label);

void write_wave(const Wave& wave, const AttributeSchema& schema, const std::string& path);

// Truth pair CSV: header `id_wave1,id_wave2`.
std::vector<std::pair<std::string, std::string>> load_id_pairs(const std::string& path);
void write_id_pairs(const std::vector<std::pair<std::string, std::string>>& pairs,
                    const std::string& path);

GroundTruth load_truth(const std::string& household_path, const std::string& individual_path);

}  // namespace hhlink
