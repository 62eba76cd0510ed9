#pragma once

#include <string>

#include <json.hpp>

#include "hhlink/validation.hpp"

namespace hhlink {

nlohmann::json metric_report_to_json(const MetricReport& r);
nlohmann::json per_entity_to_json(const PerEntityReport& r);
nlohmann::json rank_histogram_to_json(const RankHistogram& r);
nlohmann::json side_report_to_json(const SideReport& r);
nlohmann::json fs_side_report_to_json(const FsSideReport& r);
nlohmann::json validation_summary_to_json(const ValidationSummary& s);
nlohmann::json external_report_to_json(const ExternalReport& r);
nlohmann::json comparison_to_json(const MethodComparison& c);

// Aligned-text tables. Percentages use two decimals.
std::string format_coefficient_table(const std::string& title, const NamedStats& stats);
std::string format_rank_table(const RankHistogram& train, const RankHistogram& test,
                              const std::string& left, const std::string& right);
std::string format_metric_pair_table(const std::string& title, const MetricReport& train,
                                     const MetricReport& test, const std::string& left,
                                     const std::string& right);
std::string format_per_entity_table(const PerEntityReport& train, const PerEntityReport& test,
                                    const std::string& left, const std::string& right);
std::string format_comparison_table(const MethodComparison& c);
std::string format_validation_summary(const ValidationSummary& s);

}  // namespace hhlink
