#include "hhlink/reports.hpp"

#include <cstdio>
#include <sstream>
#include <vector>

namespace hhlink {

namespace {

std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string pct(double v) { return fixed(100.0 * v, 2); }

// Right-aligned simple table writer.
class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

  std::string str() const {
    std::vector<std::size_t> width;
    for (const auto& row : rows_) {
      if (width.size() < row.size()) width.resize(row.size(), 0);
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    for (const auto& row : rows_) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c > 0) out << "  ";
        const bool left = c == 0;
        const std::size_t pad = width[c] - row[c].size();
        if (!left) out << std::string(pad, ' ');
        out << row[c];
        if (left) out << std::string(pad, ' ');
      }
      out << '\n';
    }
    return out.str();
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

nlohmann::json stats_to_json(const NamedStats& stats) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, s] : stats) j[name] = {{"mean", s.mean}, {"stddev", s.stddev}};
  return j;
}

}  // namespace

nlohmann::json metric_report_to_json(const MetricReport& r) {
  return {{"f1", r.f1},
          {"fpr", r.fpr},
          {"fnr", r.fnr},
          {"ppv", r.ppv},
          {"recall", r.recall},
          {"counts",
           {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}}},
          {"universe", r.universe},
          {"divide_by_zero", r.divide_by_zero}};
}

nlohmann::json per_entity_to_json(const PerEntityReport& r) {
  return {{"with_match", r.with_match},
          {"correct_matches", r.correct_matches},
          {"correct_match_rate", r.correct_match_rate},
          {"without_match", r.without_match},
          {"correct_non_matches", r.correct_non_matches},
          {"correct_non_match_rate", r.correct_non_match_rate}};
}

nlohmann::json rank_histogram_to_json(const RankHistogram& r) {
  const auto shares = r.shares();
  return {{"counts", {r.counts[0], r.counts[1], r.counts[2], r.counts[3], r.counts[4]}},
          {"shares", {shares[0], shares[1], shares[2], shares[3], shares[4]}},
          {"total", r.total}};
}

nlohmann::json side_report_to_json(const SideReport& r) {
  return {{"household", metric_report_to_json(r.household)},
          {"household_ranks", rank_histogram_to_json(r.household_ranks)},
          {"household_entities", per_entity_to_json(r.household_entities)},
          {"individual_within", metric_report_to_json(r.individual_within)},
          {"individual_global", metric_report_to_json(r.individual_global)},
          {"individual_entities", per_entity_to_json(r.individual_entities)},
          {"candidate_pairs", r.candidate_pairs},
          {"matched_households", r.matched_households},
          {"matched_individuals", r.matched_individuals},
          {"tau", r.tau}};
}

nlohmann::json fs_side_report_to_json(const FsSideReport& r) {
  return {{"individual_blocked", metric_report_to_json(r.individual_blocked)},
          {"individual_global", metric_report_to_json(r.individual_global)},
          {"individual_entities", per_entity_to_json(r.individual_entities)},
          {"scored_pairs", r.scored_pairs},
          {"matched_individuals", r.matched_individuals}};
}

nlohmann::json validation_summary_to_json(const ValidationSummary& s) {
  nlohmann::json repeats = nlohmann::json::array();
  for (const auto& rep : s.repeats)
    repeats.push_back({{"train", side_report_to_json(rep.train)},
                       {"test", side_report_to_json(rep.test)},
                       {"tau", rep.household_model.tau},
                       {"household_beta0", rep.household_model.beta0},
                       {"household_beta", rep.household_model.weights.beta},
                       {"individual_alpha0", rep.individual_model.alpha0},
                       {"individual_alpha", rep.individual_model.alpha},
                       {"individual_lambda", rep.individual_model.lambda}});
  return {{"repeats", repeats},
          {"train_metrics", stats_to_json(s.train_metrics)},
          {"test_metrics", stats_to_json(s.test_metrics)},
          {"household_coefficients", stats_to_json(s.household_coefficients)},
          {"individual_coefficients", stats_to_json(s.individual_coefficients)},
          {"tau", {{"mean", s.tau.mean}, {"stddev", s.tau.stddev}}}};
}

nlohmann::json external_report_to_json(const ExternalReport& r) {
  return {{"train", side_report_to_json(r.train)},
          {"test", side_report_to_json(r.test)},
          {"household_beta0", r.models.household.beta0},
          {"household_beta", r.models.household.weights.beta},
          {"tau", r.models.household.tau},
          {"individual_alpha0", r.models.individual.alpha0},
          {"individual_alpha", r.models.individual.alpha},
          {"individual_lambda", r.models.individual.lambda}};
}

nlohmann::json comparison_to_json(const MethodComparison& c) {
  return {{"hhlink", {{"train", side_report_to_json(c.hhlink.train)},
                      {"test", side_report_to_json(c.hhlink.test)}}},
          {"fs_baseline",
           {{"train", fs_side_report_to_json(c.fs_train)},
            {"test", fs_side_report_to_json(c.fs_test)}}}};
}

std::string format_coefficient_table(const std::string& title, const NamedStats& stats) {
  std::vector<std::string> header{title};
  std::vector<std::string> estimate{"Estimate"}, stddev{"StDev"};
  for (const auto& [name, s] : stats) {
    header.push_back(name);
    estimate.push_back(fixed(s.mean));
    stddev.push_back(fixed(s.stddev));
  }
  Table t(std::move(header));
  t.row(std::move(estimate));
  t.row(std::move(stddev));
  return t.str();
}

std::string format_rank_table(const RankHistogram& train, const RankHistogram& test,
                              const std::string& left, const std::string& right) {
  Table t({"Rank", left, right});
  const auto a = train.shares(), b = test.shares();
  const char* labels[5] = {"1", "2", "3", "4", ">=5"};
  for (std::size_t i = 0; i < 5; ++i)
    t.row({labels[i], pct(a[i]), pct(b[i])});
  return t.str();
}

std::string format_metric_pair_table(const std::string& title, const MetricReport& train,
                                     const MetricReport& test, const std::string& left,
                                     const std::string& right) {
  Table t({title, left, right});
  t.row({"F1 Score", pct(train.f1), pct(test.f1)});
  t.row({"FNR", pct(train.fnr), pct(test.fnr)});
  t.row({"FPR", pct(train.fpr), pct(test.fpr)});
  t.row({"PPV", pct(train.ppv), pct(test.ppv)});
  t.row({"Recall", pct(train.recall), pct(test.recall)});
  return t.str();
}

std::string format_per_entity_table(const PerEntityReport& train, const PerEntityReport& test,
                                    const std::string& left, const std::string& right) {
  Table t({"", left, right});
  auto cell = [](std::uint64_t n, double rate) {
    return std::to_string(n) + " (" + pct(rate) + "%)";
  };
  t.row({"Correct Matches", cell(train.correct_matches, train.correct_match_rate),
         cell(test.correct_matches, test.correct_match_rate)});
  t.row({"Correct Non-Matches", cell(train.correct_non_matches, train.correct_non_match_rate),
         cell(test.correct_non_matches, test.correct_non_match_rate)});
  return t.str();
}

std::string format_comparison_table(const MethodComparison& c) {
  std::ostringstream out;
  Table metrics({"", "hhlink train", "hhlink test", "fs-baseline train", "fs-baseline test"});
  auto row = [&](const char* name, auto get_hh, auto get_fs) {
    metrics.row({name, pct(get_hh(c.hhlink.train)), pct(get_hh(c.hhlink.test)),
                 pct(get_fs(c.fs_train)), pct(get_fs(c.fs_test))});
  };
  row("F1 Score", [](const SideReport& s) { return s.individual_within.f1; },
      [](const FsSideReport& s) { return s.individual_blocked.f1; });
  row("FNR", [](const SideReport& s) { return s.individual_within.fnr; },
      [](const FsSideReport& s) { return s.individual_blocked.fnr; });
  row("FPR", [](const SideReport& s) { return s.individual_within.fpr; },
      [](const FsSideReport& s) { return s.individual_blocked.fpr; });
  row("PPV", [](const SideReport& s) { return s.individual_within.ppv; },
      [](const FsSideReport& s) { return s.individual_blocked.ppv; });
  row("Recall", [](const SideReport& s) { return s.individual_within.recall; },
      [](const FsSideReport& s) { return s.individual_blocked.recall; });
  row("Global F1", [](const SideReport& s) { return s.individual_global.f1; },
      [](const FsSideReport& s) { return s.individual_global.f1; });
  out << "Individual matching quality (scored universes; Global F1 is universe-free)\n"
      << metrics.str() << '\n';

  Table entities({"", "hhlink train", "hhlink test", "fs-baseline train", "fs-baseline test"});
  auto cell = [](std::uint64_t n, double rate) {
    return std::to_string(n) + " (" + pct(rate) + "%)";
  };
  entities.row({"Correct Matches",
                cell(c.hhlink.train.individual_entities.correct_matches,
                     c.hhlink.train.individual_entities.correct_match_rate),
                cell(c.hhlink.test.individual_entities.correct_matches,
                     c.hhlink.test.individual_entities.correct_match_rate),
                cell(c.fs_train.individual_entities.correct_matches,
                     c.fs_train.individual_entities.correct_match_rate),
                cell(c.fs_test.individual_entities.correct_matches,
                     c.fs_test.individual_entities.correct_match_rate)});
  entities.row({"Correct Non-Matches",
                cell(c.hhlink.train.individual_entities.correct_non_matches,
                     c.hhlink.train.individual_entities.correct_non_match_rate),
                cell(c.hhlink.test.individual_entities.correct_non_matches,
                     c.hhlink.test.individual_entities.correct_non_match_rate),
                cell(c.fs_train.individual_entities.correct_non_matches,
                     c.fs_train.individual_entities.correct_non_match_rate),
                cell(c.fs_test.individual_entities.correct_non_matches,
                     c.fs_test.individual_entities.correct_non_match_rate)});
  out << "Per-individual accounting\n" << entities.str();
  return out.str();
}

std::string format_validation_summary(const ValidationSummary& s) {
  std::ostringstream out;
  out << "Internal validation over " << s.repeats.size() << " repeats\n\n";
  out << format_coefficient_table("Household model", s.household_coefficients) << '\n';
  out << format_coefficient_table("Individual model", s.individual_coefficients) << '\n';
  out << "tau: mean " << fixed(s.tau.mean, 4) << ", stddev " << fixed(s.tau.stddev, 4)
      << "\n\n";

  Table t({"Metric (mean +/- stddev)", "Train", "Test"});
  for (std::size_t i = 0; i < s.train_metrics.size(); ++i) {
    const auto& [name, train] = s.train_metrics[i];
    const auto& test = s.test_metrics[i].second;
    t.row({name, pct(train.mean) + " +/- " + pct(train.stddev),
           pct(test.mean) + " +/- " + pct(test.stddev)});
  }
  out << t.str();
  return out.str();
}

}  // namespace hhlink
