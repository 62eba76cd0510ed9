#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hhlink/errors.hpp"
#include "hhlink/metrics.hpp"
#include "hhlink/reports.hpp"
#include "hhlink/synthetic.hpp"
#include "hhlink/validation.hpp"
#include "test_support.hpp"

using namespace hhlink;
using namespace hhlink::test;

namespace {
const AttributeSchema& schema() {
  static AttributeSchema s = AttributeSchema::survey_default();
  return s;
}
}  // namespace

TEST_CASE("metric identities on hand-computed fixtures") {
  struct Fixture {
    ConfusionCounts c;
    double f1, fpr, fnr, ppv, recall;
  };
  // Hand-evaluated from the definitions.
  const Fixture fixtures[] = {
      {{2, 1, 1, 6}, 4.0 / 6.0, 1.0 / 7.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0},
      {{0, 0, 0, 10}, 0.0, 0.0, 0.0, 0.0, 0.0},
      {{5, 0, 0, 5}, 1.0, 0.0, 0.0, 1.0, 1.0},
      {{1, 9, 0, 0}, 2.0 / 11.0, 1.0, 0.0, 0.1, 1.0},
      {{0, 0, 4, 6}, 0.0, 0.0, 1.0, 0.0, 0.0},
      {{3, 3, 3, 3}, 0.5, 0.5, 0.5, 0.5, 0.5},
      {{10, 5, 2, 100}, 20.0 / 27.0, 5.0 / 105.0, 2.0 / 12.0, 10.0 / 15.0, 10.0 / 12.0},
      {{1, 0, 0, 0}, 1.0, 0.0, 0.0, 1.0, 1.0},
      {{0, 2, 3, 5}, 0.0, 2.0 / 7.0, 1.0, 0.0, 0.0},
      {{7, 1, 3, 89}, 14.0 / 18.0, 1.0 / 90.0, 3.0 / 10.0, 7.0 / 8.0, 7.0 / 10.0},
  };
  for (const auto& f : fixtures) {
    const MetricReport r = metrics_from_counts(f.c, "fixture");
    CHECK(r.f1 == doctest::Approx(f.f1).epsilon(1e-12));
    CHECK(r.fpr == doctest::Approx(f.fpr).epsilon(1e-12));
    CHECK(r.fnr == doctest::Approx(f.fnr).epsilon(1e-12));
    CHECK(r.ppv == doctest::Approx(f.ppv).epsilon(1e-12));
    CHECK(r.recall == doctest::Approx(f.recall).epsilon(1e-12));
    // Self-consistency: f1 recomputable from the stored counts.
    const double again = r.counts.tp == 0 && r.counts.fp == 0 && r.counts.fn == 0
                             ? 0.0
                             : 2.0 * r.counts.tp / (2.0 * r.counts.tp + r.counts.fp + r.counts.fn);
    CHECK(r.f1 == doctest::Approx(again));
  }
}

TEST_CASE("compute_metrics counts over an explicit universe") {
  const std::vector<IdPair> decided = {{"a", "x"}, {"b", "y"}, {"c", "z"}};
  const std::vector<IdPair> truth = {{"a", "x"}, {"b", "w"}, {"d", "v"}};
  const MetricReport r = compute_metrics(decided, truth, 20, "u");
  CHECK(r.counts.tp == 1);
  CHECK(r.counts.fp == 2);
  CHECK(r.counts.fn == 2);
  CHECK(r.counts.tn == 15);
  CHECK(r.universe == "u");
  CHECK_THROWS_AS(compute_metrics(decided, truth, 2, "u"), Error);
}

TEST_CASE("divide-by-zero cases report zero with the flag") {
  const MetricReport r = metrics_from_counts({0, 0, 0, 0}, "empty");
  CHECK(r.f1 == 0.0);
  CHECK(r.fpr == 0.0);
  CHECK(r.divide_by_zero);
}

TEST_CASE("per-entity accounting") {
  const std::vector<std::string> entities = {"a", "b", "c", "d"};
  const std::vector<IdPair> truth = {{"a", "x"}, {"b", "y"}};
  SUBCASE("oracle decisions are fully correct") {
    const PerEntityReport r = per_entity_accounting(truth, truth, entities);
    CHECK(r.with_match == 2);
    CHECK(r.correct_matches == 2);
    CHECK(r.without_match == 2);
    CHECK(r.correct_non_matches == 2);
    CHECK(r.correct_match_rate == 1.0);
    CHECK(r.correct_non_match_rate == 1.0);
  }
  SUBCASE("deciding nothing is right only for unmatched entities") {
    const PerEntityReport r = per_entity_accounting({}, truth, entities);
    CHECK(r.correct_matches == 0);
    CHECK(r.correct_non_matches == 2);
    CHECK(r.correct_match_rate == 0.0);
    CHECK(r.correct_non_match_rate == 1.0);
  }
  SUBCASE("wrong partner counts as incorrect") {
    const PerEntityReport r = per_entity_accounting({{"a", "y"}, {"c", "q"}}, truth, entities);
    CHECK(r.correct_matches == 0);
    CHECK(r.correct_non_matches == 1);  // d stays clean, c decided wrongly
  }
}

TEST_CASE("split keeps matched pairs together and partitions both waves") {
  SyntheticConfig cfg;
  cfg.seed = 404;
  cfg.n_households = 60;
  const SyntheticData data = generate_synthetic(cfg);
  const SplitData split = split_waves(data.wave1, data.wave2, data.truth, schema(), 0.6, 99);

  std::set<std::string> train1, test1, train2, test2;
  for (const auto& hh : split.train1.households()) train1.insert(hh.household_id);
  for (const auto& hh : split.test1.households()) test1.insert(hh.household_id);
  for (const auto& hh : split.train2.households()) train2.insert(hh.household_id);
  for (const auto& hh : split.test2.households()) test2.insert(hh.household_id);

  CHECK(train1.size() + test1.size() == data.wave1.household_count());
  CHECK(train2.size() + test2.size() == data.wave2.household_count());
  for (const auto& id : test1) CHECK(train1.count(id) == 0);
  for (const auto& id : test2) CHECK(train2.count(id) == 0);

  // No straddling: every truth pair lands wholly in train or wholly in test.
  for (const auto& [a, b] : data.truth.household_pairs()) {
    const bool a_train = train1.count(a) > 0;
    const bool b_train = train2.count(b) > 0;
    CHECK(a_train == b_train);
  }
  CHECK(split.train_truth.household_pairs().size() +
            split.test_truth.household_pairs().size() ==
        data.truth.household_pairs().size());
  CHECK_NOTHROW(validate_truth(split.train_truth, split.train1, split.train2));
  CHECK_NOTHROW(validate_truth(split.test_truth, split.test1, split.test2));
}

TEST_CASE("internal validation is reproducible and self-consistent") {
  SyntheticConfig cfg;
  cfg.seed = 15;
  cfg.n_households = 60;
  const SyntheticData data = generate_synthetic(cfg);

  SplitSpec split;
  split.seed = 55;
  split.n_repeats = 2;
  PipelineOptions opts;
  opts.individual.lambda_grid = {1e-3, 1.0};  // keep the test quick
  opts.individual.cv_folds = 3;

  const ValidationSummary a =
      internal_validation(data.wave1, data.wave2, data.truth, schema(), split, opts);
  const ValidationSummary b =
      internal_validation(data.wave1, data.wave2, data.truth, schema(), split, opts);

  REQUIRE(a.repeats.size() == 2);
  const auto ja = validation_summary_to_json(a).dump();
  const auto jb = validation_summary_to_json(b).dump();
  CHECK(ja == jb);

  for (const auto& rep : a.repeats) {
    // Metric reports must be recomputable from their own counts.
    for (const MetricReport* r : {&rep.train.household, &rep.test.household,
                                  &rep.train.individual_within, &rep.test.individual_within}) {
      const MetricReport again = metrics_from_counts(r->counts, r->universe);
      CHECK(r->f1 == again.f1);
      CHECK(r->fpr == again.fpr);
      CHECK(r->recall == again.recall);
    }
  }
}

TEST_CASE("external validation requires the shared middle wave") {
  SyntheticConfig cfg;
  cfg.seed = 3;
  cfg.n_households = 30;
  const SyntheticData data = generate_synthetic(cfg);
  const auto [wave3, truth23] =
      evolve_wave(data.wave2, SyntheticConfig{.seed = 4}, schema(), "wave3", '3');

  PipelineOptions opts;
  opts.individual.lambda_grid = {1e-2};
  // Mismatched middle wave label is rejected.
  CHECK_THROWS_AS(external_validation(data.wave1, data.wave2, data.truth, wave3, wave3,
                                      truth23, schema(), opts),
                  Error);

  const ExternalReport report = external_validation(
      data.wave1, data.wave2, data.truth, data.wave2, wave3, truth23, schema(), opts);
  CHECK(report.train.tau == report.test.tau);  // threshold transfers
  CHECK(report.test.household.counts.tp + report.test.household.counts.fn ==
        truth23.household_pairs().size());
}

TEST_CASE("degrading the test wave lowers external F1 across seeds") {
  int degraded_wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticConfig cfg;
    cfg.seed = seed;
    cfg.n_households = 60;
    cfg.attribute_flip_rates.assign(8, 0.03);
    const SyntheticData data = generate_synthetic(cfg);

    SyntheticConfig clean = cfg;
    clean.seed = seed + 100;
    const auto [wave3_clean, truth_clean] =
        evolve_wave(data.wave2, clean, schema(), "wave3", '3');

    SyntheticConfig noisy = cfg;
    noisy.seed = seed + 100;  // same stream, heavier corruption
    noisy.attribute_flip_rates.assign(8, 0.25);
    noisy.member_leave_rate = 0.3;
    const auto [wave3_noisy, truth_noisy] =
        evolve_wave(data.wave2, noisy, schema(), "wave3", '3');

    PipelineOptions opts;
    opts.individual.lambda_grid = {1e-2};
    const ExternalReport clean_rep = external_validation(
        data.wave1, data.wave2, data.truth, data.wave2, wave3_clean, truth_clean, schema(), opts);
    const ExternalReport noisy_rep = external_validation(
        data.wave1, data.wave2, data.truth, data.wave2, wave3_noisy, truth_noisy, schema(), opts);
    if (noisy_rep.test.household.f1 < clean_rep.test.household.f1) ++degraded_wins;
  }
  CHECK(degraded_wins >= 4);
}

TEST_CASE("comparison harness produces both methods' reports") {
  SyntheticConfig cfg;
  cfg.seed = 77;
  cfg.n_households = 80;
  const SyntheticData data = generate_synthetic(cfg);

  SplitSpec split;
  split.seed = 9;
  PipelineOptions opts;
  opts.individual.lambda_grid = {1e-2};
  const MethodComparison cmp =
      compare_methods(data.wave1, data.wave2, data.truth, schema(), split, opts, FSConfig{});

  CHECK(cmp.hhlink.test.individual_global.counts.tp +
            cmp.hhlink.test.individual_global.counts.fn ==
        cmp.fs_test.individual_global.counts.tp + cmp.fs_test.individual_global.counts.fn);
  CHECK(cmp.fs_test.scored_pairs > 0);
  // Text table renders without throwing.
  CHECK(format_comparison_table(cmp).size() > 0);
}
