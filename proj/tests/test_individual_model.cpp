#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "hhlink/assignment.hpp"
#include "hhlink/errors.hpp"
#include "hhlink/individual_model.hpp"
#include "hhlink/metrics.hpp"
#include "hhlink/logistic.hpp"
#include "hhlink/synthetic.hpp"
#include "test_support.hpp"

using namespace hhlink;
using namespace hhlink::test;

namespace {

const AttributeSchema& schema() {
  static AttributeSchema s = AttributeSchema::survey_default();
  return s;
}

ScoreMatrix matrix(std::size_t rows, std::size_t cols, std::vector<double> q) {
  return ScoreMatrix{rows, cols, std::move(q)};
}

TrainingPairs one_feature_pairs(const std::vector<double>& x, const std::vector<int>& z) {
  TrainingPairs pairs;
  pairs.K = 1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    pairs.features.push_back(x[i]);
    pairs.labels.push_back(static_cast<std::uint8_t>(z[i]));
    pairs.ids.emplace_back("a" + std::to_string(i), "b" + std::to_string(i));
    if (z[i]) ++pairs.positives;
    else ++pairs.negatives;
  }
  return pairs;
}

}  // namespace

TEST_CASE("individual_score closed forms") {
  IndividualModel model;
  model.alpha = std::vector<double>(8, 1.0);
  model.year_scale = 50.0;

  const Individual a = survey_ind("a", "A", "F", "IT", 1980, "edu3", "reg01", "sec02",
                                  "ireg01", "blue_collar");
  SUBCASE("identical individuals score sigmoid(alpha0)") {
    model.alpha0 = 1.3;
    CHECK(individual_score(a, a, model, schema()) == doctest::Approx(stable_sigmoid(1.3)));
    model.alpha0 = 0.0;
    CHECK(individual_score(a, a, model, schema()) == doctest::Approx(0.5));
  }
  SUBCASE("survey-coefficient fixture differing only in sex") {
    model.alpha0 = 1.88;
    model.alpha = std::vector<double>(8, 0.0);
    model.alpha[0] = 2.77;  // SEX weight
    Individual b = a;
    b.individual_id = "b";
    b.values[0] = C("M");
    CHECK(individual_score(a, b, model, schema()) ==
          doctest::Approx(stable_sigmoid(1.88 - 2.77)).epsilon(1e-12));
    CHECK(individual_score(a, b, model, schema()) == doctest::Approx(0.2911).epsilon(1e-3));
  }
}

TEST_CASE("build_training_pairs crosses members of matched households only") {
  SyntheticConfig cfg;
  cfg.seed = 17;
  cfg.n_households = 12;
  cfg.carry_forward_rate = 0.6;
  const SyntheticData data = generate_synthetic(cfg);
  const TrainingPairs pairs =
      build_training_pairs(data.wave1, data.wave2, data.truth, schema());

  std::size_t expected = 0;
  for (const auto& [id1, id2] : data.truth.household_pairs())
    expected += data.wave1.find_household(id1)->members.size() *
                data.wave2.find_household(id2)->members.size();
  CHECK(pairs.size() == expected);
  CHECK(pairs.positives == data.truth.individual_pairs().size());

  SUBCASE("2x3 household pair contributes 6 labeled rows") {
    Rng rng(3);
    const Wave w1 = make_wave(
        "w1", {Household{"A", {random_ind(rng, "a1", "A"), random_ind(rng, "a2", "A")}}},
        schema());
    const Wave w2 = make_wave("w2",
                              {Household{"B",
                                         {random_ind(rng, "b1", "B"), random_ind(rng, "b2", "B"),
                                          random_ind(rng, "b3", "B")}}},
                              schema());
    const GroundTruth truth({{"A", "B"}}, {{"a1", "b1"}});
    const TrainingPairs p = build_training_pairs(w1, w2, truth, schema());
    CHECK(p.size() == 6);
    CHECK(p.positives == 1);
    CHECK(p.negatives == 5);
  }
  SUBCASE("full-turnover household pair has all-zero labels") {
    Rng rng(4);
    const Wave w1 = make_wave("w1", {Household{"A", {random_ind(rng, "a1", "A")}}}, schema());
    const Wave w2 = make_wave("w2", {Household{"B", {random_ind(rng, "b1", "B")}}}, schema());
    const GroundTruth truth({{"A", "B"}}, {});
    const TrainingPairs p = build_training_pairs(w1, w2, truth, schema());
    CHECK(p.size() == 1);
    CHECK(p.positives == 0);
  }
  SUBCASE("unknown truth household is an error") {
    Rng rng(5);
    const Wave w1 = make_wave("w1", {Household{"A", {random_ind(rng, "a1", "A")}}}, schema());
    const Wave w2 = make_wave("w2", {Household{"B", {random_ind(rng, "b1", "B")}}}, schema());
    const GroundTruth truth({{"A", "NOPE"}}, {});
    CHECK_THROWS_AS(build_training_pairs(w1, w2, truth, schema()), Error);
  }
}

TEST_CASE("huge ridge penalty shrinks weights to the base-rate model") {
  const TrainingPairs pairs = one_feature_pairs({0.0, 0.1, 0.5, 0.9, 1.0, 0.3, 0.8, 0.2},
                                                {1, 1, 0, 0, 0, 1, 0, 0});
  const PenalizedFit fit = fit_individual_at_lambda(pairs, 1e9, {}, {});
  CHECK(std::abs(fit.alpha[0]) < 1e-4);
  const double rate = 3.0 / 8.0;
  CHECK(fit.alpha0 == doctest::Approx(std::log(rate / (1.0 - rate))).epsilon(1e-3));
}

TEST_CASE("quasi-separated data stays finite under ridge and shrinks along the path") {
  // Positives concentrated at distance zero, negatives on one feature.
  std::vector<double> x;
  std::vector<int> z;
  for (int i = 0; i < 20; ++i) {
    x.push_back(0.0);
    z.push_back(1);
  }
  for (int i = 0; i < 20; ++i) {
    x.push_back(1.0);
    z.push_back(0);
  }
  const TrainingPairs pairs = one_feature_pairs(x, z);

  double previous_norm = std::numeric_limits<double>::infinity();
  for (const double lambda : {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
    const PenalizedFit fit = fit_individual_at_lambda(pairs, lambda, {}, {});
    CHECK(std::isfinite(fit.alpha[0]));
    CHECK(std::isfinite(fit.alpha0));
    const double q_pos = stable_sigmoid(fit.alpha0);
    const double q_neg = stable_sigmoid(fit.alpha0 - fit.alpha[0]);
    CHECK(q_pos > 0.0);
    CHECK(q_pos < 1.0);
    CHECK(q_neg > 0.0);
    CHECK(q_neg < 1.0);
    const double norm = std::abs(fit.alpha[0]);
    CHECK(norm <= previous_norm + 1e-9);
    previous_norm = norm;
  }
}

TEST_CASE("unpenalized fit matches a grid-search oracle") {
  // Non-separable one-feature data keeps the MLE finite at lambda = 0.
  const TrainingPairs pairs = one_feature_pairs(
      {0.0, 0.05, 0.2, 0.4, 0.45, 0.6, 0.7, 0.75, 0.9, 1.0, 0.15, 0.55},
      {1, 1, 1, 0, 1, 0, 1, 0, 0, 0, 0, 1});

  auto loglik = [&](double a0, double a1) {
    double ll = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double u = a0 - a1 * pairs.features[i];
      ll += pairs.labels[i] ? log_sigmoid(u) : log_sigmoid(-u);
    }
    return ll;
  };

  // Coarse-to-fine grid over alpha0 in [-6,6], alpha1 in [0,10].
  double best_a0 = 0.0, best_a1 = 0.0, best_ll = -1e300;
  for (double a0 = -6.0; a0 <= 6.0; a0 += 0.05)
    for (double a1 = 0.0; a1 <= 10.0; a1 += 0.05) {
      const double ll = loglik(a0, a1);
      if (ll > best_ll) {
        best_ll = ll;
        best_a0 = a0;
        best_a1 = a1;
      }
    }
  const double c0 = best_a0, c1 = best_a1;
  for (double a0 = c0 - 0.06; a0 <= c0 + 0.06; a0 += 0.002)
    for (double a1 = std::max(0.0, c1 - 0.06); a1 <= c1 + 0.06; a1 += 0.002) {
      const double ll = loglik(a0, a1);
      if (ll > best_ll) {
        best_ll = ll;
        best_a0 = a0;
        best_a1 = a1;
      }
    }

  const PenalizedFit fit = fit_individual_at_lambda(pairs, 0.0, {}, {});
  CHECK(fit.alpha0 == doctest::Approx(best_a0).epsilon(1e-3));
  CHECK(fit.alpha[0] == doctest::Approx(best_a1).epsilon(1e-3));
}

TEST_CASE("fit_individual selects lambda by cross-validated deviance") {
  SyntheticConfig cfg;
  cfg.seed = 23;
  cfg.n_households = 40;
  const SyntheticData data = generate_synthetic(cfg);
  const TrainingPairs pairs =
      build_training_pairs(data.wave1, data.wave2, data.truth, schema());

  IndividualFitConfig fit_cfg;
  fit_cfg.lambda_grid = {1e-4, 1e-2, 1.0, 100.0};
  fit_cfg.cv_folds = 5;
  const IndividualModel model = fit_individual(pairs, fit_cfg);

  CHECK(model.cv_curve.size() == 4);
  const bool in_grid = std::any_of(fit_cfg.lambda_grid.begin(), fit_cfg.lambda_grid.end(),
                                   [&](double l) { return l == model.lambda; });
  CHECK(in_grid);
  double best = 1e300;
  double chosen = -1.0;
  for (const auto& [lambda, dev] : model.cv_curve)
    if (dev <= best) {
      best = dev;
      chosen = lambda;
    }
  CHECK(model.lambda == chosen);
  for (const double a : model.alpha) CHECK(a >= 0.0);
}

TEST_CASE("single-class labels are rejected") {
  const TrainingPairs pairs = one_feature_pairs({0.1, 0.2, 0.3}, {1, 1, 1});
  CHECK_THROWS_AS(fit_individual(pairs, {}), Error);
}

TEST_CASE("assign worked examples") {
  SUBCASE("1x1 at the floor boundary matches") {
    const Assignment a = assign(matrix(1, 1, {0.9}));
    CHECK(a.q_bar == doctest::Approx(0.9));
    CHECK(a.col_of_row[0] == 0);
    CHECK(a.objective == doctest::Approx(0.9));
  }
  SUBCASE("2x2 keeps the diagonal") {
    const Assignment a = assign(matrix(2, 2, {0.9, 0.1, 0.1, 0.8}));
    CHECK(a.q_bar == doctest::Approx(0.475));  // (0.9+0.1+0.1+0.8)/4
    CHECK(a.col_of_row[0] == 0);
    CHECK(a.col_of_row[1] == 1);
    CHECK(a.objective == doctest::Approx(1.7));
  }
  SUBCASE("2x1 tie goes to the smaller row") {
    const Assignment a = assign(matrix(2, 1, {0.3, 0.3}));
    CHECK(a.q_bar == doctest::Approx(0.3));
    CHECK(a.col_of_row[0] == 0);
    CHECK(a.col_of_row[1] == -1);
    CHECK(a.objective == doctest::Approx(0.3));
  }
  SUBCASE("all-zero scores match nothing") {
    const Assignment a = assign(matrix(2, 2, {0.0, 0.0, 0.0, 0.0}));
    CHECK(a.col_of_row[0] == -1);
    CHECK(a.col_of_row[1] == -1);
    CHECK(a.objective == 0.0);
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(assign(matrix(0, 0, {})), Error);
    CHECK_THROWS_AS(assign(matrix(1, 1, {1.5})), Error);
    CHECK_THROWS_AS(assign(matrix(1, 1, {-0.1})), Error);
  }
}

TEST_CASE("assign equals exhaustive enumeration on random matrices") {
  Rng rng(31337);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng.next_below(4);
    const std::size_t cols = 1 + rng.next_below(4);
    std::vector<double> q(rows * cols);
    for (auto& v : q) v = rng.next_double();
    const ScoreMatrix m = matrix(rows, cols, std::move(q));

    const Assignment got = assign(m);
    const EnumeratedAssignment want = enumerate_assignment(m);
    CHECK(got.objective == want.objective);  // exact: identical summation order
    CHECK(got.q_bar == want.q_bar);
    CHECK(got.col_of_row == want.col_of_row);  // shared lexicographic tie rule

    // Row/column sums at most one, and the floor rule.
    std::vector<int> col_used(cols, 0);
    for (std::size_t i = 0; i < rows; ++i) {
      if (got.col_of_row[i] < 0) continue;
      ++col_used[static_cast<std::size_t>(got.col_of_row[i])];
      CHECK(m.at(i, static_cast<std::size_t>(got.col_of_row[i])) >= got.q_bar);
    }
    for (const int used : col_used) CHECK(used <= 1);
  }
}

TEST_CASE("halving all scores preserves the assignment") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng.next_below(4);
    const std::size_t cols = 1 + rng.next_below(4);
    std::vector<double> q(rows * cols);
    for (auto& v : q) v = rng.next_double();
    const ScoreMatrix m = matrix(rows, cols, q);

    for (const double c : {0.5, 0.25}) {
      std::vector<double> scaled = q;
      for (auto& v : scaled) v *= c;
      const Assignment base = assign(m);
      const Assignment after = assign(matrix(rows, cols, std::move(scaled)));
      CHECK(base.col_of_row == after.col_of_row);
    }
  }
}

TEST_CASE("link_individuals basics") {
  SyntheticConfig cfg;
  cfg.seed = 3;
  cfg.n_households = 10;
  cfg.carry_forward_rate = 1.0;
  cfg.attribute_flip_rates.assign(8, 0.0);
  cfg.member_leave_rate = 0.0;
  cfg.member_join_rate = 0.0;
  cfg.age_increment = 2;
  const SyntheticData data = generate_synthetic(cfg);

  IndividualModel model;
  model.alpha0 = 2.0;
  model.alpha = std::vector<double>(8, 1.0);
  model.year_scale = 50.0;

  SUBCASE("no household matches means everyone is unmatched") {
    HouseholdPrediction none;
    none.best.resize(data.wave1.household_count());
    for (std::size_t s = 0; s < none.best.size(); ++s) {
      none.best[s].household_id1 = data.wave1.households()[s].household_id;
      none.best[s].matched = false;
    }
    const LinkageResult link =
        link_individuals(data.wave1, data.wave2, none, model, schema());
    CHECK(link.pairs.empty());
    CHECK(link.unmatched_wave1.size() == data.wave1.individual_count());
    CHECK(link.unmatched_wave2.size() == data.wave2.individual_count());
  }

  SUBCASE("oracle household predictions on noiseless data give full recall") {
    HouseholdPrediction oracle;
    oracle.best.resize(data.wave1.household_count());
    for (std::size_t s = 0; s < oracle.best.size(); ++s) {
      const std::string& id1 = data.wave1.households()[s].household_id;
      oracle.best[s].household_id1 = id1;
      oracle.best[s].household_id2 = *data.truth.household_partner(id1);
      oracle.best[s].p = 1.0;
      oracle.best[s].matched = true;
    }
    const LinkageResult link =
        link_individuals(data.wave1, data.wave2, oracle, model, schema());
    std::set<IdPair> matched;
    for (const auto& p : link.pairs)
      if (p.matched) matched.insert({p.individual_id1, p.individual_id2});
    for (const auto& truth_pair : data.truth.individual_pairs())
      CHECK(matched.count(truth_pair) == 1);
    CHECK(link.duplicate_claims == 0);
  }
}

TEST_CASE("duplicate wave-2 claims keep the higher score") {
  // Two wave-1 singletons matched (many-to-one) to the same wave-2 household.
  const Individual proto = survey_ind("x", "X", "M", "IT", 1980, "edu1", "reg01", "sec01",
                                      "ireg01", "blue_collar");
  auto clone = [&](const char* id, const char* hh, int year) {
    Individual c = proto;
    c.individual_id = id;
    c.household_id = hh;
    c.values[2] = Y(year);
    return c;
  };
  const Wave w1 = make_wave(
      "w1",
      {Household{"A1", {clone("a1", "A1", 1980)}}, Household{"A2", {clone("a2", "A2", 1983)}}},
      schema());
  const Wave w2 = make_wave("w2", {Household{"B", {clone("b", "B", 1980)}}}, schema());

  IndividualModel model;
  model.alpha0 = 2.0;
  model.alpha = std::vector<double>(8, 1.0);

  HouseholdPrediction pred;
  pred.best.resize(2);
  pred.best[0] = {"A1", "B", 0.9, true, false};
  pred.best[1] = {"A2", "B", 0.8, true, false};

  const LinkageResult link = link_individuals(w1, w2, pred, model, schema());
  CHECK(link.duplicate_claims == 1);
  int matched_count = 0;
  for (const auto& p : link.pairs)
    if (p.matched) {
      ++matched_count;
      CHECK(p.individual_id1 == "a1");  // exact copy scores higher than year+3
    }
  CHECK(matched_count == 1);
  CHECK(link.unmatched_wave1 == std::vector<std::string>{"a2"});
}
