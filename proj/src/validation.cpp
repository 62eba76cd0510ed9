#include "hhlink/validation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "hhlink/errors.hpp"
#include "hhlink/rng.hpp"

namespace hhlink {

namespace {

std::vector<std::string> household_ids(const Wave& wave) {
  std::vector<std::string> ids;
  ids.reserve(wave.household_count());
  for (const auto& hh : wave.households()) ids.push_back(hh.household_id);
  return ids;
}

std::vector<std::string> individual_ids(const Wave& wave) {
  std::vector<std::string> ids;
  ids.reserve(wave.individual_count());
  for (const auto& hh : wave.households())
    for (const auto& ind : hh.members) ids.push_back(ind.individual_id);
  return ids;
}

// floor(frac*n + 0.5) sampled after a seeded shuffle.
std::vector<std::string> sample_ids(std::vector<std::string> ids, double fraction, Rng& rng) {
  rng.shuffle(ids);
  const std::size_t k =
      static_cast<std::size_t>(fraction * static_cast<double>(ids.size()) + 0.5);
  ids.resize(std::min(k, ids.size()));
  return ids;
}

Wave subset_wave(const Wave& source, const std::unordered_set<std::string>& keep,
                 const AttributeSchema& schema) {
  std::vector<Household> hhs;
  for (const auto& hh : source.households())
    if (keep.count(hh.household_id) > 0) hhs.push_back(hh);
  return make_wave(source.label(), std::move(hhs), schema);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

SummaryStat stat_of(const std::vector<double>& v) {
  SummaryStat s;
  s.mean = mean_of(v);
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

}  // namespace

SplitData split_waves(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
                      const AttributeSchema& schema, double train_fraction,
                      std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorCode::Config, "train_fraction must lie strictly between 0 and 1");
  validate_truth(truth, wave1, wave2);

  std::vector<std::string> matched1, unmatched1, unmatched2;
  std::unordered_set<std::string> matched2_set;
  for (const auto& p : truth.household_pairs()) matched2_set.insert(p.second);
  for (const auto& hh : wave1.households()) {
    if (truth.household_partner(hh.household_id) != nullptr) matched1.push_back(hh.household_id);
    else unmatched1.push_back(hh.household_id);
  }
  for (const auto& hh : wave2.households())
    if (matched2_set.count(hh.household_id) == 0) unmatched2.push_back(hh.household_id);

  if (matched1.size() < 2)
    fail(ErrorCode::Data, "too few matched households to split into train and test");

  Rng rng(seed);
  const auto train_matched1 = sample_ids(matched1, train_fraction, rng);
  const auto train_unmatched1 = sample_ids(unmatched1, train_fraction, rng);
  const auto train_unmatched2 = sample_ids(unmatched2, train_fraction, rng);

  std::unordered_set<std::string> keep1(train_matched1.begin(), train_matched1.end());
  keep1.insert(train_unmatched1.begin(), train_unmatched1.end());
  std::unordered_set<std::string> keep2(train_unmatched2.begin(), train_unmatched2.end());
  for (const auto& id : train_matched1) keep2.insert(*truth.household_partner(id));

  std::unordered_set<std::string> rest1, rest2;
  for (const auto& hh : wave1.households())
    if (keep1.count(hh.household_id) == 0) rest1.insert(hh.household_id);
  for (const auto& hh : wave2.households())
    if (keep2.count(hh.household_id) == 0) rest2.insert(hh.household_id);

  SplitData split{subset_wave(wave1, keep1, schema), subset_wave(wave2, keep2, schema),
                  subset_wave(wave1, rest1, schema), subset_wave(wave2, rest2, schema),
                  GroundTruth{}, GroundTruth{}};

  // Truth pairs never straddle the split: each matched pair went to one side.
  std::vector<IdPair> train_hh, test_hh, train_ind, test_ind;
  for (const auto& p : truth.household_pairs())
    (keep1.count(p.first) > 0 ? train_hh : test_hh).push_back(p);
  std::unordered_map<std::string, bool> ind_to_train;
  for (const auto& hh : split.train1.households())
    for (const auto& ind : hh.members) ind_to_train.emplace(ind.individual_id, true);
  for (const auto& hh : split.test1.households())
    for (const auto& ind : hh.members) ind_to_train.emplace(ind.individual_id, false);
  for (const auto& p : truth.individual_pairs()) {
    auto it = ind_to_train.find(p.first);
    if (it == ind_to_train.end()) continue;
    (it->second ? train_ind : test_ind).push_back(p);
  }
  split.train_truth = GroundTruth(std::move(train_hh), std::move(train_ind));
  split.test_truth = GroundTruth(std::move(test_hh), std::move(test_ind));
  return split;
}

FittedModels fit_pipeline(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
                          const AttributeSchema& schema, const PipelineOptions& options) {
  FittedModels models;
  HouseholdFitConfig hh_config = options.household;
  hh_config.threads = options.threads;
  models.household = fit_household_model(wave1, wave2, truth, schema, hh_config);

  IndividualFitConfig ind_config = options.individual;
  ind_config.year_scale = hh_config.year_scale;
  const TrainingPairs pairs =
      build_training_pairs(wave1, wave2, truth, schema, hh_config.year_scale);
  models.individual = fit_individual(pairs, ind_config);
  return models;
}

SideReport evaluate_side(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
                         const FittedModels& models, const AttributeSchema& schema,
                         const PipelineOptions& options) {
  HouseholdPredictOptions popts;
  popts.blocking = options.household.blocking;
  popts.one_to_one = options.one_to_one;
  popts.threads = options.threads;

  const HouseholdPrediction pred =
      predict_households(wave1, wave2, models.household, schema, popts);
  const LinkageResult link =
      link_individuals(wave1, wave2, pred, models.individual, schema, options.threads);

  SideReport side;
  side.tau = models.household.tau;

  std::vector<IdPair> hh_decided;
  for (const auto& d : pred.best)
    if (d.matched) hh_decided.emplace_back(d.household_id1, d.household_id2);
  side.matched_households = hh_decided.size();

  const std::uint64_t hh_universe =
      static_cast<std::uint64_t>(wave1.household_count()) * wave2.household_count();
  side.household = compute_metrics(hh_decided, truth.household_pairs(), hh_universe,
                                   "households:all-pairs");
  side.household_ranks = rank_of_truth(wave1, wave2, models.household, truth, schema, popts);
  side.household_entities =
      per_entity_accounting(hh_decided, truth.household_pairs(), household_ids(wave1));

  std::vector<IdPair> ind_decided;
  for (const auto& p : link.pairs)
    if (p.matched) ind_decided.emplace_back(p.individual_id1, p.individual_id2);
  side.matched_individuals = ind_decided.size();
  side.candidate_pairs = link.pairs.size();

  // Truth pairs inside predicted matched household pairs form the
  // within-matched universe's positive class.
  std::unordered_map<std::string, std::string> hh_of_1, hh_of_2;
  for (const auto& hh : wave1.households())
    for (const auto& ind : hh.members) hh_of_1.emplace(ind.individual_id, hh.household_id);
  for (const auto& hh : wave2.households())
    for (const auto& ind : hh.members) hh_of_2.emplace(ind.individual_id, hh.household_id);
  std::unordered_set<std::string> predicted_pairs;
  for (const auto& [a, b] : hh_decided) predicted_pairs.insert(a + '\x1f' + b);
  std::vector<IdPair> truth_within;
  for (const auto& p : truth.individual_pairs()) {
    auto h1 = hh_of_1.find(p.first);
    auto h2 = hh_of_2.find(p.second);
    if (h1 == hh_of_1.end() || h2 == hh_of_2.end()) continue;
    if (predicted_pairs.count(h1->second + '\x1f' + h2->second) > 0) truth_within.push_back(p);
  }
  side.individual_within = compute_metrics(ind_decided, truth_within, link.pairs.size(),
                                           "individuals:within-matched-households");
  side.individual_global = global_pair_metrics(ind_decided, truth.individual_pairs());
  side.individual_entities =
      per_entity_accounting(ind_decided, truth.individual_pairs(), individual_ids(wave1));
  return side;
}

namespace {

void append_side_metrics(NamedStats& out, const char* prefix,
                         const std::vector<SideReport>& sides) {
  auto add = [&](const std::string& name, auto getter) {
    std::vector<double> values;
    values.reserve(sides.size());
    for (const auto& s : sides) values.push_back(getter(s));
    out.emplace_back(std::string(prefix) + name, stat_of(values));
  };
  add("household.f1", [](const SideReport& s) { return s.household.f1; });
  add("household.fpr", [](const SideReport& s) { return s.household.fpr; });
  add("household.fnr", [](const SideReport& s) { return s.household.fnr; });
  add("household.ppv", [](const SideReport& s) { return s.household.ppv; });
  add("household.recall", [](const SideReport& s) { return s.household.recall; });
  add("household.rank1_share", [](const SideReport& s) { return s.household_ranks.shares()[0]; });
  add("household.correct_matches",
      [](const SideReport& s) { return s.household_entities.correct_match_rate; });
  add("household.correct_non_matches",
      [](const SideReport& s) { return s.household_entities.correct_non_match_rate; });
  add("individual.f1", [](const SideReport& s) { return s.individual_within.f1; });
  add("individual.fpr", [](const SideReport& s) { return s.individual_within.fpr; });
  add("individual.fnr", [](const SideReport& s) { return s.individual_within.fnr; });
  add("individual.ppv", [](const SideReport& s) { return s.individual_within.ppv; });
  add("individual.recall", [](const SideReport& s) { return s.individual_within.recall; });
  add("individual.global_f1", [](const SideReport& s) { return s.individual_global.f1; });
  add("individual.correct_matches",
      [](const SideReport& s) { return s.individual_entities.correct_match_rate; });
  add("individual.correct_non_matches",
      [](const SideReport& s) { return s.individual_entities.correct_non_match_rate; });
}

}  // namespace

ValidationSummary internal_validation(const Wave& wave1, const Wave& wave2,
                                      const GroundTruth& truth, const AttributeSchema& schema,
                                      const SplitSpec& split, const PipelineOptions& options) {
  if (split.n_repeats < 1) fail(ErrorCode::Config, "n_repeats must be at least 1");
  if (truth.household_pairs().empty()) fail(ErrorCode::Data, "truth has no household pairs");

  ValidationSummary summary;
  Rng master(split.seed);
  for (int r = 0; r < split.n_repeats; ++r) {
    const std::uint64_t repeat_seed = master.fork(static_cast<std::uint64_t>(r)).next_u64();
    SplitData data =
        split_waves(wave1, wave2, truth, schema, split.train_fraction, repeat_seed);

    RepeatReport rep;
    FittedModels models =
        fit_pipeline(data.train1, data.train2, data.train_truth, schema, options);
    rep.train = evaluate_side(data.train1, data.train2, data.train_truth, models, schema,
                              options);
    rep.test = evaluate_side(data.test1, data.test2, data.test_truth, models, schema, options);
    rep.household_model = std::move(models.household);
    rep.individual_model = std::move(models.individual);
    summary.repeats.push_back(std::move(rep));
  }

  std::vector<SideReport> trains, tests;
  for (const auto& rep : summary.repeats) {
    trains.push_back(rep.train);
    tests.push_back(rep.test);
  }
  append_side_metrics(summary.train_metrics, "", trains);
  append_side_metrics(summary.test_metrics, "", tests);

  const std::size_t K = schema.feature_count();
  auto coef_stats = [&](auto value_at) {
    NamedStats stats;
    std::vector<double> values(summary.repeats.size());
    for (std::size_t k = 0; k <= K; ++k) {
      for (std::size_t r = 0; r < summary.repeats.size(); ++r)
        values[r] = value_at(summary.repeats[r], k);
      stats.emplace_back(k == 0 ? "Intercept" : schema.feature(k - 1).name, stat_of(values));
    }
    return stats;
  };
  summary.household_coefficients = coef_stats([](const RepeatReport& r, std::size_t k) {
    return k == 0 ? r.household_model.beta0 : r.household_model.weights.beta[k - 1];
  });
  summary.individual_coefficients = coef_stats([](const RepeatReport& r, std::size_t k) {
    return k == 0 ? r.individual_model.alpha0 : r.individual_model.alpha[k - 1];
  });
  std::vector<double> taus;
  for (const auto& rep : summary.repeats) taus.push_back(rep.household_model.tau);
  summary.tau = stat_of(taus);
  return summary;
}

ExternalReport external_validation(const Wave& wave1, const Wave& wave2,
                                   const GroundTruth& truth12, const Wave& wave2_again,
                                   const Wave& wave3, const GroundTruth& truth23,
                                   const AttributeSchema& schema,
                                   const PipelineOptions& options) {
  if (wave2.label() != wave2_again.label())
    fail(ErrorCode::Data, "external validation: the shared middle wave labels differ ('" +
                              wave2.label() + "' vs '" + wave2_again.label() + "')");

  ExternalReport report;
  report.models = fit_pipeline(wave1, wave2, truth12, schema, options);
  report.train = evaluate_side(wave1, wave2, truth12, report.models, schema, options);
  // tau carries over inside the fitted household model.
  report.test = evaluate_side(wave2_again, wave3, truth23, report.models, schema, options);
  return report;
}

FsSideReport evaluate_fs(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
                         const FSPrediction& prediction, const AttributeSchema& schema,
                         const std::vector<std::string>& blocking_keys) {
  FsSideReport side;
  side.scored_pairs = prediction.scored_pairs;

  std::vector<IdPair> decided;
  for (const auto& d : prediction.decisions)
    if (d.matched) decided.emplace_back(d.individual_id1, d.individual_id2);
  side.matched_individuals = decided.size();

  // Restrict truth to pairs sharing a block (the baseline never scores the
  // rest).
  std::vector<std::size_t> block_features;
  for (const auto& name : blocking_keys) {
    const auto k = schema.index_of(name);
    if (!k) fail(ErrorCode::Config, "unknown blocking key: " + name);
    block_features.push_back(*k);
  }
  auto block_value = [&](const Individual& ind) {
    std::string key;
    for (const std::size_t k : block_features) {
      const Value& v = ind.values[k];
      if (v.kind == Value::Kind::Category) key += v.category;
      else if (v.kind == Value::Kind::Year) key += std::to_string(v.year);
      else return std::string();
      key += '\x1f';
    }
    return key;
  };
  std::unordered_map<std::string, std::string> block1, block2;
  for (const auto& hh : wave1.households())
    for (const auto& ind : hh.members) block1.emplace(ind.individual_id, block_value(ind));
  for (const auto& hh : wave2.households())
    for (const auto& ind : hh.members) block2.emplace(ind.individual_id, block_value(ind));
  std::vector<IdPair> truth_blocked;
  for (const auto& p : truth.individual_pairs()) {
    auto a = block1.find(p.first);
    auto b = block2.find(p.second);
    if (a == block1.end() || b == block2.end()) continue;
    if (!a->second.empty() && a->second == b->second) truth_blocked.push_back(p);
  }

  side.individual_blocked =
      compute_metrics(decided, truth_blocked, prediction.scored_pairs, "individuals:within-blocks");
  side.individual_global = global_pair_metrics(decided, truth.individual_pairs());
  side.individual_entities =
      per_entity_accounting(decided, truth.individual_pairs(), individual_ids(wave1));
  return side;
}

MethodComparison compare_methods(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
                                 const AttributeSchema& schema, const SplitSpec& split,
                                 const PipelineOptions& options, const FSConfig& fs_config) {
  const SplitData data =
      split_waves(wave1, wave2, truth, schema, split.train_fraction, split.seed);

  MethodComparison cmp;
  FittedModels models =
      fit_pipeline(data.train1, data.train2, data.train_truth, schema, options);
  cmp.hhlink.train =
      evaluate_side(data.train1, data.train2, data.train_truth, models, schema, options);
  cmp.hhlink.test =
      evaluate_side(data.test1, data.test2, data.test_truth, models, schema, options);
  cmp.hhlink.household_model = std::move(models.household);
  cmp.hhlink.individual_model = std::move(models.individual);

  // The baseline is unsupervised: EM runs on the side it is asked to match.
  const PatternCounts train_patterns =
      blocked_pattern_counts(data.train1, data.train2, schema, fs_config.blocking_keys);
  cmp.fs_model_train = fs_em_fit(train_patterns, fs_config);
  cmp.fs_train = evaluate_fs(data.train1, data.train2, data.train_truth,
                             fs_predict(data.train1, data.train2, cmp.fs_model_train, schema),
                             schema, fs_config.blocking_keys);

  const PatternCounts test_patterns =
      blocked_pattern_counts(data.test1, data.test2, schema, fs_config.blocking_keys);
  cmp.fs_model_test = fs_em_fit(test_patterns, fs_config);
  cmp.fs_test = evaluate_fs(data.test1, data.test2, data.test_truth,
                            fs_predict(data.test1, data.test2, cmp.fs_model_test, schema),
                            schema, fs_config.blocking_keys);
  return cmp;
}

}  // namespace hhlink
