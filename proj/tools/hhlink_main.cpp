#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hhlink/csv.hpp"
#include "hhlink/distance.hpp"
#include "hhlink/errors.hpp"
#include "hhlink/fs_baseline.hpp"
#include "hhlink/household_model.hpp"
#include "hhlink/individual_model.hpp"
#include "hhlink/json_io.hpp"
#include "hhlink/metrics.hpp"
#include "hhlink/missing_policy.hpp"
#include "hhlink/reports.hpp"
#include "hhlink/synthetic.hpp"
#include "hhlink/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hhlink::cli {

// Everything a command needs, resolved from defaults, then the config file,
// then command-line flags.
struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string output_dir = "out";
  bool verbose = false;
  std::string method = "hhlink";  // hhlink | fs-baseline

  std::string schema_path;
  std::string wave1_path, wave2_path;
  std::string truth_households_path, truth_individuals_path;
  std::string wave1_label = "wave1", wave2_label = "wave2";

  SyntheticConfig synthetic;
  bool simulate_triple = false;

  HouseholdFitConfig household;
  bool one_to_one = false;
  IndividualFitConfig individual;
  FSConfig fs;
  SplitSpec split;
  MissingPolicy policy;

  std::string household_model_path, individual_model_path, fs_model_path;
  std::string household_matches_path, individual_matches_path;
  bool write_deltas = false;

  std::string test_wave1_path, test_wave2_path;
  std::string test_truth_households_path, test_truth_individuals_path;
  std::string test_wave1_label = "wave2", test_wave2_label = "wave3";
};

void check_known_keys(const json& j, std::initializer_list<const char*> known,
                      const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) fail(ErrorCode::Config, "unknown config key '" + key + "' in " + where);
  }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  const json j = load_json(path);
  check_known_keys(j,
                   {"seed", "threads", "output_dir", "method", "schema", "wave1", "wave2",
                    "truth_households", "truth_individuals", "wave1_label", "wave2_label",
                    "synthetic", "household_fit", "individual_fit", "fs", "validation",
                    "policy", "one_to_one", "test_wave1", "test_wave2",
                    "test_truth_households", "test_truth_individuals", "test_wave1_label",
                    "test_wave2_label"},
                   path);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.method = j.value("method", cfg.method);
  cfg.schema_path = j.value("schema", cfg.schema_path);
  cfg.wave1_path = j.value("wave1", cfg.wave1_path);
  cfg.wave2_path = j.value("wave2", cfg.wave2_path);
  cfg.truth_households_path = j.value("truth_households", cfg.truth_households_path);
  cfg.truth_individuals_path = j.value("truth_individuals", cfg.truth_individuals_path);
  cfg.wave1_label = j.value("wave1_label", cfg.wave1_label);
  cfg.wave2_label = j.value("wave2_label", cfg.wave2_label);
  cfg.one_to_one = j.value("one_to_one", cfg.one_to_one);
  cfg.test_wave1_path = j.value("test_wave1", cfg.test_wave1_path);
  cfg.test_wave2_path = j.value("test_wave2", cfg.test_wave2_path);
  cfg.test_truth_households_path =
      j.value("test_truth_households", cfg.test_truth_households_path);
  cfg.test_truth_individuals_path =
      j.value("test_truth_individuals", cfg.test_truth_individuals_path);
  cfg.test_wave1_label = j.value("test_wave1_label", cfg.test_wave1_label);
  cfg.test_wave2_label = j.value("test_wave2_label", cfg.test_wave2_label);

  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    check_known_keys(s,
                     {"n_households", "household_size_distribution", "carry_forward_rate",
                      "attribute_flip_rates", "member_leave_rate", "member_join_rate",
                      "age_increment"},
                     "synthetic");
    cfg.synthetic.n_households = s.value("n_households", cfg.synthetic.n_households);
    if (s.contains("household_size_distribution"))
      cfg.synthetic.household_size_distribution =
          s["household_size_distribution"].get<std::vector<double>>();
    cfg.synthetic.carry_forward_rate =
        s.value("carry_forward_rate", cfg.synthetic.carry_forward_rate);
    if (s.contains("attribute_flip_rates")) {
      if (s["attribute_flip_rates"].is_number()) {
        cfg.synthetic.attribute_flip_rates.assign(8, s["attribute_flip_rates"].get<double>());
      } else {
        cfg.synthetic.attribute_flip_rates =
            s["attribute_flip_rates"].get<std::vector<double>>();
      }
    }
    cfg.synthetic.member_leave_rate = s.value("member_leave_rate", cfg.synthetic.member_leave_rate);
    cfg.synthetic.member_join_rate = s.value("member_join_rate", cfg.synthetic.member_join_rate);
    cfg.synthetic.age_increment = s.value("age_increment", cfg.synthetic.age_increment);
  }

  if (j.contains("household_fit")) {
    const json& h = j["household_fit"];
    check_known_keys(h,
                     {"init_beta0", "init_beta", "max_iter", "tol", "year_scale", "blocking",
                      "subsample_negative_ratio", "subsample_seed"},
                     "household_fit");
    cfg.household.init_beta0 = h.value("init_beta0", cfg.household.init_beta0);
    if (h.contains("init_beta")) cfg.household.init_beta = h["init_beta"].get<std::vector<double>>();
    cfg.household.max_iter = h.value("max_iter", cfg.household.max_iter);
    cfg.household.tol = h.value("tol", cfg.household.tol);
    cfg.household.year_scale = h.value("year_scale", cfg.household.year_scale);
    if (h.contains("blocking") && !h["blocking"].is_null())
      cfg.household.blocking = h["blocking"].get<std::string>();
    if (h.contains("subsample_negative_ratio") && !h["subsample_negative_ratio"].is_null())
      cfg.household.subsample_negative_ratio = h["subsample_negative_ratio"].get<double>();
    cfg.household.subsample_seed = h.value("subsample_seed", cfg.household.subsample_seed);
  }

  if (j.contains("individual_fit")) {
    const json& i = j["individual_fit"];
    check_known_keys(i, {"lambda_grid", "cv_folds", "cv_seed", "max_iter", "step_tol"},
                     "individual_fit");
    if (i.contains("lambda_grid")) cfg.individual.lambda_grid = i["lambda_grid"].get<std::vector<double>>();
    cfg.individual.cv_folds = i.value("cv_folds", cfg.individual.cv_folds);
    cfg.individual.cv_seed = i.value("cv_seed", cfg.individual.cv_seed);
    cfg.individual.max_iter = i.value("max_iter", cfg.individual.max_iter);
    cfg.individual.step_tol = i.value("step_tol", cfg.individual.step_tol);
  }

  if (j.contains("fs")) {
    const json& f = j["fs"];
    check_known_keys(f, {"blocking_keys", "threshold", "max_iter", "tol"}, "fs");
    if (f.contains("blocking_keys"))
      cfg.fs.blocking_keys = f["blocking_keys"].get<std::vector<std::string>>();
    cfg.fs.threshold = f.value("threshold", cfg.fs.threshold);
    cfg.fs.max_iter = f.value("max_iter", cfg.fs.max_iter);
    cfg.fs.tol = f.value("tol", cfg.fs.tol);
  }

  if (j.contains("validation")) {
    const json& v = j["validation"];
    check_known_keys(v, {"train_fraction", "n_repeats"}, "validation");
    cfg.split.train_fraction = v.value("train_fraction", cfg.split.train_fraction);
    cfg.split.n_repeats = v.value("n_repeats", cfg.split.n_repeats);
  }

  if (j.contains("policy")) {
    const json& p = j["policy"];
    check_known_keys(p,
                     {"region_of_birth_feature", "sector_feature", "employment_feature",
                      "not_born_category", "no_sector_category", "quals_without_sector"},
                     "policy");
    cfg.policy.region_of_birth_feature =
        p.value("region_of_birth_feature", cfg.policy.region_of_birth_feature);
    cfg.policy.sector_feature = p.value("sector_feature", cfg.policy.sector_feature);
    cfg.policy.employment_feature =
        p.value("employment_feature", cfg.policy.employment_feature);
    cfg.policy.not_born_category = p.value("not_born_category", cfg.policy.not_born_category);
    cfg.policy.no_sector_category =
        p.value("no_sector_category", cfg.policy.no_sector_category);
    if (p.contains("quals_without_sector")) {
      cfg.policy.quals_without_sector.clear();
      for (const auto& q : p["quals_without_sector"])
        cfg.policy.quals_without_sector.insert(q.get<std::string>());
    }
  }
}

AttributeSchema load_schema(const RunConfig& cfg) {
  if (cfg.schema_path.empty()) return AttributeSchema::survey_default();
  const json j = load_json(cfg.schema_path);
  if (!j.contains("features")) fail(ErrorCode::Parse, "schema file needs a 'features' array");
  std::vector<FeatureSpec> features;
  for (const auto& f : j["features"]) {
    FeatureSpec spec;
    spec.name = f.at("name").get<std::string>();
    const std::string kind = f.value("kind", "categorical");
    if (kind == "categorical") spec.kind = FeatureKind::Categorical;
    else if (kind == "year") spec.kind = FeatureKind::Year;
    else fail(ErrorCode::Parse, "feature kind must be 'categorical' or 'year': " + kind);
    features.push_back(std::move(spec));
  }
  return AttributeSchema(std::move(features));
}

json resolved_config_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["output_dir"] = cfg.output_dir;
  j["method"] = cfg.method;
  j["schema"] = cfg.schema_path;
  j["wave1"] = cfg.wave1_path;
  j["wave2"] = cfg.wave2_path;
  j["truth_households"] = cfg.truth_households_path;
  j["truth_individuals"] = cfg.truth_individuals_path;
  j["one_to_one"] = cfg.one_to_one;
  j["synthetic"] = {{"n_households", cfg.synthetic.n_households},
                    {"household_size_distribution", cfg.synthetic.household_size_distribution},
                    {"carry_forward_rate", cfg.synthetic.carry_forward_rate},
                    {"attribute_flip_rates", cfg.synthetic.attribute_flip_rates},
                    {"member_leave_rate", cfg.synthetic.member_leave_rate},
                    {"member_join_rate", cfg.synthetic.member_join_rate},
                    {"age_increment", cfg.synthetic.age_increment}};
  j["household_fit"] = {{"init_beta0", cfg.household.init_beta0},
                        {"init_beta", cfg.household.init_beta},
                        {"max_iter", cfg.household.max_iter},
                        {"tol", cfg.household.tol},
                        {"year_scale", cfg.household.year_scale},
                        {"blocking", cfg.household.blocking ? json(*cfg.household.blocking)
                                                            : json(nullptr)},
                        {"subsample_negative_ratio",
                         cfg.household.subsample_negative_ratio
                             ? json(*cfg.household.subsample_negative_ratio)
                             : json(nullptr)},
                        {"subsample_seed", cfg.household.subsample_seed}};
  j["individual_fit"] = {{"lambda_grid", cfg.individual.lambda_grid},
                         {"cv_folds", cfg.individual.cv_folds},
                         {"cv_seed", cfg.individual.cv_seed},
                         {"max_iter", cfg.individual.max_iter},
                         {"step_tol", cfg.individual.step_tol}};
  j["fs"] = {{"blocking_keys", cfg.fs.blocking_keys},
             {"threshold", cfg.fs.threshold},
             {"max_iter", cfg.fs.max_iter},
             {"tol", cfg.fs.tol}};
  j["validation"] = {{"train_fraction", cfg.split.train_fraction},
                     {"n_repeats", cfg.split.n_repeats}};
  std::vector<std::string> quals(cfg.policy.quals_without_sector.begin(),
                                 cfg.policy.quals_without_sector.end());
  std::sort(quals.begin(), quals.end());
  j["policy"] = {{"region_of_birth_feature", cfg.policy.region_of_birth_feature},
                 {"sector_feature", cfg.policy.sector_feature},
                 {"employment_feature", cfg.policy.employment_feature},
                 {"not_born_category", cfg.policy.not_born_category},
                 {"no_sector_category", cfg.policy.no_sector_category},
                 {"quals_without_sector", quals}};
  return j;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_output_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory: " + cfg.output_dir);
}

void write_provenance(const RunConfig& cfg) {
  save_json(resolved_config_json(cfg), cfg.output_dir + "/resolved_config.json");
}

PipelineOptions pipeline_options(const RunConfig& cfg) {
  PipelineOptions opts;
  opts.household = cfg.household;
  opts.individual = cfg.individual;
  opts.individual.year_scale = cfg.household.year_scale;
  opts.one_to_one = cfg.one_to_one;
  opts.threads = cfg.threads;
  return opts;
}

struct LoadedData {
  AttributeSchema schema;
  Wave wave1, wave2;
};

LoadedData load_waves_with_policy(const RunConfig& cfg) {
  AttributeSchema schema = load_schema(cfg);
  if (cfg.wave1_path.empty() || cfg.wave2_path.empty())
    fail(ErrorCode::Config, "wave1 and wave2 csv paths are required");
  Wave w1 = apply_missing_policy(load_wave(cfg.wave1_path, schema, cfg.wave1_label), schema,
                                 cfg.policy);
  Wave w2 = apply_missing_policy(load_wave(cfg.wave2_path, schema, cfg.wave2_label), schema,
                                 cfg.policy);
  return LoadedData{std::move(schema), std::move(w1), std::move(w2)};
}

GroundTruth load_truth_files(const RunConfig& cfg) {
  if (cfg.truth_households_path.empty() || cfg.truth_individuals_path.empty())
    fail(ErrorCode::Config, "truth_households and truth_individuals csv paths are required");
  return load_truth(cfg.truth_households_path, cfg.truth_individuals_path);
}

int cmd_simulate(RunConfig cfg) {
  ensure_output_dir(cfg);
  cfg.synthetic.seed = cfg.seed;
  const AttributeSchema schema = load_schema(cfg);
  const SyntheticData data = generate_synthetic(cfg.synthetic, schema);

  write_wave(data.wave1, schema, cfg.output_dir + "/wave1.csv");
  write_wave(data.wave2, schema, cfg.output_dir + "/wave2.csv");
  write_id_pairs(data.truth.household_pairs(), cfg.output_dir + "/truth_households.csv");
  write_id_pairs(data.truth.individual_pairs(), cfg.output_dir + "/truth_individuals.csv");

  if (cfg.simulate_triple) {
    SyntheticConfig next = cfg.synthetic;
    next.seed = cfg.seed + 1;
    const auto [wave3, truth23] = evolve_wave(data.wave2, next, schema, "wave3", '3');
    write_wave(wave3, schema, cfg.output_dir + "/wave3.csv");
    write_id_pairs(truth23.household_pairs(), cfg.output_dir + "/truth_households_23.csv");
    write_id_pairs(truth23.individual_pairs(), cfg.output_dir + "/truth_individuals_23.csv");
  }
  write_provenance(cfg);

  const double proportion = static_cast<double>(data.truth.household_pairs().size()) /
                            static_cast<double>(data.wave1.household_count());
  std::printf("N1=%zu n1=%zu N2=%zu n2=%zu match_proportion=%.4f\n",
              data.wave1.household_count(), data.wave1.individual_count(),
              data.wave2.household_count(), data.wave2.individual_count(), proportion);
  return 0;
}

int cmd_train(RunConfig cfg) {
  ensure_output_dir(cfg);
  if (cfg.verbose) std::fprintf(stderr, "loading waves and truth\n");
  LoadedData data = load_waves_with_policy(cfg);
  const GroundTruth truth = load_truth_files(cfg);
  if (cfg.verbose)
    std::fprintf(stderr, "N1=%zu N2=%zu truth household pairs=%zu\n",
                 data.wave1.household_count(), data.wave2.household_count(),
                 truth.household_pairs().size());

  if (cfg.method == "fs-baseline") {
    const PatternCounts patterns =
        blocked_pattern_counts(data.wave1, data.wave2, data.schema, cfg.fs.blocking_keys);
    const FSModel model = fs_em_fit(patterns, cfg.fs);
    json j = {{"m", model.m},
              {"u", model.u},
              {"pi", model.pi},
              {"threshold", model.threshold},
              {"blocking_keys", model.blocking_keys},
              {"iterations", model.iterations},
              {"converged", model.converged}};
    save_json(j, cfg.output_dir + "/fs_model.json");
    write_provenance(cfg);
    std::printf("fs-baseline model: pi=%.6f iterations=%d converged=%d\n", model.pi,
                model.iterations, model.converged ? 1 : 0);
    return 0;
  }
  if (cfg.method != "hhlink")
    fail(ErrorCode::Config, "method must be 'hhlink' or 'fs-baseline': " + cfg.method);

  const PipelineOptions opts = pipeline_options(cfg);
  if (cfg.verbose) std::fprintf(stderr, "fitting household and individual models\n");
  const FittedModels models = fit_pipeline(data.wave1, data.wave2, truth, data.schema, opts);
  save_json(household_model_to_json(models.household),
            cfg.output_dir + "/household_model.json");
  save_json(individual_model_to_json(models.individual),
            cfg.output_dir + "/individual_model.json");

  const SideReport train =
      evaluate_side(data.wave1, data.wave2, truth, models, data.schema, opts);
  save_json(side_report_to_json(train), cfg.output_dir + "/train_metrics.json");
  write_provenance(cfg);
  std::printf("household model: ll=%.4f converged=%d tau=%.4f | train F1 hh=%.4f ind=%.4f\n",
              models.household.diagnostics.final_log_likelihood,
              models.household.diagnostics.converged ? 1 : 0, models.household.tau,
              train.household.f1, train.individual_within.f1);
  return 0;
}

int cmd_predict(RunConfig cfg) {
  ensure_output_dir(cfg);
  LoadedData data = load_waves_with_policy(cfg);

  if (cfg.method == "fs-baseline") {
    if (cfg.fs_model_path.empty())
      fail(ErrorCode::Config, "--fs-model is required for method fs-baseline");
    const json j = load_json(cfg.fs_model_path);
    FSModel model;
    model.m = j.at("m").get<std::vector<double>>();
    model.u = j.at("u").get<std::vector<double>>();
    model.pi = j.at("pi").get<double>();
    model.threshold = j.value("threshold", 0.5);
    model.blocking_keys = j.at("blocking_keys").get<std::vector<std::string>>();
    const FSPrediction pred = fs_predict(data.wave1, data.wave2, model, data.schema);
    std::ofstream out(cfg.output_dir + "/individual_matches.csv");
    if (!out) fail(ErrorCode::Io, "cannot write individual_matches.csv");
    out << "individual_id_1,individual_id_2,q,matched_flag,household_pair\n";
    for (const auto& d : pred.decisions)
      out << d.individual_id1 << ',' << d.individual_id2 << ',' << fmt_double(d.posterior)
          << ',' << (d.matched ? 1 : 0) << ",\n";
    write_provenance(cfg);
    std::printf("fs-baseline: scored_pairs=%llu decisions=%zu\n",
                static_cast<unsigned long long>(pred.scored_pairs), pred.decisions.size());
    return 0;
  }

  if (cfg.household_model_path.empty() || cfg.individual_model_path.empty())
    fail(ErrorCode::Config, "--household-model and --individual-model are required");
  const HouseholdModel hh_model =
      household_model_from_json(load_json(cfg.household_model_path));
  const IndividualModel ind_model =
      individual_model_from_json(load_json(cfg.individual_model_path));

  HouseholdPredictOptions popts;
  popts.blocking = cfg.household.blocking;
  popts.one_to_one = cfg.one_to_one;
  popts.threads = cfg.threads;
  if (cfg.verbose) std::fprintf(stderr, "scoring household pairs\n");
  const HouseholdPrediction pred =
      predict_households(data.wave1, data.wave2, hh_model, data.schema, popts);
  const LinkageResult link =
      link_individuals(data.wave1, data.wave2, pred, ind_model, data.schema, cfg.threads);

  {
    std::ofstream out(cfg.output_dir + "/household_matches.csv");
    if (!out) fail(ErrorCode::Io, "cannot write household_matches.csv");
    out << "household_id_1,household_id_2,p,match_flag\n";
    for (const auto& d : pred.best) {
      if (d.household_id2.empty()) continue;  // no scored candidate under blocking
      out << d.household_id1 << ',' << d.household_id2 << ',' << fmt_double(d.p) << ','
          << (d.matched ? 1 : 0) << '\n';
    }
  }
  {
    std::ofstream out(cfg.output_dir + "/individual_matches.csv");
    if (!out) fail(ErrorCode::Io, "cannot write individual_matches.csv");
    out << "individual_id_1,individual_id_2,q,matched_flag,household_pair\n";
    for (const auto& p : link.pairs)
      out << p.individual_id1 << ',' << p.individual_id2 << ',' << fmt_double(p.q) << ','
          << (p.matched ? 1 : 0) << ',' << p.household_id1 << ':' << p.household_id2 << '\n';
  }
  if (cfg.write_deltas) {
    const auto deltas = all_pairs_hausdorff(data.wave1, data.wave2, hh_model.weights,
                                            data.schema, cfg.household.blocking, cfg.threads);
    std::ofstream out(cfg.output_dir + "/deltas.csv");
    if (!out) fail(ErrorCode::Io, "cannot write deltas.csv");
    out << "household_id_1,household_id_2,delta\n";
    for (const auto& e : deltas)
      out << data.wave1.households()[e.s].household_id << ','
          << data.wave2.households()[e.t].household_id << ',' << fmt_double(e.delta) << '\n';
  }
  write_provenance(cfg);

  std::size_t matched_hh = 0, matched_ind = 0;
  for (const auto& d : pred.best) matched_hh += d.matched ? 1 : 0;
  for (const auto& p : link.pairs) matched_ind += p.matched ? 1 : 0;
  std::printf("matched_households=%zu matched_individuals=%zu candidate_pairs=%zu\n",
              matched_hh, matched_ind, link.pairs.size());
  return 0;
}

int cmd_evaluate(RunConfig cfg) {
  ensure_output_dir(cfg);
  LoadedData data = load_waves_with_policy(cfg);
  const GroundTruth truth = load_truth_files(cfg);
  validate_truth(truth, data.wave1, data.wave2);

  if (cfg.individual_matches_path.empty())
    fail(ErrorCode::Config, "--individual-matches is required");

  auto read_matches = [](const std::string& path, bool with_household_pair) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::Parse, "empty match file: " + path);
    std::vector<std::pair<IdPair, bool>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::string cell;
      for (char c : line) {
        if (c == ',') {
          cells.push_back(cell);
          cell.clear();
        } else if (c != '\r') {
          cell.push_back(c);
        }
      }
      cells.push_back(cell);
      const std::size_t expect = with_household_pair ? 5 : 4;
      if (cells.size() != expect)
        fail(ErrorCode::Parse,
             "bad match row (line " + std::to_string(lineno) + ") in " + path);
      rows.push_back({{cells[0], cells[1]}, cells[3] == "1"});
    }
    return rows;
  };

  json report;
  std::vector<IdPair> hh_decided;
  std::vector<IdPair> predicted_hh_pairs;
  if (!cfg.household_matches_path.empty()) {
    for (const auto& [pair, matched] : read_matches(cfg.household_matches_path, false)) {
      if (data.wave1.find_household(pair.first) == nullptr ||
          data.wave2.find_household(pair.second) == nullptr)
        fail(ErrorCode::Data, "household match references unknown household " + pair.first +
                                  " or " + pair.second);
      if (matched) {
        hh_decided.push_back(pair);
        predicted_hh_pairs.push_back(pair);
      }
    }
    const std::uint64_t universe =
        static_cast<std::uint64_t>(data.wave1.household_count()) *
        data.wave2.household_count();
    report["household"] = metric_report_to_json(
        compute_metrics(hh_decided, truth.household_pairs(), universe, "households:all-pairs"));
    std::vector<std::string> hh_ids;
    for (const auto& hh : data.wave1.households()) hh_ids.push_back(hh.household_id);
    report["household_entities"] = per_entity_to_json(
        per_entity_accounting(hh_decided, truth.household_pairs(), hh_ids));
  }

  std::vector<IdPair> ind_decided;
  for (const auto& [pair, matched] : read_matches(cfg.individual_matches_path, true)) {
    if (!data.wave1.find_individual(pair.first) || !data.wave2.find_individual(pair.second))
      fail(ErrorCode::Data, "individual match references unknown individual " + pair.first +
                                " or " + pair.second);
    if (matched) ind_decided.push_back(pair);
  }

  const std::uint64_t all_pairs_universe =
      static_cast<std::uint64_t>(data.wave1.individual_count()) * data.wave2.individual_count();
  report["individual_all_pairs"] = metric_report_to_json(compute_metrics(
      ind_decided, truth.individual_pairs(), all_pairs_universe, "individuals:all-pairs"));
  report["individual_global"] =
      metric_report_to_json(global_pair_metrics(ind_decided, truth.individual_pairs()));

  if (!predicted_hh_pairs.empty()) {
    std::unordered_map<std::string, std::string> hh_of_1, hh_of_2;
    for (const auto& hh : data.wave1.households())
      for (const auto& ind : hh.members) hh_of_1.emplace(ind.individual_id, hh.household_id);
    for (const auto& hh : data.wave2.households())
      for (const auto& ind : hh.members) hh_of_2.emplace(ind.individual_id, hh.household_id);
    std::unordered_set<std::string> pair_set;
    std::uint64_t universe = 0;
    for (const auto& [a, b] : predicted_hh_pairs) {
      pair_set.insert(a + '\x1f' + b);
      universe += static_cast<std::uint64_t>(data.wave1.find_household(a)->members.size()) *
                  data.wave2.find_household(b)->members.size();
    }
    std::vector<IdPair> truth_within;
    for (const auto& p : truth.individual_pairs()) {
      auto h1 = hh_of_1.find(p.first);
      auto h2 = hh_of_2.find(p.second);
      if (h1 == hh_of_1.end() || h2 == hh_of_2.end()) continue;
      if (pair_set.count(h1->second + '\x1f' + h2->second) > 0) truth_within.push_back(p);
    }
    report["individual_within_matched"] = metric_report_to_json(compute_metrics(
        ind_decided, truth_within, universe, "individuals:within-matched-households"));
  }

  std::vector<std::string> ind_ids;
  for (const auto& hh : data.wave1.households())
    for (const auto& ind : hh.members) ind_ids.push_back(ind.individual_id);
  report["individual_entities"] =
      per_entity_to_json(per_entity_accounting(ind_decided, truth.individual_pairs(), ind_ids));

  save_json(report, cfg.output_dir + "/evaluation.json");
  {
    std::ofstream out(cfg.output_dir + "/evaluation.txt");
    out << report.dump(2) << '\n';
  }
  write_provenance(cfg);
  std::printf("evaluation written to %s/evaluation.json\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_compare(RunConfig cfg) {
  ensure_output_dir(cfg);
  LoadedData data = load_waves_with_policy(cfg);
  const GroundTruth truth = load_truth_files(cfg);

  SplitSpec split = cfg.split;
  split.seed = cfg.seed;
  split.n_repeats = 1;
  const MethodComparison cmp = compare_methods(data.wave1, data.wave2, truth, data.schema,
                                               split, pipeline_options(cfg), cfg.fs);
  save_json(comparison_to_json(cmp), cfg.output_dir + "/comparison.json");
  const std::string table = format_comparison_table(cmp);
  {
    std::ofstream out(cfg.output_dir + "/comparison.txt");
    out << table;
  }
  write_provenance(cfg);
  std::fputs(table.c_str(), stdout);
  return 0;
}

int cmd_validate(RunConfig cfg, const std::string& mode) {
  ensure_output_dir(cfg);
  LoadedData data = load_waves_with_policy(cfg);
  const GroundTruth truth = load_truth_files(cfg);
  const PipelineOptions opts = pipeline_options(cfg);

  if (mode == "internal") {
    SplitSpec split = cfg.split;
    split.seed = cfg.seed;
    const ValidationSummary summary =
        internal_validation(data.wave1, data.wave2, truth, data.schema, split, opts);
    save_json(validation_summary_to_json(summary), cfg.output_dir + "/internal_validation.json");
    const std::string text = format_validation_summary(summary);
    std::ofstream out(cfg.output_dir + "/internal_validation.txt");
    out << text;
    write_provenance(cfg);
    std::fputs(text.c_str(), stdout);
    return 0;
  }
  if (mode != "external") fail(ErrorCode::Config, "mode must be 'internal' or 'external'");

  if (cfg.test_wave1_path.empty() || cfg.test_wave2_path.empty())
    fail(ErrorCode::Config, "external validation needs --test-wave1 and --test-wave2");
  if (cfg.test_truth_households_path.empty() || cfg.test_truth_individuals_path.empty())
    fail(ErrorCode::Config, "external validation needs test truth files");

  Wave test1 = apply_missing_policy(
      load_wave(cfg.test_wave1_path, data.schema, cfg.test_wave1_label), data.schema, cfg.policy);
  Wave test2 = apply_missing_policy(
      load_wave(cfg.test_wave2_path, data.schema, cfg.test_wave2_label), data.schema, cfg.policy);
  const GroundTruth truth23 =
      load_truth(cfg.test_truth_households_path, cfg.test_truth_individuals_path);

  const ExternalReport report = external_validation(
      data.wave1, data.wave2, truth, test1, test2, truth23, data.schema, opts);
  save_json(external_report_to_json(report), cfg.output_dir + "/external_validation.json");

  std::ostringstream text;
  text << "Household model coefficients (beta0 then schema order): "
       << fmt_double(report.models.household.beta0);
  for (double b : report.models.household.weights.beta) text << ' ' << fmt_double(b);
  text << "\ntau: " << fmt_double(report.models.household.tau) << "\n\n";
  text << format_metric_pair_table("Households", report.train.household,
                                   report.test.household, "train", "test")
       << '\n';
  text << format_rank_table(report.train.household_ranks, report.test.household_ranks, "train",
                            "test")
       << '\n';
  text << format_metric_pair_table("Individuals (within matched households)",
                                   report.train.individual_within,
                                   report.test.individual_within, "train", "test")
       << '\n';
  text << format_per_entity_table(report.train.individual_entities,
                                  report.test.individual_entities, "train", "test");
  std::ofstream out(cfg.output_dir + "/external_validation.txt");
  out << text.str();
  write_provenance(cfg);
  std::fputs(text.str().c_str(), stdout);
  return 0;
}

int run(int argc, char** argv) {
  // The config file loads before flag parsing so flags can override it;
  // pre-scan argv for --config.
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) load_config_file(cfg, config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return 1;
  }

  CLI::App app{"hhlink: household-first record linkage across survey waves"};
  app.require_subcommand(1);

  std::string sink;  // --config already handled above
  app.add_option("--config", sink, "JSON config file");
  app.add_option("--seed", cfg.seed, "Master seed for all stochastic steps");
  app.add_option("--threads", cfg.threads,
                 "Worker thread cap (0 = all cores); never changes results");
  app.add_option("--output-dir", cfg.output_dir, "Output directory");
  app.add_flag("--verbose", cfg.verbose, "Chatty progress on stderr");

  auto add_data_options = [&](CLI::App* cmd) {
    cmd->add_option("--schema", cfg.schema_path, "Schema JSON (default: built-in 8 features)");
    cmd->add_option("--wave1", cfg.wave1_path, "Wave 1 CSV");
    cmd->add_option("--wave2", cfg.wave2_path, "Wave 2 CSV");
    cmd->add_option("--truth-households", cfg.truth_households_path, "Household truth CSV");
    cmd->add_option("--truth-individuals", cfg.truth_individuals_path, "Individual truth CSV");
    cmd->add_option("--method", cfg.method, "hhlink | fs-baseline");
    cmd->add_option("--blocking",
                    [&](const std::vector<std::string>& v) {
                      cfg.household.blocking = v.back();
                      return true;
                    },
                    "Household-stage block key (feature name)");
    cmd->add_flag("--one-to-one", cfg.one_to_one,
                  "Post-filter household matches to one-to-one");
  };

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic two-wave dataset");
  simulate->fallthrough();
  simulate->add_option("--n-households", cfg.synthetic.n_households, "Household count");
  simulate->add_option("--carry-forward", cfg.synthetic.carry_forward_rate,
                       "Carry-forward rate");
  simulate->add_option("--flip-rate",
                       [&](const std::vector<std::string>& v) {
                         cfg.synthetic.attribute_flip_rates.assign(8, std::stod(v.back()));
                         return true;
                       },
                       "Uniform per-feature flip rate");
  simulate->add_option("--leave-rate", cfg.synthetic.member_leave_rate, "Member leave rate");
  simulate->add_option("--join-rate", cfg.synthetic.member_join_rate, "Member join rate");
  simulate->add_option("--age-increment", cfg.synthetic.age_increment,
                       "Year increment between waves");
  simulate->add_flag("--triple", cfg.simulate_triple,
                     "Also evolve wave2 into wave3 for external validation");
  simulate->add_option("--schema", cfg.schema_path, "Schema JSON");

  auto* train = app.add_subcommand("train", "Fit models on labeled waves");
  train->fallthrough();
  add_data_options(train);

  auto* predict = app.add_subcommand("predict", "Score and match two waves");
  predict->fallthrough();
  add_data_options(predict);
  predict->add_option("--household-model", cfg.household_model_path, "household_model.json");
  predict->add_option("--individual-model", cfg.individual_model_path,
                      "individual_model.json");
  predict->add_option("--fs-model", cfg.fs_model_path, "fs_model.json");
  predict->add_flag("--write-deltas", cfg.write_deltas,
                    "Also dump the household distance table");

  auto* evaluate = app.add_subcommand("evaluate", "Score match files against truth");
  evaluate->fallthrough();
  add_data_options(evaluate);
  evaluate->add_option("--household-matches", cfg.household_matches_path,
                       "household_matches.csv");
  evaluate->add_option("--individual-matches", cfg.individual_matches_path,
                       "individual_matches.csv");

  auto* compare = app.add_subcommand("compare", "hhlink vs fs-baseline on one split");
  compare->fallthrough();
  add_data_options(compare);
  compare->add_option("--train-fraction", cfg.split.train_fraction, "Training fraction");

  std::string validate_mode = "internal";
  auto* validate = app.add_subcommand("validate", "Internal or external validation harness");
  validate->fallthrough();
  add_data_options(validate);
  validate->add_option("--mode", validate_mode, "internal | external");
  validate->add_option("--train-fraction", cfg.split.train_fraction, "Training fraction");
  validate->add_option("--repeats", cfg.split.n_repeats, "Internal validation repeats");
  validate->add_option("--test-wave1", cfg.test_wave1_path, "Test pair: first wave CSV");
  validate->add_option("--test-wave2", cfg.test_wave2_path, "Test pair: second wave CSV");
  validate->add_option("--test-truth-households", cfg.test_truth_households_path,
                       "Test household truth CSV");
  validate->add_option("--test-truth-individuals", cfg.test_truth_individuals_path,
                       "Test individual truth CSV");
  validate->add_option("--test-wave1-label", cfg.test_wave1_label,
                       "Label of the shared middle wave");
  validate->add_option("--test-wave2-label", cfg.test_wave2_label, "Label of the new wave");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (predict->parsed()) return cmd_predict(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg);
    if (compare->parsed()) return cmd_compare(cfg);
    if (validate->parsed()) return cmd_validate(cfg, validate_mode);
    fail(ErrorCode::Config, "no subcommand given");
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace hhlink::cli

int main(int argc, char** argv) { return hhlink::cli::run(argc, argv); }
