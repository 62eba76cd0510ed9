#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "hhlink/assignment.hpp"
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

namespace py = pybind11;
using namespace hhlink;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return py::none();
    case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float: return py::float_(j.get<double>());
    case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
    case nlohmann::json::value_t::array: {
      py::list out;
      for (const auto& item : j) out.append(json_to_py(item));
      return out;
    }
    case nlohmann::json::value_t::object: {
      py::dict out;
      for (const auto& [key, value] : j.items()) out[py::str(key)] = json_to_py(value);
      return out;
    }
    default: return py::none();
  }
}

Value py_to_value(const py::handle& v, FeatureKind kind) {
  if (v.is_none()) return Value::missing();
  if (kind == FeatureKind::Year) return Value::of_year(v.cast<int>());
  return Value::of_category(v.cast<std::string>());
}

Individual make_individual(const AttributeSchema& schema, const std::string& individual_id,
                           const std::string& household_id, const py::sequence& values) {
  if (values.size() != schema.feature_count())
    fail(ErrorCode::Data, "expected one value per schema feature");
  Individual ind;
  ind.individual_id = individual_id;
  ind.household_id = household_id;
  for (std::size_t k = 0; k < schema.feature_count(); ++k)
    ind.values.push_back(py_to_value(values[k], schema.feature(k).kind));
  return ind;
}

py::object value_to_py(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Category: return py::str(v.category);
    case Value::Kind::Year: return py::int_(v.year);
    default: return py::none();
  }
}

SyntheticConfig synthetic_config_from_kwargs(const py::kwargs& kwargs) {
  SyntheticConfig cfg;
  for (const auto& item : kwargs) {
    const std::string key = item.first.cast<std::string>();
    if (key == "seed") cfg.seed = item.second.cast<std::uint64_t>();
    else if (key == "n_households") cfg.n_households = item.second.cast<int>();
    else if (key == "household_size_distribution")
      cfg.household_size_distribution = item.second.cast<std::vector<double>>();
    else if (key == "carry_forward_rate") cfg.carry_forward_rate = item.second.cast<double>();
    else if (key == "attribute_flip_rates") {
      if (py::isinstance<py::float_>(item.second) || py::isinstance<py::int_>(item.second))
        cfg.attribute_flip_rates.assign(8, item.second.cast<double>());
      else
        cfg.attribute_flip_rates = item.second.cast<std::vector<double>>();
    } else if (key == "member_leave_rate") cfg.member_leave_rate = item.second.cast<double>();
    else if (key == "member_join_rate") cfg.member_join_rate = item.second.cast<double>();
    else if (key == "age_increment") cfg.age_increment = item.second.cast<int>();
    else fail(ErrorCode::Config, "unknown synthetic option: " + key);
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Household-first record linkage: Hausdorff household matching, "
            "ridge-penalized individual matching, exact one-to-one assignment, "
            "and a Fellegi-Sunter baseline.";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_ValueError,
                      (std::string(error_code_name(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<AttributeSchema>(m, "AttributeSchema")
      .def(py::init([](const std::vector<std::pair<std::string, std::string>>& features) {
             std::vector<FeatureSpec> specs;
             for (const auto& [name, kind] : features) {
               if (kind != "categorical" && kind != "year")
                 fail(ErrorCode::Config, "feature kind must be 'categorical' or 'year'");
               specs.push_back(
                   {name, kind == "year" ? FeatureKind::Year : FeatureKind::Categorical});
             }
             return AttributeSchema(std::move(specs));
           }),
           py::arg("features"))
      .def_static("survey_default", &AttributeSchema::survey_default)
      .def_property_readonly("feature_count", &AttributeSchema::feature_count)
      .def("feature_names", [](const AttributeSchema& s) {
        std::vector<std::string> names;
        for (const auto& f : s.features()) names.push_back(f.name);
        return names;
      });

  py::class_<Individual>(m, "Individual")
      .def_readonly("individual_id", &Individual::individual_id)
      .def_readonly("household_id", &Individual::household_id)
      .def("values", [](const Individual& ind) {
        py::list out;
        for (const auto& v : ind.values) out.append(value_to_py(v));
        return out;
      });

  py::class_<Household>(m, "Household")
      .def_readonly("household_id", &Household::household_id)
      .def_readonly("members", &Household::members);

  py::class_<Wave>(m, "Wave")
      .def_property_readonly("label", &Wave::label)
      .def_property_readonly("household_count", &Wave::household_count)
      .def_property_readonly("individual_count", &Wave::individual_count)
      .def_property_readonly("households", &Wave::households);

  m.def("make_wave",
        [](const std::string& label,
           const std::vector<std::tuple<std::string, std::string, py::list>>& rows,
           const AttributeSchema& schema) {
          std::vector<Household> households;
          std::unordered_map<std::string, std::size_t> slot;
          for (const auto& [individual_id, household_id, values] : rows) {
            auto [it, fresh] = slot.emplace(household_id, households.size());
            if (fresh) households.push_back(Household{household_id, {}});
            households[it->second].members.push_back(
                make_individual(schema, individual_id, household_id, values));
          }
          return make_wave(label, std::move(households), schema);
        },
        py::arg("label"), py::arg("rows"), py::arg("schema"),
        "rows: (individual_id, household_id, [value per feature]); value = str, int or None");

  py::class_<GroundTruth>(m, "GroundTruth")
      .def(py::init<std::vector<std::pair<std::string, std::string>>,
                    std::vector<std::pair<std::string, std::string>>>(),
           py::arg("household_pairs"), py::arg("individual_pairs"))
      .def_property_readonly("household_pairs", &GroundTruth::household_pairs)
      .def_property_readonly("individual_pairs", &GroundTruth::individual_pairs);

  m.def("load_wave", &load_wave, py::arg("path"), py::arg("schema"), py::arg("wave_label"));
  m.def("write_wave", &write_wave, py::arg("wave"), py::arg("schema"), py::arg("path"));
  m.def("load_truth", &load_truth, py::arg("household_path"), py::arg("individual_path"));
  m.def("apply_missing_policy",
        [](const Wave& wave, const AttributeSchema& schema) {
          return apply_missing_policy(wave, schema);
        },
        py::arg("wave"), py::arg("schema"));

  m.def("generate_synthetic", [](const AttributeSchema& schema, const py::kwargs& kwargs) {
    const SyntheticConfig cfg = synthetic_config_from_kwargs(kwargs);
    SyntheticData data = generate_synthetic(cfg, schema);
    return py::make_tuple(std::move(data.wave1), std::move(data.wave2), std::move(data.truth));
  }, py::arg("schema"));

  py::class_<FeatureWeights>(m, "FeatureWeights")
      .def(py::init([](std::vector<double> beta, double year_scale) {
             return FeatureWeights{std::move(beta), year_scale};
           }),
           py::arg("beta"), py::arg("year_scale") = 50.0)
      .def_readonly("beta", &FeatureWeights::beta)
      .def_readonly("year_scale", &FeatureWeights::year_scale);

  m.def("feature_distance", &feature_distance, py::arg("a"), py::arg("b"), py::arg("k"),
        py::arg("schema"), py::arg("year_scale") = 50.0);
  m.def("pair_distance", &pair_distance, py::arg("a"), py::arg("b"), py::arg("weights"),
        py::arg("schema"));
  m.def("hausdorff", &hausdorff, py::arg("household_a"), py::arg("household_b"),
        py::arg("weights"), py::arg("schema"));
  m.def("all_pairs_hausdorff",
        [](const Wave& w1, const Wave& w2, const FeatureWeights& w,
           const AttributeSchema& schema, std::optional<std::string> block_key, int threads) {
          std::vector<std::tuple<std::string, std::string, double>> out;
          for (const auto& e : all_pairs_hausdorff(w1, w2, w, schema, block_key, threads))
            out.emplace_back(w1.households()[e.s].household_id,
                             w2.households()[e.t].household_id, e.delta);
          return out;
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("weights"), py::arg("schema"),
        py::arg("block_key") = std::nullopt, py::arg("threads") = 0);

  m.def("match_probability", &match_probability, py::arg("delta"), py::arg("beta0"));
  m.def("calibrate_tau", &calibrate_tau, py::arg("max_probabilities"),
        py::arg("target_proportion"));

  py::class_<HouseholdModel>(m, "HouseholdModel")
      .def_readonly("beta0", &HouseholdModel::beta0)
      .def_property_readonly("beta",
                             [](const HouseholdModel& m_) { return m_.weights.beta; })
      .def_property_readonly("year_scale",
                             [](const HouseholdModel& m_) { return m_.weights.year_scale; })
      .def_readonly("tau", &HouseholdModel::tau)
      .def_property_readonly("converged",
                             [](const HouseholdModel& m_) { return m_.diagnostics.converged; })
      .def_property_readonly("log_likelihood", [](const HouseholdModel& m_) {
        return m_.diagnostics.final_log_likelihood;
      })
      .def("to_json", [](const HouseholdModel& m_) {
        return json_to_py(household_model_to_json(m_));
      });

  m.def("fit_household_model",
        [](const Wave& w1, const Wave& w2, const GroundTruth& truth,
           const AttributeSchema& schema, int max_iter, double tol, double year_scale,
           std::optional<std::string> blocking, int threads) {
          HouseholdFitConfig cfg;
          cfg.max_iter = max_iter;
          cfg.tol = tol;
          cfg.year_scale = year_scale;
          cfg.blocking = std::move(blocking);
          cfg.threads = threads;
          return fit_household_model(w1, w2, truth, schema, cfg);
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("truth"), py::arg("schema"),
        py::arg("max_iter") = 200, py::arg("tol") = 1e-6, py::arg("year_scale") = 50.0,
        py::arg("blocking") = std::nullopt, py::arg("threads") = 0);

  m.def("household_log_likelihood",
        [](const Wave& w1, const Wave& w2, const GroundTruth& truth,
           std::vector<double> params, const AttributeSchema& schema, double year_scale) {
          HouseholdFitConfig cfg;
          cfg.year_scale = year_scale;
          const LikelihoodResult r =
              household_log_likelihood(w1, w2, truth, params, schema, cfg);
          return py::make_tuple(r.value, r.gradient);
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("truth"), py::arg("params"),
        py::arg("schema"), py::arg("year_scale") = 50.0);

  py::class_<HouseholdPairDecision>(m, "HouseholdPairDecision")
      .def_readonly("household_id1", &HouseholdPairDecision::household_id1)
      .def_readonly("household_id2", &HouseholdPairDecision::household_id2)
      .def_readonly("p", &HouseholdPairDecision::p)
      .def_readonly("matched", &HouseholdPairDecision::matched)
      .def_readonly("tie", &HouseholdPairDecision::tie);

  py::class_<HouseholdPrediction>(m, "HouseholdPrediction")
      .def_readonly("best", &HouseholdPrediction::best)
      .def_readonly("argmax_ties", &HouseholdPrediction::argmax_ties);

  m.def("predict_households",
        [](const Wave& w1, const Wave& w2, const HouseholdModel& model,
           const AttributeSchema& schema, std::optional<std::string> blocking, bool one_to_one,
           int threads) {
          HouseholdPredictOptions opts;
          opts.blocking = std::move(blocking);
          opts.one_to_one = one_to_one;
          opts.threads = threads;
          return predict_households(w1, w2, model, schema, opts);
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("model"), py::arg("schema"),
        py::arg("blocking") = std::nullopt, py::arg("one_to_one") = false,
        py::arg("threads") = 0);

  m.def("rank_of_truth",
        [](const Wave& w1, const Wave& w2, const HouseholdModel& model,
           const GroundTruth& truth, const AttributeSchema& schema) {
          const RankHistogram h = rank_of_truth(w1, w2, model, truth, schema);
          const auto shares = h.shares();
          return py::dict(
              py::arg("counts") = std::vector<std::uint64_t>(h.counts.begin(), h.counts.end()),
              py::arg("shares") = std::vector<double>(shares.begin(), shares.end()),
              py::arg("total") = h.total);
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("model"), py::arg("truth"),
        py::arg("schema"));

  py::class_<IndividualModel>(m, "IndividualModel")
      .def_readonly("alpha0", &IndividualModel::alpha0)
      .def_readonly("alpha", &IndividualModel::alpha)
      .def_readonly("lambda_", &IndividualModel::lambda)
      .def_readonly("cv_curve", &IndividualModel::cv_curve)
      .def("to_json", [](const IndividualModel& m_) {
        return json_to_py(individual_model_to_json(m_));
      });

  m.def("individual_score", &individual_score, py::arg("a"), py::arg("b"), py::arg("model"),
        py::arg("schema"));

  m.def("fit_individual",
        [](const Wave& w1, const Wave& w2, const GroundTruth& truth,
           const AttributeSchema& schema, std::vector<double> lambda_grid, int cv_folds,
           std::uint64_t cv_seed, double year_scale) {
          IndividualFitConfig cfg;
          cfg.lambda_grid = std::move(lambda_grid);
          cfg.cv_folds = cv_folds;
          cfg.cv_seed = cv_seed;
          cfg.year_scale = year_scale;
          const TrainingPairs pairs = build_training_pairs(w1, w2, truth, schema, year_scale);
          return fit_individual(pairs, cfg);
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("truth"), py::arg("schema"),
        py::arg("lambda_grid") = std::vector<double>{}, py::arg("cv_folds") = 10,
        py::arg("cv_seed") = 1, py::arg("year_scale") = 50.0);

  m.def("assign",
        [](const std::vector<std::vector<double>>& q) {
          ScoreMatrix mat;
          mat.rows = q.size();
          mat.cols = mat.rows == 0 ? 0 : q[0].size();
          for (const auto& row : q) {
            if (row.size() != mat.cols)
              fail(ErrorCode::Data, "score matrix rows have uneven lengths");
            mat.q.insert(mat.q.end(), row.begin(), row.end());
          }
          const Assignment a = assign(mat);
          py::dict out;
          out["q_bar"] = a.q_bar;
          out["objective"] = a.objective;
          out["col_of_row"] = a.col_of_row;
          py::list matched;
          for (const auto& p : a.pairs)
            if (p.matched) matched.append(py::make_tuple(p.row, p.col, p.q));
          out["matched"] = matched;
          return out;
        },
        py::arg("q"), "Exact assignment with the mean-score floor");

  py::class_<LinkedPair>(m, "LinkedPair")
      .def_readonly("individual_id1", &LinkedPair::individual_id1)
      .def_readonly("individual_id2", &LinkedPair::individual_id2)
      .def_readonly("q", &LinkedPair::q)
      .def_readonly("matched", &LinkedPair::matched)
      .def_readonly("household_id1", &LinkedPair::household_id1)
      .def_readonly("household_id2", &LinkedPair::household_id2);

  py::class_<LinkageResult>(m, "LinkageResult")
      .def_readonly("pairs", &LinkageResult::pairs)
      .def_readonly("unmatched_wave1", &LinkageResult::unmatched_wave1)
      .def_readonly("unmatched_wave2", &LinkageResult::unmatched_wave2)
      .def_readonly("objective", &LinkageResult::objective)
      .def_readonly("duplicate_claims", &LinkageResult::duplicate_claims);

  m.def("link_individuals", &link_individuals, py::arg("wave1"), py::arg("wave2"),
        py::arg("prediction"), py::arg("model"), py::arg("schema"), py::arg("threads") = 0);

  m.def("agreement_pattern", &agreement_pattern, py::arg("a"), py::arg("b"), py::arg("schema"));

  py::class_<FSModel>(m, "FSModel")
      .def_readonly("m", &FSModel::m)
      .def_readonly("u", &FSModel::u)
      .def_readonly("pi", &FSModel::pi)
      .def_readonly("threshold", &FSModel::threshold)
      .def_readonly("converged", &FSModel::converged)
      .def_readonly("log_likelihood_trace", &FSModel::log_likelihood_trace);

  m.def("fs_fit",
        [](const Wave& w1, const Wave& w2, const AttributeSchema& schema,
           std::vector<std::string> blocking_keys, double threshold) {
          FSConfig cfg;
          cfg.blocking_keys = std::move(blocking_keys);
          cfg.threshold = threshold;
          return fs_em_fit(blocked_pattern_counts(w1, w2, schema, cfg.blocking_keys), cfg);
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("schema"),
        py::arg("blocking_keys") = std::vector<std::string>{"SEX", "NASCREG"},
        py::arg("threshold") = 0.5);

  m.def("fs_predict",
        [](const Wave& w1, const Wave& w2, const FSModel& model,
           const AttributeSchema& schema) {
          const FSPrediction pred = fs_predict(w1, w2, model, schema);
          std::vector<std::tuple<std::string, std::string, double, bool>> rows;
          for (const auto& d : pred.decisions)
            rows.emplace_back(d.individual_id1, d.individual_id2, d.posterior, d.matched);
          return py::make_tuple(rows, pred.scored_pairs);
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("model"), py::arg("schema"));

  m.def("compute_metrics",
        [](const std::vector<IdPair>& decided, const std::vector<IdPair>& truth,
           std::uint64_t universe_size, const std::string& universe) {
          return json_to_py(
              metric_report_to_json(compute_metrics(decided, truth, universe_size, universe)));
        },
        py::arg("decided"), py::arg("truth"), py::arg("universe_size"), py::arg("universe"));

  m.def("per_entity_accounting",
        [](const std::vector<IdPair>& decided, const std::vector<IdPair>& truth,
           const std::vector<std::string>& entities) {
          return json_to_py(per_entity_to_json(per_entity_accounting(decided, truth, entities)));
        },
        py::arg("decided"), py::arg("truth"), py::arg("wave1_entities"));

  m.def("internal_validation",
        [](const Wave& w1, const Wave& w2, const GroundTruth& truth,
           const AttributeSchema& schema, std::uint64_t seed, double train_fraction,
           int n_repeats, int threads) {
          SplitSpec split{seed, train_fraction, n_repeats};
          PipelineOptions opts;
          opts.threads = threads;
          return json_to_py(validation_summary_to_json(
              internal_validation(w1, w2, truth, schema, split, opts)));
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("truth"), py::arg("schema"),
        py::arg("seed") = 1, py::arg("train_fraction") = 0.6, py::arg("n_repeats") = 10,
        py::arg("threads") = 0);

  m.def("external_validation",
        [](const Wave& w1, const Wave& w2, const GroundTruth& truth12, const Wave& w2_again,
           const Wave& w3, const GroundTruth& truth23, const AttributeSchema& schema,
           int threads) {
          PipelineOptions opts;
          opts.threads = threads;
          return json_to_py(external_report_to_json(
              external_validation(w1, w2, truth12, w2_again, w3, truth23, schema, opts)));
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("truth12"), py::arg("wave2_again"),
        py::arg("wave3"), py::arg("truth23"), py::arg("schema"), py::arg("threads") = 0);

  m.def("compare_methods",
        [](const Wave& w1, const Wave& w2, const GroundTruth& truth,
           const AttributeSchema& schema, std::uint64_t seed, double train_fraction,
           int threads) {
          SplitSpec split{seed, train_fraction, 1};
          PipelineOptions opts;
          opts.threads = threads;
          FSConfig fs;
          return json_to_py(comparison_to_json(
              compare_methods(w1, w2, truth, schema, split, opts, fs)));
        },
        py::arg("wave1"), py::arg("wave2"), py::arg("truth"), py::arg("schema"),
        py::arg("seed") = 1, py::arg("train_fraction") = 0.6, py::arg("threads") = 0);

#ifdef HHLINK_VERSION
  m.attr("__version__") = HHLINK_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
