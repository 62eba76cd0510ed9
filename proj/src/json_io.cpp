#include "hhlink/json_io.hpp"

#include <fstream>

#include "hhlink/errors.hpp"

namespace hhlink {

namespace {

nlohmann::json diagnostics_to_json(const FitDiagnostics& d) {
  return {{"final_log_likelihood", d.final_log_likelihood},
          {"iterations", d.iterations},
          {"converged", d.converged}};
}

FitDiagnostics diagnostics_from_json(const nlohmann::json& j) {
  FitDiagnostics d;
  d.final_log_likelihood = j.value("final_log_likelihood", 0.0);
  d.iterations = j.value("iterations", 0);
  d.converged = j.value("converged", false);
  return d;
}

}  // namespace

nlohmann::json household_model_to_json(const HouseholdModel& model) {
  return {{"beta0", model.beta0},
          {"beta", model.weights.beta},
          {"year_scale", model.weights.year_scale},
          {"tau", model.tau},
          {"diagnostics", diagnostics_to_json(model.diagnostics)}};
}

HouseholdModel household_model_from_json(const nlohmann::json& j) {
  try {
    HouseholdModel m;
    m.beta0 = j.at("beta0").get<double>();
    m.weights.beta = j.at("beta").get<std::vector<double>>();
    m.weights.year_scale = j.value("year_scale", 50.0);
    m.tau = j.at("tau").get<double>();
    if (j.contains("diagnostics")) m.diagnostics = diagnostics_from_json(j["diagnostics"]);
    if (m.tau < 0.0 || m.tau > 1.0) fail(ErrorCode::Parse, "tau must lie in [0,1]");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("invalid household model json: ") + e.what());
  }
}

nlohmann::json individual_model_to_json(const IndividualModel& model) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [lambda, dev] : model.cv_curve) curve.push_back({lambda, dev});
  return {{"alpha0", model.alpha0},
          {"alpha", model.alpha},
          {"lambda", model.lambda},
          {"year_scale", model.year_scale},
          {"cv_curve", curve},
          {"diagnostics", diagnostics_to_json(model.diagnostics)}};
}

IndividualModel individual_model_from_json(const nlohmann::json& j) {
  try {
    IndividualModel m;
    m.alpha0 = j.at("alpha0").get<double>();
    m.alpha = j.at("alpha").get<std::vector<double>>();
    m.lambda = j.at("lambda").get<double>();
    m.year_scale = j.value("year_scale", 50.0);
    if (j.contains("cv_curve"))
      for (const auto& row : j["cv_curve"])
        m.cv_curve.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    if (j.contains("diagnostics")) m.diagnostics = diagnostics_from_json(j["diagnostics"]);
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("invalid individual model json: ") + e.what());
  }
}

void save_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write: " + path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed: " + path);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, "invalid json in " + path + ": " + e.what());
  }
}

}  // namespace hhlink
