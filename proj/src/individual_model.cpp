#include "hhlink/individual_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "hhlink/assignment.hpp"
#include "hhlink/distance.hpp"
#include "hhlink/errors.hpp"
#include "hhlink/logistic.hpp"
#include "hhlink/optim.hpp"
#include "hhlink/parallel.hpp"
#include "hhlink/rng.hpp"

namespace hhlink {

double individual_score(const Individual& a, const Individual& b, const IndividualModel& model,
                        const AttributeSchema& schema) {
  FeatureWeights w;
  w.beta = model.alpha;
  w.year_scale = model.year_scale;
  return stable_sigmoid(model.alpha0 - pair_distance(a, b, w, schema));
}

TrainingPairs build_training_pairs(const Wave& wave1, const Wave& wave2,
                                   const GroundTruth& truth, const AttributeSchema& schema,
                                   double year_scale) {
  TrainingPairs out;
  out.K = schema.feature_count();
  for (std::size_t k = 0; k < out.K; ++k)
    if (schema.feature(k).kind == FeatureKind::Categorical) out.canonical_order.push_back(k);
  for (std::size_t k = 0; k < out.K; ++k)
    if (schema.feature(k).kind == FeatureKind::Year) out.canonical_order.push_back(k);

  for (const auto& [id1, id2] : truth.household_pairs()) {
    const Household* hs = wave1.find_household(id1);
    const Household* ht = wave2.find_household(id2);
    if (hs == nullptr)
      fail(ErrorCode::Data, "truth references unknown household " + id1);
    if (ht == nullptr)
      fail(ErrorCode::Data, "truth references unknown household " + id2);
    for (const Individual& a : hs->members) {
      const std::string* partner = truth.individual_partner(a.individual_id);
      for (const Individual& b : ht->members) {
        for (std::size_t k = 0; k < out.K; ++k)
          out.features.push_back(feature_distance(a, b, k, schema, year_scale));
        const bool z = partner != nullptr && *partner == b.individual_id;
        out.labels.push_back(z ? 1 : 0);
        out.ids.emplace_back(a.individual_id, b.individual_id);
        if (z) ++out.positives;
        else ++out.negatives;
      }
    }
  }
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  const double lo = std::log(1e-4), hi = std::log(1e2);
  for (int i = 0; i < 50; ++i)
    grid.push_back(std::exp(lo + (hi - lo) * static_cast<double>(i) / 49.0));
  return grid;
}

namespace {

double canonical_dot(const TrainingPairs& pairs, std::span<const double> alpha,
                     std::size_t row) {
  const double* x = pairs.features.data() + row * pairs.K;
  double d = 0.0;
  if (pairs.canonical_order.empty()) {
    for (std::size_t k = 0; k < pairs.K; ++k) d += alpha[k] * x[k];
  } else {
    for (std::size_t k : pairs.canonical_order) d += alpha[k] * x[k];
  }
  return d;
}

// Mean deviance (-2 log-likelihood per observation) of a fit on a row subset.
double deviance_over(const TrainingPairs& pairs, const PenalizedFit& fit,
                     std::span<const std::uint32_t> rows) {
  double ll = 0.0;
  for (const std::uint32_t r : rows) {
    const double u = fit.alpha0 - canonical_dot(pairs, fit.alpha, r);
    ll += pairs.labels[r] ? log_sigmoid(u) : log_sigmoid(-u);
  }
  return rows.empty() ? 0.0 : -2.0 * ll / static_cast<double>(rows.size());
}

}  // namespace

PenalizedFit fit_individual_at_lambda(const TrainingPairs& pairs, double lambda,
                                      std::span<const std::uint32_t> rows,
                                      const IndividualFitConfig& config) {
  if (lambda < 0.0) fail(ErrorCode::Config, "lambda must be non-negative");
  const std::size_t K = pairs.K;

  std::vector<std::uint32_t> all;
  if (rows.empty()) {
    all.resize(pairs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
    rows = all;
  }

  std::size_t pos = 0;
  for (const std::uint32_t r : rows) pos += pairs.labels[r];
  if (pos == 0 || pos == rows.size())
    fail(ErrorCode::Data, "cannot fit on single-class labels");

  const BoxObjective objective = [&](std::span<const double> x) {
    const double alpha0 = x[0];
    const std::span<const double> alpha = x.subspan(1);
    ObjectiveValue v;
    v.gradient.assign(K + 1, 0.0);
    double ll = 0.0;
    for (const std::uint32_t r : rows) {
      const double u = alpha0 - canonical_dot(pairs, alpha, r);
      const double z = pairs.labels[r];
      ll += z != 0.0 ? log_sigmoid(u) : log_sigmoid(-u);
      const double resid = z - stable_sigmoid(u);
      v.gradient[0] -= resid;
      const double* feat = pairs.features.data() + static_cast<std::size_t>(r) * K;
      for (std::size_t k = 0; k < K; ++k) v.gradient[k + 1] += resid * feat[k];
    }
    double penalty = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      penalty += lambda * alpha[k] * alpha[k];
      v.gradient[k + 1] += 2.0 * lambda * alpha[k];
    }
    v.value = -ll + penalty;
    return v;
  };

  // Warm start at the base-rate intercept with zero weights.
  std::vector<double> x0(K + 1, 0.0);
  const double rate = static_cast<double>(pos) / static_cast<double>(rows.size());
  x0[0] = std::clamp(std::log(rate / (1.0 - rate)), -10.0, 10.0);

  BoxBounds bounds;
  constexpr double inf = std::numeric_limits<double>::infinity();
  bounds.lower.assign(K + 1, 0.0);
  bounds.upper.assign(K + 1, inf);
  bounds.lower[0] = -inf;

  OptimOptions opts;
  opts.max_iter = config.max_iter;
  opts.grad_tol = 1e-10;
  opts.step_tol = config.step_tol;
  OptimResult res = minimize_box(objective, std::move(x0), bounds, opts);

  PenalizedFit fit;
  fit.alpha0 = res.x[0];
  fit.alpha.assign(res.x.begin() + 1, res.x.end());
  fit.diagnostics.final_log_likelihood = -res.value;  // penalized
  fit.diagnostics.iterations = res.iterations;
  fit.diagnostics.converged = res.converged;
  return fit;
}

IndividualModel fit_individual(const TrainingPairs& pairs, const IndividualFitConfig& config) {
  if (pairs.positives == 0 || pairs.negatives == 0)
    fail(ErrorCode::Data, "individual fit needs at least one positive and one negative label");

  std::vector<double> grid =
      config.lambda_grid.empty() ? default_lambda_grid() : config.lambda_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double l : grid)
    if (l < 0.0) fail(ErrorCode::Config, "lambda grid values must be non-negative");

  const std::size_t folds = std::min<std::size_t>(
      {static_cast<std::size_t>(std::max(config.cv_folds, 0)), pairs.positives,
       pairs.negatives});

  IndividualModel model;
  model.year_scale = config.year_scale;

  double chosen = grid.front();
  if (grid.size() > 1 && folds >= 2) {
    // Label-stratified fold assignment, fixed seed.
    std::vector<std::uint32_t> pos_rows, neg_rows;
    for (std::size_t r = 0; r < pairs.size(); ++r)
      (pairs.labels[r] ? pos_rows : neg_rows).push_back(static_cast<std::uint32_t>(r));
    Rng rng(config.cv_seed);
    rng.shuffle(pos_rows);
    rng.shuffle(neg_rows);
    std::vector<std::vector<std::uint32_t>> fold_rows(folds), train_rows(folds);
    for (std::size_t i = 0; i < pos_rows.size(); ++i) fold_rows[i % folds].push_back(pos_rows[i]);
    for (std::size_t i = 0; i < neg_rows.size(); ++i) fold_rows[i % folds].push_back(neg_rows[i]);
    for (std::size_t f = 0; f < folds; ++f) {
      for (std::size_t g = 0; g < folds; ++g)
        if (g != f)
          train_rows[f].insert(train_rows[f].end(), fold_rows[g].begin(), fold_rows[g].end());
      std::sort(train_rows[f].begin(), train_rows[f].end());
      std::sort(fold_rows[f].begin(), fold_rows[f].end());
    }

    double best_dev = std::numeric_limits<double>::infinity();
    for (const double lambda : grid) {
      double mean_dev = 0.0;
      for (std::size_t f = 0; f < folds; ++f) {
        const PenalizedFit fit =
            fit_individual_at_lambda(pairs, lambda, train_rows[f], config);
        mean_dev += deviance_over(pairs, fit, fold_rows[f]);
      }
      mean_dev /= static_cast<double>(folds);
      model.cv_curve.emplace_back(lambda, mean_dev);
      if (mean_dev <= best_dev) {  // ties prefer the larger (later) lambda
        best_dev = mean_dev;
        chosen = lambda;
      }
    }
  }

  const PenalizedFit fit = fit_individual_at_lambda(pairs, chosen, {}, config);
  model.alpha0 = fit.alpha0;
  model.alpha = fit.alpha;
  model.lambda = chosen;
  model.diagnostics = fit.diagnostics;
  return model;
}

LinkageResult link_individuals(const Wave& wave1, const Wave& wave2,
                               const HouseholdPrediction& prediction,
                               const IndividualModel& model, const AttributeSchema& schema,
                               int threads) {
  struct Task {
    const Household* hs;
    const Household* ht;
  };
  std::vector<Task> tasks;
  for (const auto& d : prediction.best) {
    if (!d.matched) continue;
    const Household* hs = wave1.find_household(d.household_id1);
    const Household* ht = wave2.find_household(d.household_id2);
    if (hs == nullptr || ht == nullptr)
      fail(ErrorCode::Data, "household prediction references households missing from the waves");
    tasks.push_back({hs, ht});
  }

  std::vector<Assignment> solved(tasks.size());
  parallel_chunks(tasks.size(), 16, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      ScoreMatrix m;
      m.rows = tasks[p].hs->members.size();
      m.cols = tasks[p].ht->members.size();
      m.q.reserve(m.rows * m.cols);
      for (const Individual& a : tasks[p].hs->members)
        for (const Individual& b : tasks[p].ht->members)
          m.q.push_back(individual_score(a, b, model, schema));
      solved[p] = assign(m);
    }
  });

  LinkageResult out;
  // Later claims on an already-matched wave-2 individual keep the higher q
  // (ties to the smaller wave-1 id). Only reachable when two wave-1
  // households matched the same wave-2 household.
  std::unordered_map<std::string, std::size_t> claimed;  // id2 -> index into out.pairs
  for (std::size_t p = 0; p < tasks.size(); ++p) {
    const Household& hs = *tasks[p].hs;
    const Household& ht = *tasks[p].ht;
    for (const AssignmentPair& ap : solved[p].pairs) {
      LinkedPair lp;
      lp.individual_id1 = hs.members[ap.row].individual_id;
      lp.individual_id2 = ht.members[ap.col].individual_id;
      lp.q = ap.q;
      lp.matched = ap.matched;
      lp.household_id1 = hs.household_id;
      lp.household_id2 = ht.household_id;
      if (lp.matched) {
        auto [it, inserted] = claimed.emplace(lp.individual_id2, out.pairs.size());
        if (!inserted) {
          LinkedPair& old = out.pairs[it->second];
          ++out.duplicate_claims;
          if (lp.q > old.q || (lp.q == old.q && lp.individual_id1 < old.individual_id1)) {
            old.matched = false;
            it->second = out.pairs.size();
          } else {
            lp.matched = false;
          }
        }
      }
      out.pairs.push_back(std::move(lp));
    }
  }

  std::unordered_set<std::string> matched1, matched2;
  for (const LinkedPair& lp : out.pairs) {
    if (!lp.matched) continue;
    out.objective += lp.q;
    matched1.insert(lp.individual_id1);
    matched2.insert(lp.individual_id2);
  }
  for (const auto& hh : wave1.households())
    for (const auto& ind : hh.members)
      if (matched1.count(ind.individual_id) == 0) out.unmatched_wave1.push_back(ind.individual_id);
  for (const auto& hh : wave2.households())
    for (const auto& ind : hh.members)
      if (matched2.count(ind.individual_id) == 0) out.unmatched_wave2.push_back(ind.individual_id);
  return out;
}

}  // namespace hhlink
