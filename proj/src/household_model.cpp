#include "hhlink/household_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "hhlink/errors.hpp"
#include "hhlink/logistic.hpp"
#include "hhlink/optim.hpp"
#include "hhlink/pair_context.hpp"
#include "hhlink/parallel.hpp"
#include "hhlink/rng.hpp"

namespace hhlink {

double match_probability(double delta, double beta0) {
  if (delta < 0.0) fail(ErrorCode::Data, "match_probability: delta must be non-negative");
  return stable_sigmoid(beta0 - delta);
}

std::array<double, 5> RankHistogram::shares() const {
  std::array<double, 5> s{};
  if (total == 0) return s;
  for (std::size_t i = 0; i < 5; ++i)
    s[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return s;
}

namespace {

constexpr std::size_t kChunk = 8192;

// The pair universe a fit or likelihood evaluation runs over: the full cross,
// a blocked subset, or a negative-subsampled list.
struct ScoredSet {
  PairContext ctx;
  std::vector<std::int32_t> truth_partner;             // per s: wave-2 index or -1
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // empty => full cross
  bool full_cross = true;
  std::size_t positives = 0;

  ScoredSet(const Wave& wave1, const Wave& wave2, const GroundTruth& truth,
            const AttributeSchema& schema, const HouseholdFitConfig& config)
      : ctx(wave1, wave2, schema, config.year_scale) {
    validate_truth(truth, wave1, wave2);

    std::unordered_map<std::string, std::uint32_t> index2;
    for (std::uint32_t t = 0; t < ctx.household_count2(); ++t)
      index2.emplace(ctx.household_id2(t), t);
    truth_partner.assign(ctx.household_count1(), -1);
    for (std::uint32_t s = 0; s < ctx.household_count1(); ++s) {
      const std::string* partner = truth.household_partner(ctx.household_id1(s));
      if (partner != nullptr) truth_partner[s] = static_cast<std::int32_t>(index2.at(*partner));
    }

    if (config.blocking) {
      const auto k = ctx.schema().index_of(*config.blocking);
      if (!k) fail(ErrorCode::Config, "unknown block key: " + *config.blocking);
      pairs = ctx.blocked_household_pairs(*k);
      full_cross = false;
    }

    if (config.subsample_negative_ratio) {
      if (*config.subsample_negative_ratio <= 0.0)
        fail(ErrorCode::Config, "subsample_negative_ratio must be positive");
      subsample(*config.subsample_negative_ratio, config.subsample_seed);
      full_cross = false;
    }

    positives = 0;
    const std::size_t total = pair_count();
    for (std::size_t p = 0; p < total; ++p) {
      const auto [s, t] = pair_at(p);
      if (truth_partner[s] == static_cast<std::int32_t>(t)) ++positives;
    }
  }

  std::size_t pair_count() const {
    return full_cross ? ctx.household_count1() * ctx.household_count2() : pairs.size();
  }

  std::pair<std::uint32_t, std::uint32_t> pair_at(std::size_t p) const {
    if (full_cross) {
      const std::size_t n2 = ctx.household_count2();
      return {static_cast<std::uint32_t>(p / n2), static_cast<std::uint32_t>(p % n2)};
    }
    return pairs[p];
  }

 private:
  // Keep every positive plus Bernoulli-thinned negatives (expected ratio
  // negatives per positive).
  void subsample(double ratio, std::uint64_t seed) {
    const std::size_t total = full_cross
                                  ? ctx.household_count1() * ctx.household_count2()
                                  : pairs.size();
    std::size_t pos = 0;
    for (std::size_t p = 0; p < total; ++p) {
      const auto [s, t] = full_cross
                              ? std::pair<std::uint32_t, std::uint32_t>{
                                    static_cast<std::uint32_t>(p / ctx.household_count2()),
                                    static_cast<std::uint32_t>(p % ctx.household_count2())}
                              : pairs[p];
      if (truth_partner[s] == static_cast<std::int32_t>(t)) ++pos;
    }
    const std::size_t negs = total - pos;
    const double keep = negs == 0 ? 1.0
                                  : std::min(1.0, ratio * static_cast<double>(pos) /
                                                      static_cast<double>(negs));
    Rng rng(seed);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> kept;
    for (std::size_t p = 0; p < total; ++p) {
      const auto [s, t] = full_cross
                              ? std::pair<std::uint32_t, std::uint32_t>{
                                    static_cast<std::uint32_t>(p / ctx.household_count2()),
                                    static_cast<std::uint32_t>(p % ctx.household_count2())}
                              : pairs[p];
      const bool positive = truth_partner[s] == static_cast<std::int32_t>(t);
      if (positive || rng.bernoulli(keep)) kept.emplace_back(s, t);
    }
    pairs = std::move(kept);
  }
};

LikelihoodResult likelihood_over(const ScoredSet& set, std::span<const double> params,
                                 int threads) {
  const std::size_t K = set.ctx.schema().feature_count();
  if (params.size() != K + 1)
    fail(ErrorCode::Config, "params must hold beta0 plus one weight per feature");
  const double beta0 = params[0];
  const PairContext::Weights w = set.ctx.make_weights(params.subspan(1));

  const std::size_t total = set.pair_count();
  const std::size_t chunks = chunk_count(total, kChunk);
  std::vector<double> chunk_value(chunks, 0.0);
  std::vector<std::vector<double>> chunk_grad(chunks);

  parallel_chunks(total, kChunk, threads, [&](std::size_t c, std::size_t lo, std::size_t hi) {
    PairContext::Scratch scratch;
    std::vector<double> feat(K);
    double value = 0.0;
    std::vector<double> grad(K + 1, 0.0);
    for (std::size_t p = lo; p < hi; ++p) {
      const auto [s, t] = set.pair_at(p);
      const auto h = set.ctx.hausdorff_pair(s, t, w, scratch);
      const double u = beta0 - h.delta;
      const bool y = set.truth_partner[s] == static_cast<std::int32_t>(t);
      value += y ? log_sigmoid(u) : log_sigmoid(-u);
      const double r = (y ? 1.0 : 0.0) - stable_sigmoid(u);
      grad[0] += r;
      set.ctx.member_pair_feature_distances(h.attain_i, h.attain_j, feat.data());
      for (std::size_t k = 0; k < K; ++k) grad[k + 1] -= r * feat[k];
    }
    chunk_value[c] = value;
    chunk_grad[c] = std::move(grad);
  });

  LikelihoodResult out;
  out.gradient.assign(K + 1, 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {  // fixed-order reduction
    out.value += chunk_value[c];
    for (std::size_t k = 0; k <= K; ++k) out.gradient[k] += chunk_grad[c][k];
  }
  return out;
}

std::vector<double> max_probabilities(const ScoredSet& set, std::span<const double> params,
                                      int threads) {
  const double beta0 = params[0];
  const PairContext::Weights w = set.ctx.make_weights(params.subspan(1));
  const std::size_t N1 = set.ctx.household_count1();

  // Candidate lists per s: implicit full cross, or grouped blocked pairs.
  std::vector<std::size_t> offset;
  if (!set.full_cross) {
    offset.assign(N1 + 1, 0);
    for (const auto& [s, t] : set.pairs) ++offset[s + 1];
    for (std::size_t s = 0; s < N1; ++s) offset[s + 1] += offset[s];
  }

  // Households with no scored candidate keep probability 0 (they can never
  // match), so they still count in the calibration denominator.
  std::vector<double> maxp(N1, 0.0);
  parallel_chunks(N1, 64, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    PairContext::Scratch scratch;
    for (std::size_t s = lo; s < hi; ++s) {
      double best = -1.0;
      if (set.full_cross) {
        for (std::uint32_t t = 0; t < set.ctx.household_count2(); ++t) {
          const double delta =
              set.ctx.hausdorff_pair(static_cast<std::uint32_t>(s), t, w, scratch).delta;
          best = std::max(best, stable_sigmoid(beta0 - delta));
        }
      } else {
        for (std::size_t p = offset[s]; p < offset[s + 1]; ++p) {
          const auto [ps, t] = set.pairs[p];
          const double delta = set.ctx.hausdorff_pair(ps, t, w, scratch).delta;
          best = std::max(best, stable_sigmoid(beta0 - delta));
        }
      }
      if (best >= 0.0) maxp[s] = best;
    }
  });
  return maxp;
}

}  // namespace

LikelihoodResult household_log_likelihood(const Wave& wave1, const Wave& wave2,
                                          const GroundTruth& truth,
                                          std::span<const double> params,
                                          const AttributeSchema& schema,
                                          const HouseholdFitConfig& config) {
  ScoredSet set(wave1, wave2, truth, schema, config);
  return likelihood_over(set, params, config.threads);
}

HouseholdModel fit_household_model(const Wave& wave1, const Wave& wave2,
                                   const GroundTruth& truth, const AttributeSchema& schema,
                                   const HouseholdFitConfig& config) {
  const std::size_t K = schema.feature_count();
  ScoredSet set(wave1, wave2, truth, schema, config);
  if (set.positives == 0)
    fail(ErrorCode::Data,
         "ground truth has no matched households among scored pairs; cannot calibrate tau");

  std::vector<double> x0(K + 1, 1.0);
  x0[0] = config.init_beta0;
  if (!config.init_beta.empty()) {
    if (config.init_beta.size() != K)
      fail(ErrorCode::Config, "init_beta must have one entry per feature");
    for (std::size_t k = 0; k < K; ++k) {
      if (config.init_beta[k] < 0.0)
        fail(ErrorCode::Config, "init_beta entries must be non-negative");
      x0[k + 1] = config.init_beta[k];
    }
  }

  BoxBounds bounds;
  constexpr double inf = std::numeric_limits<double>::infinity();
  bounds.lower.assign(K + 1, 0.0);
  bounds.upper.assign(K + 1, inf);
  bounds.lower[0] = -inf;  // intercept unconstrained

  const BoxObjective objective = [&](std::span<const double> x) {
    LikelihoodResult ll = likelihood_over(set, x, config.threads);
    ObjectiveValue v;
    v.value = -ll.value;
    v.gradient.resize(ll.gradient.size());
    for (std::size_t i = 0; i < ll.gradient.size(); ++i) v.gradient[i] = -ll.gradient[i];
    return v;
  };

  OptimOptions opts;
  opts.max_iter = config.max_iter;
  opts.grad_tol = config.tol;
  opts.value_tol = config.tol;
  OptimResult fit = minimize_box(objective, std::move(x0), bounds, opts);

  HouseholdModel model;
  model.beta0 = fit.x[0];
  model.weights.beta.assign(fit.x.begin() + 1, fit.x.end());
  model.weights.year_scale = config.year_scale;
  model.diagnostics.final_log_likelihood = -fit.value;
  model.diagnostics.iterations = fit.iterations;
  model.diagnostics.converged = fit.converged;

  const std::vector<double> maxp = max_probabilities(set, fit.x, config.threads);
  const double target = static_cast<double>(truth.household_pairs().size()) /
                        static_cast<double>(set.ctx.household_count1());
  model.tau = calibrate_tau(maxp, target);
  return model;
}

double calibrate_tau(const std::vector<double>& max_probabilities, double target_proportion) {
  if (max_probabilities.empty()) fail(ErrorCode::Data, "calibrate_tau: empty probability table");
  if (!(target_proportion > 0.0) || target_proportion > 1.0)
    fail(ErrorCode::Data, "calibrate_tau: target proportion must be in (0,1]");

  std::vector<double> sorted = max_probabilities;
  std::sort(sorted.begin(), sorted.end());  // ascending

  std::vector<double> candidates = sorted;
  candidates.push_back(0.0);
  candidates.push_back(1.0);
  std::sort(candidates.begin(), candidates.end(), std::greater<>());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const double n = static_cast<double>(sorted.size());
  double best_tau = 1.0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const double tau : candidates) {  // descending: first win keeps larger tau
    const std::size_t matched =
        sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), tau);
    const double dist = std::abs(static_cast<double>(matched) / n - target_proportion);
    if (dist < best_dist) {
      best_dist = dist;
      best_tau = tau;
    }
  }
  return best_tau;
}

HouseholdPrediction predict_households(const Wave& wave1, const Wave& wave2,
                                       const HouseholdModel& model,
                                       const AttributeSchema& schema,
                                       const HouseholdPredictOptions& options) {
  validate_weights(model.weights, schema);
  PairContext ctx(wave1, wave2, schema, model.weights.year_scale);
  const PairContext::Weights w = ctx.make_weights(model.weights.beta);
  const std::size_t N1 = ctx.household_count1();

  std::vector<std::size_t> offset;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> blocked;
  if (options.blocking) {
    const auto k = schema.index_of(*options.blocking);
    if (!k) fail(ErrorCode::Config, "unknown block key: " + *options.blocking);
    blocked = ctx.blocked_household_pairs(*k);
    offset.assign(N1 + 1, 0);
    for (const auto& [s, t] : blocked) ++offset[s + 1];
    for (std::size_t s = 0; s < N1; ++s) offset[s + 1] += offset[s];
  }

  HouseholdPrediction out;
  out.best.resize(N1);
  std::vector<std::uint8_t> tie_flags(N1, 0);

  parallel_chunks(N1, 64, options.threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    PairContext::Scratch scratch;
    for (std::size_t s = lo; s < hi; ++s) {
      double best_p = -1.0;
      std::int64_t best_t = -1;
      bool tie = false;
      auto consider = [&](std::uint32_t t) {
        const double p = stable_sigmoid(
            model.beta0 -
            ctx.hausdorff_pair(static_cast<std::uint32_t>(s), t, w, scratch).delta);
        if (p > best_p) {
          best_p = p;
          best_t = t;
          tie = false;
        } else if (p == best_p && best_t >= 0) {
          // argmax tie: keep the lexicographically smaller wave-2 id
          if (ctx.household_id2(t) < ctx.household_id2(static_cast<std::size_t>(best_t)))
            best_t = t;
          tie = true;
        }
      };
      if (options.blocking) {
        for (std::size_t p = offset[s]; p < offset[s + 1]; ++p) consider(blocked[p].second);
      } else {
        for (std::uint32_t t = 0; t < ctx.household_count2(); ++t) consider(t);
      }

      HouseholdPairDecision d;
      d.household_id1 = ctx.household_id1(s);
      if (best_t >= 0) {
        d.household_id2 = ctx.household_id2(static_cast<std::size_t>(best_t));
        d.p = best_p;
        d.matched = best_p >= model.tau;
        d.tie = tie;
      }
      tie_flags[s] = tie ? 1 : 0;
      out.best[s] = std::move(d);
    }
  });

  for (std::uint8_t f : tie_flags) out.argmax_ties += f;

  if (options.one_to_one) {
    // Keep the highest-p claim per wave-2 household, ties to the smaller
    // wave-1 id; demote the rest.
    std::unordered_map<std::string, std::size_t> winner;
    for (std::size_t s = 0; s < N1; ++s) {
      const auto& d = out.best[s];
      if (!d.matched) continue;
      auto [it, inserted] = winner.emplace(d.household_id2, s);
      if (!inserted) {
        const auto& other = out.best[it->second];
        if (d.p > other.p ||
            (d.p == other.p && d.household_id1 < other.household_id1))
          it->second = s;
      }
    }
    for (std::size_t s = 0; s < N1; ++s) {
      auto& d = out.best[s];
      if (d.matched && winner.at(d.household_id2) != s) {
        d.matched = false;
        ++out.demoted_by_one_to_one;
      }
    }
  }
  return out;
}

RankHistogram rank_of_truth(const Wave& wave1, const Wave& wave2, const HouseholdModel& model,
                            const GroundTruth& truth, const AttributeSchema& schema,
                            const HouseholdPredictOptions& options) {
  validate_weights(model.weights, schema);
  PairContext ctx(wave1, wave2, schema, model.weights.year_scale);
  const PairContext::Weights w = ctx.make_weights(model.weights.beta);
  const std::size_t N1 = ctx.household_count1();

  std::unordered_map<std::string, std::uint32_t> index2;
  for (std::uint32_t t = 0; t < ctx.household_count2(); ++t)
    index2.emplace(ctx.household_id2(t), t);

  std::vector<std::size_t> offset;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> blocked;
  if (options.blocking) {
    const auto k = schema.index_of(*options.blocking);
    if (!k) fail(ErrorCode::Config, "unknown block key: " + *options.blocking);
    blocked = ctx.blocked_household_pairs(*k);
    offset.assign(N1 + 1, 0);
    for (const auto& [s, t] : blocked) ++offset[s + 1];
    for (std::size_t s = 0; s < N1; ++s) offset[s + 1] += offset[s];
  }

  std::vector<std::int64_t> rank_of(N1, 0);  // 0 = no truth partner
  parallel_chunks(N1, 64, options.threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    PairContext::Scratch scratch;
    for (std::size_t s = lo; s < hi; ++s) {
      const std::string* partner = truth.household_partner(ctx.household_id1(s));
      if (partner == nullptr) continue;
      auto it = index2.find(*partner);
      if (it == index2.end()) continue;
      const std::uint32_t t_true = it->second;

      auto prob = [&](std::uint32_t t) {
        return stable_sigmoid(
            model.beta0 -
            ctx.hausdorff_pair(static_cast<std::uint32_t>(s), t, w, scratch).delta);
      };

      bool scored = false;
      double p_true = 0.0;
      std::int64_t greater = 0;
      if (options.blocking) {
        for (std::size_t p = offset[s]; p < offset[s + 1]; ++p)
          if (blocked[p].second == t_true) {
            scored = true;
            p_true = prob(t_true);
            break;
          }
        if (scored)
          for (std::size_t p = offset[s]; p < offset[s + 1]; ++p) {
            if (blocked[p].second == t_true) continue;
            if (prob(blocked[p].second) > p_true) ++greater;
          }
      } else {
        scored = true;
        p_true = prob(t_true);
        for (std::uint32_t t = 0; t < ctx.household_count2(); ++t) {
          if (t == t_true) continue;
          if (prob(t) > p_true) ++greater;
        }
      }
      rank_of[s] = scored ? greater + 1 : std::numeric_limits<std::int64_t>::max();
    }
  });

  RankHistogram hist;
  for (std::size_t s = 0; s < N1; ++s) {
    if (rank_of[s] == 0) continue;
    ++hist.total;
    const std::int64_t r = rank_of[s];
    if (r >= 5) ++hist.counts[4];
    else ++hist.counts[static_cast<std::size_t>(r - 1)];
  }
  return hist;
}

}  // namespace hhlink
