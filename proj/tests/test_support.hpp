#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "hhlink/assignment.hpp"
#include "hhlink/distance.hpp"
#include "hhlink/rng.hpp"
#include "hhlink/schema.hpp"
#include "hhlink/wave.hpp"

namespace hhlink::test {

inline Value C(const char* code) { return Value::of_category(code); }
inline Value Y(int year) { return Value::of_year(year); }
inline Value MISS() { return Value::missing(); }
inline Value MAR() { return Value::mar_missing(); }

// SEX, CIT, ANASC, STUDIO, NASCREG, NACE, IREG, QUAL
inline Individual ind(std::string id, std::string hh, std::vector<Value> values) {
  return Individual{std::move(id), std::move(hh), std::move(values)};
}

inline Individual survey_ind(std::string id, std::string hh, const char* sex, const char* cit,
                             int anasc, const char* studio, const char* nascreg,
                             const char* nace, const char* ireg, const char* qual) {
  return ind(std::move(id), std::move(hh),
             {C(sex), C(cit), Y(anasc), C(studio), C(nascreg), C(nace), C(ireg), C(qual)});
}

// A random survey-schema individual (categorical pools small enough that
// collisions happen often).
inline Individual random_ind(Rng& rng, std::string id, std::string hh) {
  auto pick = [&](const char* prefix, int n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s%d", prefix, static_cast<int>(rng.next_below(n)));
    return C(buf);
  };
  return ind(std::move(id), std::move(hh),
             {pick("s", 2), pick("c", 2), Y(1930 + rng.uniform_int(0, 70)), pick("e", 4),
              pick("r", 5), pick("n", 5), pick("g", 4), pick("q", 3)});
}

inline Household random_household(Rng& rng, const std::string& id, int max_size = 6) {
  Household hh;
  hh.household_id = id;
  const int size = 1 + rng.uniform_int(0, max_size - 1);
  for (int m = 0; m < size; ++m)
    hh.members.push_back(random_ind(rng, id + "-m" + std::to_string(m), id));
  return hh;
}

// Literal evaluation of the two-sided max-min over a materialized distance
// matrix; the independent oracle for the production hausdorff path.
inline double eq2_hausdorff(const DistanceMatrix& m) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double forward = -inf;
  for (std::size_t i = 0; i < m.rows; ++i) {
    double best = inf;
    for (std::size_t j = 0; j < m.cols; ++j) best = std::min(best, m.at(i, j));
    forward = std::max(forward, best);
  }
  double backward = -inf;
  for (std::size_t j = 0; j < m.cols; ++j) {
    double best = inf;
    for (std::size_t i = 0; i < m.rows; ++i) best = std::min(best, m.at(i, j));
    backward = std::max(backward, best);
  }
  return std::max(forward, backward);
}

// Exhaustive assignment oracle. Mirrors the solver's recursion shape
// (q + rest, strict-greater updates, ascending column order) so objectives
// compare exactly; returns the same lexicographic tie-break.
struct EnumeratedAssignment {
  double objective = 0.0;
  std::vector<std::int32_t> col_of_row;
  double q_bar = 0.0;
};

inline double enum_best(const ScoreMatrix& m, double q_bar, std::size_t i, std::uint32_t free_cols) {
  if (i == m.rows) return 0.0;
  double best = enum_best(m, q_bar, i + 1, free_cols);
  for (std::size_t j = 0; j < m.cols; ++j) {
    if ((free_cols >> j & 1) && m.at(i, j) >= q_bar) {
      const double cand = m.at(i, j) + enum_best(m, q_bar, i + 1, free_cols ^ (1u << j));
      if (cand > best) best = cand;
    }
  }
  return best;
}

inline EnumeratedAssignment enumerate_assignment(const ScoreMatrix& m) {
  double total = 0.0;
  for (double v : m.q) total += v;
  EnumeratedAssignment out;
  out.q_bar = total / static_cast<double>(m.rows * m.cols);
  out.col_of_row.assign(m.rows, -1);

  std::uint32_t free_cols = (1u << m.cols) - 1;
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double v = enum_best(m, out.q_bar, i, free_cols);
    if (v == 0.0) break;
    for (std::size_t j = 0; j < m.cols; ++j) {
      if ((free_cols >> j & 1) && m.at(i, j) >= out.q_bar &&
          m.at(i, j) + enum_best(m, out.q_bar, i + 1, free_cols ^ (1u << j)) == v) {
        out.col_of_row[i] = static_cast<std::int32_t>(j);
        free_cols ^= 1u << j;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < m.rows; ++i)
    if (out.col_of_row[i] >= 0)
      out.objective += m.at(i, static_cast<std::size_t>(out.col_of_row[i]));
  return out;
}

// First-order tie detection for the Hausdorff subgradient: a pair of
// candidate member pairs whose distances agree to within eps but whose
// feature vectors differ makes the finite-difference window unreliable.
inline bool has_subgradient_ambiguity(const Wave& w1, const Wave& w2,
                                      const std::vector<double>& params,
                                      const AttributeSchema& schema, double eps) {
  FeatureWeights w{std::vector<double>(params.begin() + 1, params.end()), 50.0};
  const std::size_t K = schema.feature_count();
  for (const auto& hs : w1.households()) {
    for (const auto& ht : w2.households()) {
      const DistanceMatrix m = distance_matrix(hs, ht, w, schema);
      auto feat = [&](std::size_t i, std::size_t j) {
        std::vector<double> f(K);
        for (std::size_t k = 0; k < K; ++k)
          f[k] = feature_distance(hs.members[i], ht.members[j], k, schema, 50.0);
        return f;
      };
      // Collect both directed max-min candidates with attaining pairs.
      std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> candidates;
      for (std::size_t i = 0; i < m.rows; ++i) {
        double best = m.at(i, 0);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < m.cols; ++j)
          if (m.at(i, j) < best) {
            best = m.at(i, j);
            arg = j;
          }
        // Row-min tie with differing features?
        for (std::size_t j = 0; j < m.cols; ++j)
          if (j != arg && std::abs(m.at(i, j) - best) < eps && feat(i, j) != feat(i, arg))
            return true;
        candidates.push_back({best, {i, arg}});
      }
      for (std::size_t j = 0; j < m.cols; ++j) {
        double best = m.at(0, j);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < m.rows; ++i)
          if (m.at(i, j) < best) {
            best = m.at(i, j);
            arg = i;
          }
        for (std::size_t i = 0; i < m.rows; ++i)
          if (i != arg && std::abs(m.at(i, j) - best) < eps && feat(i, j) != feat(arg, j))
            return true;
        candidates.push_back({best, {arg, j}});
      }
      // Outer max tie with differing features?
      double delta = -1.0;
      std::pair<std::size_t, std::size_t> attain{0, 0};
      for (const auto& [v, ij] : candidates)
        if (v > delta) {
          delta = v;
          attain = ij;
        }
      for (const auto& [v, ij] : candidates)
        if (std::abs(v - delta) < eps && feat(ij.first, ij.second) != feat(attain.first, attain.second))
          return true;
    }
  }
  return false;
}


class TempDir {
 public:
  TempDir() {
    char tmpl[] = "/tmp/hhlink_test_XXXXXX";
    path_ = mkdtemp(tmpl);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return path_ + "/" + name; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace hhlink::test
