#include "hhlink/assignment.hpp"

#include <algorithm>
#include <string>

#include "hhlink/errors.hpp"

namespace hhlink {

namespace {

Assignment solve(const ScoreMatrix& m) {
  const std::size_t rows = m.rows, cols = m.cols;

  // q_bar accumulates left-to-right in row-major order; the test oracles use
  // the same order, keeping the floor bit-identical.
  double total = 0.0;
  for (double v : m.q) total += v;
  const double q_bar = total / static_cast<double>(rows * cols);

  auto eligible = [&](std::size_t r, std::size_t c) { return m.at(r, c) >= q_bar; };

  // dp[i][S]: best objective using rows i.. with available column set S.
  const std::size_t full = (std::size_t{1} << cols) - 1;
  std::vector<std::vector<double>> dp(rows + 1, std::vector<double>(full + 1, 0.0));
  for (std::size_t i = rows; i-- > 0;) {
    for (std::size_t S = 0; S <= full; ++S) {
      double best = dp[i + 1][S];
      for (std::size_t j = 0; j < cols; ++j) {
        if ((S >> j & 1) && eligible(i, j)) {
          const double cand = m.at(i, j) + dp[i + 1][S ^ (std::size_t{1} << j)];
          if (cand > best) best = cand;
        }
      }
      dp[i][S] = best;
    }
  }

  Assignment out;
  out.q_bar = q_bar;
  out.col_of_row.assign(rows, -1);
  out.row_of_col.assign(cols, -1);

  // Walk rows in order, matching the smallest column that preserves the
  // optimum; a zero remaining value means the empty completion, which is the
  // lexicographically smallest of all.
  std::size_t S = full;
  for (std::size_t i = 0; i < rows; ++i) {
    if (dp[i][S] == 0.0) break;
    for (std::size_t j = 0; j < cols; ++j) {
      if ((S >> j & 1) && eligible(i, j) &&
          m.at(i, j) + dp[i + 1][S ^ (std::size_t{1} << j)] == dp[i][S]) {
        out.col_of_row[i] = static_cast<std::int32_t>(j);
        out.row_of_col[j] = static_cast<std::int32_t>(i);
        S ^= std::size_t{1} << j;
        break;
      }
    }
  }

  out.pairs.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out.pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                           m.at(i, j),
                           out.col_of_row[i] == static_cast<std::int32_t>(j)});

  out.objective = 0.0;  // matched q in ascending row order
  for (std::size_t i = 0; i < rows; ++i)
    if (out.col_of_row[i] >= 0)
      out.objective += m.at(i, static_cast<std::size_t>(out.col_of_row[i]));
  return out;
}

}  // namespace

Assignment assign(const ScoreMatrix& scores) {
  if (scores.rows == 0 || scores.cols == 0)
    fail(ErrorCode::Data, "assign: households must be non-empty");
  if (scores.q.size() != scores.rows * scores.cols)
    fail(ErrorCode::Data, "assign: matrix storage does not match its shape");
  for (double v : scores.q)
    if (!(v >= 0.0 && v <= 1.0))
      fail(ErrorCode::Data, "assign: scores must lie in [0,1]");
  if (std::min(scores.rows, scores.cols) > kMaxAssignSide ||
      std::max(scores.rows, scores.cols) > 128)
    fail(ErrorCode::Data, "assign: household too large for the exact solver (" +
                              std::to_string(scores.rows) + "x" +
                              std::to_string(scores.cols) + ")");

  if (scores.cols <= kMaxAssignSide) return solve(scores);

  // Wide matrix: solve transposed. The lexicographic tie rule then applies in
  // the transposed orientation, which only matters for equal-objective optima
  // on households wider than kMaxAssignSide members.
  ScoreMatrix t;
  t.rows = scores.cols;
  t.cols = scores.rows;
  t.q.resize(scores.q.size());
  for (std::size_t r = 0; r < scores.rows; ++r)
    for (std::size_t c = 0; c < scores.cols; ++c) t.at(c, r) = scores.at(r, c);
  Assignment inner = solve(t);

  Assignment out;
  out.q_bar = inner.q_bar;
  out.objective = 0.0;
  out.col_of_row.assign(scores.rows, -1);
  out.row_of_col.assign(scores.cols, -1);
  for (std::size_t c = 0; c < scores.cols; ++c)
    if (inner.col_of_row[c] >= 0) {
      out.col_of_row[static_cast<std::size_t>(inner.col_of_row[c])] =
          static_cast<std::int32_t>(c);
      out.row_of_col[c] = inner.col_of_row[c];
    }
  out.pairs.reserve(scores.q.size());
  for (std::size_t i = 0; i < scores.rows; ++i)
    for (std::size_t j = 0; j < scores.cols; ++j)
      out.pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                           scores.at(i, j),
                           out.col_of_row[i] == static_cast<std::int32_t>(j)});
  for (std::size_t i = 0; i < scores.rows; ++i)
    if (out.col_of_row[i] >= 0)
      out.objective += scores.at(i, static_cast<std::size_t>(out.col_of_row[i]));
  return out;
}

}  // namespace hhlink
