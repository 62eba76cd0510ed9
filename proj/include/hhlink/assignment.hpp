#pragma once

#include <cstdint>
#include <vector>

namespace hhlink {

struct ScoreMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> q;  // row-major, entries in [0,1]

  double at(std::size_t r, std::size_t c) const { return q[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return q[r * cols + c]; }
};

struct AssignmentPair {
  std::uint32_t row = 0, col = 0;
  double q = 0.0;
  bool matched = false;
};

struct Assignment {
  std::vector<AssignmentPair> pairs;     // every candidate pair, row-major
  std::vector<std::int32_t> col_of_row;  // -1 when unmatched
  std::vector<std::int32_t> row_of_col;
  double q_bar = 0.0;
  double objective = 0.0;  // sum of matched q, ascending row order
};

// Exact maximum-weight one-to-one assignment restricted to pairs with
// q >= q_bar, where q_bar is the mean over all rows x cols entries. Matched
// pairs may sit exactly at the floor. Equal-objective optima resolve to the
// lexicographically smallest matched (row, col) sequence; the empty sequence
// is smallest of all, so an all-zero matrix matches nothing. Solved by
// dynamic programming over column subsets: exact, and bit-for-bit the same
// objective as literal enumeration.
Assignment assign(const ScoreMatrix& scores);

// Largest per-side size the exact solver accepts (the smaller side after an
// internal transpose must fit in the subset table).
inline constexpr std::size_t kMaxAssignSide = 16;

}  // namespace hhlink
