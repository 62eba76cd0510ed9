#include "hhlink/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "hhlink/errors.hpp"

namespace hhlink {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

int parse_year(const std::string& cell, const std::string& column, std::size_t row) {
  int year = 0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, year);
  if (ec != std::errc() || ptr != last)
    fail(ErrorCode::Parse, "non-integer year value '" + cell + "' in column " + column +
                               " (row " + std::to_string(row) + ")");
  return year;
}

}  // namespace

Wave load_wave(const std::string& path, const AttributeSchema& schema,
               const std::string& wave_label) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open wave file: " + path);

  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Parse, "empty wave file: " + path);
  const std::vector<std::string> header = split_line(line);

  const std::size_t K = schema.feature_count();
  std::vector<std::size_t> feature_col(K, SIZE_MAX);
  std::size_t id_col = SIZE_MAX, hh_col = SIZE_MAX;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "individual_id") {
      id_col = c;
    } else if (name == "household_id") {
      hh_col = c;
    } else if (auto k = schema.index_of(name)) {
      feature_col[*k] = c;
    } else {
      fail(ErrorCode::Parse, "unknown column '" + name + "' in " + path);
    }
  }
  if (id_col == SIZE_MAX) fail(ErrorCode::Parse, "missing individual_id column in " + path);
  if (hh_col == SIZE_MAX) fail(ErrorCode::Parse, "missing household_id column in " + path);
  for (std::size_t k = 0; k < K; ++k)
    if (feature_col[k] == SIZE_MAX)
      fail(ErrorCode::Parse, "missing column '" + schema.feature(k).name + "' in " + path);

  // Households keep first-appearance order; members keep row order.
  std::vector<Household> households;
  std::unordered_map<std::string, std::size_t> household_slot;
  std::unordered_map<std::string, std::size_t> individual_row;

  std::size_t row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      fail(ErrorCode::Parse, "row " + std::to_string(row) + " has " +
                                 std::to_string(cells.size()) + " cells, header has " +
                                 std::to_string(header.size()) + " in " + path);

    Individual ind;
    ind.individual_id = cells[id_col];
    ind.household_id = cells[hh_col];
    if (ind.individual_id.empty())
      fail(ErrorCode::Parse, "empty individual_id (row " + std::to_string(row) + ")");
    if (ind.household_id.empty())
      fail(ErrorCode::Parse, "empty household_id (row " + std::to_string(row) + ")");
    auto [it, inserted] = individual_row.emplace(ind.individual_id, row);
    if (!inserted)
      fail(ErrorCode::Parse, "duplicate individual_id '" + ind.individual_id + "' (rows " +
                                 std::to_string(it->second) + " and " + std::to_string(row) +
                                 ")");

    ind.values.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      const std::string& cell = cells[feature_col[k]];
      if (cell.empty()) {
        ind.values.push_back(Value::missing());
      } else if (schema.feature(k).kind == FeatureKind::Year) {
        ind.values.push_back(Value::of_year(parse_year(cell, schema.feature(k).name, row)));
      } else {
        ind.values.push_back(Value::of_category(cell));
      }
    }

    auto [slot_it, new_household] = household_slot.emplace(ind.household_id, households.size());
    if (new_household) households.push_back(Household{ind.household_id, {}});
    households[slot_it->second].members.push_back(std::move(ind));
  }

  return make_wave(wave_label, std::move(households), schema);
}

void write_wave(const Wave& wave, const AttributeSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write wave file: " + path);
  out << "individual_id,household_id";
  for (const auto& f : schema.features()) out << ',' << f.name;
  out << '\n';
  for (const auto& hh : wave.households()) {
    for (const auto& ind : hh.members) {
      out << ind.individual_id << ',' << ind.household_id;
      for (const Value& v : ind.values) {
        out << ',';
        if (v.kind == Value::Kind::Category) out << v.category;
        else if (v.kind == Value::Kind::Year) out << v.year;
        // both missing kinds write as the empty cell
      }
      out << '\n';
    }
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path);
}

std::vector<std::pair<std::string, std::string>> load_id_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open pair file: " + path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Parse, "empty pair file: " + path);
  auto header = split_line(line);
  if (header.size() != 2 || header[0] != "id_wave1" || header[1] != "id_wave2")
    fail(ErrorCode::Parse, "pair file header must be id_wave1,id_wave2: " + path);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != 2)
      fail(ErrorCode::Parse, "expected two cells (row " + std::to_string(row) + ") in " + path);
    pairs.emplace_back(std::move(cells[0]), std::move(cells[1]));
  }
  return pairs;
}

void write_id_pairs(const std::vector<std::pair<std::string, std::string>>& pairs,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write pair file: " + path);
  out << "id_wave1,id_wave2\n";
  for (const auto& [a, b] : pairs) out << a << ',' << b << '\n';
  if (!out) fail(ErrorCode::Io, "write failed: " + path);
}

GroundTruth load_truth(const std::string& household_path, const std::string& individual_path) {
  return GroundTruth(load_id_pairs(household_path), load_id_pairs(individual_path));
}

}  // namespace hhlink
