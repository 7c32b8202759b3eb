#include "ebmkit/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "ebmkit/error.hpp"

namespace ebmkit {

bool uses_tokens(ColumnKind kind) {
  return kind == ColumnKind::kCategorical || kind == ColumnKind::kGroupId;
}

Cohort::Cohort(FeatureSchema schema)
    : schema_(std::move(schema)), columns_(schema_.columns().size()) {}

std::span<const double> Cohort::numeric(std::string_view name) const {
  const auto i = schema_.index_of(name);
  if (uses_tokens(schema_.columns()[i].kind)) {
    throw SchemaError("column '" + std::string(name) + "' is not numeric");
  }
  return columns_[i].numeric;
}

std::span<const std::string> Cohort::tokens(std::string_view name) const {
  const auto i = schema_.index_of(name);
  if (!uses_tokens(schema_.columns()[i].kind)) {
    throw SchemaError("column '" + std::string(name) + "' is not categorical");
  }
  return columns_[i].tokens;
}

void Cohort::append_row(std::int64_t row_id, std::span<const double> numeric,
                        std::span<const std::string> tokens) {
  const auto& cols = schema_.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (uses_tokens(cols[c].kind)) {
      columns_[c].tokens.push_back(tokens[c]);
    } else {
      columns_[c].numeric.push_back(numeric[c]);
    }
  }
  row_ids_.push_back(row_id);
}

Cohort Cohort::subset(std::span<const std::size_t> indices) const {
  Cohort out(schema_);
  const auto& cols = schema_.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (uses_tokens(cols[c].kind)) {
      out.columns_[c].tokens.reserve(indices.size());
      for (auto r : indices) out.columns_[c].tokens.push_back(columns_[c].tokens[r]);
    } else {
      out.columns_[c].numeric.reserve(indices.size());
      for (auto r : indices) out.columns_[c].numeric.push_back(columns_[c].numeric[r]);
    }
  }
  out.row_ids_.reserve(indices.size());
  for (auto r : indices) out.row_ids_.push_back(row_ids_[r]);
  return out;
}

void Cohort::validate() const {
  const auto& cols = schema_.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto n = uses_tokens(cols[c].kind) ? columns_[c].tokens.size() : columns_[c].numeric.size();
    if (n != rows()) throw SchemaError("column '" + cols[c].name + "' has wrong arity");
    if (cols[c].kind == ColumnKind::kLabel) {
      for (double y : columns_[c].numeric) {
        if (y != 0.0 && y != 1.0) throw DataError("label '" + cols[c].name + "' is not 0/1");
      }
    }
    if (cols[c].kind == ColumnKind::kGroupId) {
      for (const auto& g : columns_[c].tokens) {
        if (g.empty()) throw DataError("empty group id in '" + cols[c].name + "'");
      }
    }
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::string escape_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

Cohort parse_csv(std::istream& in, const FeatureSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty CSV input: missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  const auto& cols = schema.columns();
  // position of each schema column in the file
  std::vector<std::size_t> where(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    auto it = std::find(header.begin(), header.end(), cols[c].name);
    if (it == header.end()) throw SchemaError("CSV header is missing column '" + cols[c].name + "'");
    where[c] = static_cast<std::size_t>(it - header.begin());
  }
  for (const auto& h : header) {
    if (!schema.find(h)) throw SchemaError("CSV header has undeclared column '" + h + "'");
  }
  if (header.size() != cols.size()) throw SchemaError("CSV header has duplicate columns");

  Cohort cohort(schema);
  std::vector<double> nums(cols.size(), kMissing);
  std::vector<std::string> toks(cols.size());
  long lineno = 1;
  std::int64_t row_id = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("expected " + std::to_string(header.size()) + " cells, found " +
                          std::to_string(cells.size()),
                      lineno);
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      std::string cell = trim(cells[where[c]]);
      switch (cols[c].kind) {
        case ColumnKind::kContinuous:
          if (cell.empty()) {
            nums[c] = kMissing;
          } else if (!parse_number(cell, nums[c]) || std::isinf(nums[c])) {
            throw DataError("column '" + cols[c].name + "': cannot parse '" + cell + "' as a number",
                            lineno);
          }
          break;
        case ColumnKind::kLabel:
          if (cell == "0") {
            nums[c] = 0.0;
          } else if (cell == "1") {
            nums[c] = 1.0;
          } else {
            throw DataError("label '" + cols[c].name + "' must be 0 or 1, got '" + cell + "'", lineno);
          }
          break;
        case ColumnKind::kCategorical:
          toks[c] = cell.empty() ? std::string(kMissingToken) : std::move(cell);
          break;
        case ColumnKind::kGroupId:
          if (cell.empty()) throw DataError("empty group id '" + cols[c].name + "'", lineno);
          toks[c] = std::move(cell);
          break;
      }
    }
    cohort.append_row(row_id++, nums, toks);
  }
  return cohort;
}

Cohort load_csv(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv(in, schema);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Cohort& cohort) {
  const auto& cols = cohort.schema().columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out << ',';
    out << escape_cell(cols[c].name);
  }
  out << '\n';
  for (std::size_t r = 0; r < cohort.rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out << ',';
      const auto& col = cohort.column(c);
      if (uses_tokens(cols[c].kind)) {
        out << escape_cell(col.tokens[r]);
      } else if (cols[c].kind == ColumnKind::kLabel) {
        out << (col.numeric[r] != 0.0 ? '1' : '0');
      } else if (!is_missing(col.numeric[r])) {
        out << format_double(col.numeric[r]);
      }
    }
    out << '\n';
  }
}

}  // namespace ebmkit
