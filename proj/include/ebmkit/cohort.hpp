#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ebmkit/schema.hpp"

namespace ebmkit {

inline constexpr std::string_view kMissingToken = "Missing";
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// One column of cohort data. Continuous and label columns use `numeric`
/// (NaN marks a missing continuous value); categorical and group columns use
/// `tokens`.
struct Column {
  std::vector<double> numeric;
  std::vector<std::string> tokens;
};

/// Column-major table of rows conforming to a FeatureSchema. Every row carries
/// a stable `row_id` that survives filtering and splitting.
class Cohort {
 public:
  Cohort() = default;
  explicit Cohort(FeatureSchema schema);

  const FeatureSchema& schema() const { return schema_; }
  std::size_t rows() const { return row_ids_.size(); }

  const std::vector<std::int64_t>& row_ids() const { return row_ids_; }
  const Column& column(std::size_t index) const { return columns_[index]; }
  const Column& column(std::string_view name) const { return columns_[schema_.index_of(name)]; }
  Column& mutable_column(std::size_t index) { return columns_[index]; }

  std::span<const double> numeric(std::string_view name) const;
  std::span<const std::string> tokens(std::string_view name) const;
  std::span<const double> labels(std::string_view outcome) const { return numeric(outcome); }
  std::span<const std::string> groups() const { return columns_[schema_.group_column()].tokens; }

  /// Appends one row. `numeric` and `tokens` hold one entry per schema column;
  /// only the entry matching each column's storage is read.
  void append_row(std::int64_t row_id, std::span<const double> numeric,
                  std::span<const std::string> tokens);

  /// Rows at `indices`, in that order.
  Cohort subset(std::span<const std::size_t> indices) const;

  /// Checks label values are 0/1 and group ids are non-empty.
  void validate() const;

 private:
  FeatureSchema schema_;
  std::vector<Column> columns_;
  std::vector<std::int64_t> row_ids_;
};

bool uses_tokens(ColumnKind kind);

/// Reads a UTF-8 comma-separated file whose header names exactly the schema
/// columns (in any order). Row ids are the 0-based data line numbers.
Cohort load_csv(const std::string& path, const FeatureSchema& schema);
Cohort parse_csv(std::istream& in, const FeatureSchema& schema);

void write_csv(std::ostream& out, const Cohort& cohort);

/// Formats a double with the shortest representation that round-trips.
std::string format_double(double v);

}  // namespace ebmkit
